#include "prism/experiment.hpp"

#include "prism/analytics.hpp"
#include "prism/baselines.hpp"
#include "prism/engine.hpp"
#include "prism/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace prism::experiment {

namespace {

enum class Kind { Real, Unsigned, Bool };

struct Field {
    const char* key;
    Kind kind;
};

constexpr Field config_fields[] = {
    {"m", Kind::Unsigned},
    {"beta", Kind::Real},
    {"beta_active", Kind::Real},
    {"fv_round", Kind::Real},
    {"fp_round", Kind::Real},
    {"ft_round", Kind::Real},
    {"b_v", Kind::Real},
    {"b_p", Kind::Real},
    {"b_t", Kind::Real},
    {"capacity", Kind::Real},
    {"delay", Kind::Real},
    {"epsilon", Kind::Real},
    {"r_max", Kind::Unsigned},
    {"q", Kind::Unsigned},
    {"cp_multiplier", Kind::Real},
    {"seed", Kind::Unsigned},
    {"lambda_in", Kind::Real},
    {"poisson_arrivals", Kind::Bool},
    {"conflict_fraction", Kind::Real},
    {"slow_depth_override", Kind::Unsigned},
    {"track_confirmation", Kind::Bool},
};

constexpr const char* spec_keys[] = {"mode",   "strategy", "params",        "repetitions", "grid",
                                     "output", "workers",  "safety_budget", "derive",      "fv_cap"};

const Field* find_field(const std::string& key)
{
    for (const auto& f : config_fields)
        if (key == f.key)
            return &f;
    return nullptr;
}

[[noreturn]] void bad(const std::string& key, const std::string& what)
{
    throw ConfigError("key '" + key + "': " + what);
}

double as_real(const std::string& key, const Json& v)
{
    if (!v.is_number())
        bad(key, "expected a number");
    return v.get<double>();
}

std::uint64_t as_unsigned(const std::string& key, const Json& v)
{
    if (v.is_number_unsigned())
        return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d >= 0.0 && std::floor(d) == d && d < 1.8e19)
            return static_cast<std::uint64_t>(d);
    }
    bad(key, "expected a non-negative integer");
}

std::uint32_t as_u32(const std::string& key, const Json& v)
{
    const auto u = as_unsigned(key, v);
    if (u > 0xffffffffULL)
        bad(key, "value too large");
    return static_cast<std::uint32_t>(u);
}

bool as_bool(const std::string& key, const Json& v)
{
    if (!v.is_boolean())
        bad(key, "expected true or false");
    return v.get<bool>();
}

void set_field(SimConfig& c, const std::string& key, const Json& v)
{
    const Field* f = find_field(key);
    if (f == nullptr)
        bad(key, "unknown key");
    if (key == "m") c.m = as_u32(key, v);
    else if (key == "beta") c.beta = as_real(key, v);
    else if (key == "beta_active") c.beta_active = as_real(key, v);
    else if (key == "fv_round") c.fv_round = as_real(key, v);
    else if (key == "fp_round") c.fp_round = as_real(key, v);
    else if (key == "ft_round") c.ft_round = as_real(key, v);
    else if (key == "b_v") c.b_v = as_real(key, v);
    else if (key == "b_p") c.b_p = as_real(key, v);
    else if (key == "b_t") c.b_t = as_real(key, v);
    else if (key == "capacity") c.capacity = as_real(key, v);
    else if (key == "delay") c.delay = as_real(key, v);
    else if (key == "epsilon") c.epsilon = as_real(key, v);
    else if (key == "r_max") c.r_max = as_u32(key, v);
    else if (key == "q") c.q = as_u32(key, v);
    else if (key == "cp_multiplier") c.cp_multiplier = as_real(key, v);
    else if (key == "seed") c.seed = as_unsigned(key, v);
    else if (key == "lambda_in") c.lambda_in = as_real(key, v);
    else if (key == "poisson_arrivals") c.poisson_arrivals = as_bool(key, v);
    else if (key == "conflict_fraction") c.conflict_fraction = as_real(key, v);
    else if (key == "slow_depth_override") c.slow_depth_override = as_u32(key, v);
    else if (key == "track_confirmation") c.track_confirmation = as_bool(key, v);
}

void apply_derive(ExperimentSpec& spec)
{
    auto& c = spec.config;
    const auto d = derive_parameters(c.capacity, c.delay, c.b_v, c.b_p, c.b_t, c.beta, c.epsilon,
                                     spec.fv_cap.value_or(std::numeric_limits<double>::infinity()));
    c.fv_round = d.fv_round;
    c.fp_round = d.fp_round;
    c.ft_round = d.ft_round;
    c.m = d.m;
}

std::string fmt(double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

void check_strategy(const std::string& name, const SimConfig& config, const StrategyParams& params)
{
    (void)make_strategy(name, config, params);
}

} // namespace

const std::vector<std::string>& known_keys()
{
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& f : config_fields)
            k.emplace_back(f.key);
        for (const auto* s : spec_keys)
            k.emplace_back(s);
        return k;
    }();
    return keys;
}

ExperimentSpec parse_config(const Json& doc)
{
    if (!doc.is_object())
        throw ConfigError("config must be a JSON object");
    ExperimentSpec spec;
    bool has_capacity = false, has_delay = false;
    for (const auto& [key, v] : doc.items()) {
        if (find_field(key) != nullptr) {
            set_field(spec.config, key, v);
            has_capacity = has_capacity || key == "capacity";
            has_delay = has_delay || key == "delay";
        } else if (key == "mode") {
            if (!v.is_string())
                bad(key, "expected a string");
            spec.mode = v.get<std::string>();
            if (spec.mode != "simulate" && spec.mode != "analytics" && spec.mode != "baseline" && spec.mode != "sweep")
                bad(key, "must be one of simulate, analytics, baseline, sweep");
        } else if (key == "strategy") {
            if (!v.is_string())
                bad(key, "expected a string");
            spec.strategy = v.get<std::string>();
        } else if (key == "params") {
            if (!v.is_object())
                bad(key, "expected an object of numbers");
            for (const auto& [pk, pv] : v.items())
                spec.params[pk] = as_real("params." + pk, pv);
        } else if (key == "repetitions") {
            spec.repetitions = as_u32(key, v);
            if (spec.repetitions < 1)
                bad(key, "must be >= 1");
        } else if (key == "grid") {
            if (!v.is_object())
                bad(key, "expected an object mapping keys to value lists");
            for (const auto& [gk, gv] : v.items()) {
                if (gk != "strategy" && find_field(gk) == nullptr)
                    bad("grid." + gk, "not a config key");
                if (!gv.is_array() || gv.empty())
                    bad("grid." + gk, "expected a non-empty list");
                spec.grid.emplace_back(gk, std::vector<Json>(gv.begin(), gv.end()));
            }
        } else if (key == "output") {
            if (!v.is_string())
                bad(key, "expected a string");
            spec.output = v.get<std::string>();
        } else if (key == "workers") {
            spec.workers = as_u32(key, v);
        } else if (key == "safety_budget") {
            spec.safety_budget = as_unsigned(key, v);
        } else if (key == "derive") {
            spec.derive = as_bool(key, v);
        } else if (key == "fv_cap") {
            spec.fv_cap = as_real(key, v);
        } else {
            bad(key, "unknown key");
        }
    }
    spec.delta_assumed = !(has_capacity && has_delay);
    if (spec.derive)
        apply_derive(spec);
    spec.config.validate();

    const bool prism_run = spec.mode == "simulate" || spec.mode == "sweep";
    for (const auto& cell : cells(spec)) {
        cell.config.validate();
        if (prism_run)
            check_strategy(cell.strategy, cell.config, cell.params);
    }
    return spec;
}

ExperimentSpec parse_config_text(const std::string& text)
{
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(doc);
}

ExperimentSpec parse_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

void apply_override(Json& doc, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override '" + assignment + "' is not of the form key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    Json value;
    try {
        value = Json::parse(text);
    } catch (const Json::parse_error&) {
        value = text;
    }
    const auto dot = key.find('.');
    if (dot != std::string::npos) {
        doc[key.substr(0, dot)][key.substr(dot + 1)] = value;
        return;
    }
    doc[key] = value;
}

Json config_to_json(const SimConfig& c)
{
    Json j;
    j["m"] = c.m;
    j["beta"] = c.beta;
    j["beta_active"] = c.beta_active;
    j["fv_round"] = c.fv_round;
    j["fp_round"] = c.fp_round;
    j["ft_round"] = c.ft_round;
    j["b_v"] = c.b_v;
    j["b_p"] = c.b_p;
    j["b_t"] = c.b_t;
    j["capacity"] = c.capacity;
    j["delay"] = c.delay;
    j["epsilon"] = c.epsilon;
    j["r_max"] = c.r_max;
    j["q"] = c.q;
    j["cp_multiplier"] = c.cp_multiplier;
    j["seed"] = c.seed;
    j["lambda_in"] = c.lambda_in;
    j["poisson_arrivals"] = c.poisson_arrivals;
    j["conflict_fraction"] = c.conflict_fraction;
    j["slow_depth_override"] = c.slow_depth_override;
    j["track_confirmation"] = c.track_confirmation;
    return j;
}

std::vector<Cell> cells(const ExperimentSpec& spec)
{
    std::size_t combos = 1;
    for (const auto& [k, values] : spec.grid)
        combos *= values.size();

    std::vector<Cell> out;
    out.reserve(combos * spec.repetitions);
    std::uint32_t run_id = 0;
    for (std::size_t c = 0; c < combos; ++c) {
        Cell base;
        base.config = spec.config;
        base.strategy = spec.strategy;
        base.params = spec.params;
        // Mixed radix with the first axis most significant.
        std::size_t rest = c;
        std::vector<std::size_t> digit(spec.grid.size());
        for (std::size_t a = spec.grid.size(); a-- > 0;) {
            digit[a] = rest % spec.grid[a].second.size();
            rest /= spec.grid[a].second.size();
        }
        for (std::size_t a = 0; a < spec.grid.size(); ++a) {
            const auto& [key, values] = spec.grid[a];
            const Json& v = values[digit[a]];
            if (key == "strategy") {
                if (!v.is_string())
                    bad("grid.strategy", "expected strategy names");
                base.strategy = v.get<std::string>();
            } else {
                set_field(base.config, key, v);
            }
        }
        for (std::uint32_t rep = 0; rep < spec.repetitions; ++rep) {
            Cell cell = base;
            cell.run_id = run_id++;
            cell.config.seed = base.config.seed + rep;
            out.push_back(std::move(cell));
        }
    }
    return out;
}

RunRow run_cell(const Cell& cell, bool delta_assumed)
{
    auto strategy = make_strategy(cell.strategy, cell.config, cell.params);
    RunOptions options;
    options.keep_log = false;
    const SimResult result = run(cell.config, *strategy, options);
    const LatencyStats latency = result.latency();

    RunRow row;
    row.run_id = cell.run_id;
    row.seed = cell.config.seed;
    row.beta = cell.config.beta;
    row.beta_active = cell.config.beta_active;
    row.m = cell.config.m;
    row.strategy = cell.strategy;
    row.epsilon = cell.config.epsilon;
    row.mean_tx_latency_rounds = latency.confirmation_rounds.mean;
    row.mean_tx_latency_seconds =
        latency.confirmation_rounds.mean * (delta_assumed ? 1.0 : cell.config.round_seconds());
    row.p95_latency = latency.confirmation_rounds.p95;
    row.list_confirm_mean_rounds = result.confirmation.list_confirm_mean_rounds();
    row.throughput_tx_per_round =
        result.rounds == 0 ? 0.0 : static_cast<double>(result.throughput.confirmed_txs) / result.rounds;
    row.nonredundant_fraction = result.throughput.nonredundant_fraction();
    row.safety_violations = result.safety_violations();
    row.delta_assumed = delta_assumed;
    row.safety_instances = result.confirmation.safety.list_instances + result.confirmation.safety.bound_instances;
    return row;
}

std::vector<RunRow> run_sweep(const ExperimentSpec& spec)
{
    const auto todo = cells(spec);
    std::vector<RunRow> rows(todo.size());
    std::uint32_t workers = spec.workers != 0 ? spec.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<std::uint32_t>(workers, static_cast<std::uint32_t>(std::max<std::size_t>(todo.size(), 1)));

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (std::size_t i = next++; i < todo.size(); i = next++) {
            try {
                rows[i] = run_cell(todo[i], spec.delta_assumed);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next = todo.size();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::uint32_t w = 1; w < workers; ++w)
        pool.emplace_back(work);
    work();
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
    std::sort(rows.begin(), rows.end(), [](const RunRow& a, const RunRow& b) { return a.run_id < b.run_id; });
    return rows;
}

const std::vector<std::string>& csv_columns()
{
    static const std::vector<std::string> cols{
        "run_id",         "seed",
        "beta",           "beta_active",
        "m",              "strategy",
        "epsilon",        "mean_tx_latency_rounds",
        "mean_tx_latency_seconds", "p95_latency",
        "list_confirm_mean_rounds", "throughput_tx_per_round",
        "nonredundant_fraction", "safety_violations",
        "delta_assumed"};
    return cols;
}

void write_csv(std::ostream& os, const std::vector<RunRow>& rows)
{
    const auto& cols = csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i)
        os << (i ? "," : "") << cols[i];
    os << '\n';
    for (const auto& r : rows) {
        os << r.run_id << ',' << r.seed << ',' << fmt(r.beta) << ',' << fmt(r.beta_active) << ',' << r.m << ','
           << r.strategy << ',' << fmt(r.epsilon) << ',' << fmt(r.mean_tx_latency_rounds) << ','
           << fmt(r.mean_tx_latency_seconds) << ',' << fmt(r.p95_latency) << ',' << fmt(r.list_confirm_mean_rounds)
           << ',' << fmt(r.throughput_tx_per_round) << ',' << fmt(r.nonredundant_fraction) << ','
           << r.safety_violations << ',' << (r.delta_assumed ? 1 : 0) << '\n';
    }
}

Json summary_json(const ExperimentSpec& spec, const std::vector<RunRow>& rows)
{
    Json j;
    j["mode"] = spec.mode;
    j["config"] = config_to_json(spec.config);
    j["strategy"] = spec.strategy;
    Json params = Json::object();
    for (const auto& [k, v] : spec.params)
        params[k] = v;
    j["params"] = params;
    j["repetitions"] = spec.repetitions;
    Json grid = Json::object();
    for (const auto& [k, values] : spec.grid)
        grid[k] = values;
    j["grid"] = grid;
    j["delta_assumed"] = spec.delta_assumed;
    j["runs"] = rows.size();

    struct Acc {
        std::size_t runs = 0;
        double latency = 0.0, p95 = 0.0, list = 0.0, thruput = 0.0;
        std::uint64_t violations = 0;
    };
    std::map<std::string, Acc> acc;
    for (const auto& r : rows) {
        auto& a = acc[r.strategy];
        ++a.runs;
        a.latency += r.mean_tx_latency_rounds;
        a.p95 += r.p95_latency;
        a.list += r.list_confirm_mean_rounds;
        a.thruput += r.throughput_tx_per_round;
        a.violations += r.safety_violations;
    }
    Json by = Json::object();
    for (const auto& [name, a] : acc) {
        const double n = static_cast<double>(a.runs);
        by[name] = {{"runs", a.runs},
                    {"mean_tx_latency_rounds", a.latency / n},
                    {"mean_p95_latency", a.p95 / n},
                    {"mean_list_confirm_rounds", a.list / n},
                    {"mean_throughput_tx_per_round", a.thruput / n},
                    {"safety_violations", a.violations}};
    }
    j["by_strategy"] = by;
    return j;
}

bool over_safety_budget(const ExperimentSpec& spec, const std::vector<RunRow>& rows)
{
    std::uint64_t violations = 0, instances = 0;
    for (const auto& r : rows) {
        violations += r.safety_violations;
        instances += r.safety_instances;
    }
    const auto budget = spec.safety_budget.value_or(
        static_cast<std::uint64_t>(std::ceil(spec.config.epsilon * static_cast<double>(instances))));
    return violations > budget;
}

void write_curve_csv(std::ostream& os, const std::string& curve_id, std::uint32_t n)
{
    const auto points = analytics::curve(curve_id, n);
    os << "curve,beta,x,value\n";
    for (const auto& p : points)
        os << p.curve << ',' << fmt(p.beta) << ',' << fmt(p.x) << ',' << fmt(p.value) << '\n';
}

void write_baseline_csv(std::ostream& os, const ExperimentSpec& spec, const std::string& protocol)
{
    const auto todo = cells(spec);
    if (protocol == "ghost") {
        if (!spec.params.empty())
            throw ConfigError("ghost baseline takes no params");
        os << "run_id,seed,beta,f_round,horizon,lifetime,survived,released\n";
        for (const auto& cell : todo) {
            baselines::GhostAttackConfig g;
            g.beta = cell.config.beta;
            g.f_round = cell.config.fv_round;
            g.horizon = cell.config.r_max;
            g.seed = cell.config.seed;
            const auto o = baselines::run_ghost_balancing(g);
            os << cell.run_id << ',' << g.seed << ',' << fmt(g.beta) << ',' << fmt(g.f_round) << ',' << g.horizon
               << ',' << o.lifetime << ',' << (o.survived ? 1 : 0) << ',' << o.released << '\n';
        }
        return;
    }
    if (protocol != "bitcoin")
        throw ConfigError("unknown baseline protocol '" + protocol + "' (bitcoin or ghost)");

    os << "run_id,seed,beta,beta_active,strategy,k,chain_growth,mean_latency_rounds,mean_latency_seconds,p95_latency,"
          "confirmed_txs,attacks_started,attacks_succeeded\n";
    for (const auto& cell : todo) {
        baselines::BitcoinStrategy strategy;
        if (cell.strategy == "passive")
            strategy = baselines::BitcoinStrategy::Passive;
        else if (cell.strategy == "private" || cell.strategy == "private_nakamoto")
            strategy = baselines::BitcoinStrategy::Private;
        else
            throw ConfigError("bitcoin baseline strategy must be passive or private (got '" + cell.strategy + "')");
        baselines::BitcoinOptions options;
        for (const auto& [k, v] : cell.params) {
            if (v < 0.0 || std::floor(v) != v)
                throw ConfigError("params." + k + ": expected a non-negative integer");
            const auto u = static_cast<std::uint32_t>(v);
            if (k == "k")
                options.k = u;
            else if (k == "tx_rounds")
                options.tx_rounds = u;
            else if (k == "tx_per_round")
                options.tx_per_round = u;
            else if (k == "abandon_gap")
                options.abandon_gap = u;
            else
                throw ConfigError("params." + k + ": unknown bitcoin baseline parameter");
        }
        const auto r = baselines::run_bitcoin(cell.config, strategy, options);
        const double seconds = spec.delta_assumed ? 1.0 : cell.config.round_seconds();
        os << cell.run_id << ',' << cell.config.seed << ',' << fmt(cell.config.beta) << ','
           << fmt(cell.config.beta_active) << ',' << cell.strategy << ',' << r.k << ',' << fmt(r.growth_per_round())
           << ',' << fmt(r.confirmation.mean) << ',' << fmt(r.confirmation.mean * seconds) << ','
           << fmt(r.confirmation.p95) << ',' << r.confirmation.count << ',' << r.attacks_started << ','
           << r.attacks_succeeded << '\n';
    }
}

} // namespace prism::experiment
