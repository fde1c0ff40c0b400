// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// fails.
//
//   acceptance            run all criteria
//   acceptance 3 4        run only the listed ones

#include "prism/adversary.hpp"
#include "prism/analytics.hpp"
#include "prism/baselines.hpp"
#include "prism/confirm.hpp"
#include "prism/engine.hpp"
#include "prism/experiment.hpp"
#include "prism/sampling.hpp"

#include <chrono>
#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

using namespace prism;
namespace an = prism::analytics;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string format(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
std::string format(const char* fmt, ...)
{
    char buf[512];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, args);
    va_end(args);
    return buf;
}

SimResult run_strategy(const SimConfig& c, const std::string& name, const StrategyParams& p = {})
{
    auto s = make_strategy(name, c, p);
    RunOptions o;
    o.keep_log = false;
    return run(c, *s, o);
}

// ---- 1 --------------------------------------------------------------------

Outcome throughput()
{
    double worst = 0.0;
    std::string parts;
    for (std::uint32_t q : {1u, 4u, 16u, 64u}) {
        SimConfig c;
        c.m = 1;
        c.beta = 0.25;
        c.fv_round = 0.1;
        c.fp_round = 0.1;
        c.ft_round = 1.0;
        c.q = q;
        c.b_t = 100;
        c.capacity = 1e6;
        c.r_max = 100000;
        c.lambda_in = 1.0;
        c.track_confirmation = false;
        const auto res = run_strategy(c, "passive");
        const double expect = q * -std::expm1(-(1 - c.beta) * c.ft_round / q);
        const double err = std::abs(res.throughput.nonredundant_per_round() / expect - 1.0);
        worst = std::max(worst, err);
        parts += format(" q=%u:%.4f/%.4f", q, res.throughput.nonredundant_per_round(), expect);
    }
    return {worst < 0.02, format("max rel err %.4f (< 0.02);", worst) + parts};
}

// ---- 2 --------------------------------------------------------------------

Outcome chain_growth()
{
    SimConfig c;
    c.m = 1;
    c.beta = 0.25;
    c.beta_active = 0.0;
    c.fv_round = 0.5;
    c.r_max = 100000;
    baselines::BitcoinOptions o;
    o.k = 6;
    const auto r = baselines::run_bitcoin(c, baselines::BitcoinStrategy::Passive, o);
    const double expect = an::chain_growth(c.beta, c.fv_round);
    const double err = std::abs(r.growth_per_round() / expect - 1.0);
    return {err < 0.02, format("growth %.5f vs %.5f, rel err %.4f (< 0.02)", r.growth_per_round(), expect, err)};
}

// ---- 3 to 6: shared corpus --------------------------------------------------

SimConfig latency_config(std::uint64_t seed)
{
    SimConfig c;
    c.m = 100;
    c.beta = 0.25;
    c.beta_active = 0.25;
    c.fv_round = 0.1;
    c.fp_round = 0.1;
    c.ft_round = 1.0;
    c.capacity = 1e6;
    c.epsilon = std::exp(-10.0);
    c.r_max = 3000;
    c.lambda_in = 1.0;
    c.seed = seed;
    return c;
}

constexpr int latency_runs = 20;

struct Corpus {
    std::map<std::string, std::vector<SimResult>> runs;
};

const Corpus& corpus()
{
    static const Corpus c = [] {
        Corpus out;
        for (int i = 0; i < latency_runs; ++i) {
            out.runs["passive"].push_back(run_strategy(latency_config(100 + i), "passive"));
            out.runs["balancing"].push_back(run_strategy(latency_config(100 + i), "balancing"));
        }
        for (int i = 0; i < 5; ++i) {
            out.runs["censorship"].push_back(run_strategy(latency_config(200 + i), "censorship"));
            out.runs["private_nakamoto"].push_back(run_strategy(latency_config(300 + i), "private_nakamoto"));
        }
        return out;
    }();
    return c;
}

struct LatencyMean {
    double mean = 0.0;
    std::uint64_t min_txs = UINT64_MAX;
};

LatencyMean prism_latency(const std::string& strategy)
{
    LatencyMean m;
    for (const auto& r : corpus().runs.at(strategy)) {
        const auto l = r.latency();
        m.mean += l.confirmation_rounds.mean;
        m.min_txs = std::min<std::uint64_t>(m.min_txs, l.confirmation_rounds.count);
    }
    m.mean /= latency_runs;
    return m;
}

LatencyMean bitcoin_latency(baselines::BitcoinStrategy strategy)
{
    // One chain at the voter-tree rate with k(ε) for a single tree and the
    // same r_max; transactions arrive over the first 2000 rounds and the
    // horizon leaves room for them to sink k deep.
    SimConfig c = latency_config(0);
    c.m = 1;
    const std::uint32_t k = slow_confirm_depth(c);
    baselines::BitcoinOptions o;
    o.k = k;
    o.tx_rounds = 2000;
    o.tx_per_round = 1;
    const double growth = an::chain_growth(c.beta, c.fv_round);
    LatencyMean m;
    for (int i = 0; i < latency_runs; ++i) {
        c.seed = 100 + i;
        c.r_max = static_cast<std::uint32_t>(o.tx_rounds + 1.5 * k / ((1 - c.beta) * growth));
        const auto r = baselines::run_bitcoin(c, strategy, o);
        m.mean += r.confirmation.mean;
        m.min_txs = std::min<std::uint64_t>(m.min_txs, r.confirmation.count);
    }
    m.mean /= latency_runs;
    return m;
}

Outcome latency_ordering()
{
    const auto pp = prism_latency("passive");
    const auto pb = prism_latency("balancing");
    const auto bp = bitcoin_latency(baselines::BitcoinStrategy::Passive);
    const auto bb = bitcoin_latency(baselines::BitcoinStrategy::Private);
    const bool enough = std::min({pp.min_txs, pb.min_txs, bp.min_txs, bb.min_txs}) >= 100;
    const bool pass = enough && pp.mean < bp.mean && pb.mean < bb.mean;
    return {pass, format("passive: prism %.1f < bitcoin %.1f rounds; balancing: prism %.1f < bitcoin (private) %.1f; "
                         "min txs/run %llu",
                         pp.mean, bp.mean, pb.mean, bb.mean,
                         static_cast<unsigned long long>(std::min({pp.min_txs, pb.min_txs, bp.min_txs, bb.min_txs})))};
}

Outcome balancing_slowdown()
{
    const double ratio = prism_latency("balancing").mean / prism_latency("passive").mean;
    return {ratio >= 1.3 && ratio <= 3.5, format("balancing/passive latency ratio %.3f (in [1.3, 3.5])", ratio)};
}

Outcome list_safety()
{
    std::uint64_t levels = 0, instances = 0, violations = 0;
    std::string parts;
    for (const auto& [name, runs] : corpus().runs) {
        std::uint64_t n = 0, v = 0;
        for (const auto& r : runs) {
            levels += r.confirmation.fast_confirmed_levels();
            n += r.confirmation.safety.list_instances;
            v += r.confirmation.safety.list_violations;
        }
        instances += n;
        violations += v;
        parts += format(" %s:%llu/%llu", name.c_str(), static_cast<unsigned long long>(v),
                        static_cast<unsigned long long>(n));
    }
    const double eps = latency_config(0).epsilon;
    const auto budget = static_cast<std::uint64_t>(std::ceil(eps * static_cast<double>(instances)));
    return {levels >= 1000 && violations <= budget,
            format("%llu fast-confirmed levels (>= 1000), %llu violations (<= %llu);",
                   static_cast<unsigned long long>(levels), static_cast<unsigned long long>(violations),
                   static_cast<unsigned long long>(budget)) +
                parts};
}

Outcome bound_soundness()
{
    std::uint64_t instances = 0, violations = 0;
    for (const auto& [name, runs] : corpus().runs)
        for (const auto& r : runs) {
            instances += r.confirmation.safety.bound_instances;
            violations += r.confirmation.safety.bound_violations;
        }
    const double eps = latency_config(0).epsilon;
    const double freq = instances == 0 ? 1.0 : static_cast<double>(violations) / static_cast<double>(instances);
    return {instances > 0 && freq <= eps,
            format("%llu violations over %llu levels, frequency %.3g (<= %.3g)",
                   static_cast<unsigned long long>(violations), static_cast<unsigned long long>(instances), freq,
                   eps)};
}

// ---- 7 --------------------------------------------------------------------

double lead_chi_square(const std::vector<double>& counts, double n, double ratio)
{
    double chi2 = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        const bool tail = k + 1 == counts.size();
        const double p = tail ? std::pow(ratio, k) : (1 - ratio) * std::pow(ratio, k);
        chi2 += (counts[k] - n * p) * (counts[k] - n * p) / (n * p);
    }
    return chi2;
}

Outcome reserve_law()
{
    SimConfig c;
    c.m = 1;
    c.beta = 0.3;
    c.beta_active = 0.3;
    c.fp_round = 0.05;
    c.fv_round = 0.01;
    c.r_max = 400000;
    c.lambda_in = 0.0;
    c.track_confirmation = false;
    const auto res = run_strategy(c, "private_nakamoto", {{"k", 1e6}});
    const auto& lead = res.strategy_stats.lead;

    // Lead seen at each honest proposer block: the first 10^4 of them.
    std::vector<double> counts(6, 0.0);
    double n = 0;
    for (Round r = 0; r < c.r_max && n < 10000; ++r) {
        if (sample_round_at(c, r).h_prop == 0)
            continue;
        counts[std::min<std::uint32_t>(lead[r], 5)] += 1;
        n += 1;
    }
    const double critical = 11.0705; // 5%, 5 degrees of freedom
    const double chi2 = lead_chi_square(counts, n, 2 * c.beta_active);
    const double chi2_walk = lead_chi_square(counts, n, c.beta_active / (1 - c.beta_active));
    return {n >= 10000 && chi2 < critical,
            format("chi2 %.1f vs Geometric(1-2b) (< %.2f) over %.0f samples; vs ratio b/(1-b): %.2f", chi2, critical,
                   n, chi2_walk)};
}

// ---- 8 --------------------------------------------------------------------

Outcome ghost_threshold()
{
    const double beta = 0.3;
    const double threshold = an::ghost_fbar(beta);
    const int seeds = 200;
    auto frequency = [&](double f, bool survive) {
        int hits = 0;
        for (int s = 1; s <= seeds; ++s) {
            baselines::GhostAttackConfig g;
            g.beta = beta;
            g.f_round = f;
            g.horizon = 10000;
            g.seed = static_cast<std::uint64_t>(s);
            hits += baselines::run_ghost_balancing(g).survived == survive ? 1 : 0;
        }
        return static_cast<double>(hits) / seeds;
    };
    const double below = 0.5, above = 16.0;
    const double collapse = frequency(below * threshold, false);
    const double survive = frequency(above * threshold, true);
    return {collapse >= 0.9 && survive >= 0.9,
            format("threshold f=%.4f; collapse freq %.3f at %.1fx, survival freq %.3f at %.0fx (both >= 0.9)",
                   threshold, collapse, below, survive, above)};
}

// ---- 9 --------------------------------------------------------------------

Outcome analytics_goldens()
{
    const double x = an::bitcoin_crossover();
    double residual = 0.0, identity = 0.0;
    for (int i = 1; i < 50; ++i) {
        const double b = i / 100.0;
        const double fb = an::bitcoin_fbar(b);
        residual = std::max(residual, std::abs(-std::expm1(-(1 - b) * fb) - b * fb));
        const double fg = an::ghost_fbar(b);
        residual = std::max(residual, std::abs(b * fg - an::skellam_abs_mean((1 - b) * fg / 2)));

        identity = std::max(identity, std::abs(an::prism_thruput(1e12, b, 1.0) - (1 - b)));
        identity = std::max(identity, std::abs(an::tradeoff(1e12, b) - (1 - b)));
        identity = std::max(identity, std::abs(an::chain_growth(b, 1.0) - -std::expm1(-(1 - b))));
        for (double q : {1.0, 4.0, 64.0}) {
            const double lambda = an::prism_thruput(q, b, 1.0);
            identity = std::max(identity, std::abs(an::tradeoff(q / lambda, b) - lambda));
        }
    }
    residual = std::max(residual, std::abs(-std::expm1(x - 1) - x));
    const bool pass = std::abs(x - 0.43) <= 0.01 && residual < 1e-10 && identity < 1e-9;
    return {pass, format("crossover %.6f (0.43 +- 0.01); max root residual %.2e (< 1e-10); max identity error "
                         "%.2e (< 1e-9)",
                         x, residual, identity)};
}

// ---- 10 -------------------------------------------------------------------

Outcome determinism_and_ledger()
{
    using namespace prism::experiment;
    auto spec = parse_config_text(R"({"m": 8, "beta": 0.25, "beta_active": 0.25, "fv_round": 0.2,
        "fp_round": 0.2, "r_max": 1000, "lambda_in": 3, "conflict_fraction": 0.1, "seed": 5,
        "repetitions": 2, "mode": "sweep",
        "grid": {"strategy": ["passive", "censorship", "balancing", "private_nakamoto"]}})");
    auto csv = [&] {
        std::ostringstream os;
        write_csv(os, run_sweep(spec));
        return os.str();
    };
    const std::string first = csv();
    spec.workers = 3;
    const bool replay = first == csv();

    std::uint64_t prefix = 0, idempotent = 0, double_spend = 0, tracker = 0, ledger_txs = 0;
    for (const std::string name : {"passive", "censorship", "balancing", "private_nakamoto"}) {
        SimConfig c;
        c.m = 4;
        c.beta = 0.25;
        c.beta_active = 0.25;
        c.fv_round = 0.2;
        c.fp_round = 0.2;
        c.capacity = 1e6;
        c.r_max = 10000;
        c.lambda_in = 4.0;
        c.conflict_fraction = 0.1;
        c.slow_depth_override = 8;
        c.seed = 41;
        WorldState state(c);
        auto strategy = make_strategy(name, c);
        ConfirmationTracker track(c);
        std::vector<TxId> previous;
        for (Round r = 0; r < c.r_max; ++r) {
            (void)step_round(state, *strategy);
            track.update(state);
            if ((r + 1) % 500 != 0)
                continue;
            const auto ledger = ordered_confirmed_txs(state, c).txs;
            const auto& records = state.transactions();
            prefix += std::equal(previous.begin(), previous.end(), ledger.begin(),
                                 ledger.begin() + static_cast<long>(std::min(previous.size(), ledger.size()))) &&
                              previous.size() <= ledger.size()
                          ? 0
                          : 1;
            previous = ledger;
            idempotent += sanitize(ledger, records) == ledger ? 0 : 1;
            const auto once = sanitize(expand_proposer(state, state.proposer_tip()), records);
            idempotent += sanitize(once, records) == once ? 0 : 1;
            for (const auto* l : {&ledger, &once}) {
                std::unordered_set<TxId> in(l->begin(), l->end());
                for (TxId t : *l)
                    if (records[t].conflicts_with && in.count(*records[t].conflicts_with) != 0)
                        ++double_spend;
            }
        }
        track.finalize(state);
        const auto& s = track.summary().safety;
        tracker += s.double_spend_both_confirmed + s.slow_leader_changes + s.tx_unconfirmed_after_confirmed +
                   s.fast_slow_inconsistent;
        ledger_txs += previous.size();
    }
    const bool pass = replay && prefix == 0 && idempotent == 0 && double_spend == 0 && tracker == 0;
    return {pass, format("replay %s; prefix breaks %llu, sanitize changes %llu, double spends %llu, tracker "
                         "violations %llu over 4x10^4 rounds (%llu ledger txs)",
                         replay ? "identical" : "DIFFERS", static_cast<unsigned long long>(prefix),
                         static_cast<unsigned long long>(idempotent), static_cast<unsigned long long>(double_spend),
                         static_cast<unsigned long long>(tracker), static_cast<unsigned long long>(ledger_txs))};
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> check;
};

} // namespace

int main(int argc, char** argv)
{
    const std::vector<Criterion> all{
        {1, "throughput formula", throughput},
        {2, "chain growth", chain_growth},
        {3, "latency ordering", latency_ordering},
        {4, "balancing slowdown", balancing_slowdown},
        {5, "list safety", list_safety},
        {6, "vote-bound soundness", bound_soundness},
        {7, "reserve-block law", reserve_law},
        {8, "GHOST threshold", ghost_threshold},
        {9, "analytics goldens", analytics_goldens},
        {10, "determinism and ledger properties", determinism_and_ledger},
    };
    std::vector<int> only;
    for (int i = 1; i < argc; ++i)
        only.push_back(std::atoi(argv[i]));

    int failed = 0;
    for (const auto& c : all) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end())
            continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%-4s criterion %2d %-34s %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
