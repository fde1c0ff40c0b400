#include "prism/errors.hpp"
#include "prism/experiment.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace prism;
using namespace prism::experiment;

namespace {

const char* small_run = R"({
  "m": 4, "beta": 0.25, "beta_active": 0.25, "fv_round": 0.2, "fp_round": 0.2,
  "r_max": 300, "seed": 11, "lambda_in": 3, "slow_depth_override": 5, "workers": 1
})";

std::string csv_of(const std::vector<RunRow>& rows)
{
    std::ostringstream os;
    write_csv(os, rows);
    return os.str();
}

std::size_t line_count(const std::string& s)
{
    std::size_t n = 0;
    for (char c : s)
        n += c == '\n' ? 1 : 0;
    return n;
}

std::string header()
{
    std::string h;
    for (const auto& c : csv_columns())
        h += (h.empty() ? "" : ",") + c;
    return h + "\n";
}

} // namespace

TEST_CASE("empty result set writes only the header")
{
    const auto csv = csv_of({});
    CHECK(csv == header());
    CHECK(csv.rfind("run_id,seed,beta,beta_active,m,strategy,epsilon,mean_tx_latency_rounds,"
                    "mean_tx_latency_seconds,p95_latency,list_confirm_mean_rounds,"
                    "throughput_tx_per_round,nonredundant_fraction,safety_violations",
                    0) == 0);
}

TEST_CASE("minimal config takes defaults")
{
    const auto spec = parse_config_text(R"({"m": 2, "beta": 0.2, "fv_round": 0.1, "fp_round": 0.1,
                                            "r_max": 50, "seed": 4})");
    const SimConfig defaults;
    CHECK(spec.mode == "simulate");
    CHECK(spec.strategy == "passive");
    CHECK(spec.repetitions == 1);
    CHECK(spec.delta_assumed);
    CHECK(spec.config.m == 2);
    CHECK(spec.config.seed == 4);
    CHECK(spec.config.ft_round == defaults.ft_round);
    CHECK(spec.config.epsilon == defaults.epsilon);
    CHECK(spec.config.beta_active == defaults.beta_active);
}

TEST_CASE("config errors name the key")
{
    auto message = [](const std::string& text) {
        try {
            (void)parse_config_text(text);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message(R"({"m": 2, "betta": 0.2})").find("betta") != std::string::npos);
    CHECK(message(R"({"beta": 0.6})").find("beta < 0.5") != std::string::npos);
    CHECK(message(R"({"m": -1})").find("'m'") != std::string::npos);
    CHECK(message(R"({"repetitions": 0})").find("repetitions") != std::string::npos);
    CHECK(message(R"({"grid": {"nope": [1]}})").find("grid.nope") != std::string::npos);
    CHECK(message(R"({"grid": {"beta": []}})").find("grid.beta") != std::string::npos);
    CHECK(message(R"({"strategy": "selfish"})").find("selfish") != std::string::npos);
    CHECK(message(R"({"grid": {"beta": [0.2, 0.7]}})").find("beta < 0.5") != std::string::npos);
    CHECK(message("[1, 2]") != "");
    CHECK(message("{") != "");
    CHECK_THROWS_AS((void)parse_config_file("/nonexistent/prism.json"), ConfigError);
}

TEST_CASE("overrides replace or add keys")
{
    Json doc = Json::parse(small_run);
    apply_override(doc, "beta=0.3");
    apply_override(doc, "strategy=balancing");
    apply_override(doc, "track_confirmation=false");
    CHECK(doc["beta"] == 0.3);
    CHECK(doc["strategy"] == "balancing");
    CHECK(doc["track_confirmation"] == false);
    CHECK_THROWS_AS(apply_override(doc, "beta"), ConfigError);
    const auto spec = parse_config(doc);
    CHECK(spec.strategy == "balancing");
    CHECK(spec.config.beta == 0.3);
}

TEST_CASE("sweep grid expands to the product times repetitions")
{
    Json doc = Json::parse(small_run);
    doc["mode"] = "sweep";
    doc["grid"] = Json::parse(R"({"beta": [0.15, 0.25, 0.3], "strategy": ["passive", "balancing"]})");
    doc["beta_active"] = 0.15;
    auto spec = parse_config(doc);
    auto all = cells(spec);
    REQUIRE(all.size() == 6);
    CHECK(all[0].config.beta == 0.15);
    CHECK(all[0].strategy == "passive");
    CHECK(all[1].strategy == "balancing");
    CHECK(all[5].config.beta == 0.3);
    for (std::size_t i = 0; i < all.size(); ++i)
        CHECK(all[i].run_id == i);

    spec.repetitions = 3;
    all = cells(spec);
    REQUIRE(all.size() == 18);
    CHECK(all[0].config.seed == 11);
    CHECK(all[2].config.seed == 13);
    CHECK(all[3].config.seed == 11);
    CHECK(all[3].strategy == "balancing");
}

TEST_CASE("one passive run gives one clean row")
{
    Json doc = Json::parse(small_run);
    doc["beta_active"] = 0.0;
    const auto spec = parse_config(doc);
    const auto rows = run_sweep(spec);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].strategy == "passive");
    CHECK(rows[0].safety_violations == 0);
    CHECK(rows[0].safety_instances > 0);
    CHECK(rows[0].mean_tx_latency_rounds > 0.0);
    CHECK(rows[0].delta_assumed);
    CHECK(line_count(csv_of(rows)) == 2);
    CHECK_FALSE(over_safety_budget(spec, rows));
}

TEST_CASE("sweeps replay byte for byte and rows come back in run order")
{
    Json doc = Json::parse(small_run);
    doc["mode"] = "sweep";
    doc["repetitions"] = 2;
    doc["grid"] = Json::parse(R"({"strategy": ["passive", "censorship", "balancing", "private_nakamoto"]})");
    auto spec = parse_config(doc);
    const auto a = csv_of(run_sweep(spec));
    spec.workers = 3;
    const auto rows = run_sweep(spec);
    const auto b = csv_of(rows);
    CHECK(a == b);
    CHECK(line_count(a) == 1 + 8);
    for (std::size_t i = 0; i < rows.size(); ++i)
        CHECK(rows[i].run_id == i);

    doc["seed"] = 12;
    CHECK(csv_of(run_sweep(parse_config(doc))) != a);
}

TEST_CASE("config echo round-trips through the parser")
{
    Json doc = Json::parse(small_run);
    doc["grid"] = Json::parse(R"({"beta": [0.1, 0.3], "q": [1, 8]})");
    doc["beta_active"] = 0.1;
    doc["epsilon"] = 1e-7;
    doc["conflict_fraction"] = 0.125;
    const auto spec = parse_config(doc);
    for (const auto& cell : cells(spec)) {
        const Json echo = config_to_json(cell.config);
        const auto again = parse_config(echo);
        CHECK(config_to_json(again.config) == echo);
        CHECK(again.config.beta == cell.config.beta);
        CHECK(again.config.q == cell.config.q);
        CHECK(again.config.seed == cell.config.seed);
    }
    for (const auto& key : known_keys())
        CHECK(key != "");
}

TEST_CASE("summary echoes the config and averages per strategy")
{
    Json doc = Json::parse(small_run);
    doc["mode"] = "sweep";
    doc["grid"] = Json::parse(R"({"strategy": ["passive", "balancing"]})");
    const auto spec = parse_config(doc);
    const auto rows = run_sweep(spec);
    const auto s = summary_json(spec, rows);
    CHECK(s["runs"] == 2);
    CHECK(s["config"]["m"] == 4);
    CHECK(s["grid"]["strategy"].size() == 2);
    CHECK(s["by_strategy"]["passive"]["runs"] == 1);
    CHECK(s["by_strategy"]["balancing"]["mean_tx_latency_rounds"].get<double>() ==
          doctest::Approx(rows[1].mean_tx_latency_rounds));
}

TEST_CASE("safety budget")
{
    const auto spec = parse_config_text(small_run);
    std::vector<RunRow> rows(2);
    rows[0].safety_instances = 500;
    rows[1].safety_instances = 500;
    rows[0].safety_violations = 1;
    // ε = default, ⌈ε·1000⌉ = 1
    CHECK_FALSE(over_safety_budget(spec, rows));
    rows[1].safety_violations = 1;
    CHECK(over_safety_budget(spec, rows));
    auto lenient = spec;
    lenient.safety_budget = 5;
    CHECK_FALSE(over_safety_budget(lenient, rows));
}

TEST_CASE("baseline and curve CSV")
{
    std::ostringstream curve;
    write_curve_csv(curve, "ghost_thruput", 5);
    CHECK(line_count(curve.str()) == 6);
    CHECK(curve.str().rfind("curve,beta,x,value\n", 0) == 0);

    auto spec = parse_config_text(R"({"m": 1, "beta": 0.3, "fv_round": 2.0, "r_max": 1000, "repetitions": 3,
                                      "mode": "baseline"})");
    std::ostringstream ghost;
    write_baseline_csv(ghost, spec, "ghost");
    CHECK(line_count(ghost.str()) == 4);

    spec.params = {{"k", 3}};
    std::ostringstream btc;
    write_baseline_csv(btc, spec, "bitcoin");
    CHECK(line_count(btc.str()) == 4);
    CHECK(btc.str().find(",passive,3,") != std::string::npos);
    std::ostringstream bad;
    CHECK_THROWS_AS(write_baseline_csv(bad, spec, "ghost"), ConfigError);
    CHECK_THROWS_AS(write_baseline_csv(bad, spec, "ethereum"), ConfigError);
}

#ifdef PRISM_SIM_PATH
TEST_CASE("command line exit codes")
{
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "prism_sim_test";
    fs::create_directories(dir);
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream(dir / name) << text;
        return (dir / name).string();
    };
    auto sim = [&](const std::string& args) {
        const std::string cmd = std::string(PRISM_SIM_PATH) + " " + args + " >/dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    };
    auto read = [](const fs::path& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };

    const auto ok = write("ok.json", small_run);
    const auto out = (dir / "out.csv").string();
    CHECK(sim("simulate " + ok + " --out " + out) == 0);
    const auto first = read(out);
    CHECK(line_count(first) == 2);
    CHECK(sim("simulate " + ok + " --out " + out) == 0);
    CHECK(read(out) == first);
    CHECK(sim("simulate " + ok + " --seed 99 --out " + out) == 0);
    CHECK(read(out).find("\n0,99,") != std::string::npos);
    CHECK(sim("simulate " + ok + " --override beta=0.6") == 2);
    CHECK(sim("simulate " + write("bad.json", R"({"gamma": 1})")) == 2);
    CHECK(sim("simulate /nonexistent.json") == 2);
    CHECK(sim("frobnicate") == 2);

    const auto sweep = write("sweep.json", R"({"m": 2, "beta": 0.25, "fv_round": 0.2, "fp_round": 0.2,
        "r_max": 200, "grid": {"strategy": ["passive", "balancing"]}})");
    CHECK(sim("sweep " + sweep + " --out " + (dir / "sweep.csv").string()) == 0);
    CHECK(line_count(read(dir / "sweep.csv")) == 3);
    CHECK(Json::parse(read(dir / "sweep.json"))["runs"] == 2);

    CHECK(sim("analytics --curve bitcoin_thruput --grid 7 --out " + (dir / "c.csv").string()) == 0);
    CHECK(line_count(read(dir / "c.csv")) == 8);
    CHECK(sim("analytics --curve nope --grid 7") == 2);
    CHECK(sim("baseline --protocol ghost " + ok) == 0);

    // a single tree under a near-half private attacker breaks the vote bounds
    const auto hostile = write("hostile.json", R"({"m": 1, "beta": 0.45, "beta_active": 0.45, "fv_round": 0.5,
        "fp_round": 0.5, "r_max": 2000, "strategy": "private_nakamoto", "params": {"k": 1},
        "epsilon": 0.001, "safety_budget": 0})");
    CHECK(sim("simulate " + hostile) == 4);
    fs::remove_all(dir);
}
#endif
