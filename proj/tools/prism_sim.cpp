// prism_sim: run simulations, sweeps, baselines and analytic curves.
//
//   prism_sim simulate <config.json> [--seed N] [--out file.csv] [--override key=value ...]
//   prism_sim sweep <config.json> [--out file.csv]      also writes file.json
//   prism_sim baseline --protocol bitcoin|ghost <config.json>
//   prism_sim analytics --curve <id> --grid <n>
//
// Exit codes: 0 ok, 2 config error, 3 strategy fault, 4 safety budget exceeded.

#include "prism/analytics.hpp"
#include "prism/errors.hpp"
#include "prism/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using prism::experiment::Json;

constexpr int exit_config = 2;
constexpr int exit_fault = 3;
constexpr int exit_safety = 4;

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c)
{
    cmd->add_option("config", c.config_path, "JSON config file")->required();
    cmd->add_option("--seed", c.seed, "Base seed, replaces the config's");
    cmd->add_option("--out", c.out, "Output CSV path (default: config 'output' or stdout)");
    cmd->add_option("--override", c.overrides, "key=value, repeatable");
}

prism::experiment::ExperimentSpec load(const Common& c, const std::string& mode)
{
    std::ifstream in(c.config_path);
    if (!in)
        throw prism::ConfigError("cannot read config file '" + c.config_path + "'");
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw prism::ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    for (const auto& o : c.overrides)
        prism::experiment::apply_override(doc, o);
    if (c.seed)
        doc["seed"] = *c.seed;
    doc["mode"] = mode;
    return prism::experiment::parse_config(doc);
}

// Writes through `emit` to the chosen path, or stdout.
template <class F>
void with_output(const std::string& path, F emit)
{
    if (path.empty() || path == "-") {
        emit(std::cout);
        return;
    }
    std::ofstream out(path);
    if (!out)
        throw prism::ConfigError("cannot write '" + path + "'");
    emit(out);
}

std::string summary_path(const std::string& csv)
{
    const auto dot = csv.rfind('.');
    const auto slash = csv.rfind('/');
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash))
        return csv.substr(0, dot) + ".json";
    return csv + ".json";
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Prism proof-of-work protocol simulator"};
    app.require_subcommand(1);

    Common sim, sweep, base;
    auto* simulate_cmd = app.add_subcommand("simulate", "Run one config (times repetitions) and emit CSV");
    add_common(simulate_cmd, sim);
    auto* sweep_cmd = app.add_subcommand("sweep", "Run the config's grid on a worker pool; CSV plus JSON summary");
    add_common(sweep_cmd, sweep);
    auto* baseline_cmd = app.add_subcommand("baseline", "Run the longest-chain or GHOST baseline");
    add_common(baseline_cmd, base);
    std::string protocol;
    baseline_cmd->add_option("--protocol", protocol, "bitcoin or ghost")
        ->required()
        ->check(CLI::IsMember({"bitcoin", "ghost"}));

    auto* analytics_cmd = app.add_subcommand("analytics", "Emit a closed-form curve as CSV");
    std::string curve_id;
    std::uint32_t grid = 100;
    std::string curve_out;
    analytics_cmd->add_option("--curve", curve_id, "Curve id")
        ->required()
        ->check(CLI::IsMember(prism::analytics::curve_ids()));
    analytics_cmd->add_option("--grid", grid, "Number of grid points")->check(CLI::PositiveNumber);
    analytics_cmd->add_option("--out", curve_out, "Output CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    try {
        if (analytics_cmd->parsed()) {
            with_output(curve_out, [&](std::ostream& os) { prism::experiment::write_curve_csv(os, curve_id, grid); });
            return 0;
        }
        if (baseline_cmd->parsed()) {
            const auto spec = load(base, "baseline");
            with_output(base.out.empty() ? spec.output : base.out,
                        [&](std::ostream& os) { prism::experiment::write_baseline_csv(os, spec, protocol); });
            return 0;
        }
        const bool is_sweep = sweep_cmd->parsed();
        const Common& c = is_sweep ? sweep : sim;
        const auto spec = load(c, is_sweep ? "sweep" : "simulate");
        const auto rows = prism::experiment::run_sweep(spec);
        const std::string out = c.out.empty() ? spec.output : c.out;
        with_output(out, [&](std::ostream& os) { prism::experiment::write_csv(os, rows); });
        if (is_sweep) {
            const auto summary = prism::experiment::summary_json(spec, rows).dump(2);
            if (out.empty() || out == "-")
                std::cerr << summary << '\n';
            else
                with_output(summary_path(out), [&](std::ostream& os) { os << summary << '\n'; });
        }
        if (prism::experiment::over_safety_budget(spec, rows)) {
            std::cerr << "safety violations exceed the budget\n";
            return exit_safety;
        }
        return 0;
    } catch (const prism::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const prism::StrategyFault& e) {
        std::cerr << "strategy fault: " << e.what() << '\n';
        return exit_fault;
    } catch (const prism::ContractViolation& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return exit_config;
    }
}
