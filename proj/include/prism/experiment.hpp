#pragma once

#include "prism/adversary.hpp"
#include "prism/config.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

// Config parsing, sweep expansion and CSV/JSON emission behind prism_sim.

namespace prism::experiment {

using Json = nlohmann::ordered_json;

struct ExperimentSpec {
    std::string mode = "simulate"; ///< simulate | analytics | baseline | sweep
    SimConfig config;
    std::string strategy = "passive";
    StrategyParams params;
    std::uint32_t repetitions = 1;
    /// Sweep axes in file order: config key or "strategy" → values.
    std::vector<std::pair<std::string, std::vector<Json>>> grid;
    std::string output;
    /// Worker threads for sweeps; 0 picks hardware concurrency.
    std::uint32_t workers = 0;
    /// Largest tolerated total safety-violation count; unset means
    /// ⌈ε·N⌉ over the N checked instances.
    std::optional<std::uint64_t> safety_budget;
    /// Fill fv_round, fp_round, ft_round and m from capacity, delay and
    /// block sizes.
    bool derive = false;
    /// Cap on the derived voter rate.
    std::optional<double> fv_cap;
    /// Neither capacity nor delay was given, so seconds assume Δ = 1.
    bool delta_assumed = true;
};

/// Every key parse_config accepts.
const std::vector<std::string>& known_keys();

/// Throws ConfigError naming the offending key or, for stability, quoting
/// the inequality.
ExperimentSpec parse_config(const Json& doc);
ExperimentSpec parse_config_text(const std::string& text);
ExperimentSpec parse_config_file(const std::string& path);

/// "key=value"; the value is read as JSON when it parses, else as a string.
void apply_override(Json& doc, const std::string& assignment);

/// Flat document of every SimConfig field.
Json config_to_json(const SimConfig& config);

struct Cell {
    std::uint32_t run_id = 0;
    SimConfig config;
    std::string strategy;
    StrategyParams params;
};

/// Grid product (first axis varies slowest) times repetitions; repetition
/// i of every cell runs with seed + i.
std::vector<Cell> cells(const ExperimentSpec& spec);

struct RunRow {
    std::uint32_t run_id = 0;
    std::uint64_t seed = 0;
    double beta = 0.0;
    double beta_active = 0.0;
    std::uint32_t m = 0;
    std::string strategy;
    double epsilon = 0.0;
    double mean_tx_latency_rounds = 0.0;
    double mean_tx_latency_seconds = 0.0;
    double p95_latency = 0.0;
    double list_confirm_mean_rounds = 0.0;
    double throughput_tx_per_round = 0.0;
    double nonredundant_fraction = 0.0;
    std::uint64_t safety_violations = 0;
    bool delta_assumed = true;
    /// Safety checks performed; not emitted as a column.
    std::uint64_t safety_instances = 0;
};

/// Throws StrategyFault when the strategy misbehaves.
RunRow run_cell(const Cell& cell, bool delta_assumed);

/// Runs every cell on a worker pool; rows come back sorted by run_id.
std::vector<RunRow> run_sweep(const ExperimentSpec& spec);

const std::vector<std::string>& csv_columns();
void write_csv(std::ostream& os, const std::vector<RunRow>& rows);

/// Config echo plus per-strategy means.
Json summary_json(const ExperimentSpec& spec, const std::vector<RunRow>& rows);

/// Whether total violations exceed safety_budget (or its ε·N default).
bool over_safety_budget(const ExperimentSpec& spec, const std::vector<RunRow>& rows);

void write_curve_csv(std::ostream& os, const std::string& curve_id, std::uint32_t n);

/// protocol: bitcoin (strategy passive | private) or ghost.
void write_baseline_csv(std::ostream& os, const ExperimentSpec& spec, const std::string& protocol);

} // namespace prism::experiment
