#include "prism/analytics.hpp"
#include "prism/baselines.hpp"
#include "prism/errors.hpp"
#include "prism/experiment.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace pybind11::literals;
namespace an = prism::analytics;
namespace ex = prism::experiment;

namespace {

py::dict row_dict(const ex::RunRow& r)
{
    return py::dict("run_id"_a = r.run_id, "seed"_a = r.seed, "beta"_a = r.beta, "beta_active"_a = r.beta_active,
                    "m"_a = r.m, "strategy"_a = r.strategy, "epsilon"_a = r.epsilon,
                    "mean_tx_latency_rounds"_a = r.mean_tx_latency_rounds,
                    "mean_tx_latency_seconds"_a = r.mean_tx_latency_seconds, "p95_latency"_a = r.p95_latency,
                    "list_confirm_mean_rounds"_a = r.list_confirm_mean_rounds,
                    "throughput_tx_per_round"_a = r.throughput_tx_per_round,
                    "nonredundant_fraction"_a = r.nonredundant_fraction,
                    "safety_violations"_a = r.safety_violations, "delta_assumed"_a = r.delta_assumed);
}

// Rows for every cell of a config given as JSON text.
std::vector<py::dict> run_rows(const std::string& config_json)
{
    const auto spec = ex::parse_config_text(config_json);
    std::vector<ex::RunRow> rows;
    {
        py::gil_scoped_release release;
        rows = ex::run_sweep(spec);
    }
    std::vector<py::dict> out;
    for (const auto& r : rows)
        out.push_back(row_dict(r));
    return out;
}

std::string run_csv(const std::string& config_json)
{
    const auto spec = ex::parse_config_text(config_json);
    std::ostringstream os;
    {
        py::gil_scoped_release release;
        ex::write_csv(os, ex::run_sweep(spec));
    }
    return os.str();
}

std::string baseline_csv(const std::string& config_json, const std::string& protocol)
{
    auto doc = ex::Json::parse(config_json);
    doc["mode"] = "baseline";
    const auto spec = ex::parse_config(doc);
    std::ostringstream os;
    ex::write_baseline_csv(os, spec, protocol);
    return os.str();
}

py::dict ghost_balancing(double beta, double f_round, prism::Round horizon, std::uint64_t seed)
{
    prism::baselines::GhostAttackConfig g;
    g.beta = beta;
    g.f_round = f_round;
    g.horizon = horizon;
    g.seed = seed;
    const auto o = prism::baselines::run_ghost_balancing(g);
    return py::dict("lifetime"_a = o.lifetime, "survived"_a = o.survived, "released"_a = o.released,
                    "bank"_a = o.bank);
}

std::vector<py::tuple> curve(const std::string& id, std::uint32_t n)
{
    std::vector<py::tuple> out;
    for (const auto& p : an::curve(id, n))
        out.push_back(py::make_tuple(p.beta, p.x, p.value));
    return out;
}

} // namespace

PYBIND11_MODULE(_prism, m)
{
    m.doc() = "Prism proof-of-work protocol simulator";

    py::register_exception<prism::ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<prism::ContractViolation>(m, "ContractViolation", PyExc_ValueError);
    py::register_exception<prism::StrategyFault>(m, "StrategyFault", PyExc_RuntimeError);

    m.def("run_rows", &run_rows, "config_json"_a, "Run every cell of a JSON config; one dict per run.");
    m.def("run_csv", &run_csv, "config_json"_a, "Run every cell of a JSON config; the CSV text.");
    m.def("baseline_csv", &baseline_csv, "config_json"_a, "protocol"_a);
    m.def("ghost_balancing", &ghost_balancing, "beta"_a, "f_round"_a, "horizon"_a = 10000, "seed"_a = 1);
    m.def("csv_columns", &ex::csv_columns);

    m.def("bitcoin_fbar", &an::bitcoin_fbar, "beta"_a);
    m.def("bitcoin_crossover", &an::bitcoin_crossover);
    m.def("bitcoin_thruput_bound", &an::bitcoin_thruput_bound, "beta"_a);
    m.def("chain_growth", &an::chain_growth, "beta"_a, "f_round"_a);
    m.def("skellam_abs_mean", &an::skellam_abs_mean, "mu"_a);
    m.def("ghost_fbar", &an::ghost_fbar, "beta"_a);
    m.def("ghost_thruput_bound", &an::ghost_thruput_bound, "beta"_a);
    m.def("prism_thruput", &an::prism_thruput, "q"_a, "beta"_a, "ft_round"_a);
    m.def("tradeoff", &an::tradeoff, "tau_p_norm"_a, "beta"_a);
    m.def("confirm_depth", &an::confirm_depth, "epsilon"_a, "m"_a, "r_max"_a, "beta"_a);
    m.def("curve_ids", &an::curve_ids);
    m.def("curve", &curve, "curve_id"_a, "n"_a, "(beta, x, value) per grid point.");
}
