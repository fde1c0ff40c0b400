#include "prism/config.hpp"

#include "prism/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace prism {

double SimConfig::round_seconds() const noexcept
{
    return std::max(b_p, b_v) / capacity + delay;
}

double SimConfig::arrival_rate() const noexcept
{
    if (lambda_in >= 0.0)
        return lambda_in;
    return 0.5 * (1.0 - beta) * ft_round * b_t;
}

double SimConfig::load_per_round() const noexcept
{
    return fp_round * b_p + static_cast<double>(m) * fv_round * b_v + ft_round * b_t;
}

void SimConfig::validate() const
{
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (!(beta >= 0.0 && beta < 0.5))
        fail("beta must satisfy 0 <= beta < 0.5 (got " + std::to_string(beta) + ")");
    if (!(beta_active >= 0.0 && beta_active <= beta))
        fail("beta_active must satisfy 0 <= beta_active <= beta (got " + std::to_string(beta_active) + ")");
    if (m < 1)
        fail("m must be >= 1");
    if (r_max < 1)
        fail("r_max must be >= 1");
    if (q < 1)
        fail("q must be >= 1");
    if (fv_round < 0.0 || fp_round < 0.0 || ft_round < 0.0)
        fail("mining rates must be >= 0");
    if (!(b_v > 0.0 && b_p > 0.0 && b_t > 0.0))
        fail("block sizes B_v, B_p, B_t must be > 0");
    if (!(capacity > 0.0) || delay < 0.0)
        fail("C must be > 0 and D must be >= 0");
    if (!(epsilon > 0.0 && epsilon < 1.0))
        fail("epsilon must lie in (0, 1)");
    if (!(cp_multiplier > 0.0))
        fail("cp_multiplier must be > 0");
    if (conflict_fraction < 0.0 || conflict_fraction > 1.0)
        fail("conflict_fraction must lie in [0, 1]");

    const double load = load_per_round();
    const double budget = capacity * round_seconds();
    if (load > budget) {
        std::ostringstream os;
        os << "stability violated: fp*B_p + m*fv*B_v + ft*B_t = " << load << " > C*Delta = " << budget;
        fail(os.str());
    }
}

DerivedParameters derive_parameters(double capacity, double delay, double b_v, double b_p, double b_t,
                                    double beta, double epsilon, double fv_cap)
{
    if (!(capacity > 0.0 && delay > 0.0 && b_v > 0.0 && b_p > 0.0 && b_t > 0.0))
        throw ConfigError("derive_parameters: C, D and block sizes must be positive");
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw ConfigError("derive_parameters: epsilon must lie in (0, 1)");
    if (!(beta < 0.5))
        throw ConfigError("derive_parameters: beta < 0.5 required (got " + std::to_string(beta) + ")");
    if (beta < 0.0)
        throw ConfigError("derive_parameters: beta must be >= 0");

    DerivedParameters out;
    out.delta = std::max(b_p, b_v) / capacity + delay;

    const double security_limit =
        beta > 0.0 ? (1.0 / (1.0 - beta)) * std::log((1.0 - beta) / beta) : std::numeric_limits<double>::infinity();
    out.fv_round = std::min(fv_cap, security_limit);
    if (!std::isfinite(out.fv_round) || !(out.fv_round > 0.0))
        throw ConfigError("derive_parameters: voter rate is unbounded or zero; supply a finite positive fv_cap");
    out.fp_round = out.fv_round;
    out.ft_round = 0.9 * capacity * out.delta / b_t;

    const double m_real = 0.1 * capacity * delay / (out.fv_round * b_v) - b_p / b_v;
    if (!(m_real >= 1.0))
        throw ConfigError("derive_parameters: infeasible capacity, fewer than one voter tree fits (m = " +
                          std::to_string(m_real) + ")");
    if (m_real > 4.0e9)
        throw ConfigError("derive_parameters: voter-tree count diverges (beta too close to 0.5)");
    out.m = static_cast<std::uint32_t>(std::floor(m_real));

    const double load = out.fp_round * b_p + out.m * out.fv_round * b_v + out.ft_round * b_t;
    if (load > capacity * out.delta)
        throw ConfigError("derive_parameters: derived rates violate the stability constraint");
    return out;
}

} // namespace prism
