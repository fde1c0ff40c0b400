#include "prism/analytics.hpp"

#include "prism/errors.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace prism::analytics {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

void require_beta(double beta, const char* what)
{
    if (!(beta > 0.0 && beta < 0.5))
        throw ContractViolation(std::string(what) + ": beta must lie in (0, 0.5)");
}

// Root of g on (0, ∞) where g > 0 just above 0 and g < 0 far out.
template <class G>
double positive_root(G g, double start)
{
    double hi = start;
    while (g(hi) >= 0.0) {
        hi *= 2.0;
        if (hi > 1e12)
            throw ContractViolation("root search did not bracket a sign change");
    }
    double lo = hi;
    do {
        lo *= 0.5;
        if (lo < 1e-300)
            throw ContractViolation("root search did not bracket a sign change");
    } while (g(lo) <= 0.0);
    auto tol = [](double a, double b) { return std::abs(b - a) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(a); };
    auto [a, b] = boost::math::tools::bisect(g, lo, hi, tol);
    return 0.5 * (a + b);
}

} // namespace

double bitcoin_fbar(double beta)
{
    require_beta(beta, "bitcoin_fbar");
    auto g = [beta](double f) { return -std::expm1(-(1.0 - beta) * f) - beta * f; };
    return positive_root(g, 1.0 / beta);
}

double bitcoin_crossover()
{
    auto h = [](double b) { return -std::expm1(b - 1.0) - b; };
    auto tol = [](double a, double b) { return std::abs(b - a) <= 4.0 * std::numeric_limits<double>::epsilon(); };
    auto [a, b] = boost::math::tools::bisect(h, 0.0, 0.5, tol);
    return 0.5 * (a + b);
}

double bitcoin_thruput_bound(double beta)
{
    return std::min(beta * bitcoin_fbar(beta), -std::expm1(beta - 1.0));
}

double chain_growth(double beta, double f_round)
{
    return -std::expm1(-(1.0 - beta) * f_round);
}

double skellam_abs_mean(double mu)
{
    if (mu < 0.0)
        throw ContractViolation("skellam_abs_mean: mu must be >= 0");
    if (mu == 0.0)
        return 0.0;
    // E|H1−H2| = E[max] − E[min] = Σ_{n≥1} 2·P(H ≥ n)·P(H < n). Every term
    // is positive, so nothing cancels at large μ. Past n_max the pmf is
    // below 1e-30.
    const auto n_max = static_cast<std::size_t>(mu + 40.0 * std::sqrt(mu) + 60.0);
    // Ratios outward from the mode, then normalized: exp(k·ln μ − lgamma)
    // loses about 1e-11 relative at μ in the thousands.
    std::vector<double> pmf(n_max + 1, 0.0);
    const auto mode = std::min(static_cast<std::size_t>(mu), n_max);
    pmf[mode] = 1.0;
    for (std::size_t k = mode; k < n_max; ++k)
        pmf[k + 1] = pmf[k] * mu / static_cast<double>(k + 1);
    for (std::size_t k = mode; k > 0; --k)
        pmf[k - 1] = pmf[k] * static_cast<double>(k) / mu;
    double total = 0.0;
    for (double p : pmf)
        total += p;
    for (double& p : pmf)
        p /= total;
    std::vector<double> upper(n_max + 2, 0.0); // upper[n] = P(H ≥ n)
    for (std::size_t n = n_max + 1; n-- > 0;)
        upper[n] = upper[n + 1] + pmf[n];
    double lower = 0.0; // P(H < n)
    double sum = 0.0;
    for (std::size_t n = 1; n <= n_max; ++n) {
        lower += pmf[n - 1];
        sum += upper[n] * lower;
    }
    return 2.0 * sum;
}

double ghost_fbar(double beta)
{
    if (beta <= 0.0)
        throw ContractViolation("ghost_fbar: no finite root for beta <= 0 (threshold is +inf)");
    require_beta(beta, "ghost_fbar");
    auto g = [beta](double f) { return skellam_abs_mean((1.0 - beta) * f / 2.0) - beta * f; };
    return positive_root(g, 1.0);
}

double ghost_fbar_appendix(double beta)
{
    require_beta(beta, "ghost_fbar_appendix");
    // Slope at f = 0 is (1−β)/4 − β; at or past β = 0.2 no f > 0 satisfies
    // the condition.
    if ((1.0 - beta) / 4.0 <= beta)
        return 0.0;
    auto g = [beta](double f) { return skellam_abs_mean((1.0 - beta) * f / 2.0) / 4.0 - beta * f; };
    return positive_root(g, 1.0);
}

double ghost_thruput_bound(double beta)
{
    return std::min(beta * ghost_fbar(beta), -std::expm1(beta - 1.0));
}

double prism_thruput(double q, double beta, double ft_round)
{
    if (!(q > 0.0))
        throw ContractViolation("prism_thruput: q must be > 0");
    if (std::isinf(q))
        return (1.0 - beta) * ft_round;
    return -q * std::expm1(-(1.0 - beta) * ft_round / q);
}

double tradeoff(double tau_p_norm, double beta)
{
    if (!(tau_p_norm > 1.0))
        throw ContractViolation("tradeoff: tau_p_norm must exceed 1");
    if (std::isinf(tau_p_norm))
        return 1.0 - beta;
    return (1.0 - beta) / (tau_p_norm * -std::log1p(-1.0 / tau_p_norm));
}

double gamma(double beta)
{
    const double s = 1.0 - 2.0 * beta;
    return s * s / 36.0;
}

namespace {
double c1_with(double constant, double beta)
{
    require_beta(beta, "c1");
    const double s = 1.0 - 2.0 * beta;
    return constant * (1.0 - beta) / (s * s * s * std::log((1.0 - beta) / beta)) * std::log(50.0 / s);
}
} // namespace

double c1(double beta) { return c1_with(5400.0, beta); }
double c1_list(double beta) { return c1_with(2808.0, beta); }

double c2(double beta)
{
    if (!(beta >= 0.0 && beta < 0.5))
        throw ContractViolation("c2: beta must lie in [0, 0.5)");
    const double s = 1.0 - 2.0 * beta;
    return 54000.0 / (s * s * s) * std::log(50.0 / s);
}

double latency_bound(double beta, double delay, double b_v, double capacity, double epsilon)
{
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw ContractViolation("latency_bound: epsilon must lie in (0, 1)");
    return std::max(c1(beta) * delay, c2(beta) * (b_v / capacity) * std::log(1.0 / epsilon));
}

double list_latency_rounds(double beta, double fv_round, double m)
{
    const double s = 1.0 - 2.0 * beta;
    const double s3 = s * s * s;
    return 2808.0 / (s3 * fv_round) * std::log(50.0 / s) + 256.0 / (s3 * s3 * fv_round * m * m);
}

double common_prefix_rounds(double beta, double fv_round, double m, double r_max, double epsilon)
{
    const double s = 1.0 - 2.0 * beta;
    return 1024.0 / (fv_round * s * s * s) * std::log(8.0 * m * r_max / epsilon);
}

double liveness_rounds(double beta, double fv_round, double m, double r_max, double epsilon)
{
    const double s = 1.0 - 2.0 * beta;
    return 3.0 * 16384.0 / (s * s * s * fv_round) * std::log(32.0 * m * r_max / epsilon);
}

double confirm_depth_real(double epsilon, double m, double r_max, double beta)
{
    if (!(beta >= 0.0 && beta < 0.5))
        throw ContractViolation("confirm_depth: beta must lie in [0, 0.5)");
    if (!(epsilon > 0.0) || !(m >= 1.0) || !(r_max >= 1.0))
        throw ContractViolation("confirm_depth: need epsilon > 0, m >= 1, r_max >= 1");
    return 2.0 / gamma(beta) * std::log(8.0 * m * r_max * r_max / epsilon);
}

std::uint64_t confirm_depth(double epsilon, double m, double r_max, double beta)
{
    return static_cast<std::uint64_t>(std::ceil(confirm_depth_real(epsilon, m, r_max, beta)));
}

const std::vector<std::string>& curve_ids()
{
    static const std::vector<std::string> ids{"bitcoin_thruput", "ghost_thruput", "prism_thruput", "tradeoff",
                                              "latency_bound"};
    return ids;
}

std::vector<CurvePoint> curve(const std::string& id, std::uint32_t n, const CurveOptions& o)
{
    if (n == 0)
        throw ContractViolation("curve: grid size must be >= 1");
    if (std::find(curve_ids().begin(), curve_ids().end(), id) == curve_ids().end())
        throw ContractViolation("curve: unknown curve id '" + id + "'");

    std::vector<CurvePoint> out;
    out.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        CurvePoint p;
        p.curve = id;
        if (id == "tradeoff") {
            p.beta = o.beta;
            p.x = 1.0 + (o.tau_max - 1.0) * static_cast<double>(i + 1) / n;
            p.value = tradeoff(p.x, o.beta);
        } else {
            p.beta = 0.5 * static_cast<double>(i + 1) / (n + 1);
            p.x = p.beta;
            if (id == "bitcoin_thruput")
                p.value = bitcoin_thruput_bound(p.beta);
            else if (id == "ghost_thruput")
                p.value = ghost_thruput_bound(p.beta);
            else if (id == "prism_thruput")
                p.value = prism_thruput(o.q, p.beta, o.ft_round);
            else
                p.value = latency_bound(p.beta, o.delay, o.b_v, o.capacity, o.epsilon);
        }
        out.push_back(std::move(p));
    }
    return out;
}

} // namespace prism::analytics
