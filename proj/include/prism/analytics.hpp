#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Closed-form throughput and latency curves. Rates are per round (Δ);
// efficiencies are fractions of network capacity.

namespace prism::analytics {

/// Positive root f̄ of 1 − e^{−(1−β)f} = βf. Throws ContractViolation
/// unless 0 < beta < 0.5.
double bitcoin_fbar(double beta);

/// β solving 1 − e^{β−1} = β, where the two Bitcoin bounds meet.
double bitcoin_crossover();

/// min{β·f̄_BTC(β), 1 − e^{β−1}}.
double bitcoin_thruput_bound(double beta);

/// Longest-chain growth with honest rate (1−β)f: 1 − e^{−(1−β)f} blocks
/// per round.
double chain_growth(double beta, double f_round);

/// E|H₁ − H₂| for independent H₁, H₂ ~ Poisson(mu). Series with
/// truncation error below 1e-13.
double skellam_abs_mean(double mu);

/// f with βf = E|H₁−H₂|, H₁,H₂ ~ Poisson((1−β)f/2) (main-text balancing
/// condition). Throws ContractViolation for beta ≤ 0, where no finite
/// root exists, and for beta ≥ 0.5.
double ghost_fbar(double beta);

/// f with βf = E[(H₂−H₁)₊]/2 = E|H₁−H₂|/4 (appendix form of the same
/// condition). Only has a positive root for β < 0.2; returns 0 from there
/// on.
double ghost_fbar_appendix(double beta);

/// min{β·f̄_GHOST(β), 1 − e^{β−1}}.
double ghost_thruput_bound(double beta);

/// Non-redundant honest transaction blocks per round,
/// q·(1 − e^{−(1−β)f_t/q}).
double prism_thruput(double q, double beta, double ft_round);

/// λ̄ = (1−β) / (τ̄_p · log(1/(1 − 1/τ̄_p))) for τ̄_p > 1.
double tradeoff(double tau_p_norm, double beta);

/// γ = (1−2β)²/36.
double gamma(double beta);

/// 5400(1−β)/((1−2β)³ log((1−β)/β)) · log(50/(1−2β)).
double c1(double beta);
/// Same with 2808 in place of 5400 (the list-confirmation form).
double c1_list(double beta);
/// 54000/(1−2β)³ · log(50/(1−2β)).
double c2(double beta);

/// max{c₁(β)·D, c₂(β)·(B_v/C)·log(1/ε)} seconds.
double latency_bound(double beta, double delay, double b_v, double capacity, double epsilon);

/// Expected rounds to list-confirm a level:
/// 2808/((1−2β)³ f_v) · log(50/(1−2β)) + 256/((1−2β)⁶ f_v m²).
double list_latency_rounds(double beta, double fv_round, double m);

/// Rounds after which a level's leader is permanent:
/// 1024/(f_v(1−2β)³) · log(8·m·r_max/ε).
double common_prefix_rounds(double beta, double fv_round, double m, double r_max, double epsilon);

/// Rounds until an honest transaction is in the permanent ledger:
/// 3·2¹⁴/((1−2β)³ f_v) · log(32·m·r_max/ε).
double liveness_rounds(double beta, double fv_round, double m, double r_max, double epsilon);

/// (2/γ)·log(8·m·r_max²/ε), unrounded.
double confirm_depth_real(double epsilon, double m, double r_max, double beta);
/// ceil of confirm_depth_real.
std::uint64_t confirm_depth(double epsilon, double m, double r_max, double beta);

struct CurvePoint {
    std::string curve;
    double beta = 0.0;
    /// Abscissa: β for the β-curves, τ̄_p for tradeoff.
    double x = 0.0;
    double value = 0.0;
};

struct CurveOptions {
    double beta = 0.25;      ///< fixed β for tradeoff
    double q = 64.0;
    double ft_round = 1.0;
    double delay = 1.0;
    double b_v = 1.0;
    double capacity = 10000.0;
    double epsilon = 4.5399929762484854e-05;
    double tau_max = 20.0;   ///< tradeoff grid runs over (1, tau_max]
};

/// Ids: bitcoin_thruput, ghost_thruput, prism_thruput, tradeoff,
/// latency_bound. β-curves use β_i = 0.5·(i+1)/(n+1), i < n. Throws
/// ContractViolation for an unknown id or n = 0.
std::vector<CurvePoint> curve(const std::string& id, std::uint32_t n, const CurveOptions& options = {});

const std::vector<std::string>& curve_ids();

} // namespace prism::analytics
