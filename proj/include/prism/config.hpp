#pragma once

#include <cstdint>
#include <limits>
#include <string>

namespace prism {

/// Every protocol and physical parameter of a run. Rates are expressed per
/// round (mean blocks mined per round Δ); sizes are in transactions.
struct SimConfig {
    std::uint32_t m = 100;        ///< number of voter trees
    double beta = 0.25;           ///< adversary fraction the confirmation rules defend against
    double beta_active = 0.0;     ///< adversary fraction actually mining (β̃ ≤ β)
    double fv_round = 0.1;        ///< voter blocks per round per tree
    double fp_round = 0.1;        ///< proposer blocks per round
    double ft_round = 1.0;        ///< transaction blocks per round
    double b_v = 1.0;             ///< voter block size
    double b_p = 1.0;             ///< proposer block size
    double b_t = 100.0;           ///< transaction block size
    double capacity = 10000.0;    ///< C, transactions per second
    double delay = 1.0;           ///< D, propagation delay in seconds
    double epsilon = 4.5399929762484854e-05; ///< e^-10
    std::uint32_t r_max = 2000;   ///< horizon in rounds
    std::uint32_t q = 1;          ///< transaction queues
    double cp_multiplier = 2.0;   ///< slack multiplier in the lower vote bound
    std::uint64_t seed = 1;

    /// Transactions arriving per round; negative selects half the honest
    /// transaction-block capacity, 0.5·(1−β)·ft_round·B_t.
    double lambda_in = -1.0;
    bool poisson_arrivals = false;
    /// Fraction of arrivals that come paired with a conflicting double spend.
    double conflict_fraction = 0.0;
    /// Replaces k(ε) for slow confirmation when nonzero. Not a protocol
    /// value; meant for desk-scale experiments.
    std::uint32_t slow_depth_override = 0;
    bool track_confirmation = true;

    /// Round length Δ = max(B_p, B_v)/C + D in seconds.
    [[nodiscard]] double round_seconds() const noexcept;
    [[nodiscard]] double arrival_rate() const noexcept;
    /// Total block traffic per round, fp·B_p + m·fv·B_v + ft·B_t.
    [[nodiscard]] double load_per_round() const noexcept;

    /// Throws ConfigError naming the first violated invariant.
    void validate() const;

    friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

struct DerivedParameters {
    double delta = 0.0;     ///< round length in seconds
    double fv_round = 0.0;
    double fp_round = 0.0;
    double ft_round = 0.0;
    std::uint32_t m = 0;
};

/// Picks voter rate, transaction rate and voter-tree count from physical
/// network parameters: the voter rate sits at the longest-chain security
/// limit (capped by `fv_cap`), transaction blocks take 90% of capacity,
/// and m fills what is left. Throws ConfigError for beta ∉ (0, 0.5) without
/// a finite cap, or when fewer than one voter tree fits.
DerivedParameters derive_parameters(double capacity, double delay, double b_v, double b_p, double b_t,
                                    double beta, double epsilon,
                                    double fv_cap = std::numeric_limits<double>::infinity());

} // namespace prism
