#pragma once

#include "prism/config.hpp"
#include "prism/txflow.hpp"
#include "prism/types.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace prism::baselines {

enum class ForkChoice : std::uint8_t { LongestChain, HeaviestSubtree };

/// Single block tree under either fork-choice rule. Block 0 is genesis.
class ForkTree {
public:
    ForkTree();

    std::uint32_t add(std::uint32_t parent, Miner miner);
    [[nodiscard]] std::uint32_t size() const noexcept { return static_cast<std::uint32_t>(parent_.size()); }
    [[nodiscard]] std::uint32_t parent(std::uint32_t b) const { return parent_.at(b); }
    [[nodiscard]] std::uint32_t height(std::uint32_t b) const { return height_.at(b); }
    /// Blocks in the subtree rooted at b, b included.
    [[nodiscard]] std::uint32_t weight(std::uint32_t b) const { return weight_.at(b); }
    [[nodiscard]] Miner miner(std::uint32_t b) const { return miner_.at(b); }

    /// Tip picked by the rule. Ties go to the candidate at position
    /// floor(u·count) in creation order, u ∈ [0, 1).
    [[nodiscard]] std::uint32_t tip(ForkChoice rule, double u) const;

private:
    std::vector<std::uint32_t> parent_;
    std::vector<std::uint32_t> height_;
    std::vector<std::uint32_t> weight_;
    std::vector<Miner> miner_;
    std::vector<std::vector<std::uint32_t>> children_;
};

struct GrowthComparison {
    std::uint32_t rounds = 0;
    std::uint32_t longest_height = 0;
    std::uint32_t ghost_height = 0;
};

/// Builds one tree per rule from the same honest block counts
/// (Poisson((1−β)f) per round) and the same tie-break draws; every block of
/// a round extends the rule's tip as of the start of the round.
GrowthComparison compare_chain_growth(double beta, double f_round, std::uint32_t rounds, std::uint64_t seed);

enum class BitcoinStrategy : std::uint8_t { Passive, Private };

struct BitcoinOptions {
    /// Confirmation depth; default is k(ε) with m = 1 (or the config's
    /// override).
    std::optional<std::uint32_t> k;
    /// Transactions arrive during rounds [0, tx_rounds); 0 means all rounds.
    Round tx_rounds = 0;
    std::uint32_t tx_per_round = 1;
    /// A private race is dropped when the public branch leads by more.
    std::uint32_t abandon_gap = 10;
};

struct BitcoinResult {
    Round rounds = 0;
    std::uint32_t k = 0;
    std::uint32_t chain_height = 0;
    std::uint64_t honest_blocks = 0;
    std::uint64_t adversary_blocks = 0;
    std::uint64_t txs_arrived = 0;
    /// Per confirmed transaction: rounds from first mined to k-deep.
    std::vector<Round> confirmation_rounds;
    LatencySummary confirmation;
    std::uint64_t attacks_started = 0;
    std::uint64_t attacks_succeeded = 0;
    std::uint64_t attacks_abandoned = 0;
    /// Outcome of every finished race, in order.
    std::vector<bool> races;
    /// Confirmed blocks later displaced from the main chain.
    std::uint64_t confirmed_reversals = 0;

    [[nodiscard]] double growth_per_round() const noexcept
    {
        return rounds == 0 ? 0.0 : static_cast<double>(chain_height) / rounds;
    }
};

/// One longest chain mined at fv_round per round: honest blocks at
/// (1−β)·fv_round, adversary at β̃·fv_round. Passive adversaries extend the
/// tip in public. The private adversary races each new honest block T: it
/// forks from T's parent in private and releases once its branch is longer
/// and T is k-deep, giving up past `abandon_gap`.
BitcoinResult run_bitcoin(const SimConfig& config, BitcoinStrategy strategy, const BitcoinOptions& options = {});

struct GhostAttackConfig {
    double beta = 0.3;
    double f_round = 1.0;
    Round horizon = 10000;
    std::uint64_t seed = 1;
};

struct GhostAttackOutcome {
    /// Rounds the two subtrees were kept balanced.
    Round lifetime = 0;
    bool survived = false;
    std::uint64_t released = 0;
    std::uint64_t bank = 0;
};

/// Balancing attack on the heaviest-subtree rule. Each round honest miners
/// add H₁, H₂ ~ Poisson((1−β)f/2) blocks to the two subtrees and the
/// adversary banks Poisson(βf) blocks, then releases |H₁−H₂| into the
/// lighter subtree. The fork collapses in the first round the bank cannot
/// cover the difference.
GhostAttackOutcome run_ghost_balancing(const GhostAttackConfig& config);

} // namespace prism::baselines
