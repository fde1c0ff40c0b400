#pragma once

#include "prism/config.hpp"
#include "prism/types.hpp"
#include "prism/world.hpp"

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace prism {

/// Main-chain votes at one proposer level.
struct VoteTally {
    Level level = 0;
    std::uint32_t m = 0;
    /// Public proposer blocks at the level, in arrival order.
    std::vector<BlockId> proposers;
    /// depths[i]: depth of every main-chain vote for proposers[i], sorted in
    /// decreasing order. Depth is the number of main-chain blocks below the
    /// voting block.
    std::vector<std::vector<std::uint32_t>> depths;
    std::uint32_t unvoted = 0;

    /// V_i^d: votes for proposers[i] at depth d or more.
    [[nodiscard]] std::uint32_t votes(std::size_t i, std::uint32_t d = 0) const;
};

VoteTally tally(const WorldState& state, Level level);

/// δ_d = max(1/(4·fv·d), (1−2β)/(8·ln m)), with δ_0 = 1. The second term is
/// dropped for m < 2, where ln m ≤ 0.
double delta_d(std::uint32_t d, double fv_round, double beta, std::uint32_t m);

struct ConfidenceBounds {
    std::vector<double> lower;
    std::vector<double> upper;
    double upper_private = 0.0;
};

/// V̲_n = max over d ≥ 1 of (V_n^d − cp·δ_d·m)₊, V̄_n = m − Σ_{n'≠n} V̲_{n'},
/// V̄_private = m − Σ_n V̲_n.
ConfidenceBounds bounds(const VoteTally& tally, const SimConfig& config);

/// Π = {p_n : V̄_n > max V̲} when max V̲ > V̄_private, otherwise nothing.
std::optional<std::vector<BlockId>> try_list_confirm(const ConfidenceBounds& b,
                                                     const std::vector<BlockId>& proposers);

/// Proposer with the most main-chain votes, ties to the smaller hash.
/// Throws ContractViolation on an empty tally.
BlockId leader(const VoteTally& tally);

/// k(ε) = ceil((2/γ)·ln(8·m·r_max/ε)) with γ = (1−2β)²/36, or the override.
std::uint32_t slow_confirm_depth(const SimConfig& config);

/// The leader, if every tree votes on the level at depth ≥ k.
std::optional<BlockId> slow_confirm(const VoteTally& tally, std::uint32_t k);
std::optional<BlockId> slow_confirm(const WorldState& state, Level level, const SimConfig& config);

struct Ledger {
    std::vector<TxId> txs;
};

/// Depth-first expansion of a proposer block: its own transaction blocks in
/// reference order, then each referenced proposer block recursively. Each
/// block is expanded once.
std::vector<TxId> expand_proposer(const WorldState& state, BlockId proposer);

/// Drops repeated ids and, of a conflicting pair, every occurrence of the
/// one seen second.
std::vector<TxId> sanitize(const std::vector<TxId>& txs, const std::vector<Transaction>& records);

/// Ledger of a sequence of proposer blocks, one per consecutive level.
/// Throws StructuralError on a dangling reference.
Ledger build_ledger(const WorldState& state, const std::vector<BlockId>& prop_sequence);

/// Fast lists Π_1, Π_2, ... up to the first level that cannot be
/// list-confirmed.
std::vector<std::vector<BlockId>> fast_lists(const WorldState& state, const SimConfig& config);

/// Whether `tx` is in the sanitized ledger of every sequence in
/// Π_1 × ... × Π_ℓ. Evaluated per level without enumerating the product.
bool is_tx_confirmed(TxId tx, const WorldState& state, const std::vector<std::vector<BlockId>>& lists);
bool is_tx_confirmed(TxId tx, const WorldState& state, const SimConfig& config);

/// Ledger of slow-confirmed leaders from level 1 up to the first level that
/// is not slow-confirmed.
Ledger ordered_confirmed_txs(const WorldState& state, const SimConfig& config);

struct LevelRecord {
    Level level = 0;
    Round first_seen_round = 0;
    std::optional<Round> list_round;
    std::vector<BlockId> list;
    /// Blocks present in every list ever produced for this level.
    std::vector<BlockId> always_listed;
    std::optional<Round> slow_round;
    std::optional<BlockId> slow_leader;
};

struct SafetyCounters {
    std::uint64_t list_instances = 0;
    std::uint64_t list_violations = 0;
    std::uint64_t bound_instances = 0;
    std::uint64_t bound_violations = 0;
    std::uint64_t slow_leader_changes = 0;
    std::uint64_t fast_slow_inconsistent = 0;
    std::uint64_t tx_unconfirmed_after_confirmed = 0;
    std::uint64_t double_spend_both_confirmed = 0;

    [[nodiscard]] std::uint64_t total() const noexcept
    {
        return list_violations + bound_violations + slow_leader_changes + fast_slow_inconsistent +
               tx_unconfirmed_after_confirmed + double_spend_both_confirmed;
    }
};

struct ConfirmationSummary {
    std::vector<LevelRecord> levels;
    SafetyCounters safety;
    /// Per transaction, round of first fast confirmation.
    std::vector<std::optional<Round>> fast_round;
    /// Per transaction, round it entered the slow-confirmed ledger.
    std::vector<std::optional<Round>> slow_round;
    std::uint32_t slow_depth = 0;

    [[nodiscard]] std::uint64_t fast_confirmed_levels() const noexcept;
    /// Mean of list_round − first_seen_round over list-confirmed levels.
    [[nodiscard]] double list_confirm_mean_rounds() const noexcept;
};

/// Round-by-round bookkeeping of both confirmation rules over a run.
class ConfirmationTracker {
public:
    explicit ConfirmationTracker(const SimConfig& config);

    /// Call once after every round.
    void update(const WorldState& state);
    /// Compares everything recorded against the final state: list safety
    /// and bound soundness.
    void finalize(const WorldState& state);

    [[nodiscard]] const ConfirmationSummary& summary() const noexcept { return summary_; }

private:
    struct Coverage {
        std::vector<TxId> order;
        std::vector<std::pair<TxId, std::uint32_t>> index; // (tx, first position), sorted
    };
    const Coverage& coverage(const WorldState& state, BlockId proposer);
    void track_conflicts(const WorldState& state, const std::vector<std::vector<BlockId>>& lists, Round round);
    void track_slow(const WorldState& state, Round round);

    SimConfig config_;
    ConfirmationSummary summary_;
    std::unordered_map<std::uint64_t, Coverage> coverage_;
    /// Per (level, proposer value): largest lower bound ever computed.
    std::vector<std::unordered_map<std::uint64_t, double>> max_lower_;
    /// Transactions covered by every block of an active list, per level.
    std::vector<std::vector<TxId>> contribution_;
    std::vector<std::uint32_t> cover_count_;
    struct ConflictScan {
        std::size_t next_level = 0;
        bool decided = false;
        bool confirmed = false;
    };
    std::vector<ConflictScan> conflict_scan_;
    std::vector<std::vector<BlockId>> prev_lists_;
    std::size_t active_levels_ = 0;

    Level slow_prefix_ = 0;
    std::unordered_set<std::uint64_t> slow_expanded_blocks_;
    std::vector<char> slow_seen_tx_;
};

} // namespace prism
