#pragma once

#include "prism/config.hpp"
#include "prism/confirm.hpp"
#include "prism/sampling.hpp"
#include "prism/txflow.hpp"
#include "prism/types.hpp"
#include "prism/world.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace prism {

/// Choices the adversary may make for honest miners this round. Anything
/// left unset falls back to the protocol default.
struct HonestDirectives {
    /// Per tree, the tied longest-chain tip honest voter blocks extend.
    std::map<std::uint32_t, BlockId> voter_tip;
    /// Per level, the proposer block honest voters vote for. Must be one of
    /// the blocks that arrived in the same round as the level's first block.
    std::map<Level, BlockId> votes;
    /// Parent of the i-th honest proposer block, cycling when shorter than
    /// the number of honest proposer blocks. Must sit at the maximum level.
    std::vector<BlockId> proposer_parents;

    [[nodiscard]] bool empty() const noexcept
    {
        return voter_tip.empty() && votes.empty() && proposer_parents.empty();
    }
};

/// Numbers a strategy reports about itself.
struct StrategyStats {
    /// Per round: private proposer lead over the public maximum level.
    std::vector<std::uint32_t> lead;
    std::uint64_t attacks_started = 0;
    std::uint64_t attacks_succeeded = 0;
    std::uint64_t attacks_abandoned = 0;
    /// Per attack: depth of the targeted vote when the attack began, and
    /// whether it succeeded (single-tree races).
    std::vector<std::pair<std::uint32_t, bool>> races;
};

class AdversaryContext;

class AdversaryStrategy {
public:
    virtual ~AdversaryStrategy() = default;
    [[nodiscard]] virtual std::string name() const = 0;
    /// Must mine exactly the adversary counts of the round's sample.
    virtual void act(AdversaryContext& ctx) = 0;
    [[nodiscard]] virtual const StrategyStats& stats() const { return stats_; }

protected:
    StrategyStats stats_;
};

/// What a strategy sees and can do during one round. Blocks mined here are
/// private until released; releases are published before this round's
/// honest blocks.
class AdversaryContext {
public:
    AdversaryContext(WorldState& state, const RoundSample& sample, Rng& rng);

    [[nodiscard]] const WorldState& world() const noexcept { return state_; }
    [[nodiscard]] const RoundSample& sample() const noexcept { return sample_; }
    [[nodiscard]] const SimConfig& config() const noexcept { return state_.config(); }
    [[nodiscard]] Round round() const noexcept { return state_.round(); }
    [[nodiscard]] Rng& rng() noexcept { return rng_; }

    [[nodiscard]] std::uint32_t proposers_left() const noexcept { return sample_.z_prop - used_prop_; }
    [[nodiscard]] std::uint32_t voters_left(std::uint32_t tree) const { return sample_.z_voter.at(tree) - used_voter_.at(tree); }
    [[nodiscard]] std::uint32_t tx_left() const noexcept { return sample_.z_tx - used_tx_; }

    /// Raw mining. Throws StrategyFault when the budget is spent or the
    /// block is malformed.
    BlockId mine_proposer(BlockId parent, std::vector<BlockId> tx_refs, std::vector<BlockId> prop_refs,
                          bool content_empty = false);
    BlockId mine_voter(std::uint32_t tree, BlockId parent, std::vector<Vote> votes, bool content_empty = false);
    BlockId mine_tx(BlockId parent, BlockContent content, bool content_empty = false);

    /// Protocol-following blocks on the public view: proposer on the public
    /// tip with the public pools, voter on the tree's tip (or on this round's
    /// earlier block on that tree) voting earliest-seen blocks, transaction
    /// block drawn from the queues.
    BlockId mine_compliant_proposer();
    BlockId mine_compliant_voter(std::uint32_t tree);
    BlockId mine_compliant_tx();
    /// Same placement, no content.
    BlockId mine_empty_proposer();
    BlockId mine_empty_voter(std::uint32_t tree);
    BlockId mine_empty_tx();

    /// Every remaining unit of budget as compliant (or empty) blocks.
    /// Returns the ids mined.
    std::vector<BlockId> mine_rest(bool content_empty);

    void release(BlockId id);
    HonestDirectives& directives() noexcept { return directives_; }

    [[nodiscard]] const std::vector<BlockId>& mined() const noexcept { return mined_; }
    [[nodiscard]] const std::vector<BlockId>& releases() const noexcept { return releases_; }
    /// Throws StrategyFault unless every unit of budget was used.
    void check_budget() const;

private:
    BlockId voter_base(std::uint32_t tree) const;

    WorldState& state_;
    const RoundSample& sample_;
    Rng& rng_;
    std::uint32_t used_prop_ = 0;
    std::vector<std::uint32_t> used_voter_;
    std::uint32_t used_tx_ = 0;
    std::map<std::uint32_t, BlockId> round_voter_tip_;
    std::vector<BlockId> mined_;
    std::vector<BlockId> releases_;
    HonestDirectives directives_;
};

struct RoundLog {
    Round round = 0;
    std::uint32_t honest_blocks = 0;
    std::uint32_t adversary_blocks = 0;
    std::uint32_t released = 0;
    std::uint32_t reorg_switches = 0;
    std::uint32_t max_reorg_depth = 0;
    Level max_level = 0;
    std::vector<std::uint32_t> honest_tx_queues;
};

/// Vote each honest voter block casts, by the protocol default: the first
/// public proposer block to arrive at the level, or the directive's legal
/// choice.
BlockId honest_vote_choice(const WorldState& state, Level level, const HonestDirectives& directives);

/// Honest blocks for this round, stored as private blocks in `state` (not
/// yet published), in publication order. Throws StrategyFault on an
/// illegal directive.
std::vector<BlockId> honest_extend(WorldState& state, const RoundSample& sample, const HonestDirectives& directives,
                                   std::vector<std::uint32_t>* tx_queues = nullptr);

/// Root-to-leaf path of a deepest public branch of `tree`: the one ending
/// at `tiebreak` if that is a deepest block, else the one with the smallest
/// leaf hash.
std::vector<BlockId> longest_chain(const WorldState& state, std::uint32_t tree,
                                   std::optional<BlockId> tiebreak = std::nullopt);

/// One round: arrivals, sampling, adversary action, honest blocks, then
/// publication of releases followed by honest blocks.
RoundLog step_round(WorldState& state, AdversaryStrategy& strategy);

struct SimResult {
    SimConfig config;
    std::string strategy;
    Round rounds = 0;
    std::vector<RoundLog> log;
    /// Transactions with confirmed_round set: fast confirmation for
    /// ordinary ones, slow confirmation for double spends.
    std::vector<Transaction> transactions;
    ThroughputStats throughput;
    ConfirmationSummary confirmation;
    StrategyStats strategy_stats;
    std::uint64_t public_blocks = 0;
    std::uint64_t private_blocks = 0;
    Level max_level = 0;
    /// Per tree, final main-chain height.
    std::vector<std::uint32_t> tree_heights;

    [[nodiscard]] LatencyStats latency() const;
    [[nodiscard]] std::uint64_t safety_violations() const noexcept { return confirmation.safety.total(); }
};

struct RunOptions {
    bool keep_log = true;
    /// Full invariant check every this many rounds; 0 disables.
    std::uint32_t check_every = 0;
};

/// Runs r_max rounds. Throws StrategyFault from the strategy.
SimResult run(const SimConfig& config, AdversaryStrategy& strategy, const RunOptions& options = {});

} // namespace prism
