#pragma once

#include "prism/config.hpp"
#include "prism/txflow.hpp"
#include "prism/types.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <vector>

namespace prism {

struct BlockEntry {
    BlockKind kind = BlockKind::Proposer;
    std::uint32_t index = 0; ///< position in the per-kind store
    Miner miner = Miner::Honest;
    bool is_public = false;
    Round arrival_round = 0;
    std::uint64_t arrival_seq = 0;
    bool registered = false;
};

/// Main-chain vote of one tree at one level. height 0 means unvoted (the
/// genesis block never votes).
struct VoteSlot {
    BlockId proposer;
    std::uint32_t height = 0;

    [[nodiscard]] bool voted() const noexcept { return height > 0; }
};

struct VoterTree {
    BlockId genesis;
    /// main_chain[h] is the main-chain block at height h.
    std::vector<BlockId> main_chain;
    /// Public blocks at the maximum height.
    std::vector<BlockId> deepest;
    std::vector<VoteSlot> vote_by_level;
    /// Every level below this one is voted on the main chain.
    Level first_unvoted = 1;

    [[nodiscard]] std::uint32_t height() const noexcept { return static_cast<std::uint32_t>(main_chain.size() - 1); }
    [[nodiscard]] BlockId tip() const { return main_chain.back(); }
    [[nodiscard]] const VoteSlot* vote_at(Level level) const
    {
        return level < vote_by_level.size() && vote_by_level[level].voted() ? &vote_by_level[level] : nullptr;
    }
};

/// Counters the engine resets every round.
struct ReorgCounters {
    std::uint32_t switches = 0;
    std::uint32_t max_depth = 0;
};

/// All blocks of a run, public and private, plus the public view derived
/// from them: proposer levels, per-tree main chains and their votes, and the
/// unreferred pools.
class WorldState {
public:
    explicit WorldState(const SimConfig& config);

    [[nodiscard]] const SimConfig& config() const noexcept { return config_; }
    [[nodiscard]] std::uint32_t m() const noexcept { return config_.m; }
    [[nodiscard]] Round round() const noexcept { return round_; }
    void advance_round() noexcept { ++round_; }

    [[nodiscard]] bool exists(BlockId id) const noexcept
    {
        return id.value < entries_.size() && entries_[id.value].registered;
    }
    [[nodiscard]] const BlockEntry& entry(BlockId id) const;
    [[nodiscard]] bool is_public(BlockId id) const { return entry(id).is_public; }
    [[nodiscard]] BlockId id_of(std::uint64_t value) const;
    [[nodiscard]] std::uint64_t block_count() const noexcept { return entries_.size(); }

    [[nodiscard]] const ProposerBlock& proposer(BlockId id) const;
    [[nodiscard]] const VoterBlock& voter(BlockId id) const;
    [[nodiscard]] const TransactionBlock& tx_block(BlockId id) const;
    [[nodiscard]] const std::vector<ProposerBlock>& proposers() const noexcept { return proposers_; }
    [[nodiscard]] const std::vector<VoterBlock>& voters() const noexcept { return voters_; }
    [[nodiscard]] const std::vector<TransactionBlock>& tx_blocks() const noexcept { return tx_blocks_; }

    [[nodiscard]] BlockId proposer_genesis() const noexcept { return proposers_.front().id; }
    [[nodiscard]] Level max_level() const noexcept { return static_cast<Level>(levels_.size() - 1); }
    /// Public proposer blocks at `level` in arrival order.
    [[nodiscard]] const std::vector<BlockId>& level_blocks(Level level) const;
    /// Smallest-hash public proposer block at the maximum level.
    [[nodiscard]] BlockId proposer_tip() const;

    [[nodiscard]] const VoterTree& tree(std::uint32_t i) const { return trees_.at(i); }
    /// Proposer levels in [1, up_to] without a vote on the chain ending at
    /// `tip`. The tip may be private or off the main chain.
    [[nodiscard]] std::vector<Level> unvoted_levels(std::uint32_t tree, BlockId tip, Level up_to) const;
    /// Vote at `level` on the chain ending at `tip`, with the height of the
    /// block that carries it.
    [[nodiscard]] std::optional<VoteSlot> chain_vote(std::uint32_t tree, BlockId tip, Level level) const;
    /// Last common block of the chain ending at `tip` and the main chain.
    [[nodiscard]] BlockId fork_point(std::uint32_t tree, BlockId tip) const;

    [[nodiscard]] const std::set<BlockId>& unreferred_tx() const noexcept { return unreferred_tx_; }
    [[nodiscard]] const std::set<BlockId>& unreferred_prop() const noexcept { return unreferred_prop_; }

    [[nodiscard]] TxQueues& queues() noexcept { return queues_; }
    [[nodiscard]] const TxQueues& queues() const noexcept { return queues_; }
    [[nodiscard]] std::vector<Transaction>& transactions() noexcept { return txs_; }
    [[nodiscard]] const std::vector<Transaction>& transactions() const noexcept { return txs_; }
    double& arrival_credit() noexcept { return arrival_credit_; }

    /// Ids of blocks not yet public, in creation order.
    [[nodiscard]] std::vector<BlockId> private_blocks() const;
    [[nodiscard]] std::size_t private_count() const noexcept { return private_ids_.size(); }

    BlockId allocate_id();
    /// Store a block as private. Structural checks throw StructuralError:
    /// unknown parent or references, wrong level or height, a vote on a
    /// level already voted by the chain.
    void insert(ProposerBlock block);
    void insert(VoterBlock block);
    void insert(TransactionBlock block);

    /// Whether every block `id` depends on is public.
    [[nodiscard]] bool ancestors_public(BlockId id) const;
    /// Make a private block public. Throws StructuralError if an ancestor
    /// is still private.
    void publish(BlockId id);

    [[nodiscard]] const ReorgCounters& reorgs() const noexcept { return reorgs_; }
    void reset_reorgs() noexcept { reorgs_ = {}; }

    /// Full recomputation of the derived public view, compared against the
    /// incremental one. Throws StructuralError on mismatch. O(total blocks).
    void check_invariants() const;

private:
    BlockEntry& entry_mut(BlockId id);
    void publish_proposer(const ProposerBlock& b);
    void publish_voter(const VoterBlock& b);
    void publish_tx(const TransactionBlock& b);
    void switch_main_chain(VoterTree& t, BlockId new_tip);
    void set_votes(VoterTree& t, const VoterBlock& b);
    void clear_votes(VoterTree& t, const VoterBlock& b);
    void register_block(BlockId id, BlockKind kind, std::uint32_t index, Miner miner);

    SimConfig config_;
    Round round_ = 0;
    std::uint64_t next_value_ = 0;
    std::uint64_t next_seq_ = 0;
    std::set<std::uint64_t> private_ids_;

    std::vector<BlockEntry> entries_;
    std::vector<BlockId> ids_;
    std::vector<ProposerBlock> proposers_;
    std::vector<VoterBlock> voters_;
    std::vector<TransactionBlock> tx_blocks_;

    std::vector<std::vector<BlockId>> levels_;
    std::vector<VoterTree> trees_;
    std::set<BlockId> unreferred_tx_;
    std::set<BlockId> unreferred_prop_;
    ReorgCounters reorgs_;

    TxQueues queues_;
    std::vector<Transaction> txs_;
    double arrival_credit_ = 0.0;
};

} // namespace prism
