#include "prism/world.hpp"

#include "prism/errors.hpp"

#include <algorithm>
#include <string>
#include <unordered_set>

namespace prism {

namespace {

[[noreturn]] void structural(const std::string& msg)
{
    throw StructuralError(msg);
}

std::string show(BlockId id)
{
    return "block " + std::to_string(id.value);
}

} // namespace

WorldState::WorldState(const SimConfig& config) : config_(config), queues_(config.q)
{
    const BlockId g = allocate_id();
    proposers_.push_back(ProposerBlock{g, g, 0, {}, {}, Miner::Honest, 0, false});
    register_block(g, BlockKind::Proposer, 0, Miner::Honest);
    levels_.push_back({g});

    trees_.resize(config.m);
    for (std::uint32_t i = 0; i < config.m; ++i) {
        const BlockId vg = allocate_id();
        voters_.push_back(VoterBlock{vg, i, vg, 0, {}, Miner::Honest, 0, false});
        register_block(vg, BlockKind::Voter, static_cast<std::uint32_t>(voters_.size() - 1), Miner::Honest);
        trees_[i].genesis = vg;
        trees_[i].main_chain = {vg};
        trees_[i].deepest = {vg};
        trees_[i].vote_by_level.resize(1);
    }
    for (auto& e : entries_) {
        e.is_public = true;
        e.arrival_seq = next_seq_++;
    }
    private_ids_.clear();
}

BlockId WorldState::allocate_id()
{
    const BlockId id = BlockId::make(next_value_++, config_.seed);
    ids_.push_back(id);
    entries_.push_back(BlockEntry{});
    return id;
}

void WorldState::register_block(BlockId id, BlockKind kind, std::uint32_t index, Miner miner)
{
    if (id.value >= entries_.size() || entries_[id.value].registered)
        structural("block " + show(id) + " was not allocated or is already stored");
    entries_[id.value] = BlockEntry{kind, index, miner, false, 0, 0, true};
    private_ids_.insert(id.value);
}

const BlockEntry& WorldState::entry(BlockId id) const
{
    if (!exists(id))
        structural("unknown " + show(id));
    return entries_[id.value];
}

BlockEntry& WorldState::entry_mut(BlockId id)
{
    if (!exists(id))
        structural("unknown " + show(id));
    return entries_[id.value];
}

BlockId WorldState::id_of(std::uint64_t value) const
{
    if (value >= ids_.size())
        structural("unknown block value " + std::to_string(value));
    return ids_[value];
}

const ProposerBlock& WorldState::proposer(BlockId id) const
{
    const auto& e = entry(id);
    if (e.kind != BlockKind::Proposer)
        structural(show(id) + " is not a proposer block");
    return proposers_[e.index];
}

const VoterBlock& WorldState::voter(BlockId id) const
{
    const auto& e = entry(id);
    if (e.kind != BlockKind::Voter)
        structural(show(id) + " is not a voter block");
    return voters_[e.index];
}

const TransactionBlock& WorldState::tx_block(BlockId id) const
{
    const auto& e = entry(id);
    if (e.kind != BlockKind::Transaction)
        structural(show(id) + " is not a transaction block");
    return tx_blocks_[e.index];
}

const std::vector<BlockId>& WorldState::level_blocks(Level level) const
{
    if (level >= levels_.size())
        structural("level " + std::to_string(level) + " is not occupied");
    return levels_[level];
}

BlockId WorldState::proposer_tip() const
{
    const auto& top = levels_.back();
    return *std::min_element(top.begin(), top.end(), hash_less);
}

std::vector<BlockId> WorldState::private_blocks() const
{
    std::vector<BlockId> out;
    out.reserve(private_ids_.size());
    for (auto v : private_ids_)
        out.push_back(ids_[v]);
    return out;
}

BlockId WorldState::fork_point(std::uint32_t tree_index, BlockId tip) const
{
    const auto& t = trees_.at(tree_index);
    BlockId b = tip;
    for (;;) {
        const auto& vb = voter(b);
        if (vb.tree != tree_index)
            structural(show(tip) + " is not on tree " + std::to_string(tree_index));
        if (vb.height < t.main_chain.size() && t.main_chain[vb.height] == b)
            return b;
        b = vb.parent;
    }
}

std::optional<VoteSlot> WorldState::chain_vote(std::uint32_t tree_index, BlockId tip, Level level) const
{
    const auto& t = trees_.at(tree_index);
    BlockId b = tip;
    for (;;) {
        const auto& vb = voter(b);
        if (vb.height < t.main_chain.size() && t.main_chain[vb.height] == b) {
            const VoteSlot* s = t.vote_at(level);
            if (s && s->height <= vb.height)
                return *s;
            return std::nullopt;
        }
        for (const auto& v : vb.votes)
            if (v.level == level)
                return VoteSlot{v.proposer, vb.height};
        b = vb.parent;
    }
}

std::vector<Level> WorldState::unvoted_levels(std::uint32_t tree_index, BlockId tip, Level up_to) const
{
    const auto& t = trees_.at(tree_index);
    std::unordered_set<Level> branch_voted;
    BlockId b = tip;
    std::uint32_t fork_height = 0;
    for (;;) {
        const auto& vb = voter(b);
        if (vb.tree != tree_index)
            structural(show(tip) + " is not on tree " + std::to_string(tree_index));
        if (vb.height < t.main_chain.size() && t.main_chain[vb.height] == b) {
            fork_height = vb.height;
            break;
        }
        for (const auto& v : vb.votes)
            branch_voted.insert(v.level);
        b = vb.parent;
    }

    Level start = t.first_unvoted;
    for (std::uint32_t h = fork_height + 1; h < t.main_chain.size(); ++h)
        for (const auto& v : voter(t.main_chain[h]).votes)
            start = std::min(start, v.level);

    std::vector<Level> out;
    for (Level l = std::max<Level>(start, 1); l <= up_to; ++l) {
        if (branch_voted.count(l))
            continue;
        const VoteSlot* s = t.vote_at(l);
        if (s && s->height <= fork_height)
            continue;
        out.push_back(l);
    }
    return out;
}

void WorldState::insert(ProposerBlock block)
{
    if (block.id.value >= entries_.size() || entries_[block.id.value].registered)
        structural("proposer " + show(block.id) + " was not allocated or is already stored");
    const auto& parent = proposer(block.parent);
    if (block.level != parent.level + 1)
        structural("proposer " + show(block.id) + " level must be parent level + 1");
    for (const auto& r : block.tx_refs)
        (void)tx_block(r);
    for (const auto& r : block.prop_refs)
        (void)proposer(r);
    const auto idx = static_cast<std::uint32_t>(proposers_.size());
    const Miner miner = block.miner;
    const BlockId id = block.id;
    proposers_.push_back(std::move(block));
    register_block(id, BlockKind::Proposer, idx, miner);
}

void WorldState::insert(VoterBlock block)
{
    if (block.id.value >= entries_.size() || entries_[block.id.value].registered)
        structural("voter " + show(block.id) + " was not allocated or is already stored");
    const auto& parent = voter(block.parent);
    if (parent.tree != block.tree)
        structural("voter " + show(block.id) + " parent is on another tree");
    if (block.height != parent.height + 1)
        structural("voter " + show(block.id) + " height must be parent height + 1");
    std::unordered_set<Level> seen;
    for (const auto& v : block.votes) {
        const auto& p = proposer(v.proposer);
        if (p.level != v.level || v.level == 0)
            structural("voter " + show(block.id) + " vote level does not match " + show(v.proposer));
        if (!seen.insert(v.level).second)
            structural("voter " + show(block.id) + " votes twice on level " + std::to_string(v.level));
        if (chain_vote(block.tree, block.parent, v.level))
            structural("voter " + show(block.id) + " votes on level " + std::to_string(v.level) +
                       " already voted by its chain");
    }
    const auto idx = static_cast<std::uint32_t>(voters_.size());
    const Miner miner = block.miner;
    const BlockId id = block.id;
    voters_.push_back(std::move(block));
    register_block(id, BlockKind::Voter, idx, miner);
}

void WorldState::insert(TransactionBlock block)
{
    if (block.id.value >= entries_.size() || entries_[block.id.value].registered)
        structural("transaction " + show(block.id) + " was not allocated or is already stored");
    (void)proposer(block.parent);
    if (block.queue_index >= config_.q)
        structural("transaction " + show(block.id) + " queue index out of range");
    if (block.txs.size() > static_cast<std::size_t>(config_.b_t))
        structural("transaction " + show(block.id) + " exceeds B_t");
    for (TxId tx : block.txs)
        if (tx >= txs_.size())
            structural("transaction " + show(block.id) + " carries unknown tx " + std::to_string(tx));
    const auto idx = static_cast<std::uint32_t>(tx_blocks_.size());
    const Miner miner = block.miner;
    const BlockId id = block.id;
    tx_blocks_.push_back(std::move(block));
    register_block(id, BlockKind::Transaction, idx, miner);
}

bool WorldState::ancestors_public(BlockId id) const
{
    const auto& e = entry(id);
    switch (e.kind) {
    case BlockKind::Proposer: {
        const auto& b = proposers_[e.index];
        if (!is_public(b.parent))
            return false;
        for (const auto& r : b.tx_refs)
            if (!is_public(r))
                return false;
        for (const auto& r : b.prop_refs)
            if (!is_public(r))
                return false;
        return true;
    }
    case BlockKind::Voter: {
        const auto& b = voters_[e.index];
        if (!is_public(b.parent))
            return false;
        for (const auto& v : b.votes)
            if (!is_public(v.proposer))
                return false;
        return true;
    }
    case BlockKind::Transaction:
        return is_public(tx_blocks_[e.index].parent);
    }
    return false;
}

void WorldState::publish(BlockId id)
{
    auto& e = entry_mut(id);
    if (e.is_public)
        return;
    if (!ancestors_public(id))
        structural("cannot publish " + show(id) + " before its ancestors and references");
    e.is_public = true;
    e.arrival_round = round_;
    e.arrival_seq = next_seq_++;
    private_ids_.erase(id.value);
    switch (e.kind) {
    case BlockKind::Proposer:
        publish_proposer(proposers_[e.index]);
        break;
    case BlockKind::Voter:
        publish_voter(voters_[e.index]);
        break;
    case BlockKind::Transaction:
        publish_tx(tx_blocks_[e.index]);
        break;
    }
}

void WorldState::publish_proposer(const ProposerBlock& b)
{
    if (b.level >= levels_.size())
        levels_.resize(b.level + 1);
    levels_[b.level].push_back(b.id);
    unreferred_prop_.erase(b.parent);
    for (const auto& r : b.prop_refs)
        unreferred_prop_.erase(r);
    for (const auto& r : b.tx_refs)
        unreferred_tx_.erase(r);
    unreferred_prop_.insert(b.id);
}

void WorldState::publish_tx(const TransactionBlock& b)
{
    unreferred_tx_.insert(b.id);
    for (TxId tx : b.txs) {
        auto& rec = txs_[tx];
        if (!rec.first_mined_round || *rec.first_mined_round > b.mined_round)
            rec.first_mined_round = b.mined_round;
    }
}

void WorldState::set_votes(VoterTree& t, const VoterBlock& b)
{
    for (const auto& v : b.votes) {
        if (v.level >= t.vote_by_level.size())
            t.vote_by_level.resize(v.level + 1);
        if (t.vote_by_level[v.level].voted())
            structural("tree " + std::to_string(b.tree) + " main chain votes twice on level " +
                       std::to_string(v.level));
        t.vote_by_level[v.level] = VoteSlot{v.proposer, b.height};
    }
    while (t.first_unvoted < t.vote_by_level.size() && t.vote_by_level[t.first_unvoted].voted())
        ++t.first_unvoted;
}

void WorldState::clear_votes(VoterTree& t, const VoterBlock& b)
{
    for (const auto& v : b.votes) {
        t.vote_by_level[v.level] = VoteSlot{};
        t.first_unvoted = std::min(t.first_unvoted, v.level);
    }
}

void WorldState::switch_main_chain(VoterTree& t, BlockId new_tip)
{
    std::vector<BlockId> path;
    BlockId b = new_tip;
    for (;;) {
        const auto& vb = voter(b);
        if (vb.height < t.main_chain.size() && t.main_chain[vb.height] == b)
            break;
        path.push_back(b);
        b = vb.parent;
    }
    const std::uint32_t fork_height = voter(b).height;
    const auto popped = static_cast<std::uint32_t>(t.main_chain.size() - 1 - fork_height);
    while (t.main_chain.size() - 1 > fork_height) {
        clear_votes(t, voter(t.main_chain.back()));
        t.main_chain.pop_back();
    }
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
        t.main_chain.push_back(*it);
        set_votes(t, voter(*it));
    }
    if (popped > 0) {
        ++reorgs_.switches;
        reorgs_.max_depth = std::max(reorgs_.max_depth, popped);
    }
}

void WorldState::publish_voter(const VoterBlock& b)
{
    auto& t = trees_[b.tree];
    if (b.height > t.height()) {
        t.deepest = {b.id};
        if (b.parent == t.tip()) {
            t.main_chain.push_back(b.id);
            set_votes(t, b);
        } else {
            switch_main_chain(t, b.id);
        }
    } else if (b.height == t.height()) {
        t.deepest.push_back(b.id);
        const BlockId best = *std::min_element(t.deepest.begin(), t.deepest.end(), hash_less);
        if (best != t.tip())
            switch_main_chain(t, best);
    }
}

void WorldState::check_invariants() const
{
    for (std::size_t v = 0; v < entries_.size(); ++v) {
        if (entries_[v].registered && entries_[v].is_public && !ancestors_public(ids_[v]))
            structural("public " + show(ids_[v]) + " has a private ancestor");
    }
    for (Level l = 0; l < levels_.size(); ++l)
        if (levels_[l].empty())
            structural("proposer level " + std::to_string(l) + " is empty below the maximum level");

    for (std::uint32_t i = 0; i < trees_.size(); ++i) {
        const auto& t = trees_[i];
        std::uint32_t max_h = 0;
        std::vector<BlockId> deepest;
        for (const auto& vb : voters_) {
            if (vb.tree != i || !is_public(vb.id))
                continue;
            if (vb.height > max_h) {
                max_h = vb.height;
                deepest.clear();
            }
            if (vb.height == max_h)
                deepest.push_back(vb.id);
        }
        if (max_h != t.height())
            structural("tree " + std::to_string(i) + " main chain is not a longest chain");
        const BlockId best = *std::min_element(deepest.begin(), deepest.end(), hash_less);
        if (best != t.tip())
            structural("tree " + std::to_string(i) + " tip is not the smallest-hash deepest block");

        std::vector<VoteSlot> votes;
        BlockId b = t.tip();
        for (std::uint32_t h = t.height();; --h) {
            if (t.main_chain[h] != b)
                structural("tree " + std::to_string(i) + " main chain is not parent-linked");
            const auto& vb = voter(b);
            for (const auto& v : vb.votes) {
                if (v.level >= votes.size())
                    votes.resize(v.level + 1);
                if (votes[v.level].voted())
                    structural("tree " + std::to_string(i) + " main chain votes twice on level " +
                               std::to_string(v.level));
                votes[v.level] = VoteSlot{v.proposer, vb.height};
            }
            if (h == 0)
                break;
            b = vb.parent;
        }
        const std::size_t n = std::max(votes.size(), t.vote_by_level.size());
        for (std::size_t l = 0; l < n; ++l) {
            const VoteSlot a = l < votes.size() ? votes[l] : VoteSlot{};
            const VoteSlot c = l < t.vote_by_level.size() ? t.vote_by_level[l] : VoteSlot{};
            if (a.voted() != c.voted() || (a.voted() && (a.proposer != c.proposer || a.height != c.height)))
                structural("tree " + std::to_string(i) + " vote index is stale at level " + std::to_string(l));
        }
        for (Level l = 1; l < t.first_unvoted; ++l)
            if (l >= votes.size() || !votes[l].voted())
                structural("tree " + std::to_string(i) + " first_unvoted skips an unvoted level");
    }
}

} // namespace prism
