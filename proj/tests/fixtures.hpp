#pragma once

#include "prism/world.hpp"

#include <optional>
#include <vector>

namespace prism::testing {

// Hand-built block structures. Blocks are published as they are added
// unless `pub` is false.
struct Fixture {
    SimConfig config;
    WorldState state;

    explicit Fixture(const SimConfig& c) : config(c), state(c) {}

    BlockId proposer(BlockId parent, std::vector<BlockId> tx_refs = {}, std::vector<BlockId> prop_refs = {},
                     bool pub = true, Miner miner = Miner::Honest)
    {
        ProposerBlock b;
        b.id = state.allocate_id();
        b.parent = parent;
        b.level = state.proposer(parent).level + 1;
        b.tx_refs = std::move(tx_refs);
        b.prop_refs = std::move(prop_refs);
        b.miner = miner;
        b.mined_round = state.round();
        const auto id = b.id;
        state.insert(std::move(b));
        if (pub)
            state.publish(id);
        return id;
    }

    BlockId voter(std::uint32_t tree, BlockId parent, std::vector<Vote> votes, bool pub = true,
                  Miner miner = Miner::Honest)
    {
        VoterBlock b;
        b.id = state.allocate_id();
        b.tree = tree;
        b.parent = parent;
        b.height = state.voter(parent).height + 1;
        b.votes = std::move(votes);
        b.miner = miner;
        b.mined_round = state.round();
        const auto id = b.id;
        state.insert(std::move(b));
        if (pub)
            state.publish(id);
        return id;
    }

    // A chain of `n` vote-free blocks on top of `parent`; returns the tip.
    BlockId extend(std::uint32_t tree, BlockId parent, std::uint32_t n, bool pub = true)
    {
        for (std::uint32_t i = 0; i < n; ++i)
            parent = voter(tree, parent, {}, pub);
        return parent;
    }

    BlockId tx(BlockId parent, std::vector<TxId> txs, bool pub = true, std::uint32_t queue = 0)
    {
        TransactionBlock b;
        b.id = state.allocate_id();
        b.parent = parent;
        b.txs = std::move(txs);
        b.queue_index = queue;
        b.mined_round = state.round();
        const auto id = b.id;
        state.insert(std::move(b));
        if (pub)
            state.publish(id);
        return id;
    }

    TxId new_tx(std::optional<TxId> conflicts = std::nullopt)
    {
        auto& txs = state.transactions();
        Transaction t;
        t.id = static_cast<TxId>(txs.size());
        t.arrival_round = state.round();
        t.conflicts_with = conflicts;
        if (conflicts)
            txs.at(*conflicts).conflicts_with = t.id;
        txs.push_back(t);
        return t.id;
    }

    BlockId root(std::uint32_t tree) const { return state.tree(tree).genesis; }
    BlockId genesis() const { return state.proposer_genesis(); }
};

inline SimConfig small_config(std::uint32_t m = 3)
{
    SimConfig c;
    c.m = m;
    c.beta = 0.25;
    c.fv_round = 0.1;
    c.fp_round = 0.1;
    c.ft_round = 1.0;
    c.r_max = 100;
    c.capacity = 1e6;
    return c;
}

} // namespace prism::testing
