#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace prism {

using Round = std::uint32_t;
using Level = std::uint32_t;
using TxId = std::uint32_t;

/// Stateless 64-bit mixer (splitmix64 finalizer).
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Synthetic block identifier. `value` is allocated in creation order;
/// `hash` is a pure function of (value, seed) and stands in for the block
/// hash wherever the protocol breaks ties by "smaller hash".
struct BlockId {
    std::uint64_t value = 0;
    std::uint64_t hash = 0;

    static constexpr BlockId make(std::uint64_t value, std::uint64_t seed) noexcept
    {
        return BlockId{value, mix64(value ^ mix64(seed ^ 0x5eedb10cULL))};
    }

    friend constexpr bool operator==(const BlockId& a, const BlockId& b) noexcept
    {
        return a.value == b.value;
    }
    friend constexpr auto operator<=>(const BlockId& a, const BlockId& b) noexcept
    {
        return a.value <=> b.value;
    }
};

/// Orders by pseudo-hash, then by value so the order is total.
constexpr bool hash_less(const BlockId& a, const BlockId& b) noexcept
{
    return a.hash != b.hash ? a.hash < b.hash : a.value < b.value;
}

enum class Miner : std::uint8_t { Honest, Adversary };

enum class BlockKind : std::uint8_t { Proposer, Voter, Transaction };

struct Vote {
    Level level = 0;
    BlockId proposer;

    friend bool operator==(const Vote&, const Vote&) = default;
};

struct ProposerBlock {
    BlockId id;
    BlockId parent;
    Level level = 0;
    std::vector<BlockId> tx_refs;
    std::vector<BlockId> prop_refs;
    Miner miner = Miner::Honest;
    Round mined_round = 0;
    bool content_empty = false;
};

struct VoterBlock {
    BlockId id;
    std::uint32_t tree = 0;
    BlockId parent;
    /// Distance from the tree's genesis (genesis has height 0).
    std::uint32_t height = 0;
    std::vector<Vote> votes;
    Miner miner = Miner::Honest;
    Round mined_round = 0;
    bool content_empty = false;
};

struct TransactionBlock {
    BlockId id;
    BlockId parent;
    std::vector<TxId> txs;
    std::uint32_t queue_index = 0;
    Miner miner = Miner::Honest;
    Round mined_round = 0;
    bool content_empty = false;
};

struct Transaction {
    TxId id = 0;
    Round arrival_round = 0;
    std::optional<TxId> conflicts_with;
    std::optional<Round> first_mined_round;
    std::optional<Round> confirmed_round;
};

} // namespace prism

template <>
struct std::hash<prism::BlockId> {
    std::size_t operator()(const prism::BlockId& id) const noexcept { return id.value; }
};
