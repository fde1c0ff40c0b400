#pragma once

#include "prism/config.hpp"
#include "prism/types.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace prism {

using Rng = std::mt19937_64;

/// Independent generator for (seed, purpose, index). Used so that the mining
/// sample of round r does not depend on how much randomness anything else
/// consumed before it.
Rng make_stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index = 0);

namespace stream {
inline constexpr std::uint64_t mining = 1;
inline constexpr std::uint64_t content = 2;
inline constexpr std::uint64_t strategy = 3;
inline constexpr std::uint64_t arrivals = 4;
inline constexpr std::uint64_t bitcoin = 5;
inline constexpr std::uint64_t ghost = 6;
inline constexpr std::uint64_t growth = 7;
} // namespace stream

/// Poisson(mean) draw; 0 for a non-positive mean.
std::uint32_t draw_poisson(double mean, Rng& rng);

/// Blocks mined in one round, split by miner and block type.
struct RoundSample {
    std::vector<std::uint32_t> h_voter;
    std::vector<std::uint32_t> z_voter;
    std::uint32_t h_prop = 0;
    std::uint32_t z_prop = 0;
    std::uint32_t h_tx = 0;
    std::uint32_t z_tx = 0;

    /// X_i: tree i got at least one honest block this round.
    [[nodiscard]] bool successful(std::uint32_t tree) const { return h_voter.at(tree) >= 1; }
    /// Y_i: tree i got exactly one honest block this round.
    [[nodiscard]] bool uniquely_successful(std::uint32_t tree) const { return h_voter.at(tree) == 1; }

    [[nodiscard]] std::uint64_t total_adversary() const;
    [[nodiscard]] std::uint64_t total_honest() const;

    friend bool operator==(const RoundSample&, const RoundSample&) = default;
};

/// Draws every count from its own Poisson law: honest means (1−β)·rate,
/// adversary means β̃·rate.
RoundSample sample_round(const SimConfig& config, Rng& rng);

/// sample_round on the dedicated mining stream of `round`.
RoundSample sample_round_at(const SimConfig& config, Round round);

struct BlockType {
    BlockKind kind = BlockKind::Voter;
    std::uint32_t tree = 0; ///< meaningful for voter blocks only

    friend bool operator==(const BlockType&, const BlockType&) = default;
};

/// Maps a uniform point of [0, m·fv + ft + fp] onto the block type it
/// selects: voter trees first, then transaction, then proposer.
/// Throws ContractViolation outside the domain.
BlockType sortition(double hash_point, const SimConfig& config);

} // namespace prism
