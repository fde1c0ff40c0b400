#pragma once

#include "prism/engine.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace prism {

/// Mines protocol-following blocks and releases them at once.
class PassiveStrategy final : public AdversaryStrategy {
public:
    [[nodiscard]] std::string name() const override { return "passive"; }
    void act(AdversaryContext& ctx) override;
};

/// Mines blocks with no transactions, references or votes and releases
/// them at once.
class CensorshipStrategy final : public AdversaryStrategy {
public:
    [[nodiscard]] std::string name() const override { return "censorship"; }
    void act(AdversaryContext& ctx) override;
};

/// Withholds a private proposer chain. When an honest block H appears at a
/// level where the chain holds a private block A, every tree that has voted
/// for H gets a private fork from just below that vote, voting for A. A and
/// the winning forks are released once at least ⌈m/2⌉ forks are longer than
/// their main chains with H's vote at least `k` deep; the attack is dropped
/// when the ⌈m/2⌉-th smallest fork deficit exceeds `abandon_gap`.
class PrivateNakamotoStrategy final : public AdversaryStrategy {
public:
    struct Params {
        /// Depth the targeted vote must reach before a release counts.
        std::uint32_t k = 0;
        std::uint32_t abandon_gap = 10;
        /// Rounds to wait for ⌈m/2⌉ trees to vote on the target level.
        std::uint32_t max_wait = 2000;
    };
    PrivateNakamotoStrategy(const SimConfig& config, Params params);

    [[nodiscard]] std::string name() const override { return "private_nakamoto"; }
    void act(AdversaryContext& ctx) override;

private:
    struct Fork {
        bool started = false;
        bool done = false;
        std::uint32_t vote_height = 0; ///< main-chain height of the vote for H
        BlockId tip;                   ///< fork tip, or the fork base before any block
        std::uint32_t length = 0;
        std::vector<BlockId> blocks;
    };
    struct Attack {
        Level level = 0;
        BlockId target; ///< honest block H
        BlockId ours;   ///< private block A
        std::vector<Fork> forks;
        std::uint32_t initial_depth = 0;
        Round started_round = 0;
    };

    void mine_proposers(AdversaryContext& ctx);
    void pick_target(AdversaryContext& ctx);
    void mine_voters(AdversaryContext& ctx);
    void settle(AdversaryContext& ctx);

    Params params_;
    std::uint32_t m_;
    /// Private proposer chain, lowest level first; all private.
    std::vector<BlockId> chain_;
    std::optional<Attack> attack_;
    Level last_target_ = 0;
};

/// Keeps a private reserve proposer block one level above the public tip and
/// releases it in a round where honest miners extend the proposer tree, so
/// two blocks tie at the new level. Voter blocks then keep their votes even:
/// a tree that has not voted gets a vote for the minority block; a tree that
/// voted for the minority gets its chain extended; a tree that voted for the
/// majority gets a private fork voting for the minority, released once it
/// is longer than the main chain. Honest votes at the contested level and
/// honest proposer parents are steered the same way.
class BalancingStrategy final : public AdversaryStrategy {
public:
    explicit BalancingStrategy(const SimConfig& config);

    [[nodiscard]] std::string name() const override { return "balancing"; }
    void act(AdversaryContext& ctx) override;

private:
    struct Fork {
        BlockId minority; ///< the block this fork votes for
        std::uint32_t base_height = 0;
        BlockId tip;
        std::vector<BlockId> blocks;
    };

    [[nodiscard]] BlockId minority(const WorldState& state) const;

    std::uint32_t m_;
    std::vector<BlockId> reserve_;
    std::optional<Level> target_;
    BlockId a_, b_;
    std::map<std::uint32_t, Fork> forks_;
};

using StrategyParams = std::map<std::string, double>;

/// passive | censorship | private_nakamoto (alias private) | balancing.
/// Throws ConfigError for an unknown name or parameter.
std::unique_ptr<AdversaryStrategy> make_strategy(const std::string& name, const SimConfig& config,
                                                 const StrategyParams& params = {});

} // namespace prism
