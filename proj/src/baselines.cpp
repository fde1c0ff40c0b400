#include "prism/baselines.hpp"

#include "prism/confirm.hpp"
#include "prism/errors.hpp"
#include "prism/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace prism::baselines {

ForkTree::ForkTree() : parent_{0}, height_{0}, weight_{1}, miner_{Miner::Honest}, children_(1) {}

std::uint32_t ForkTree::add(std::uint32_t parent, Miner miner)
{
    if (parent >= size())
        throw ContractViolation("ForkTree::add: unknown parent");
    const auto id = size();
    parent_.push_back(parent);
    height_.push_back(height_[parent] + 1);
    weight_.push_back(1);
    miner_.push_back(miner);
    children_.emplace_back();
    children_[parent].push_back(id);
    for (std::uint32_t b = parent;; b = parent_[b]) {
        ++weight_[b];
        if (b == 0)
            break;
    }
    return id;
}

std::uint32_t ForkTree::tip(ForkChoice rule, double u) const
{
    auto pick = [u](const std::vector<std::uint32_t>& tied) {
        auto i = static_cast<std::size_t>(u * static_cast<double>(tied.size()));
        return tied[std::min(i, tied.size() - 1)];
    };
    std::vector<std::uint32_t> tied;
    if (rule == ForkChoice::LongestChain) {
        const auto top = *std::max_element(height_.begin(), height_.end());
        for (std::uint32_t b = 0; b < size(); ++b)
            if (height_[b] == top)
                tied.push_back(b);
        return pick(tied);
    }
    std::uint32_t b = 0;
    while (!children_[b].empty()) {
        std::uint32_t best = 0;
        for (auto c : children_[b])
            best = std::max(best, weight_[c]);
        tied.clear();
        for (auto c : children_[b])
            if (weight_[c] == best)
                tied.push_back(c);
        b = pick(tied);
    }
    return b;
}

GrowthComparison compare_chain_growth(double beta, double f_round, std::uint32_t rounds, std::uint64_t seed)
{
    Rng rng = make_stream(seed, stream::growth);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ForkTree longest, ghost;
    for (std::uint32_t r = 0; r < rounds; ++r) {
        const auto h = draw_poisson((1.0 - beta) * f_round, rng);
        std::vector<std::uint32_t> lp(h), gp(h);
        for (std::uint32_t j = 0; j < h; ++j) {
            const double u = unit(rng);
            lp[j] = longest.tip(ForkChoice::LongestChain, u);
            gp[j] = ghost.tip(ForkChoice::HeaviestSubtree, u);
        }
        for (std::uint32_t j = 0; j < h; ++j) {
            longest.add(lp[j], Miner::Honest);
            ghost.add(gp[j], Miner::Honest);
        }
    }
    GrowthComparison out;
    out.rounds = rounds;
    out.longest_height = longest.height(longest.tip(ForkChoice::LongestChain, 0.0));
    out.ghost_height = ghost.height(ghost.tip(ForkChoice::HeaviestSubtree, 0.0));
    return out;
}

namespace {

struct ChainBlock {
    Miner miner = Miner::Honest;
    std::vector<TxId> txs;
};

} // namespace

BitcoinResult run_bitcoin(const SimConfig& config, BitcoinStrategy strategy, const BitcoinOptions& options)
{
    config.validate();
    SimConfig single = config;
    single.m = 1;

    BitcoinResult out;
    out.rounds = config.r_max;
    out.k = options.k ? *options.k : slow_confirm_depth(single);
    const Round tx_rounds = options.tx_rounds == 0 ? config.r_max : std::min(options.tx_rounds, config.r_max);

    Rng rng = make_stream(config.seed, stream::bitcoin);
    const double honest_mean = (1.0 - config.beta) * config.fv_round;
    const double adversary_mean = config.beta_active * config.fv_round;

    std::vector<ChainBlock> chain; // chain[i] sits at height i + 1
    std::vector<TxId> pending;
    std::vector<Round> first_mined;
    std::vector<char> confirmed;
    std::size_t confirmed_height = 0;

    struct Race {
        std::size_t base = 0; ///< height the private branch forks from
        std::uint32_t pub = 0;
        std::uint32_t priv = 0;
        bool active = false;
    };
    Race race;

    auto mine_public = [&](Miner miner, Round r) {
        ChainBlock b;
        b.miner = miner;
        b.txs = std::move(pending);
        pending.clear();
        for (auto tx : b.txs)
            first_mined[tx] = std::min(first_mined[tx], r);
        chain.push_back(std::move(b));
    };

    for (Round r = 0; r < config.r_max; ++r) {
        if (r < tx_rounds) {
            for (std::uint32_t i = 0; i < options.tx_per_round; ++i) {
                pending.push_back(static_cast<TxId>(first_mined.size()));
                first_mined.push_back(config.r_max);
                confirmed.push_back(0);
            }
        }
        const auto h = draw_poisson(honest_mean, rng);
        const auto z = draw_poisson(adversary_mean, rng);
        out.honest_blocks += h;
        out.adversary_blocks += z;

        if (strategy == BitcoinStrategy::Passive) {
            if (h > 0)
                mine_public(Miner::Honest, r);
            else if (z > 0)
                mine_public(Miner::Adversary, r);
        } else {
            if (race.active) {
                race.priv += z;
                if (h > 0) {
                    mine_public(Miner::Honest, r);
                    ++race.pub;
                }
            } else if (h > 0) {
                race = Race{chain.size(), 1, z, true};
                mine_public(Miner::Honest, r);
                ++out.attacks_started;
            }
            if (race.active) {
                if (race.priv > race.pub && race.pub - 1 >= out.k) {
                    for (auto i = race.base; i < chain.size(); ++i)
                        for (auto tx : chain[i].txs)
                            pending.push_back(tx);
                    if (race.base < confirmed_height) {
                        out.confirmed_reversals += confirmed_height - race.base;
                        confirmed_height = race.base;
                    }
                    chain.resize(race.base);
                    for (std::uint32_t i = 0; i < race.priv; ++i)
                        chain.push_back(ChainBlock{Miner::Adversary, {}});
                    ++out.attacks_succeeded;
                    out.races.push_back(true);
                    race.active = false;
                } else if (race.pub > race.priv + options.abandon_gap) {
                    ++out.attacks_abandoned;
                    out.races.push_back(false);
                    race.active = false;
                }
            }
        }

        while (confirmed_height < chain.size() && chain.size() - (confirmed_height + 1) >= out.k) {
            for (auto tx : chain[confirmed_height].txs) {
                if (!confirmed[tx]) {
                    confirmed[tx] = 1;
                    out.confirmation_rounds.push_back(r - first_mined[tx]);
                }
            }
            ++confirmed_height;
        }
    }

    out.txs_arrived = first_mined.size();
    out.chain_height = static_cast<std::uint32_t>(chain.size());
    std::vector<double> lat(out.confirmation_rounds.begin(), out.confirmation_rounds.end());
    out.confirmation = summarize(std::move(lat));
    return out;
}

GhostAttackOutcome run_ghost_balancing(const GhostAttackConfig& config)
{
    if (!(config.beta >= 0.0 && config.beta < 0.5) || !(config.f_round >= 0.0))
        throw ContractViolation("run_ghost_balancing: need 0 <= beta < 0.5 and f >= 0");
    Rng rng = make_stream(config.seed, stream::ghost);
    const double half = (1.0 - config.beta) * config.f_round / 2.0;
    const double adversary = config.beta * config.f_round;

    GhostAttackOutcome out;
    for (Round r = 0; r < config.horizon; ++r) {
        out.bank += draw_poisson(adversary, rng);
        const auto h1 = draw_poisson(half, rng);
        const auto h2 = draw_poisson(half, rng);
        const auto need = static_cast<std::uint64_t>(h1 > h2 ? h1 - h2 : h2 - h1);
        if (need > out.bank) {
            out.lifetime = r;
            return out;
        }
        out.bank -= need;
        out.released += need;
    }
    out.lifetime = config.horizon;
    out.survived = true;
    return out;
}

} // namespace prism::baselines
