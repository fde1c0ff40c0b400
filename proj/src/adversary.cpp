#include "prism/adversary.hpp"

#include "prism/confirm.hpp"
#include "prism/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace prism {

namespace {

/// Votes for the levels left unvoted by the chain ending at `base`, all on
/// the earliest public block except `level`, which goes to `choice` (or is
/// skipped when `choice` is empty).
std::vector<Vote> votes_with(const WorldState& state, std::uint32_t tree, BlockId base, Level level,
                             std::optional<BlockId> choice)
{
    std::vector<Vote> votes;
    for (Level l : state.unvoted_levels(tree, base, state.max_level())) {
        if (l == level) {
            if (choice)
                votes.push_back(Vote{l, *choice});
            continue;
        }
        votes.push_back(Vote{l, state.level_blocks(l).front()});
    }
    return votes;
}

std::vector<BlockId> without(const std::set<BlockId>& pool, BlockId skip)
{
    std::vector<BlockId> out;
    for (const auto& b : pool)
        if (b != skip)
            out.push_back(b);
    return out;
}

void release_with_ancestors(AdversaryContext& ctx, BlockId id)
{
    const auto& state = ctx.world();
    std::vector<BlockId> chain;
    for (BlockId b = id; !state.is_public(b);) {
        chain.push_back(b);
        b = state.proposer(b).parent;
    }
    for (const auto& b : chain)
        ctx.release(b);
}

} // namespace

void PassiveStrategy::act(AdversaryContext& ctx)
{
    for (const auto& id : ctx.mine_rest(false))
        ctx.release(id);
}

void CensorshipStrategy::act(AdversaryContext& ctx)
{
    for (const auto& id : ctx.mine_rest(true))
        ctx.release(id);
}

PrivateNakamotoStrategy::PrivateNakamotoStrategy(const SimConfig& config, Params params)
    : params_(params), m_(config.m)
{
}

void PrivateNakamotoStrategy::act(AdversaryContext& ctx)
{
    const auto& state = ctx.world();
    const Level pub = state.max_level();
    const Level ours = chain_.empty() ? 0 : state.proposer(chain_.back()).level;
    stats_.lead.push_back(ours > pub ? ours - pub : 0);

    pick_target(ctx);
    mine_proposers(ctx);
    mine_voters(ctx);
    while (ctx.tx_left() > 0)
        ctx.release(ctx.mine_compliant_tx());
    settle(ctx);
}

void PrivateNakamotoStrategy::pick_target(AdversaryContext& ctx)
{
    if (attack_)
        return;
    const auto& state = ctx.world();
    for (const auto& c : chain_) {
        const Level l = state.proposer(c).level;
        if (l <= last_target_ || l > state.max_level())
            continue;
        Attack a;
        a.level = l;
        a.target = state.level_blocks(l).front();
        a.ours = c;
        a.forks.resize(m_);
        a.started_round = ctx.round();
        attack_ = std::move(a);
        last_target_ = l;
        ++stats_.attacks_started;
        return;
    }
}

void PrivateNakamotoStrategy::mine_proposers(AdversaryContext& ctx)
{
    const auto& state = ctx.world();
    if (!chain_.empty() && state.proposer(chain_.back()).level <= state.max_level())
        chain_.clear();
    while (ctx.proposers_left() > 0) {
        const BlockId parent = chain_.empty() ? state.proposer_tip() : chain_.back();
        std::vector<BlockId> tx_refs(state.unreferred_tx().begin(), state.unreferred_tx().end());
        chain_.push_back(ctx.mine_proposer(parent, std::move(tx_refs), without(state.unreferred_prop(), parent)));
    }
}

void PrivateNakamotoStrategy::mine_voters(AdversaryContext& ctx)
{
    const auto& state = ctx.world();
    for (std::uint32_t i = 0; i < m_; ++i) {
        const auto& tree = state.tree(i);
        if (attack_) {
            Fork& f = attack_->forks[i];
            if (!f.started && !f.done) {
                if (const VoteSlot* slot = tree.vote_at(attack_->level)) {
                    f.started = true;
                    f.vote_height = slot->height;
                    f.tip = tree.main_chain[slot->height - 1];
                    if (i == 0)
                        attack_->initial_depth = tree.height() - slot->height;
                }
            }
            if (f.started && !f.done) {
                while (ctx.voters_left(i) > 0) {
                    const std::optional<BlockId> choice =
                        f.length == 0 ? std::optional<BlockId>(attack_->ours) : std::nullopt;
                    auto votes = votes_with(state, i, f.tip, attack_->level, choice);
                    f.tip = ctx.mine_voter(i, f.tip, std::move(votes));
                    f.blocks.push_back(f.tip);
                    ++f.length;
                }
                continue;
            }
        }
        BlockId base = tree.tip();
        const Level skip = attack_ ? attack_->level : 0;
        while (ctx.voters_left(i) > 0) {
            base = ctx.mine_voter(i, base, votes_with(state, i, base, skip, std::nullopt));
            ctx.release(base);
        }
    }
}

void PrivateNakamotoStrategy::settle(AdversaryContext& ctx)
{
    if (!attack_)
        return;
    const auto& state = ctx.world();
    const auto& sample = ctx.sample();
    const std::uint32_t need = (m_ + 1) / 2;

    std::vector<std::uint32_t> winners;
    std::vector<std::int64_t> deficits;
    std::uint32_t started = 0;
    for (std::uint32_t i = 0; i < m_; ++i) {
        const Fork& f = attack_->forks[i];
        if (!f.started)
            continue;
        ++started;
        const std::int64_t main_after = state.tree(i).height() + static_cast<std::int64_t>(sample.h_voter[i]);
        const std::int64_t fork_h = static_cast<std::int64_t>(f.vote_height) - 1 + f.length;
        const std::int64_t depth_after = main_after - f.vote_height;
        if (fork_h > main_after && depth_after >= static_cast<std::int64_t>(params_.k))
            winners.push_back(i);
        deficits.push_back(main_after - fork_h);
    }

    if (winners.size() >= need) {
        release_with_ancestors(ctx, attack_->ours);
        for (auto i : winners)
            for (const auto& b : attack_->forks[i].blocks)
                ctx.release(b);
        ++stats_.attacks_succeeded;
        if (started > 0)
            stats_.races.emplace_back(attack_->initial_depth, true);
        attack_.reset();
        return;
    }

    bool abandon = false;
    if (started >= need) {
        std::nth_element(deficits.begin(), deficits.begin() + (need - 1), deficits.end());
        abandon = deficits[need - 1] > static_cast<std::int64_t>(params_.abandon_gap);
    }
    // votes for H may never reach enough trees, e.g. when another block wins the level
    if (!abandon && started < need && ctx.round() - attack_->started_round > params_.max_wait)
        abandon = true;
    if (abandon) {
        ++stats_.attacks_abandoned;
        if (started > 0)
            stats_.races.emplace_back(attack_->initial_depth, false);
        attack_.reset();
    }
}

BalancingStrategy::BalancingStrategy(const SimConfig& config) : m_(config.m) {}

BlockId BalancingStrategy::minority(const WorldState& state) const
{
    std::uint32_t va = 0, vb = 0;
    for (std::uint32_t i = 0; i < m_; ++i) {
        if (const VoteSlot* s = state.tree(i).vote_at(*target_)) {
            va += s->proposer == a_;
            vb += s->proposer == b_;
        }
    }
    if (va != vb)
        return va < vb ? a_ : b_;
    // the smaller hash wins a tie, so the other block is the minority
    return hash_less(a_, b_) ? b_ : a_;
}

void BalancingStrategy::act(AdversaryContext& ctx)
{
    const auto& state = ctx.world();
    const Level pub = state.max_level();

    // Resolve the honest side of a contest created last round.
    if (target_ && a_ == b_) {
        for (const auto& p : state.level_blocks(*target_))
            if (p != b_) {
                a_ = p;
                break;
            }
        if (a_ == b_)
            target_.reset();
    }

    std::erase_if(reserve_, [&](BlockId r) { return state.proposer(r).level != pub + 1; });

    // Contest: a block of ours lands on the level honest miners fill this round.
    std::optional<BlockId> released;
    if (ctx.sample().h_prop >= 1) {
        if (reserve_.empty() && ctx.proposers_left() > 0)
            reserve_.push_back(ctx.mine_compliant_proposer());
        if (!reserve_.empty()) {
            released = reserve_.front();
            ctx.release(*released);
            reserve_.clear();
            forks_.clear();
            target_ = pub + 1;
            a_ = b_ = *released;
        }
    }
    while (ctx.proposers_left() > 0) {
        const BlockId parent = released ? *released : state.proposer_tip();
        std::vector<BlockId> tx_refs(state.unreferred_tx().begin(), state.unreferred_tx().end());
        reserve_.push_back(ctx.mine_proposer(parent, std::move(tx_refs), without(state.unreferred_prop(), parent)));
    }

    const bool active = target_ && a_ != b_;
    if (active) {
        const BlockId mino = minority(state);
        ctx.directives().votes[*target_] = mino;
        if (pub == *target_)
            ctx.directives().proposer_parents = {a_, b_};
    }

    for (std::uint32_t i = 0; i < m_; ++i) {
        if (ctx.voters_left(i) == 0 && !forks_.count(i))
            continue;
        const auto& tree = state.tree(i);
        if (!active) {
            while (ctx.voters_left(i) > 0)
                ctx.release(ctx.mine_compliant_voter(i));
            continue;
        }
        const BlockId mino = minority(state);
        if (auto it = forks_.find(i); it != forks_.end() && it->second.minority != mino)
            forks_.erase(it);

        const VoteSlot* slot = tree.vote_at(*target_);
        if (!forks_.count(i) && slot && slot->proposer != mino && ctx.voters_left(i) > 0) {
            // rule 3: fork from just below the majority vote
            Fork f;
            f.minority = mino;
            f.base_height = slot->height - 1;
            f.tip = tree.main_chain[f.base_height];
            forks_.emplace(i, std::move(f));
        }
        if (auto it = forks_.find(i); it != forks_.end()) {
            Fork& f = it->second;
            while (ctx.voters_left(i) > 0) {
                auto votes = votes_with(state, i, f.tip, *target_, mino);
                f.tip = ctx.mine_voter(i, f.tip, std::move(votes));
                f.blocks.push_back(f.tip);
            }
            const std::uint64_t fork_h = f.base_height + f.blocks.size();
            if (fork_h > tree.height() + static_cast<std::uint64_t>(ctx.sample().h_voter[i])) {
                for (const auto& b : f.blocks)
                    ctx.release(b);
                forks_.erase(it);
            }
            continue;
        }
        // rules 1 and 2: vote for the minority, or extend a chain that already does
        BlockId base = tree.tip();
        while (ctx.voters_left(i) > 0) {
            base = ctx.mine_voter(i, base, votes_with(state, i, base, *target_, mino));
            ctx.release(base);
        }
    }

    while (ctx.tx_left() > 0)
        ctx.release(ctx.mine_compliant_tx());

    const Level ours = reserve_.empty() ? 0 : state.proposer(reserve_.front()).level;
    stats_.lead.push_back(ours > pub ? ours - pub : 0);
}

std::unique_ptr<AdversaryStrategy> make_strategy(const std::string& name, const SimConfig& config,
                                                 const StrategyParams& params)
{
    auto reject_unknown = [&](std::initializer_list<const char*> known) {
        for (const auto& [key, value] : params) {
            bool ok = false;
            for (const char* k : known)
                ok |= key == k;
            if (!ok)
                throw ConfigError("unknown parameter '" + key + "' for strategy " + name);
        }
    };
    auto count = [&](const char* key, std::uint32_t fallback) {
        auto it = params.find(key);
        if (it == params.end())
            return fallback;
        if (!(it->second >= 0.0) || it->second > 4.0e9 || std::floor(it->second) != it->second)
            throw ConfigError(std::string("strategy parameter '") + key + "' must be a non-negative integer");
        return static_cast<std::uint32_t>(it->second);
    };

    if (name == "passive") {
        reject_unknown({});
        return std::make_unique<PassiveStrategy>();
    }
    if (name == "censorship") {
        reject_unknown({});
        return std::make_unique<CensorshipStrategy>();
    }
    if (name == "private_nakamoto" || name == "private") {
        reject_unknown({"k", "abandon_gap", "max_wait"});
        PrivateNakamotoStrategy::Params p;
        p.k = count("k", slow_confirm_depth(config));
        p.abandon_gap = count("abandon_gap", p.abandon_gap);
        p.max_wait = count("max_wait", p.max_wait);
        return std::make_unique<PrivateNakamotoStrategy>(config, p);
    }
    if (name == "balancing") {
        reject_unknown({});
        return std::make_unique<BalancingStrategy>(config);
    }
    throw ConfigError("unknown strategy '" + name + "' (expected passive, censorship, private_nakamoto, balancing)");
}

} // namespace prism
