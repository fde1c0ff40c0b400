#include "prism/engine.hpp"

#include "prism/errors.hpp"

#include <algorithm>
#include <string>

namespace prism {

namespace {

[[noreturn]] void fault(const std::string& msg)
{
    throw StrategyFault(msg);
}

template <class F>
auto as_fault(F&& f) -> decltype(f())
{
    try {
        return f();
    } catch (const StructuralError& e) {
        throw StrategyFault(e.what());
    }
}

} // namespace

AdversaryContext::AdversaryContext(WorldState& state, const RoundSample& sample, Rng& rng)
    : state_(state), sample_(sample), rng_(rng), used_voter_(state.m(), 0)
{
}

BlockId AdversaryContext::mine_proposer(BlockId parent, std::vector<BlockId> tx_refs, std::vector<BlockId> prop_refs,
                                        bool content_empty)
{
    if (proposers_left() == 0)
        fault("adversary proposer budget exhausted");
    return as_fault([&] {
        const Level level = state_.proposer(parent).level + 1;
        const BlockId id = state_.allocate_id();
        state_.insert(ProposerBlock{id, parent, level, std::move(tx_refs), std::move(prop_refs), Miner::Adversary,
                                    state_.round(), content_empty});
        ++used_prop_;
        mined_.push_back(id);
        return id;
    });
}

BlockId AdversaryContext::mine_voter(std::uint32_t tree, BlockId parent, std::vector<Vote> votes, bool content_empty)
{
    if (tree >= state_.m())
        fault("adversary voter block on tree " + std::to_string(tree) + " out of range");
    if (voters_left(tree) == 0)
        fault("adversary voter budget exhausted on tree " + std::to_string(tree));
    return as_fault([&] {
        const auto& p = state_.voter(parent);
        if (p.tree != tree)
            throw StructuralError("adversary voter parent is on another tree");
        const BlockId id = state_.allocate_id();
        state_.insert(VoterBlock{id, tree, parent, p.height + 1, std::move(votes), Miner::Adversary, state_.round(),
                                 content_empty});
        ++used_voter_[tree];
        round_voter_tip_[tree] = id;
        mined_.push_back(id);
        return id;
    });
}

BlockId AdversaryContext::mine_tx(BlockId parent, BlockContent content, bool content_empty)
{
    if (tx_left() == 0)
        fault("adversary transaction block budget exhausted");
    return as_fault([&] {
        const BlockId id = state_.allocate_id();
        state_.insert(TransactionBlock{id, parent, std::move(content.txs), content.queue_index, Miner::Adversary,
                                       state_.round(), content_empty});
        ++used_tx_;
        mined_.push_back(id);
        return id;
    });
}

BlockId AdversaryContext::voter_base(std::uint32_t tree) const
{
    auto it = round_voter_tip_.find(tree);
    return it != round_voter_tip_.end() ? it->second : state_.tree(tree).tip();
}

BlockId AdversaryContext::mine_compliant_proposer()
{
    const BlockId parent = state_.proposer_tip();
    std::vector<BlockId> tx_refs(state_.unreferred_tx().begin(), state_.unreferred_tx().end());
    std::vector<BlockId> prop_refs;
    for (const auto& p : state_.unreferred_prop())
        if (p != parent)
            prop_refs.push_back(p);
    return mine_proposer(parent, std::move(tx_refs), std::move(prop_refs));
}

BlockId AdversaryContext::mine_compliant_voter(std::uint32_t tree)
{
    if (tree >= state_.m())
        fault("adversary voter block on tree " + std::to_string(tree) + " out of range");
    const BlockId base = voter_base(tree);
    std::vector<Vote> votes;
    for (Level l : state_.unvoted_levels(tree, base, state_.max_level()))
        votes.push_back(Vote{l, state_.level_blocks(l).front()});
    return mine_voter(tree, base, std::move(votes));
}

BlockId AdversaryContext::mine_compliant_tx()
{
    if (tx_left() == 0)
        fault("adversary transaction block budget exhausted");
    BlockContent c = draw_block_content(state_.queues(), static_cast<std::uint32_t>(config().b_t), rng_);
    return mine_tx(state_.proposer_tip(), std::move(c));
}

BlockId AdversaryContext::mine_empty_proposer()
{
    return mine_proposer(state_.proposer_tip(), {}, {}, true);
}

BlockId AdversaryContext::mine_empty_voter(std::uint32_t tree)
{
    if (tree >= state_.m())
        fault("adversary voter block on tree " + std::to_string(tree) + " out of range");
    return mine_voter(tree, voter_base(tree), {}, true);
}

BlockId AdversaryContext::mine_empty_tx()
{
    return mine_tx(state_.proposer_tip(), BlockContent{}, true);
}

std::vector<BlockId> AdversaryContext::mine_rest(bool content_empty)
{
    std::vector<BlockId> out;
    while (proposers_left() > 0)
        out.push_back(content_empty ? mine_empty_proposer() : mine_compliant_proposer());
    for (std::uint32_t i = 0; i < state_.m(); ++i)
        while (voters_left(i) > 0)
            out.push_back(content_empty ? mine_empty_voter(i) : mine_compliant_voter(i));
    while (tx_left() > 0)
        out.push_back(content_empty ? mine_empty_tx() : mine_compliant_tx());
    return out;
}

void AdversaryContext::release(BlockId id)
{
    if (!state_.exists(id))
        fault("release of unknown block " + std::to_string(id.value));
    const auto& e = state_.entry(id);
    if (e.miner != Miner::Adversary)
        fault("release of a block the adversary did not mine");
    if (e.is_public)
        return;
    releases_.push_back(id);
}

void AdversaryContext::check_budget() const
{
    if (used_prop_ != sample_.z_prop || used_tx_ != sample_.z_tx)
        fault("adversary did not use its exact proposer/transaction budget");
    for (std::uint32_t i = 0; i < state_.m(); ++i)
        if (used_voter_[i] != sample_.z_voter[i])
            fault("adversary did not use its exact voter budget on tree " + std::to_string(i));
}

BlockId honest_vote_choice(const WorldState& state, Level level, const HonestDirectives& directives)
{
    const auto& blocks = state.level_blocks(level);
    const BlockId earliest = blocks.front();
    auto it = directives.votes.find(level);
    if (it == directives.votes.end())
        return earliest;
    const BlockId choice = it->second;
    if (std::find(blocks.begin(), blocks.end(), choice) == blocks.end())
        fault("directive votes for a block that is not a public proposer at level " + std::to_string(level));
    if (state.entry(choice).arrival_round != state.entry(earliest).arrival_round)
        fault("directive votes for a proposer block honest nodes did not see first at level " +
              std::to_string(level));
    return choice;
}

std::vector<BlockId> honest_extend(WorldState& state, const RoundSample& sample, const HonestDirectives& directives,
                                   std::vector<std::uint32_t>* tx_queues)
{
    const Round round = state.round();
    const SimConfig& config = state.config();
    std::vector<BlockId> out;

    const Level top = state.max_level();
    const std::vector<BlockId> pool_tx(state.unreferred_tx().begin(), state.unreferred_tx().end());
    const std::vector<BlockId> pool_prop(state.unreferred_prop().begin(), state.unreferred_prop().end());
    const BlockId tip = state.proposer_tip();

    for (std::uint32_t i = 0; i < sample.h_prop; ++i) {
        BlockId parent = tip;
        if (!directives.proposer_parents.empty()) {
            parent = directives.proposer_parents[i % directives.proposer_parents.size()];
            if (!state.exists(parent) || state.entry(parent).kind != BlockKind::Proposer || !state.is_public(parent) ||
                state.proposer(parent).level != top)
                fault("directive proposer parent is not a public block at the maximum level");
        }
        std::vector<BlockId> refs;
        for (const auto& p : pool_prop)
            if (p != parent)
                refs.push_back(p);
        const BlockId id = state.allocate_id();
        state.insert(ProposerBlock{id, parent, top + 1, pool_tx, std::move(refs), Miner::Honest, round, false});
        out.push_back(id);
    }

    Rng content_rng = make_stream(config.seed, stream::content, round);
    std::uniform_int_distribution<std::uint32_t> pick(0, config.q - 1);
    std::map<std::uint32_t, std::vector<TxId>> drained;
    for (std::uint32_t i = 0; i < sample.h_tx; ++i) {
        const std::uint32_t queue = pick(content_rng);
        auto it = drained.find(queue);
        if (it == drained.end())
            it = drained.emplace(queue, state.queues().pop(queue, static_cast<std::uint32_t>(config.b_t))).first;
        const BlockId id = state.allocate_id();
        state.insert(TransactionBlock{id, tip, it->second, queue, Miner::Honest, round, false});
        out.push_back(id);
        if (tx_queues)
            tx_queues->push_back(queue);
    }

    for (std::uint32_t tree = 0; tree < state.m(); ++tree) {
        const std::uint32_t n = sample.h_voter[tree];
        if (n == 0)
            continue;
        BlockId base = state.tree(tree).tip();
        if (auto it = directives.voter_tip.find(tree); it != directives.voter_tip.end()) {
            const auto& deepest = state.tree(tree).deepest;
            if (std::find(deepest.begin(), deepest.end(), it->second) == deepest.end())
                fault("directive voter tip is not a longest-chain tip of tree " + std::to_string(tree));
            base = it->second;
        }
        std::vector<BlockId> ids;
        for (std::uint32_t k = 0; k < n; ++k)
            ids.push_back(state.allocate_id());
        std::sort(ids.begin(), ids.end(), hash_less);

        std::vector<Vote> votes;
        for (Level l : state.unvoted_levels(tree, base, top))
            votes.push_back(Vote{l, honest_vote_choice(state, l, directives)});
        std::uint32_t height = state.voter(base).height;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            state.insert(VoterBlock{ids[k], tree, base, ++height, k == 0 ? std::move(votes) : std::vector<Vote>{},
                                    Miner::Honest, round, false});
            out.push_back(ids[k]);
            base = ids[k];
        }
    }
    return out;
}

std::vector<BlockId> longest_chain(const WorldState& state, std::uint32_t tree, std::optional<BlockId> tiebreak)
{
    const auto& t = state.tree(tree);
    BlockId leaf = *std::min_element(t.deepest.begin(), t.deepest.end(), hash_less);
    if (tiebreak && std::find(t.deepest.begin(), t.deepest.end(), *tiebreak) != t.deepest.end())
        leaf = *tiebreak;
    std::vector<BlockId> path;
    for (BlockId b = leaf;;) {
        path.push_back(b);
        const auto& vb = state.voter(b);
        if (vb.height == 0)
            break;
        b = vb.parent;
    }
    std::reverse(path.begin(), path.end());
    return path;
}

RoundLog step_round(WorldState& state, AdversaryStrategy& strategy)
{
    const SimConfig& config = state.config();
    const Round round = state.round();
    if (round >= config.r_max)
        throw ContractViolation("step_round: horizon reached");

    Rng arrivals = make_stream(config.seed, stream::arrivals, round);
    generate_arrivals(state.queues(), state.transactions(), state.arrival_credit(), round, config, arrivals);

    const RoundSample sample = sample_round_at(config, round);
    Rng strategy_rng = make_stream(config.seed, stream::strategy, round);
    AdversaryContext ctx(state, sample, strategy_rng);
    strategy.act(ctx);
    ctx.check_budget();

    RoundLog log;
    log.round = round;
    log.adversary_blocks = static_cast<std::uint32_t>(ctx.mined().size());
    const std::vector<BlockId> honest = as_fault([&] {
        return honest_extend(state, sample, ctx.directives(), &log.honest_tx_queues);
    });
    log.honest_blocks = static_cast<std::uint32_t>(honest.size());

    state.reset_reorgs();
    std::vector<BlockId> releases = ctx.releases();
    std::sort(releases.begin(), releases.end());
    releases.erase(std::unique(releases.begin(), releases.end()), releases.end());
    for (const auto& id : releases) {
        if (!state.ancestors_public(id))
            fault("release of block " + std::to_string(id.value) + " before its ancestors or references");
        state.publish(id);
    }
    for (const auto& id : honest)
        state.publish(id);

    log.released = static_cast<std::uint32_t>(releases.size());
    log.reorg_switches = state.reorgs().switches;
    log.max_reorg_depth = state.reorgs().max_depth;
    log.max_level = state.max_level();
    state.advance_round();
    return log;
}

LatencyStats SimResult::latency() const
{
    return latency_report(transactions, config.round_seconds());
}

SimResult run(const SimConfig& config, AdversaryStrategy& strategy, const RunOptions& options)
{
    SimResult result;
    result.config = config;
    result.strategy = strategy.name();
    if (config.r_max == 0) {
        SimConfig probe = config;
        probe.r_max = 1;
        probe.validate();
        return result;
    }
    config.validate();

    WorldState state(config);
    std::optional<ConfirmationTracker> tracker;
    if (config.track_confirmation)
        tracker.emplace(config);

    for (Round r = 0; r < config.r_max; ++r) {
        RoundLog log = step_round(state, strategy);
        account_round(result.throughput, log.honest_tx_queues);
        if (tracker)
            tracker->update(state);
        if (options.check_every > 0 && (r + 1) % options.check_every == 0)
            state.check_invariants();
        if (options.keep_log) {
            log.honest_tx_queues.shrink_to_fit();
            result.log.push_back(std::move(log));
        }
    }
    result.rounds = config.r_max;

    if (tracker) {
        tracker->finalize(state);
        result.confirmation = tracker->summary();
    }
    result.transactions = state.transactions();
    for (auto& tx : result.transactions) {
        tx.confirmed_round.reset();
        const auto& c = result.confirmation;
        if (tx.conflicts_with) {
            if (tx.id < c.slow_round.size())
                tx.confirmed_round = c.slow_round[tx.id];
        } else if (tx.id < c.fast_round.size()) {
            tx.confirmed_round = c.fast_round[tx.id];
        }
        if (tx.confirmed_round)
            ++result.throughput.confirmed_txs;
    }
    result.strategy_stats = strategy.stats();
    result.private_blocks = state.private_count();
    result.public_blocks = state.block_count() - state.private_count();
    result.max_level = state.max_level();
    for (std::uint32_t i = 0; i < state.m(); ++i)
        result.tree_heights.push_back(state.tree(i).height());
    return result;
}

} // namespace prism
