#include "prism/confirm.hpp"

#include "prism/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <unordered_set>

namespace prism {

std::uint32_t VoteTally::votes(std::size_t i, std::uint32_t d) const
{
    const auto& v = depths.at(i);
    // v is decreasing; find the first element below d
    auto it = std::upper_bound(v.begin(), v.end(), d, std::greater<>());
    return static_cast<std::uint32_t>(it - v.begin());
}

VoteTally tally(const WorldState& state, Level level)
{
    VoteTally t;
    t.level = level;
    t.m = state.m();
    t.proposers = state.level_blocks(level);
    t.depths.resize(t.proposers.size());
    for (std::uint32_t i = 0; i < state.m(); ++i) {
        const auto& tree = state.tree(i);
        const VoteSlot* slot = tree.vote_at(level);
        if (!slot) {
            ++t.unvoted;
            continue;
        }
        const std::uint32_t depth = tree.height() - slot->height;
        std::size_t k = 0;
        while (k < t.proposers.size() && t.proposers[k] != slot->proposer)
            ++k;
        if (k == t.proposers.size())
            throw StructuralError("tally: main-chain vote for a proposer that is not public");
        t.depths[k].push_back(depth);
    }
    for (auto& d : t.depths)
        std::sort(d.begin(), d.end(), std::greater<>());
    return t;
}

double delta_d(std::uint32_t d, double fv_round, double beta, std::uint32_t m)
{
    if (d == 0)
        return 1.0;
    const double first = 1.0 / (4.0 * fv_round * static_cast<double>(d));
    const double second = m >= 2 ? (1.0 - 2.0 * beta) / (8.0 * std::log(static_cast<double>(m))) : 0.0;
    return std::max(first, second);
}

ConfidenceBounds bounds(const VoteTally& tally, const SimConfig& config)
{
    const double m = static_cast<double>(tally.m);
    ConfidenceBounds b;
    b.lower.assign(tally.proposers.size(), 0.0);
    for (std::size_t i = 0; i < tally.depths.size(); ++i) {
        const auto& v = tally.depths[i];
        double best = 0.0;
        for (std::size_t j = 0; j < v.size(); ++j) {
            if (j + 1 < v.size() && v[j + 1] == v[j])
                continue;
            if (v[j] == 0)
                break;
            const double slack = config.cp_multiplier * delta_d(v[j], config.fv_round, config.beta, tally.m) * m;
            best = std::max(best, static_cast<double>(j + 1) - slack);
        }
        b.lower[i] = best;
    }
    double sum = 0.0;
    for (double l : b.lower)
        sum += l;
    b.upper.resize(b.lower.size());
    for (std::size_t i = 0; i < b.lower.size(); ++i)
        b.upper[i] = m - (sum - b.lower[i]);
    b.upper_private = m - sum;
    return b;
}

std::optional<std::vector<BlockId>> try_list_confirm(const ConfidenceBounds& b,
                                                     const std::vector<BlockId>& proposers)
{
    if (proposers.empty() || b.lower.size() != proposers.size())
        return std::nullopt;
    const double max_lower = *std::max_element(b.lower.begin(), b.lower.end());
    if (!(max_lower > b.upper_private))
        return std::nullopt;
    std::vector<BlockId> list;
    for (std::size_t i = 0; i < proposers.size(); ++i)
        if (b.upper[i] > max_lower)
            list.push_back(proposers[i]);
    return list;
}

BlockId leader(const VoteTally& tally)
{
    if (tally.proposers.empty())
        throw ContractViolation("leader: level has no proposer block");
    std::size_t best = 0;
    for (std::size_t i = 1; i < tally.proposers.size(); ++i) {
        const auto vi = tally.depths[i].size();
        const auto vb = tally.depths[best].size();
        if (vi > vb || (vi == vb && hash_less(tally.proposers[i], tally.proposers[best])))
            best = i;
    }
    return tally.proposers[best];
}

std::uint32_t slow_confirm_depth(const SimConfig& config)
{
    if (config.slow_depth_override > 0)
        return config.slow_depth_override;
    const double gamma = (1.0 - 2.0 * config.beta) * (1.0 - 2.0 * config.beta) / 36.0;
    const double k = std::ceil((2.0 / gamma) *
                               std::log(8.0 * config.m * static_cast<double>(config.r_max) / config.epsilon));
    if (!(k < static_cast<double>(std::numeric_limits<std::uint32_t>::max())))
        return std::numeric_limits<std::uint32_t>::max();
    return static_cast<std::uint32_t>(std::max(k, 0.0));
}

std::optional<BlockId> slow_confirm(const VoteTally& tally, std::uint32_t k)
{
    if (tally.unvoted > 0 || tally.proposers.empty())
        return std::nullopt;
    for (const auto& v : tally.depths)
        if (!v.empty() && v.back() < k)
            return std::nullopt;
    return leader(tally);
}

std::optional<BlockId> slow_confirm(const WorldState& state, Level level, const SimConfig& config)
{
    return slow_confirm(tally(state, level), slow_confirm_depth(config));
}

namespace {

void expand_into(const WorldState& state, BlockId proposer, std::unordered_set<std::uint64_t>& visited,
                 std::vector<TxId>& out)
{
    std::vector<BlockId> stack{proposer};
    // Explicit stack; children are pushed in reverse so they pop in
    // reference order.
    while (!stack.empty()) {
        const BlockId id = stack.back();
        stack.pop_back();
        if (!visited.insert(id.value).second)
            continue;
        const auto& p = state.proposer(id);
        for (const auto& t : p.tx_refs) {
            if (!visited.insert(t.value).second)
                continue;
            const auto& tb = state.tx_block(t);
            out.insert(out.end(), tb.txs.begin(), tb.txs.end());
        }
        for (auto it = p.prop_refs.rbegin(); it != p.prop_refs.rend(); ++it) {
            (void)state.proposer(*it); // throws on a dangling reference
            stack.push_back(*it);
        }
    }
}

} // namespace

std::vector<TxId> expand_proposer(const WorldState& state, BlockId proposer)
{
    std::unordered_set<std::uint64_t> visited;
    std::vector<TxId> out;
    expand_into(state, proposer, visited, out);
    return out;
}

std::vector<TxId> sanitize(const std::vector<TxId>& txs, const std::vector<Transaction>& records)
{
    std::unordered_set<TxId> seen;
    std::vector<TxId> out;
    for (TxId t : txs) {
        if (!seen.insert(t).second)
            continue;
        if (t < records.size() && records[t].conflicts_with && seen.count(*records[t].conflicts_with))
            continue;
        out.push_back(t);
    }
    return out;
}

Ledger build_ledger(const WorldState& state, const std::vector<BlockId>& prop_sequence)
{
    std::unordered_set<std::uint64_t> visited;
    std::vector<TxId> raw;
    for (std::size_t i = 0; i < prop_sequence.size(); ++i) {
        const auto& p = state.proposer(prop_sequence[i]);
        if (i > 0 && p.level != state.proposer(prop_sequence[i - 1]).level + 1)
            throw ContractViolation("build_ledger: sequence must hold one proposer per consecutive level");
        expand_into(state, prop_sequence[i], visited, raw);
    }
    return Ledger{sanitize(raw, state.transactions())};
}

std::vector<std::vector<BlockId>> fast_lists(const WorldState& state, const SimConfig& config)
{
    std::vector<std::vector<BlockId>> lists;
    for (Level l = 1; l <= state.max_level(); ++l) {
        const auto t = tally(state, l);
        auto list = try_list_confirm(bounds(t, config), t.proposers);
        if (!list)
            break;
        lists.push_back(std::move(*list));
    }
    return lists;
}

namespace {

enum class Cover { Neither, Tx, Partner };

Cover classify(const std::vector<TxId>& expansion, TxId tx, std::optional<TxId> partner)
{
    for (TxId t : expansion) {
        if (t == tx)
            return Cover::Tx;
        if (partner && t == *partner)
            return Cover::Partner;
    }
    return Cover::Neither;
}

} // namespace

bool is_tx_confirmed(TxId tx, const WorldState& state, const std::vector<std::vector<BlockId>>& lists)
{
    const auto& records = state.transactions();
    const std::optional<TxId> partner = tx < records.size() ? records[tx].conflicts_with : std::nullopt;
    if (lists.empty())
        return false;

    // The first block of a sequence whose expansion holds tx or its partner
    // decides; earlier blocks hold neither, so deduplication cannot hide
    // anything relevant from it.
    bool prefix_all_can_skip = true; // every level so far has a Neither block
    for (const auto& list : lists) {
        bool has_neither = false, has_partner = false, all_cover = true;
        for (const auto& b : list) {
            const Cover c = classify(expand_proposer(state, b), tx, partner);
            has_neither |= c == Cover::Neither;
            has_partner |= c == Cover::Partner;
            all_cover &= c == Cover::Tx;
        }
        if (!partner) {
            if (all_cover)
                return true;
            continue;
        }
        if (prefix_all_can_skip && has_partner)
            return false;
        prefix_all_can_skip = prefix_all_can_skip && has_neither;
    }
    return partner ? !prefix_all_can_skip : false;
}

bool is_tx_confirmed(TxId tx, const WorldState& state, const SimConfig& config)
{
    return is_tx_confirmed(tx, state, fast_lists(state, config));
}

Ledger ordered_confirmed_txs(const WorldState& state, const SimConfig& config)
{
    const std::uint32_t k = slow_confirm_depth(config);
    std::vector<BlockId> seq;
    for (Level l = 1; l <= state.max_level(); ++l) {
        auto lead = slow_confirm(tally(state, l), k);
        if (!lead)
            break;
        seq.push_back(*lead);
    }
    return build_ledger(state, seq);
}

std::uint64_t ConfirmationSummary::fast_confirmed_levels() const noexcept
{
    std::uint64_t n = 0;
    for (const auto& l : levels)
        n += l.list_round.has_value();
    return n;
}

double ConfirmationSummary::list_confirm_mean_rounds() const noexcept
{
    double sum = 0.0;
    std::uint64_t n = 0;
    for (const auto& l : levels) {
        if (!l.list_round)
            continue;
        sum += static_cast<double>(*l.list_round - l.first_seen_round);
        ++n;
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

ConfirmationTracker::ConfirmationTracker(const SimConfig& config) : config_(config)
{
    summary_.slow_depth = slow_confirm_depth(config);
}

const ConfirmationTracker::Coverage& ConfirmationTracker::coverage(const WorldState& state, BlockId proposer)
{
    auto it = coverage_.find(proposer.value);
    if (it != coverage_.end())
        return it->second;
    Coverage c;
    c.order = expand_proposer(state, proposer);
    c.index.reserve(c.order.size());
    for (std::uint32_t i = 0; i < c.order.size(); ++i)
        c.index.emplace_back(c.order[i], i);
    std::stable_sort(c.index.begin(), c.index.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    c.index.erase(std::unique(c.index.begin(), c.index.end(),
                              [](const auto& a, const auto& b) { return a.first == b.first; }),
                  c.index.end());
    return coverage_.emplace(proposer.value, std::move(c)).first->second;
}

void ConfirmationTracker::update(const WorldState& state)
{
    const Round round = state.round() == 0 ? 0 : state.round() - 1;
    const auto& records = state.transactions();
    summary_.fast_round.resize(records.size());
    summary_.slow_round.resize(records.size());
    cover_count_.resize(records.size(), 0);

    auto& levels = summary_.levels;
    while (levels.size() < state.max_level()) {
        LevelRecord rec;
        rec.level = static_cast<Level>(levels.size() + 1);
        rec.first_seen_round = state.entry(state.level_blocks(rec.level).front()).arrival_round;
        levels.push_back(std::move(rec));
    }
    if (max_lower_.size() < levels.size())
        max_lower_.resize(levels.size());
    if (contribution_.size() < levels.size())
        contribution_.resize(levels.size());

    std::vector<std::vector<BlockId>> lists;
    for (Level l = 1; l <= state.max_level(); ++l) {
        const auto t = tally(state, l);
        const auto b = bounds(t, config_);
        auto& ml = max_lower_[l - 1];
        for (std::size_t i = 0; i < t.proposers.size(); ++i) {
            auto& slot = ml[t.proposers[i].value];
            slot = std::max(slot, b.lower[i]);
        }
        auto list = try_list_confirm(b, t.proposers);
        if (!list)
            break;
        lists.push_back(std::move(*list));
    }

    for (std::size_t i = 0; i < levels.size(); ++i) {
        auto& rec = levels[i];
        if (i < lists.size()) {
            rec.list = lists[i];
            if (!rec.list_round) {
                rec.list_round = round;
                rec.always_listed = rec.list;
            } else {
                std::vector<BlockId> keep;
                for (const auto& b : rec.always_listed)
                    if (std::find(rec.list.begin(), rec.list.end(), b) != rec.list.end())
                        keep.push_back(b);
                rec.always_listed = std::move(keep);
            }
        } else {
            rec.list.clear();
        }
    }

    // Transactions without a double-spend partner: covered by every block
    // of some active list.
    std::vector<std::pair<std::size_t, std::vector<TxId>>> changes;
    const std::size_t upto = std::max(lists.size(), active_levels_);
    for (std::size_t i = 0; i < upto; ++i) {
        std::vector<TxId> next;
        if (i < lists.size()) {
            bool first = true;
            for (const auto& b : lists[i]) {
                const auto& cov = coverage(state, b).index;
                std::vector<TxId> cur;
                if (first) {
                    for (const auto& [tx, pos] : cov)
                        if (!records[tx].conflicts_with)
                            cur.push_back(tx);
                    first = false;
                } else {
                    for (TxId tx : next) {
                        auto it = std::lower_bound(cov.begin(), cov.end(), tx,
                                                   [](const auto& a, TxId v) { return a.first < v; });
                        if (it != cov.end() && it->first == tx)
                            cur.push_back(tx);
                    }
                }
                next = std::move(cur);
            }
        }
        if (next != contribution_[i])
            changes.emplace_back(i, std::move(next));
    }
    active_levels_ = lists.size();

    for (const auto& [i, next] : changes) {
        for (TxId tx : next) {
            if (cover_count_[tx]++ == 0 && !summary_.fast_round[tx])
                summary_.fast_round[tx] = round;
        }
    }
    std::vector<TxId> dropped;
    for (auto& [i, next] : changes) {
        for (TxId tx : contribution_[i])
            if (--cover_count_[tx] == 0)
                dropped.push_back(tx);
        contribution_[i] = std::move(next);
    }
    std::sort(dropped.begin(), dropped.end());
    dropped.erase(std::unique(dropped.begin(), dropped.end()), dropped.end());
    for (TxId tx : dropped)
        if (cover_count_[tx] == 0 && summary_.fast_round[tx])
            ++summary_.safety.tx_unconfirmed_after_confirmed;

    if (config_.conflict_fraction > 0.0)
        track_conflicts(state, lists, round);
    track_slow(state, round);
}

void ConfirmationTracker::track_conflicts(const WorldState& state, const std::vector<std::vector<BlockId>>& lists,
                                          Round round)
{
    (void)round;
    const auto& records = state.transactions();
    std::size_t unchanged = 0;
    while (unchanged < lists.size() && unchanged < prev_lists_.size() && lists[unchanged] == prev_lists_[unchanged])
        ++unchanged;
    prev_lists_ = lists;

    // Same fold as is_tx_confirmed, resumed from where the last round left
    // off as long as the lists it has read are unchanged.
    auto position = [](const Coverage& c, TxId tx) -> std::optional<std::uint32_t> {
        auto it = std::lower_bound(c.index.begin(), c.index.end(), tx,
                                   [](const auto& a, TxId v) { return a.first < v; });
        if (it == c.index.end() || it->first != tx)
            return std::nullopt;
        return it->second;
    };
    auto confirmed = [&](TxId tx, TxId partner) {
        auto& s = conflict_scan_[tx];
        if (s.next_level > unchanged)
            s = ConflictScan{};
        for (; !s.decided && s.next_level < lists.size(); ++s.next_level) {
            bool has_neither = false, has_partner = false;
            for (const auto& b : lists[s.next_level]) {
                const auto& cov = coverage(state, b);
                const auto a = position(cov, tx), p = position(cov, partner);
                has_neither |= !a && !p;
                has_partner |= p && (!a || *p < *a);
            }
            if (has_partner) {
                s.decided = true;
                s.confirmed = false;
            } else if (!has_neither) {
                s.decided = true;
                s.confirmed = true;
            }
        }
        return s.decided && s.confirmed;
    };

    conflict_scan_.resize(records.size());
    for (const auto& tx : records) {
        if (!tx.conflicts_with || tx.id > *tx.conflicts_with)
            continue;
        const auto& other = records[*tx.conflicts_with];
        if (!tx.first_mined_round && !other.first_mined_round)
            continue;
        if (confirmed(tx.id, other.id) && confirmed(other.id, tx.id))
            ++summary_.safety.double_spend_both_confirmed;
    }
}

void ConfirmationTracker::track_slow(const WorldState& state, Round round)
{
    const auto& records = state.transactions();
    slow_seen_tx_.resize(records.size(), 0);
    auto& levels = summary_.levels;

    for (Level l = 1; l <= slow_prefix_; ++l) {
        auto& rec = levels[l - 1];
        const BlockId now = leader(tally(state, l));
        if (now != *rec.slow_leader)
            ++summary_.safety.slow_leader_changes;
    }
    while (slow_prefix_ < state.max_level()) {
        const Level l = slow_prefix_ + 1;
        auto lead = slow_confirm(tally(state, l), summary_.slow_depth);
        if (!lead)
            break;
        auto& rec = levels[l - 1];
        rec.slow_leader = lead;
        rec.slow_round = round;
        if (rec.list_round && !rec.list.empty() &&
            std::find(rec.list.begin(), rec.list.end(), *lead) == rec.list.end())
            ++summary_.safety.fast_slow_inconsistent;

        std::vector<TxId> raw;
        expand_into(state, *lead, slow_expanded_blocks_, raw);
        for (TxId tx : raw) {
            if (slow_seen_tx_[tx])
                continue;
            slow_seen_tx_[tx] = 1;
            const auto& partner = records[tx].conflicts_with;
            if (partner && *partner < slow_seen_tx_.size() && summary_.slow_round[*partner])
                continue;
            summary_.slow_round[tx] = round;
        }
        slow_prefix_ = l;
    }
}

void ConfirmationTracker::finalize(const WorldState& state)
{
    auto& levels = summary_.levels;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const auto t = tally(state, static_cast<Level>(i + 1));
        const BlockId final_leader = leader(t);
        auto& rec = levels[i];
        if (rec.list_round) {
            ++summary_.safety.list_instances;
            if (std::find(rec.always_listed.begin(), rec.always_listed.end(), final_leader) ==
                rec.always_listed.end())
                ++summary_.safety.list_violations;
        }
        if (i < max_lower_.size() && !max_lower_[i].empty()) {
            ++summary_.safety.bound_instances;
            bool violated = false;
            for (std::size_t k = 0; k < t.proposers.size(); ++k) {
                auto it = max_lower_[i].find(t.proposers[k].value);
                if (it != max_lower_[i].end() && it->second > static_cast<double>(t.votes(k)) + 1e-9)
                    violated = true;
            }
            summary_.safety.bound_violations += violated;
        }
    }
}

} // namespace prism
