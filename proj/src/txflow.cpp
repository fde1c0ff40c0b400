#include "prism/txflow.hpp"

#include "prism/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace prism {

TxQueues::TxQueues(std::uint32_t q) : queues_(q)
{
    if (q == 0)
        throw ContractViolation("TxQueues: q must be >= 1");
}

std::size_t TxQueues::total_queued() const noexcept
{
    std::size_t n = 0;
    for (const auto& qu : queues_)
        n += qu.size();
    return n;
}

void TxQueues::push(TxId tx)
{
    queues_[next_].push_back(tx);
    next_ = (next_ + 1) % count();
}

void TxQueues::push_to(std::uint32_t queue, TxId tx)
{
    queues_.at(queue).push_back(tx);
}

std::vector<TxId> TxQueues::pop(std::uint32_t queue, std::uint32_t limit)
{
    auto& qu = queues_.at(queue);
    const std::size_t n = std::min<std::size_t>(limit, qu.size());
    std::vector<TxId> out(qu.begin(), qu.begin() + static_cast<std::ptrdiff_t>(n));
    qu.erase(qu.begin(), qu.begin() + static_cast<std::ptrdiff_t>(n));
    return out;
}

BlockContent draw_block_content(TxQueues& queues, std::uint32_t capacity, Rng& rng)
{
    std::uniform_int_distribution<std::uint32_t> pick(0, queues.count() - 1);
    BlockContent c;
    c.queue_index = pick(rng);
    c.txs = queues.pop(c.queue_index, capacity);
    return c;
}

void generate_arrivals(TxQueues& queues, std::vector<Transaction>& txs, double& credit, Round round,
                       const SimConfig& config, Rng& rng)
{
    const double rate = config.arrival_rate();
    std::uint64_t n = 0;
    if (config.poisson_arrivals) {
        if (rate > 0.0)
            n = std::poisson_distribution<std::uint64_t>(rate)(rng);
    } else {
        credit += rate;
        n = static_cast<std::uint64_t>(std::floor(credit));
        credit -= static_cast<double>(n);
    }

    std::bernoulli_distribution conflict(config.conflict_fraction);
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto id = static_cast<TxId>(txs.size());
        txs.push_back(Transaction{id, round, std::nullopt, std::nullopt, std::nullopt});
        queues.push(id);
        if (config.conflict_fraction > 0.0 && conflict(rng)) {
            const auto partner = static_cast<TxId>(txs.size());
            txs[id].conflicts_with = partner;
            txs.push_back(Transaction{partner, round, id, std::nullopt, std::nullopt});
            queues.push(partner);
        }
    }
}

double ThroughputStats::nonredundant_per_round() const noexcept
{
    return rounds == 0 ? 0.0 : static_cast<double>(nonredundant_blocks) / static_cast<double>(rounds);
}

double ThroughputStats::nonredundant_fraction() const noexcept
{
    return honest_tx_blocks == 0 ? 0.0
                                 : static_cast<double>(nonredundant_blocks) / static_cast<double>(honest_tx_blocks);
}

void account_round(ThroughputStats& stats, const std::vector<std::uint32_t>& honest_queue_indices)
{
    std::set<std::uint32_t> distinct(honest_queue_indices.begin(), honest_queue_indices.end());
    stats.rounds += 1;
    stats.honest_tx_blocks += honest_queue_indices.size();
    stats.nonredundant_blocks += distinct.size();
}

LatencySummary summarize(std::vector<double> values)
{
    LatencySummary s;
    s.count = values.size();
    if (values.empty())
        return s;
    std::sort(values.begin(), values.end());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    auto quantile = [&](double p) {
        // nearest-rank
        const auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(values.size())));
        return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
    };
    s.p50 = quantile(0.5);
    s.p95 = quantile(0.95);
    s.max = values.back();
    return s;
}

LatencyStats latency_report(const std::vector<Transaction>& txs, double round_seconds)
{
    LatencyStats out;
    out.round_seconds = round_seconds;
    out.arrived = txs.size();
    std::vector<double> proc, conf, conf_conflict;
    for (const auto& tx : txs) {
        if (!tx.first_mined_round)
            continue;
        ++out.mined;
        proc.push_back(static_cast<double>(*tx.first_mined_round - tx.arrival_round));
        if (!tx.confirmed_round)
            continue;
        ++out.confirmed;
        const double d = static_cast<double>(*tx.confirmed_round) - static_cast<double>(*tx.first_mined_round);
        (tx.conflicts_with ? conf_conflict : conf).push_back(std::max(0.0, d));
    }
    out.processing_rounds = summarize(std::move(proc));
    out.confirmation_rounds = summarize(std::move(conf));
    out.conflicting_confirmation_rounds = summarize(std::move(conf_conflict));
    return out;
}

} // namespace prism
