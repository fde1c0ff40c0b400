#pragma once

#include "prism/config.hpp"
#include "prism/sampling.hpp"
#include "prism/types.hpp"

#include <cstdint>
#include <deque>
#include <vector>

namespace prism {

/// q FIFO queues of pending transaction ids.
class TxQueues {
public:
    explicit TxQueues(std::uint32_t q = 1);

    [[nodiscard]] std::uint32_t count() const noexcept { return static_cast<std::uint32_t>(queues_.size()); }
    [[nodiscard]] const std::deque<TxId>& queue(std::uint32_t i) const { return queues_.at(i); }
    [[nodiscard]] std::size_t total_queued() const noexcept;

    /// Appends to the next queue in round-robin order.
    void push(TxId tx);
    void push_to(std::uint32_t queue, TxId tx);
    /// Removes up to `limit` ids from the front of `queue`.
    std::vector<TxId> pop(std::uint32_t queue, std::uint32_t limit);

private:
    std::vector<std::deque<TxId>> queues_;
    std::uint32_t next_ = 0;
};

struct BlockContent {
    std::uint32_t queue_index = 0;
    std::vector<TxId> txs;
};

/// Uniformly chosen queue, up to `capacity` transactions taken FIFO.
BlockContent draw_block_content(TxQueues& queues, std::uint32_t capacity, Rng& rng);

/// Generates this round's arrivals and enqueues them. Deterministic mode
/// carries the fractional part of the rate over to later rounds. With
/// conflict_fraction > 0, that share of arrivals comes with a double-spend
/// partner enqueued right after it.
void generate_arrivals(TxQueues& queues, std::vector<Transaction>& txs, double& credit, Round round,
                       const SimConfig& config, Rng& rng);

struct ThroughputStats {
    std::uint64_t rounds = 0;
    std::uint64_t honest_tx_blocks = 0;
    std::uint64_t nonredundant_blocks = 0;
    std::uint64_t confirmed_txs = 0;

    [[nodiscard]] double nonredundant_per_round() const noexcept;
    [[nodiscard]] double nonredundant_fraction() const noexcept;
};

/// One round of honest transaction blocks, given by their queue indices.
/// Same-queue blocks of one round carry the same transactions, so only one
/// of them counts as non-redundant.
void account_round(ThroughputStats& stats, const std::vector<std::uint32_t>& honest_queue_indices);

struct LatencySummary {
    std::size_t count = 0;
    double mean = 0.0;
    double p50 = 0.0;
    double p95 = 0.0;
    double max = 0.0;
};

struct LatencyStats {
    /// Arrival to first mined, in rounds.
    LatencySummary processing_rounds;
    /// First mined to confirmed, in rounds; non-conflicting transactions
    /// use fast list confirmation.
    LatencySummary confirmation_rounds;
    /// Same as confirmation_rounds, for double-spent transactions, which
    /// only confirm through slow confirmation.
    LatencySummary conflicting_confirmation_rounds;
    double round_seconds = 1.0;
    std::size_t arrived = 0;
    std::size_t mined = 0;
    std::size_t confirmed = 0;

    [[nodiscard]] double mean_confirmation_seconds() const noexcept
    {
        return confirmation_rounds.mean * round_seconds;
    }
};

LatencySummary summarize(std::vector<double> values);

/// Reads first_mined_round and confirmed_round of every transaction.
LatencyStats latency_report(const std::vector<Transaction>& txs, double round_seconds);

} // namespace prism
