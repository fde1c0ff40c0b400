#include "fixtures.hpp"

#include "prism/adversary.hpp"
#include "prism/engine.hpp"
#include "prism/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace prism;
using prism::testing::small_config;

namespace {

SimConfig attack_config(std::uint32_t m, double beta_active, std::uint32_t rounds)
{
    auto c = small_config(m);
    c.beta = std::max(0.25, beta_active);
    c.beta_active = beta_active;
    c.r_max = rounds;
    c.lambda_in = 2.0;
    return c;
}

SimResult run_named(const std::string& name, const SimConfig& c, const StrategyParams& p = {}, bool log = false)
{
    auto s = make_strategy(name, c, p);
    RunOptions o;
    o.keep_log = log;
    o.check_every = 500;
    return run(c, *s, o);
}

double poisson_pmf(unsigned k, double mean)
{
    return std::exp(-mean + k * std::log(mean) - std::lgamma(k + 1.0));
}

// Single-tree race: the public chain holds p blocks above the fork base,
// the fork a. Each round the adversary adds Z, honest miners H; the fork
// wins once it is strictly longer with the target vote k deep (p − 1 ≥ k),
// and is dropped once it trails by more than `gap`. Value iteration over
// (d = p − a, p capped at k + 1).
class RaceOracle {
public:
    RaceOracle(double honest, double adversary, unsigned k, int gap) : k_(k), gap_(gap)
    {
        for (unsigned n = 0; n <= 8; ++n) {
            ph_.push_back(poisson_pmf(n, honest));
            pz_.push_back(poisson_pmf(n, adversary));
        }
        const int pcap = static_cast<int>(k) + 1;
        value_.assign(static_cast<std::size_t>((gap_ - lo_ + 1) * (pcap + 1)), 0.0);
        for (int it = 0; it < 20000; ++it) {
            double change = 0.0;
            for (int d = lo_; d <= gap_; ++d)
                for (int p = 1; p <= pcap; ++p) {
                    const double v = step(d, p);
                    change = std::max(change, std::abs(v - at(d, p)));
                    at(d, p) = v;
                }
            if (change < 1e-13)
                break;
        }
    }

    // Success probability of a race that starts with p0 public blocks above
    // the fork base and an empty fork.
    [[nodiscard]] double success(unsigned p0) const
    {
        return const_cast<RaceOracle*>(this)->step(static_cast<int>(p0), static_cast<int>(std::min(p0, k_ + 1)));
    }

private:
    double& at(int d, int p)
    {
        const int pcap = static_cast<int>(k_) + 1;
        return value_[static_cast<std::size_t>((d - lo_) * (pcap + 1) + p)];
    }

    double step(int d, int p)
    {
        const int pcap = static_cast<int>(k_) + 1;
        double v = 0.0;
        for (unsigned h = 0; h < ph_.size(); ++h)
            for (unsigned z = 0; z < pz_.size(); ++z) {
                const double w = ph_[h] * pz_[z];
                const int d2 = d + static_cast<int>(h) - static_cast<int>(z);
                const int p2 = std::min(pcap, p + static_cast<int>(h));
                if (d2 < 0 && p2 - 1 >= static_cast<int>(k_))
                    v += w;
                else if (d2 > gap_)
                    continue;
                else
                    v += w * at(std::max(d2, lo_), p2);
            }
        return v;
    }

    unsigned k_;
    int gap_;
    int lo_ = -30;
    std::vector<double> ph_, pz_;
    std::vector<double> value_;
};

} // namespace

TEST_CASE("unknown strategies and parameters are config errors")
{
    const auto c = attack_config(2, 0.2, 10);
    CHECK_THROWS_AS(make_strategy("selfish", c), ConfigError);
    CHECK_THROWS_AS(make_strategy("passive", c, {{"k", 1}}), ConfigError);
    CHECK_THROWS_AS(make_strategy("private", c, {{"k", -1}}), ConfigError);
    CHECK(make_strategy("private", c)->name() == "private_nakamoto");
}

TEST_CASE("passive strategy releases everything it mines")
{
    auto c = attack_config(4, 0.3, 300);
    c.fv_round = 0.5;
    WorldState state(c);
    auto s = make_strategy("passive", c);
    std::uint64_t adversary = 0;
    for (Round r = 0; r < c.r_max; ++r) {
        const auto log = step_round(state, *s);
        adversary += log.adversary_blocks;
        CHECK(log.released == log.adversary_blocks);
        CHECK(state.private_count() == 0);
    }
    CHECK(adversary > 0);

    c.beta_active = 0.0;
    const auto quiet = run_named("passive", c);
    CHECK(quiet.private_blocks == 0);
    std::uint64_t zero = 0;
    WorldState s2(c);
    auto p2 = make_strategy("passive", c);
    for (Round r = 0; r < c.r_max; ++r)
        zero += step_round(s2, *p2).adversary_blocks;
    CHECK(zero == 0);
}

TEST_CASE("passive adversary blocks grow the trees like honest ones")
{
    auto a = attack_config(10, 0.25, 1000);
    auto b = a;
    b.beta = 0.0;
    b.beta_active = 0.0;
    b.seed = 7;
    const auto ra = run_named("passive", a);
    const auto rb = run_named("passive", b);
    double ha = 0, hb = 0;
    for (std::uint32_t i = 0; i < 10; ++i) {
        ha += ra.tree_heights[i];
        hb += rb.tree_heights[i];
    }
    ha /= 10;
    hb /= 10;
    // heights are Poisson(f·rounds) per tree; the mean of 10 has variance f·rounds/10
    const double sigma = std::sqrt(2.0 * 0.1 * 1000 / 10);
    CHECK(std::abs(ha - hb) < 3 * sigma);
}

TEST_CASE("censorship blocks carry nothing and are released at once")
{
    auto c = attack_config(3, 0.4, 400);
    c.beta = 0.4;
    c.fv_round = 0.4;
    c.fp_round = 0.3;
    WorldState state(c);
    auto s = make_strategy("censorship", c);
    for (Round r = 0; r < c.r_max; ++r) {
        (void)step_round(state, *s);
        CHECK(state.private_count() == 0);
    }
    std::size_t props = 0, voters = 0, txs = 0, unvoted_seen = 0;
    for (const auto& p : state.proposers())
        if (p.miner == Miner::Adversary) {
            ++props;
            CHECK(p.tx_refs.empty());
            CHECK(p.prop_refs.empty());
        }
    for (const auto& v : state.voters())
        if (v.miner == Miner::Adversary) {
            ++voters;
            CHECK(v.votes.empty());
            unvoted_seen += state.unvoted_levels(v.tree, v.parent, state.max_level()).empty() ? 0 : 1;
        }
    for (const auto& t : state.tx_blocks())
        if (t.miner == Miner::Adversary) {
            ++txs;
            CHECK(t.txs.empty());
        }
    CHECK(props > 0);
    CHECK(voters > 0);
    CHECK(txs > 0);
    CHECK(unvoted_seen > 0);
}

TEST_CASE("balancing with no adversary power is passive")
{
    auto c = attack_config(5, 0.0, 800);
    const auto a = run_named("passive", c, {}, true);
    const auto b = run_named("balancing", c, {}, true);
    CHECK(a.public_blocks == b.public_blocks);
    CHECK(a.tree_heights == b.tree_heights);
    CHECK(a.confirmation.fast_round == b.confirmation.fast_round);
    CHECK(a.latency().confirmation_rounds.mean == b.latency().confirmation_rounds.mean);
}

TEST_CASE("balancing contests levels and keeps a tie well defined")
{
    auto c = attack_config(2, 0.25, 3000);
    c.fv_round = 0.3;
    c.fp_round = 0.2;
    WorldState state(c);
    auto s = make_strategy("balancing", c);
    for (Round r = 0; r < c.r_max; ++r)
        (void)step_round(state, *s);
    CHECK_NOTHROW(state.check_invariants());
    std::size_t contested = 0, split = 0;
    for (Level l = 1; l <= state.max_level(); ++l) {
        const auto& blocks = state.level_blocks(l);
        if (blocks.size() < 2)
            continue;
        ++contested;
        const VoteSlot* v0 = state.tree(0).vote_at(l);
        const VoteSlot* v1 = state.tree(1).vote_at(l);
        split += v0 && v1 && v0->proposer != v1->proposer ? 1 : 0;
    }
    CHECK(contested > 20);
    CHECK(split > 0);
}

TEST_CASE("single-tree private attack matches the random-walk oracle")
{
    auto c = attack_config(1, 0.45, 200000);
    c.fv_round = 0.1;
    c.fp_round = 0.1;
    c.lambda_in = 0.0;
    c.track_confirmation = false;
    const auto res = run_named("private_nakamoto", c, {{"k", 2}, {"abandon_gap", 10}});
    const auto& races = res.strategy_stats.races;
    REQUIRE(races.size() > 500);

    const RaceOracle oracle(0.55 * c.fv_round, 0.45 * c.fv_round, 2, 10);
    double predicted = 0.0, observed = 0.0;
    for (const auto& [depth, won] : races) {
        predicted += oracle.success(depth + 1);
        observed += won ? 1.0 : 0.0;
    }
    predicted /= static_cast<double>(races.size());
    observed /= static_cast<double>(races.size());
    CAPTURE(races.size());
    CAPTURE(predicted);
    CAPTURE(observed);
    CHECK(std::abs(observed - predicted) < 0.05);
    CHECK(std::abs(observed - predicted) < 4.0 * std::sqrt(predicted * (1 - predicted) / races.size()));
    CHECK(predicted > 0.02);
}

TEST_CASE("private attack never beats the slow confirmation depth")
{
    auto c = attack_config(20, 0.3, 4000);
    c.beta = 0.3;
    c.fv_round = 0.1;
    c.r_max = 4000;
    c.lambda_in = 0.0;
    const auto res = run_named("private_nakamoto", c);
    CHECK(res.strategy_stats.attacks_started > 10);
    CHECK(res.strategy_stats.attacks_succeeded == 0);
    CHECK(res.safety_violations() == 0);
}

// The private proposer lead seen by each honest proposer block is geometric
// with ratio β̃/(1−β̃): the lead moves up at rate β̃ and down at rate 1−β̃.
TEST_CASE("private proposer lead is geometric in beta/(1-beta)")
{
    auto c = attack_config(1, 0.3, 200000);
    c.beta = 0.3;
    c.fp_round = 0.05;
    c.fv_round = 0.01;
    c.lambda_in = 0.0;
    c.track_confirmation = false;
    const auto res = run_named("private_nakamoto", c, {{"k", 1000000}});
    const auto& lead = res.strategy_stats.lead;
    REQUIRE(lead.size() == c.r_max);

    std::vector<double> counts(6, 0.0);
    double n = 0;
    for (Round r = 0; r < c.r_max; ++r) {
        if (sample_round_at(c, r).h_prop == 0)
            continue;
        counts[std::min<std::uint32_t>(lead[r], 5)] += 1;
        n += 1;
    }
    REQUIRE(n > 5000);
    const double rho = 0.3 / 0.7;
    double chi2 = 0.0;
    for (std::size_t k = 0; k < 6; ++k) {
        const double p = k < 5 ? (1 - rho) * std::pow(rho, k) : std::pow(rho, 5);
        chi2 += (counts[k] - n * p) * (counts[k] - n * p) / (n * p);
    }
    CAPTURE(chi2);
    CHECK(chi2 < 15.09); // 1% critical value, 5 degrees of freedom
}

TEST_CASE("every strategy stays legal over a long fuzz run")
{
    for (const std::string name : {"passive", "censorship", "balancing", "private_nakamoto"}) {
        for (std::uint64_t seed : {3u, 4u}) {
            CAPTURE(name);
            CAPTURE(seed);
            auto c = attack_config(4, 0.3, 10000);
            c.beta = 0.3;
            c.fv_round = 0.2;
            c.fp_round = 0.2;
            c.seed = seed;
            c.conflict_fraction = 0.1;
            c.track_confirmation = false;
            StrategyParams p;
            if (name == "private_nakamoto")
                p = {{"k", 3}};
            CHECK_NOTHROW((void)run_named(name, c, p));
        }
    }
}
