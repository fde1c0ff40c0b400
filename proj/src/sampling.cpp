#include "prism/sampling.hpp"

#include "prism/errors.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace prism {

Rng make_stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index)
{
    const std::uint64_t a = mix64(seed ^ mix64(purpose * 0x100000001b3ULL));
    const std::uint64_t b = mix64(a ^ mix64(index + 0x632be59bd9b4e019ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32)};
    return Rng(seq);
}

std::uint32_t draw_poisson(double mean, Rng& rng)
{
    if (!(mean > 0.0))
        return 0;
    std::poisson_distribution<std::uint32_t> dist(mean);
    return dist(rng);
}

std::uint64_t RoundSample::total_adversary() const
{
    return std::accumulate(z_voter.begin(), z_voter.end(), std::uint64_t{0}) + z_prop + z_tx;
}

std::uint64_t RoundSample::total_honest() const
{
    return std::accumulate(h_voter.begin(), h_voter.end(), std::uint64_t{0}) + h_prop + h_tx;
}

RoundSample sample_round(const SimConfig& config, Rng& rng)
{
    const double honest = 1.0 - config.beta;
    const double adversary = config.beta_active;

    RoundSample s;
    s.h_voter.resize(config.m);
    s.z_voter.resize(config.m);
    for (std::uint32_t i = 0; i < config.m; ++i) {
        s.h_voter[i] = draw_poisson(honest * config.fv_round, rng);
        s.z_voter[i] = draw_poisson(adversary * config.fv_round, rng);
    }
    s.h_prop = draw_poisson(honest * config.fp_round, rng);
    s.z_prop = draw_poisson(adversary * config.fp_round, rng);
    s.h_tx = draw_poisson(honest * config.ft_round, rng);
    s.z_tx = draw_poisson(adversary * config.ft_round, rng);
    return s;
}

RoundSample sample_round_at(const SimConfig& config, Round round)
{
    Rng rng = make_stream(config.seed, stream::mining, round);
    return sample_round(config, rng);
}

BlockType sortition(double hash_point, const SimConfig& config)
{
    const double voter_span = static_cast<double>(config.m) * config.fv_round;
    const double tx_end = voter_span + config.ft_round;
    const double total = tx_end + config.fp_round;
    if (!(hash_point >= 0.0 && hash_point <= total) || !(total > 0.0))
        throw ContractViolation("sortition: hash point " + std::to_string(hash_point) + " outside [0, " +
                                std::to_string(total) + "]");

    if (voter_span > 0.0 && hash_point <= voter_span) {
        auto tree = static_cast<std::uint32_t>(std::floor(hash_point / config.fv_round));
        if (tree >= config.m)
            tree = config.m - 1;
        return {BlockKind::Voter, tree};
    }
    if (hash_point <= tx_end && config.ft_round > 0.0)
        return {BlockKind::Transaction, 0};
    return {BlockKind::Proposer, 0};
}

} // namespace prism
