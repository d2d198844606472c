#pragma once

#include <cstdint>

#include "ope/mdp.hpp"
#include "ope/rng.hpp"

namespace ope {

/**
 * Samples one truncated episode: s0 from the initial distribution, actions
 * from the policy, rewards uniform in [R-h, R+h] around the mean reward, and
 * successors from the kernel. Stops at the first of absorption or
 * `truncation` steps. Draw order per step is action, reward noise (only when
 * the halfwidth is positive), successor — fixed so a given engine state
 * yields a bit-identical episode.
 */
Episode sample_episode(const TabularMdp& mdp, const Policy& policy, std::int32_t truncation,
                       RngEngine& rng);

/// Samples m episodes in parallel. Episode i uses an engine seeded with
/// mix_seed(seed, i), so the batch is independent of the worker count.
EpisodeBatch sample_batch(const TabularMdp& mdp, const Policy& policy, std::int64_t m,
                          std::int32_t truncation, std::uint64_t seed, int threads = 0);

struct BatchSummary {
    double mean_total_reward = 0.0;
    double mean_length = 0.0;
    double absorbed_fraction = 0.0;
    std::int64_t episodes = 0;
};

/// Streaming variant of sample_batch for large Monte-Carlo runs: episodes
/// are reduced to per-chunk totals (fixed chunking by episode index, merged
/// in chunk order) instead of being stored, so the summary is deterministic
/// for any worker count.
BatchSummary simulate_summary(const TabularMdp& mdp, const Policy& policy, std::int64_t m,
                              std::int32_t truncation, std::uint64_t seed, int threads = 0);

}  // namespace ope
