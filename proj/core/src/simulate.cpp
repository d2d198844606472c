#include "ope/simulate.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "ope/parallel.hpp"

namespace ope {

namespace {

std::int32_t sample_initial_state(const TabularMdp& mdp, RngEngine& rng) {
    const auto support = mdp.initial_support();
    const double u = uniform_double(rng);
    double cum = 0.0;
    std::int32_t last = support.back().state;
    for (const auto& entry : support) {
        cum += entry.prob;
        last = entry.state;
        if (u < cum) return entry.state;
    }
    return last;
}

std::int32_t sample_action(const Policy& policy, std::int32_t s, RngEngine& rng) {
    const double u = uniform_double(rng);
    double cum = 0.0;
    std::int32_t last = 0;
    for (std::int32_t a = 0; a < policy.n_actions(); ++a) {
        const double p = policy.prob(s, a);
        if (p <= 0.0) continue;
        cum += p;
        last = a;
        if (u < cum) return a;
    }
    return last;
}

std::int32_t sample_successor(const TabularMdp& mdp, std::int32_t s, std::int32_t a,
                              RngEngine& rng) {
    const auto row = mdp.transition_row(s, a);
    const double u = uniform_double(rng);
    double cum = 0.0;
    std::int32_t last = row.back().state;
    for (const auto& t : row) {
        cum += t.prob;
        last = t.state;
        if (u < cum) return t.state;
    }
    return last;
}

}  // namespace

Episode sample_episode(const TabularMdp& mdp, const Policy& policy, std::int32_t truncation,
                       RngEngine& rng) {
    if (truncation < 1) throw std::invalid_argument("sample_episode: truncation must be >= 1");
    if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions())
        throw ModelError("sample_episode: policy shape does not match model");

    Episode episode;
    episode.truncation = truncation;
    // episodes are usually much shorter than deep truncation levels; let the
    // vectors grow past this
    const auto reserve = static_cast<std::size_t>(std::min<std::int32_t>(truncation, 64));
    episode.states.reserve(reserve + 1);
    episode.actions.reserve(reserve);
    episode.rewards.reserve(reserve);

    const double halfwidth = mdp.reward_noise_halfwidth();
    std::int32_t s = sample_initial_state(mdp, rng);
    episode.states.push_back(s);
    for (std::int32_t t = 0; t < truncation; ++t) {
        const std::int32_t a = sample_action(policy, s, rng);
        double r = mdp.mean_reward(s, a);
        if (halfwidth > 0.0) r += uniform_double(rng, -halfwidth, halfwidth);
        const std::int32_t s_next = sample_successor(mdp, s, a, rng);
        episode.actions.push_back(a);
        episode.rewards.push_back(r);
        episode.states.push_back(s_next);
        if (s_next == mdp.absorbing_state()) {
            episode.absorbed = true;
            break;
        }
        s = s_next;
    }
    return episode;
}

EpisodeBatch sample_batch(const TabularMdp& mdp, const Policy& policy, std::int64_t m,
                          std::int32_t truncation, std::uint64_t seed, int threads) {
    if (m < 0) throw std::invalid_argument("sample_batch: m must be nonnegative");
    EpisodeBatch batch;
    batch.n_states = mdp.n_states();
    batch.n_actions = mdp.n_actions();
    batch.truncation = truncation;
    batch.seed = seed;
    batch.episodes.resize(static_cast<std::size_t>(m));

    constexpr std::int64_t kChunk = 256;
    const std::int64_t chunks = (m + kChunk - 1) / kChunk;
    parallel_chunks(chunks, threads, [&](std::int64_t c) {
        const std::int64_t begin = c * kChunk;
        const std::int64_t end = std::min(m, begin + kChunk);
        for (std::int64_t i = begin; i < end; ++i) {
            RngEngine rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
            batch.episodes[static_cast<std::size_t>(i)] =
                sample_episode(mdp, policy, truncation, rng);
        }
    });
    return batch;
}

BatchSummary simulate_summary(const TabularMdp& mdp, const Policy& policy, std::int64_t m,
                              std::int32_t truncation, std::uint64_t seed, int threads) {
    BatchSummary summary;
    summary.episodes = m;
    if (m == 0) return summary;

    constexpr std::int64_t kChunk = 1024;
    const std::int64_t chunks = (m + kChunk - 1) / kChunk;
    struct ChunkTotals {
        double reward = 0.0;
        double length = 0.0;
        double absorbed = 0.0;
    };
    std::vector<ChunkTotals> totals(static_cast<std::size_t>(chunks));
    parallel_chunks(chunks, threads, [&](std::int64_t c) {
        const std::int64_t begin = c * kChunk;
        const std::int64_t end = std::min(m, begin + kChunk);
        ChunkTotals local;
        for (std::int64_t i = begin; i < end; ++i) {
            RngEngine rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
            const Episode episode = sample_episode(mdp, policy, truncation, rng);
            local.reward += episode.total_reward();
            local.length += static_cast<double>(episode.length());
            local.absorbed += episode.absorbed ? 1.0 : 0.0;
        }
        totals[static_cast<std::size_t>(c)] = local;
    });
    double reward = 0.0, length = 0.0, absorbed = 0.0;
    for (const auto& t : totals) {
        reward += t.reward;
        length += t.length;
        absorbed += t.absorbed;
    }
    summary.mean_total_reward = reward / static_cast<double>(m);
    summary.mean_length = length / static_cast<double>(m);
    summary.absorbed_fraction = absorbed / static_cast<double>(m);
    return summary;
}

}  // namespace ope
