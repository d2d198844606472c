#include "ope/taxi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "ope/rng.hpp"

namespace ope::taxi {

namespace {

std::int32_t corner_index(std::int32_t cell) {
    for (std::size_t k = 0; k < kCorners.size(); ++k)
        if (kCorners[k] == cell) return static_cast<std::int32_t>(k);
    return -1;
}

}  // namespace

std::int32_t move(std::int32_t pos, std::int32_t action) {
    const std::int32_t row = pos / kGridSide;
    const std::int32_t col = pos % kGridSide;
    switch (action) {
        case 0: return row > 0 ? pos - kGridSide : pos;              // north
        case 1: return row < kGridSide - 1 ? pos + kGridSide : pos;  // south
        case 2: return col < kGridSide - 1 ? pos + 1 : pos;          // east
        case 3: return col > 0 ? pos - 1 : pos;                      // west
        default: throw std::invalid_argument("taxi: action out of range");
    }
}

TabularMdp build(double appear_prob) {
    if (!(appear_prob >= 0.0 && appear_prob <= 1.0))
        throw std::invalid_argument("taxi: appear_prob must lie in [0, 1]");
    const double p = appear_prob;

    std::vector<std::vector<TabularMdp::Transition>> rows(
        static_cast<std::size_t>(kStateCount) * kActionCount);
    Eigen::MatrixXd reward = Eigen::MatrixXd::Zero(kStateCount, kActionCount);

    for (std::int32_t index = 0; index < kStateCount; ++index) {
        const TaxiState state = decode(index);
        for (std::int32_t action = 0; action < kActionCount; ++action) {
            auto& row = rows[static_cast<std::size_t>(pair_index(index, action, kActionCount))];
            const std::int32_t next_pos = move(state.taxi_pos, action);

            if (state.cargo > 0 && next_pos == destination_cell(state)) {
                // drop-off: the step collects 0 and the episode ends
                reward(index, action) = 0.0;
                row.push_back({kStateCount, 1.0});
                continue;
            }
            reward(index, action) = state.cargo > 0 ? -1.0 : -2.0;

            const std::int32_t pickup_corner =
                state.cargo == 0 ? corner_index(next_pos) : -1;
            const bool pickup =
                pickup_corner >= 0 && ((state.passenger_bits >> pickup_corner) & 1u) != 0u;

            std::map<std::int32_t, double> successors;
            for (std::uint32_t flips = 0; flips < 16; ++flips) {
                if (pickup && ((flips >> pickup_corner) & 1u) != 0u)
                    continue;  // the pickup corner is exempt from the flip this step
                double prob = 1.0;
                for (std::int32_t k = 0; k < 4; ++k) {
                    if (pickup && k == pickup_corner) continue;
                    prob *= ((flips >> k) & 1u) != 0u ? p : 1.0 - p;
                }
                if (prob == 0.0) continue;
                std::uint8_t bits = static_cast<std::uint8_t>(state.passenger_bits ^ flips);
                if (pickup) {
                    bits = static_cast<std::uint8_t>(bits & ~(1u << pickup_corner));
                    for (std::int32_t dest = 0; dest < 4; ++dest) {
                        const TaxiState next{next_pos, bits, dest + 1};
                        successors[encode(next)] += prob * 0.25;
                    }
                } else {
                    const TaxiState next{next_pos, bits, state.cargo};
                    successors[encode(next)] += prob;
                }
            }
            row.reserve(successors.size());
            for (const auto& [target, prob] : successors) row.push_back({target, prob});
        }
    }

    Eigen::VectorXd initial = Eigen::VectorXd::Zero(kStateCount);
    for (std::int32_t corner : kCorners) {
        for (std::uint32_t bits = 0; bits < 16; ++bits) {
            double prob = 0.25;
            for (std::int32_t k = 0; k < 4; ++k) prob *= ((bits >> k) & 1u) != 0u ? p : 1.0 - p;
            if (prob == 0.0) continue;
            const TaxiState s{corner, static_cast<std::uint8_t>(bits), 0};
            initial(encode(s)) += prob;
        }
    }

    return TabularMdp(kStateCount, kActionCount, std::move(rows), std::move(reward),
                      std::move(initial), 0.0);
}

std::vector<std::uint8_t> action_mask() {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(kStateCount) * kActionCount, 0);
    for (std::int32_t index = 0; index < kStateCount; ++index) {
        const TaxiState state = decode(index);
        for (std::int32_t action = 0; action < kActionCount; ++action)
            mask[static_cast<std::size_t>(pair_index(index, action, kActionCount))] =
                move(state.taxi_pos, action) != state.taxi_pos ? 1 : 0;
    }
    return mask;
}

Policy q_learning_softmax(const TabularMdp& env, const QLearningOptions& options,
                          std::uint64_t seed, const std::vector<std::uint8_t>* action_mask) {
    if (options.iterations < 1)
        throw std::invalid_argument("q_learning_softmax: iterations must be >= 1");
    const std::int32_t n = env.n_states();
    const std::int32_t h = env.n_actions();
    if (action_mask != nullptr &&
        action_mask->size() != static_cast<std::size_t>(env.pair_count()))
        throw ModelError("q_learning_softmax: action mask length mismatch");

    auto allowed = [&](std::int32_t s, std::int32_t a) {
        return action_mask == nullptr ||
               (*action_mask)[static_cast<std::size_t>(pair_index(s, a, h))] != 0;
    };

    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, h);
    RngEngine rng(seed);

    auto draw_initial = [&]() {
        const auto support = env.initial_support();
        const double u = uniform_double(rng);
        double cum = 0.0;
        std::int32_t last = support.back().state;
        for (const auto& entry : support) {
            cum += entry.prob;
            last = entry.state;
            if (u < cum) return entry.state;
        }
        return last;
    };

    std::int32_t s = draw_initial();
    for (std::int64_t it = 0; it < options.iterations; ++it) {
        const std::int32_t a = static_cast<std::int32_t>(rng() % static_cast<std::uint64_t>(h));
        const double r = env.mean_reward(s, a);
        const auto row = env.transition_row(s, a);
        const double u = uniform_double(rng);
        double cum = 0.0;
        std::int32_t s_next = row.back().state;
        for (const auto& t : row) {
            cum += t.prob;
            s_next = t.state;
            if (u < cum) break;
        }
        double target = r;
        if (s_next < n) target += options.discount * q.row(s_next).maxCoeff();
        q(s, a) += options.step_size * (target - q(s, a));
        s = s_next < n ? s_next : draw_initial();
    }

    Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(n, h);
    for (std::int32_t state = 0; state < n; ++state) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::int32_t a = 0; a < h; ++a)
            if (allowed(state, a)) best = std::max(best, q(state, a));
        if (!std::isfinite(best))
            throw ModelError("q_learning_softmax: every action masked at state " +
                             std::to_string(state));
        double norm = 0.0;
        for (std::int32_t a = 0; a < h; ++a) {
            if (!allowed(state, a)) continue;
            const double e = std::exp((q(state, a) - best) / options.temperature);
            probs(state, a) = e;
            norm += e;
        }
        probs.row(state) /= norm;
    }
    return Policy(std::move(probs));
}

Policy mix_policies(const Policy& pi_e, const Policy& pi_plus, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("mix_policies: alpha must lie in [0, 1]");
    if (pi_e.n_states() != pi_plus.n_states() || pi_e.n_actions() != pi_plus.n_actions())
        throw ModelError("mix_policies: policy shapes differ");
    return Policy(alpha * pi_e.probs() + (1.0 - alpha) * pi_plus.probs());
}

}  // namespace ope::taxi
