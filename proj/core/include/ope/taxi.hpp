#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ope/mdp.hpp"

namespace ope::taxi {

/// 5x5 grid; cells are indexed row-major, corners carry the pickup/drop-off
/// markers in the order R, G, B, Y.
inline constexpr std::int32_t kGridSide = 5;
inline constexpr std::int32_t kCells = kGridSide * kGridSide;
inline constexpr std::array<std::int32_t, 4> kCorners = {0, 4, 20, 24};
inline constexpr std::int32_t kStateCount = kCells * 16 * 5;  // 2000
inline constexpr std::int32_t kActionCount = 4;               // N, S, E, W

/// cargo: 0 = empty, 1..4 = passenger on board with destination corner k-1.
struct TaxiState {
    std::int32_t taxi_pos = 0;
    std::uint8_t passenger_bits = 0;  // bit k set = passenger waiting at corner k
    std::int32_t cargo = 0;
};

inline std::int32_t encode(const TaxiState& s) {
    return (s.taxi_pos * 16 + s.passenger_bits) * 5 + s.cargo;
}

inline TaxiState decode(std::int32_t index) {
    TaxiState s;
    s.cargo = index % 5;
    index /= 5;
    s.passenger_bits = static_cast<std::uint8_t>(index % 16);
    s.taxi_pos = index / 16;
    return s;
}

/// Destination cell for a loaded taxi, or -1 when empty.
inline std::int32_t destination_cell(const TaxiState& s) {
    return s.cargo > 0 ? kCorners[static_cast<std::size_t>(s.cargo - 1)] : -1;
}

/// Cell reached from `pos` under action `a`; moves across the boundary leave
/// the position unchanged.
std::int32_t move(std::int32_t pos, std::int32_t action);

/**
 * Builds the episodic taxi environment. Movement is deterministic; each
 * corner's waiting flag flips independently with probability `appear_prob`
 * per step; an empty taxi entering a corner with a waiting passenger picks
 * up automatically (that corner is exempt from the flip that step) and the
 * destination is drawn uniformly over the four corners; a loaded taxi
 * entering its destination drops off, collects 0 for that step and absorbs.
 * Rewards are otherwise -1 per step loaded and -2 per step empty. Episodes
 * start at a uniformly random corner, empty, with waiting flags i.i.d.
 * Bernoulli(appear_prob).
 */
TabularMdp build(double appear_prob);

/// Legality table over (state, action): an action is legal iff it does not
/// cross the grid boundary. Depends only on the taxi cell; every cell keeps
/// at least two legal actions.
std::vector<std::uint8_t> action_mask();

struct QLearningOptions {
    std::int64_t iterations = 400000;
    double step_size = 0.1;
    double temperature = 1.0;
    double discount = 0.99;
};

/**
 * Tabular Q-learning over transitions sampled from the model under
 * uniform-random exploration with episode resets, followed by a soft-max
 * policy pi(a|s) proportional to exp(Q(s,a)/temperature). When `action_mask`
 * is given, illegal actions get probability 0 and rows renormalize; a state
 * with every action masked is an error.
 */
Policy q_learning_softmax(const TabularMdp& env, const QLearningOptions& options,
                          std::uint64_t seed,
                          const std::vector<std::uint8_t>* action_mask = nullptr);

/// Elementwise convex combination alpha * pi_e + (1 - alpha) * pi_plus.
Policy mix_policies(const Policy& pi_e, const Policy& pi_plus, double alpha);

}  // namespace ope::taxi
