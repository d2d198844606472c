#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ope {

/// Raised when a linear system backing an exact solve is singular, which for
/// occupancy systems means the policy does not absorb from every state.
class SingularSystemError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a model, policy or dataset violates a structural invariant.
class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Flat pair index for (state, action), action fastest.
inline std::int64_t pair_index(std::int32_t state, std::int32_t action, std::int32_t n_actions) {
    return static_cast<std::int64_t>(state) * n_actions + action;
}

/// Row-stochastic state -> action-distribution table.
class Policy {
public:
    explicit Policy(Eigen::MatrixXd probs);

    std::int32_t n_states() const { return static_cast<std::int32_t>(probs_.rows()); }
    std::int32_t n_actions() const { return static_cast<std::int32_t>(probs_.cols()); }
    double prob(std::int32_t s, std::int32_t a) const { return probs_(s, a); }
    const Eigen::MatrixXd& probs() const { return probs_; }

private:
    Eigen::MatrixXd probs_;
};

/**
 * Finite MDP with a single implicit absorbing state.
 *
 * Non-absorbing states are indexed 0..n_states-1; index n_states denotes the
 * absorbing state, which is never stored explicitly: it yields zero reward
 * and never transitions back. Transition rows are kept in compressed form
 * (only positive-probability successors), sorted by successor index; dense
 * row views are materialized on demand for file output.
 *
 * Instances are immutable after construction and safe to share across
 * threads.
 */
class TabularMdp {
public:
    struct Transition {
        std::int32_t state;  // in [0, n_states], n_states = absorbing
        double prob;
    };

    /// Builds from compressed rows indexed by pair_index(s, a). Validates
    /// nonnegativity, row sums within 1e-12, and the initial distribution.
    /// A uniform-policy spectral-radius diagnostic (power iteration, 1000
    /// iterations) is run at construction; failure is a warning recorded on
    /// the object, not an error, since absorption under *all* policies is
    /// not checkable from one policy.
    TabularMdp(std::int32_t n_states, std::int32_t n_actions,
               std::vector<std::vector<Transition>> rows, Eigen::MatrixXd mean_reward,
               Eigen::VectorXd initial_dist, double reward_noise_halfwidth);

    /// Builds from a dense row-major transition table of shape
    /// (n_states*n_actions) x (n_states+1).
    static TabularMdp from_dense(std::int32_t n_states, std::int32_t n_actions,
                                 const std::vector<double>& transition, Eigen::MatrixXd mean_reward,
                                 Eigen::VectorXd initial_dist, double reward_noise_halfwidth);

    std::int32_t n_states() const { return n_states_; }
    std::int32_t n_actions() const { return n_actions_; }
    std::int32_t absorbing_state() const { return n_states_; }
    std::int64_t pair_count() const { return static_cast<std::int64_t>(n_states_) * n_actions_; }

    std::span<const Transition> transition_row(std::int32_t s, std::int32_t a) const {
        return rows_[static_cast<std::size_t>(pair_index(s, a, n_actions_))];
    }
    /// Probability of s_next given (s, a); s_next may be the absorbing index.
    double transition_prob(std::int32_t s, std::int32_t a, std::int32_t s_next) const;
    /// Dense transition row of length n_states+1 for (s, a).
    std::vector<double> dense_transition_row(std::int32_t s, std::int32_t a) const;

    double mean_reward(std::int32_t s, std::int32_t a) const { return mean_reward_(s, a); }
    const Eigen::MatrixXd& mean_reward_table() const { return mean_reward_; }
    const Eigen::VectorXd& initial_dist() const { return initial_dist_; }
    double reward_noise_halfwidth() const { return reward_noise_halfwidth_; }

    /// Support of the initial distribution, as (state, probability) pairs.
    std::span<const Transition> initial_support() const { return initial_support_; }

    /// Power-iteration estimate of the spectral radius of the uniform-policy
    /// transition matrix restricted to non-absorbing states.
    double uniform_policy_spectral_radius() const { return uniform_spectral_radius_; }
    /// Construction-time diagnostics (absorption heuristic failures etc.).
    const std::vector<std::string>& warnings() const { return warnings_; }

private:
    std::int32_t n_states_;
    std::int32_t n_actions_;
    std::vector<std::vector<Transition>> rows_;
    Eigen::MatrixXd mean_reward_;
    Eigen::VectorXd initial_dist_;
    std::vector<Transition> initial_support_;
    double reward_noise_halfwidth_;
    double uniform_spectral_radius_ = 0.0;
    std::vector<std::string> warnings_;
};

/// One truncated trajectory. states has one more entry than actions/rewards;
/// its last element may be the absorbing index.
struct Episode {
    std::vector<std::int32_t> states;
    std::vector<std::int32_t> actions;
    std::vector<double> rewards;
    bool absorbed = false;
    std::int32_t truncation = 0;

    std::int64_t length() const { return static_cast<std::int64_t>(actions.size()); }
    double total_reward() const {
        double sum = 0.0;
        for (double r : rewards) sum += r;
        return sum;
    }
};

/// Batch of episodes sharing one (n_states, n_actions, truncation) signature.
struct EpisodeBatch {
    std::int32_t n_states = 0;
    std::int32_t n_actions = 0;
    std::int32_t truncation = 0;
    std::uint64_t seed = 0;
    std::vector<Episode> episodes;

    std::int64_t size() const { return static_cast<std::int64_t>(episodes.size()); }
};

}  // namespace ope
