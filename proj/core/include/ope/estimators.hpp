#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ope/mdp.hpp"

namespace ope {

/// Point estimate of a target policy's expected return plus the context it
/// was produced in.
struct EstimateReport {
    std::string method;
    double point_estimate = 0.0;
    std::int64_t m = 0;
    std::int32_t truncation = 0;
    std::optional<double> lambda;
    std::optional<double> gamma;
    std::uint64_t seed = 0;
    bool solver_converged = true;
};

/**
 * Aggregated empirical quantities of an episode batch against a target
 * policy. Pair-indexed tables use pair_index(s, a). visit_counts and a_hat
 * are averaged over episodes; transition_counts and reward_sums are raw
 * totals. a_hat accumulates, per observed step (s_t, a_t) -> s_{t+1}, the
 * target-policy-smoothed indicator of the successor pair minus the indicator
 * of the current pair, with the successor term dropped on absorption.
 * b_vec(s, a) = mu_hat(s) * pi_e(a|s).
 */
struct SufficientStats {
    std::int32_t n_states = 0;
    std::int32_t n_actions = 0;
    std::int32_t truncation = 0;
    std::int64_t m = 0;
    std::uint64_t seed = 0;
    Eigen::VectorXd visit_counts;                   // per pair, averaged
    Eigen::SparseMatrix<double> transition_counts;  // pair x (n_states+1), raw
    Eigen::VectorXd reward_sums;                    // per pair, raw
    Eigen::VectorXd mu_hat;                         // per state
    Eigen::SparseMatrix<double> a_hat;              // pair x pair, averaged
    Eigen::VectorXd b_vec;                          // per pair
};

/// Folds a batch into sufficient statistics. Parallel over fixed episode
/// chunks with merges applied in chunk order, so the result is independent
/// of the worker count. Throws ModelError on an empty batch or shape
/// mismatch.
SufficientStats accumulate_stats(const EpisodeBatch& batch, const Policy& pi_e, int threads = 1);

/// Estimated occupancy-ratio table with solver diagnostics. u parameterizes
/// the estimated target occupancy; w = u / visit_counts on the empirical
/// support and 0 elsewhere.
struct WeightEstimate {
    Eigen::VectorXd w;
    Eigen::VectorXd u;
    double residual_norm = 0.0;
    double lambda = 0.0;
    std::vector<std::uint8_t> support_mask;
    bool converged = true;
    int iterations = 0;
    bool rank_deficient = false;
    Eigen::Index rank = -1;
};

/**
 * Fits the occupancy-ratio weights from sufficient statistics. The system
 * matrix is a_hat with each supported row divided by its visit count; with
 * nonneg the solve is min_{u>=0} |(G + lambda I)^T u + b|^2 by projected
 * gradient (tolerance 1e-9, at most 1e5 iterations; non-convergence is
 * flagged, not thrown), otherwise the minimum-norm least-squares solution
 * of G^T u = -b. residual_norm reports |(G + lambda I)^T u + b|_2.
 */
WeightEstimate mwla_solve(const SufficientStats& stats, double lambda, bool nonneg);

/// Plug-in return estimate: sum over supported pairs of w * reward_sums / m.
EstimateReport mwla_return(const SufficientStats& stats, const WeightEstimate& weights);

/// Empirical error functional of (w, q) under the batch statistics, with the
/// discriminator treated as 0 at the absorbing state: transitions into it
/// contribute only the -w*q term.
double empirical_error(const SufficientStats& stats, const Policy& pi_e, const Eigen::VectorXd& w,
                       const Eigen::VectorXd& q);

/// State-level statistics for the known-behavior-policy variant: per-step
/// action-probability ratios fold the policies in, leaving an n x n system.
struct MswlaStats {
    std::int32_t n_states = 0;
    std::int32_t n_actions = 0;
    std::int32_t truncation = 0;
    std::int64_t m = 0;
    Eigen::VectorXd state_visits;       // per state, averaged
    Eigen::SparseMatrix<double> a_hat;  // state x state, averaged
    Eigen::VectorXd mu_hat;             // per state; also the rhs vector
    Eigen::VectorXd ratio_reward_sums;  // per state, raw: sum of ratio * reward
};

/// Throws ModelError when the behavior policy assigns zero probability to an
/// observed action.
MswlaStats mswla_accumulate(const EpisodeBatch& batch, const Policy& pi_e, const Policy& pi_b);

/// State-weight fit on MswlaStats; same solver contract as mwla_solve.
WeightEstimate mswla_weights(const MswlaStats& stats, double lambda, bool nonneg);

/// Full state-weighted estimate: fits w(s) and averages
/// w(s_t) * ratio_t * r_t over all observed steps.
EstimateReport mswla_solve(const EpisodeBatch& batch, const Policy& pi_e, const Policy& pi_b,
                           double lambda, bool nonneg = true);

/// Mean of per-episode total truncated rewards, tagged NAIVE.
EstimateReport naive_average(const EpisodeBatch& batch);

/// Same computation on target-policy data, tagged ON_POLICY.
EstimateReport on_policy_estimate(const EpisodeBatch& batch);

/// Whole-trajectory importance sampling: per-episode products of
/// action-probability ratios weight the episode's total reward.
EstimateReport trajectory_is(const EpisodeBatch& batch, const Policy& pi_e, const Policy& pi_b);

/// Tuple-level statistics for the discounted-weight baseline: the batch is
/// broken into (s, a, r, s') tuples; tuple_freq is the empirical tuple
/// distribution and b_vec carries the (1-gamma) initial-distribution mass.
struct MwlGammaStats {
    std::int32_t n_states = 0;
    std::int32_t n_actions = 0;
    std::int64_t m = 0;
    std::int64_t tuple_count = 0;
    double gamma = 0.0;
    Eigen::VectorXd tuple_freq;         // per pair, averaged over tuples
    Eigen::SparseMatrix<double> a_hat;  // pair x pair, averaged over tuples
    Eigen::VectorXd b_vec;              // per pair
    Eigen::VectorXd reward_sums;        // per pair, raw over tuples
};

MwlGammaStats mwl_gamma_accumulate(const EpisodeBatch& batch, const Policy& pi_e, double gamma);

/// Weight fit on MwlGammaStats; same solver contract as mwla_solve.
WeightEstimate mwl_gamma_weights(const MwlGammaStats& stats, double lambda, bool nonneg);

/// Discounted-weight baseline estimate: fits tuple weights at the given
/// discount and de-normalizes by 1/(1-gamma).
EstimateReport mwl_gamma_solve(const EpisodeBatch& batch, const Policy& pi_e, double gamma,
                               double lambda, bool nonneg = true);

}  // namespace ope
