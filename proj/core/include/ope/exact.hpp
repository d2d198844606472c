#pragma once

#include <Eigen/Dense>
#include <optional>

#include "ope/mdp.hpp"

namespace ope {

/**
 * Closed-form quantities for one (model, policy) pair, obtained from sparse
 * LU solves of the occupancy fixed point and the state-action value
 * recursion. Occupancy entries are expected visit counts before absorption,
 * indexed by pair_index.
 */
struct ExactSolution {
    Eigen::VectorXd occupancy;        // per (s, a)
    Eigen::VectorXd state_occupancy;  // per s, sum of occupancy over actions
    double expected_return = 0.0;
    Eigen::VectorXd q_function;  // per (s, a)
};

/// Expected visit counts d(s, a): solves (I - M^T) d = mu (x) pi where M is
/// the one-step state-action transition matrix under `policy`. Residual is
/// verified to 1e-10 * (1 + |b|_inf); entries in [-1e-10, 0) are clamped to
/// zero, anything more negative raises ModelError. A singular system raises
/// SingularSystemError (the policy fails to absorb from some state).
Eigen::VectorXd exact_occupancy(const TabularMdp& mdp, const Policy& policy);

/// Expected undiscounted return: sum of mean rewards against the occupancy.
double exact_return(const TabularMdp& mdp, const Policy& policy);

/// State-action values: solves Q = r + M Q with r the model's mean reward,
/// or `reward_override` (indexed by pair) when provided. With a unit
/// indicator override this yields the expected visit counts to that pair
/// from each start pair.
Eigen::VectorXd exact_q(const TabularMdp& mdp, const Policy& policy,
                        const Eigen::VectorXd* reward_override = nullptr);

/// Occupancy, state occupancy, return and Q in one pass (two solves).
ExactSolution exact_solve(const TabularMdp& mdp, const Policy& policy);

/// Elementwise occupancy ratio numer/denom with 0 where the denominator
/// vanishes. `finite` is cleared when the numerator is positive somewhere
/// the denominator is not, i.e. the ratio is unbounded.
Eigen::VectorXd occupancy_ratio(const Eigen::VectorXd& numer, const Eigen::VectorXd& denom,
                                bool* finite = nullptr);

/**
 * Bilinear error functional of the weight/discriminator pair (w, q),
 * evaluated with the exact behavior occupancy:
 *
 *   L(w, q) = sum_{s,a,s'} w(s,a) qbar(s') d_b(s,a) P(s'|s,a)
 *           - sum_{s,a} w(s,a) q(s,a) d_b(s,a) + sum_s mu(s) qbar(s),
 *
 * with qbar(s) = sum_a pi_e(a|s) q(s,a) and q treated as 0 at the absorbing
 * state (the s' sum runs over non-absorbing states only). Vanishes for every
 * q exactly at the true occupancy ratio.
 */
double population_error(const TabularMdp& mdp, const Policy& pi_b, const Policy& pi_e,
                        const Eigen::VectorXd& w, const Eigen::VectorXd& q);

/// Moment generating function E[e^{lambda T}] of the absorption time under
/// `policy`, from the linear system g(s) = e^lambda (P(s -> absorb) +
/// sum_s' P(s, s') g(s')). Returns nullopt (divergence) when
/// e^lambda * rho(P_pi) >= 1 by the power-iteration estimate of rho.
std::optional<double> absorption_time_mgf(const TabularMdp& mdp, const Policy& policy,
                                          double lambda);

/// Embeds a discount factor into the kernel: the input model must put no
/// mass on the absorbing state; the result moves with probability gamma *
/// P(s'|s,a) and absorbs with probability 1 - gamma, with rewards and
/// initial distribution unchanged. The undiscounted return of the result
/// equals the gamma-discounted return of the input.
TabularMdp absorbing_from_discounted(const TabularMdp& mdp, double gamma);

}  // namespace ope
