#include "ope/exact.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <cmath>
#include <vector>

namespace ope {

namespace {

constexpr double kResidualTolerance = 1e-10;
constexpr double kOccupancyClamp = -1e-10;
constexpr int kPowerIterations = 1000;

/// One-step state-action transition matrix under a policy:
/// M[(s,a), (s',a')] = P(s'|s,a) * pi(a'|s'), absorbing successor dropped.
Eigen::SparseMatrix<double> pair_transition_matrix(const TabularMdp& mdp, const Policy& policy) {
    const std::int32_t n = mdp.n_states();
    const std::int32_t h = mdp.n_actions();
    const std::int64_t dim = mdp.pair_count();
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::int32_t s = 0; s < n; ++s) {
        for (std::int32_t a = 0; a < h; ++a) {
            const std::int64_t row = pair_index(s, a, h);
            for (const auto& t : mdp.transition_row(s, a)) {
                if (t.state >= n) continue;
                for (std::int32_t a_next = 0; a_next < h; ++a_next) {
                    const double p = t.prob * policy.prob(t.state, a_next);
                    if (p > 0.0)
                        triplets.emplace_back(static_cast<int>(row),
                                              static_cast<int>(pair_index(t.state, a_next, h)), p);
                }
            }
        }
    }
    Eigen::SparseMatrix<double> m(dim, dim);
    m.setFromTriplets(triplets.begin(), triplets.end());
    return m;
}

Eigen::VectorXd solve_checked(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& b,
                              const char* what) {
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success)
        throw SingularSystemError(std::string(what) + ": linear system is singular");
    Eigen::VectorXd x = lu.solve(b);
    const double residual = (a * x - b).lpNorm<Eigen::Infinity>();
    const double bound = kResidualTolerance * (1.0 + b.lpNorm<Eigen::Infinity>());
    if (!(residual <= bound))
        throw SingularSystemError(std::string(what) + ": solve residual " +
                                  std::to_string(residual) + " exceeds tolerance");
    return x;
}

void check_shapes(const TabularMdp& mdp, const Policy& policy, const char* what) {
    if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions())
        throw ModelError(std::string(what) + ": policy shape does not match model");
}

Eigen::VectorXd initial_pair_vector(const TabularMdp& mdp, const Policy& policy) {
    const std::int32_t h = mdp.n_actions();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(mdp.pair_count());
    for (const auto& entry : mdp.initial_support())
        for (std::int32_t a = 0; a < h; ++a)
            b(pair_index(entry.state, a, h)) = entry.prob * policy.prob(entry.state, a);
    return b;
}

}  // namespace

Eigen::VectorXd exact_occupancy(const TabularMdp& mdp, const Policy& policy) {
    check_shapes(mdp, policy, "exact_occupancy");
    const std::int64_t dim = mdp.pair_count();
    Eigen::SparseMatrix<double> system(dim, dim);
    {
        Eigen::SparseMatrix<double> identity(dim, dim);
        identity.setIdentity();
        system = identity - Eigen::SparseMatrix<double>(
                                pair_transition_matrix(mdp, policy).transpose());
    }
    Eigen::VectorXd d = solve_checked(system, initial_pair_vector(mdp, policy), "exact_occupancy");
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (d(i) < 0.0) {
            if (d(i) < kOccupancyClamp)
                throw ModelError("exact_occupancy: occupancy entry " + std::to_string(d(i)) +
                                 " is negative beyond tolerance; model or policy is inconsistent");
            d(i) = 0.0;
        }
    }
    return d;
}

double exact_return(const TabularMdp& mdp, const Policy& policy) {
    const Eigen::VectorXd d = exact_occupancy(mdp, policy);
    const std::int32_t h = mdp.n_actions();
    double total = 0.0;
    for (std::int32_t s = 0; s < mdp.n_states(); ++s)
        for (std::int32_t a = 0; a < h; ++a) total += mdp.mean_reward(s, a) * d(pair_index(s, a, h));
    return total;
}

Eigen::VectorXd exact_q(const TabularMdp& mdp, const Policy& policy,
                        const Eigen::VectorXd* reward_override) {
    check_shapes(mdp, policy, "exact_q");
    const std::int64_t dim = mdp.pair_count();
    Eigen::VectorXd r(dim);
    if (reward_override != nullptr) {
        if (reward_override->size() != dim)
            throw ModelError("exact_q: reward_override length mismatch");
        r = *reward_override;
    } else {
        const std::int32_t h = mdp.n_actions();
        for (std::int32_t s = 0; s < mdp.n_states(); ++s)
            for (std::int32_t a = 0; a < h; ++a) r(pair_index(s, a, h)) = mdp.mean_reward(s, a);
    }
    Eigen::SparseMatrix<double> identity(dim, dim);
    identity.setIdentity();
    const Eigen::SparseMatrix<double> system = identity - pair_transition_matrix(mdp, policy);
    return solve_checked(system, r, "exact_q");
}

ExactSolution exact_solve(const TabularMdp& mdp, const Policy& policy) {
    ExactSolution solution;
    solution.occupancy = exact_occupancy(mdp, policy);
    solution.state_occupancy = Eigen::VectorXd::Zero(mdp.n_states());
    const std::int32_t h = mdp.n_actions();
    double total = 0.0;
    for (std::int32_t s = 0; s < mdp.n_states(); ++s) {
        for (std::int32_t a = 0; a < h; ++a) {
            const double d = solution.occupancy(pair_index(s, a, h));
            solution.state_occupancy(s) += d;
            total += mdp.mean_reward(s, a) * d;
        }
    }
    solution.expected_return = total;
    solution.q_function = exact_q(mdp, policy);
    return solution;
}

Eigen::VectorXd occupancy_ratio(const Eigen::VectorXd& numer, const Eigen::VectorXd& denom,
                                bool* finite) {
    if (numer.size() != denom.size())
        throw ModelError("occupancy_ratio: size mismatch");
    Eigen::VectorXd ratio = Eigen::VectorXd::Zero(numer.size());
    bool ok = true;
    for (Eigen::Index i = 0; i < numer.size(); ++i) {
        if (denom(i) > 0.0)
            ratio(i) = numer(i) / denom(i);
        else if (numer(i) > 0.0)
            ok = false;
    }
    if (finite != nullptr) *finite = ok;
    return ratio;
}

double population_error(const TabularMdp& mdp, const Policy& pi_b, const Policy& pi_e,
                        const Eigen::VectorXd& w, const Eigen::VectorXd& q) {
    check_shapes(mdp, pi_b, "population_error");
    check_shapes(mdp, pi_e, "population_error");
    const std::int64_t dim = mdp.pair_count();
    if (w.size() != dim || q.size() != dim)
        throw ModelError("population_error: w/q length mismatch");

    const std::int32_t n = mdp.n_states();
    const std::int32_t h = mdp.n_actions();
    const Eigen::VectorXd d_b = exact_occupancy(mdp, pi_b);

    Eigen::VectorXd qbar = Eigen::VectorXd::Zero(n);
    for (std::int32_t s = 0; s < n; ++s)
        for (std::int32_t a = 0; a < h; ++a) qbar(s) += pi_e.prob(s, a) * q(pair_index(s, a, h));

    double forward = 0.0, self = 0.0, initial = 0.0;
    for (std::int32_t s = 0; s < n; ++s) {
        for (std::int32_t a = 0; a < h; ++a) {
            const std::int64_t idx = pair_index(s, a, h);
            const double mass = w(idx) * d_b(idx);
            if (mass != 0.0) {
                double next = 0.0;
                for (const auto& t : mdp.transition_row(s, a))
                    if (t.state < n) next += t.prob * qbar(t.state);
                forward += mass * next;
                self += mass * q(idx);
            }
        }
    }
    for (const auto& entry : mdp.initial_support()) initial += entry.prob * qbar(entry.state);
    return forward - self + initial;
}

std::optional<double> absorption_time_mgf(const TabularMdp& mdp, const Policy& policy,
                                          double lambda) {
    check_shapes(mdp, policy, "absorption_time_mgf");
    if (!(lambda > 0.0)) throw std::invalid_argument("absorption_time_mgf: lambda must be > 0");
    const std::int32_t n = mdp.n_states();
    const std::int32_t h = mdp.n_actions();

    // state transition matrix under the policy, and absorption column
    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::VectorXd absorb = Eigen::VectorXd::Zero(n);
    for (std::int32_t s = 0; s < n; ++s) {
        for (std::int32_t a = 0; a < h; ++a) {
            const double pa = policy.prob(s, a);
            if (pa <= 0.0) continue;
            for (const auto& t : mdp.transition_row(s, a)) {
                if (t.state < n)
                    triplets.emplace_back(s, t.state, pa * t.prob);
                else
                    absorb(s) += pa * t.prob;
            }
        }
    }
    Eigen::SparseMatrix<double> p_pi(n, n);
    p_pi.setFromTriplets(triplets.begin(), triplets.end());

    const double scale = std::exp(lambda);
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
    double radius = 0.0;
    for (int it = 0; it < kPowerIterations; ++it) {
        Eigen::VectorXd next = p_pi * v;
        radius = next.lpNorm<Eigen::Infinity>();
        if (radius <= 0.0) break;
        v = next / radius;
    }
    if (scale * radius >= 1.0) return std::nullopt;

    Eigen::SparseMatrix<double> identity(n, n);
    identity.setIdentity();
    const Eigen::SparseMatrix<double> system = identity - Eigen::SparseMatrix<double>(scale * p_pi);
    const Eigen::VectorXd g = solve_checked(system, Eigen::VectorXd(scale * absorb),
                                            "absorption_time_mgf");
    double mgf = 0.0;
    for (const auto& entry : mdp.initial_support()) mgf += entry.prob * g(entry.state);
    return mgf;
}

TabularMdp absorbing_from_discounted(const TabularMdp& mdp, double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("absorbing_from_discounted: gamma must lie in (0, 1)");
    const std::int32_t n = mdp.n_states();
    const std::int32_t h = mdp.n_actions();
    std::vector<std::vector<TabularMdp::Transition>> rows(
        static_cast<std::size_t>(mdp.pair_count()));
    for (std::int32_t s = 0; s < n; ++s) {
        for (std::int32_t a = 0; a < h; ++a) {
            auto& row = rows[static_cast<std::size_t>(pair_index(s, a, h))];
            for (const auto& t : mdp.transition_row(s, a)) {
                if (t.state >= n)
                    throw ModelError(
                        "absorbing_from_discounted: input already places mass on the absorbing "
                        "state; the transform requires a kernel over non-absorbing states only");
                row.push_back({t.state, gamma * t.prob});
            }
            row.push_back({n, 1.0 - gamma});
        }
    }
    return TabularMdp(n, h, std::move(rows), mdp.mean_reward_table(), mdp.initial_dist(),
                      mdp.reward_noise_halfwidth());
}

}  // namespace ope
