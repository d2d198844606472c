#include "ope/mdp.hpp"

#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>

namespace ope {

namespace {

constexpr double kRowSumTolerance = 1e-12;
constexpr int kPowerIterations = 1000;

void validate_distribution(const Eigen::VectorXd& dist, const char* what) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < dist.size(); ++i) {
        const double p = dist(i);
        if (!(p >= 0.0)) throw ModelError(std::string(what) + ": negative or NaN entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance)
        throw ModelError(std::string(what) + ": entries sum to " + std::to_string(sum) +
                         ", expected 1 within 1e-12");
}

/// Spectral radius of the uniform-policy transition matrix over
/// non-absorbing states, estimated by power iteration from the all-ones
/// vector. Exact 1.0 is reproduced when a closed non-absorbing class spans
/// the reachable part, which is the case this diagnostic exists to flag.
double uniform_spectral_radius(std::int32_t n, std::int32_t h,
                               const std::vector<std::vector<TabularMdp::Transition>>& rows) {
    Eigen::SparseMatrix<double> m(n, n);
    {
        std::vector<Eigen::Triplet<double>> triplets;
        for (std::int32_t s = 0; s < n; ++s) {
            for (std::int32_t a = 0; a < h; ++a) {
                for (const auto& t : rows[static_cast<std::size_t>(pair_index(s, a, h))]) {
                    if (t.state < n)
                        triplets.emplace_back(s, t.state, t.prob / h);
                }
            }
        }
        m.setFromTriplets(triplets.begin(), triplets.end());
    }
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
    double radius = 0.0;
    for (int it = 0; it < kPowerIterations; ++it) {
        Eigen::VectorXd next = m * v;
        radius = next.lpNorm<Eigen::Infinity>();
        if (radius <= 0.0) return 0.0;
        v = next / radius;
    }
    return radius;
}

}  // namespace

Policy::Policy(Eigen::MatrixXd probs) : probs_(std::move(probs)) {
    if (probs_.rows() < 1 || probs_.cols() < 1) throw ModelError("policy: empty table");
    for (Eigen::Index s = 0; s < probs_.rows(); ++s) {
        double sum = 0.0;
        for (Eigen::Index a = 0; a < probs_.cols(); ++a) {
            const double p = probs_(s, a);
            if (!(p >= 0.0)) throw ModelError("policy: negative or NaN probability");
            sum += p;
        }
        if (std::abs(sum - 1.0) > kRowSumTolerance)
            throw ModelError("policy: row " + std::to_string(s) + " sums to " +
                             std::to_string(sum) + ", expected 1 within 1e-12");
    }
}

TabularMdp::TabularMdp(std::int32_t n_states, std::int32_t n_actions,
                       std::vector<std::vector<Transition>> rows, Eigen::MatrixXd mean_reward,
                       Eigen::VectorXd initial_dist, double reward_noise_halfwidth)
    : n_states_(n_states),
      n_actions_(n_actions),
      rows_(std::move(rows)),
      mean_reward_(std::move(mean_reward)),
      initial_dist_(std::move(initial_dist)),
      reward_noise_halfwidth_(reward_noise_halfwidth) {
    if (n_states_ < 1) throw ModelError("model: n_states must be positive");
    if (n_actions_ < 1) throw ModelError("model: n_actions must be positive");
    if (rows_.size() != static_cast<std::size_t>(pair_count()))
        throw ModelError("model: transition rows do not match n_states*n_actions");
    if (mean_reward_.rows() != n_states_ || mean_reward_.cols() != n_actions_)
        throw ModelError("model: mean_reward shape mismatch");
    if (!mean_reward_.allFinite()) throw ModelError("model: mean_reward has non-finite entries");
    if (initial_dist_.size() != n_states_) throw ModelError("model: initial_dist length mismatch");
    if (!(reward_noise_halfwidth_ >= 0.0))
        throw ModelError("model: reward_noise_halfwidth must be nonnegative");

    validate_distribution(initial_dist_, "model initial_dist");

    for (std::int32_t s = 0; s < n_states_; ++s) {
        for (std::int32_t a = 0; a < n_actions_; ++a) {
            auto& row = rows_[static_cast<std::size_t>(pair_index(s, a, n_actions_))];
            double sum = 0.0;
            for (const auto& t : row) {
                if (t.state < 0 || t.state > n_states_)
                    throw ModelError("model: transition target out of range");
                if (!(t.prob >= 0.0)) throw ModelError("model: negative or NaN probability");
                sum += t.prob;
            }
            if (std::abs(sum - 1.0) > kRowSumTolerance)
                throw ModelError("model: transition row (" + std::to_string(s) + "," +
                                 std::to_string(a) + ") sums to " + std::to_string(sum) +
                                 ", expected 1 within 1e-12");
            std::sort(row.begin(), row.end(),
                      [](const Transition& x, const Transition& y) { return x.state < y.state; });
            // merge duplicates, drop exact zeros
            std::vector<Transition> compact;
            compact.reserve(row.size());
            for (const auto& t : row) {
                if (t.prob == 0.0) continue;
                if (!compact.empty() && compact.back().state == t.state)
                    compact.back().prob += t.prob;
                else
                    compact.push_back(t);
            }
            row = std::move(compact);
        }
    }

    for (std::int32_t s = 0; s < n_states_; ++s)
        if (initial_dist_(s) > 0.0) initial_support_.push_back({s, initial_dist_(s)});

    uniform_spectral_radius_ = uniform_spectral_radius(n_states_, n_actions_, rows_);
    if (uniform_spectral_radius_ >= 1.0 - 1e-9) {
        warnings_.push_back(
            "absorption heuristic: uniform-policy spectral radius estimate " +
            std::to_string(uniform_spectral_radius_) +
            " is not < 1; the chain may fail to absorb under some policies");
    }
}

TabularMdp TabularMdp::from_dense(std::int32_t n_states, std::int32_t n_actions,
                                  const std::vector<double>& transition,
                                  Eigen::MatrixXd mean_reward, Eigen::VectorXd initial_dist,
                                  double reward_noise_halfwidth) {
    const std::int64_t pairs = static_cast<std::int64_t>(n_states) * n_actions;
    const std::int64_t width = n_states + 1;
    if (static_cast<std::int64_t>(transition.size()) != pairs * width)
        throw ModelError("model: dense transition table has wrong size");
    std::vector<std::vector<Transition>> rows(static_cast<std::size_t>(pairs));
    for (std::int64_t idx = 0; idx < pairs; ++idx) {
        auto& row = rows[static_cast<std::size_t>(idx)];
        for (std::int32_t s_next = 0; s_next <= n_states; ++s_next) {
            const double p = transition[static_cast<std::size_t>(idx * width + s_next)];
            if (p != 0.0) row.push_back({s_next, p});
        }
    }
    return TabularMdp(n_states, n_actions, std::move(rows), std::move(mean_reward),
                      std::move(initial_dist), reward_noise_halfwidth);
}

double TabularMdp::transition_prob(std::int32_t s, std::int32_t a, std::int32_t s_next) const {
    for (const auto& t : transition_row(s, a))
        if (t.state == s_next) return t.prob;
    return 0.0;
}

std::vector<double> TabularMdp::dense_transition_row(std::int32_t s, std::int32_t a) const {
    std::vector<double> row(static_cast<std::size_t>(n_states_) + 1, 0.0);
    for (const auto& t : transition_row(s, a)) row[static_cast<std::size_t>(t.state)] = t.prob;
    return row;
}

}  // namespace ope
