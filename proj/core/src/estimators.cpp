#include "ope/estimators.hpp"

#include <algorithm>
#include <map>
#include <vector>

#include "ope/least_squares.hpp"
#include "ope/parallel.hpp"

namespace ope {

namespace {

constexpr double kSolveTolerance = 1e-9;
constexpr int kMaxSolveIterations = 100000;

void check_batch(const EpisodeBatch& batch, const Policy& pi_e, const char* what) {
    if (batch.episodes.empty()) throw ModelError(std::string(what) + ": empty batch");
    if (pi_e.n_states() != batch.n_states || pi_e.n_actions() != batch.n_actions)
        throw ModelError(std::string(what) + ": policy shape does not match batch signature");
}

/// Ordered accumulation map: values are added in insertion order per key, so
/// totals are deterministic; keys come out sorted for triplet assembly.
class SparseAccumulator {
public:
    void add(std::int64_t key, double value) { entries_[key] += value; }

    /// Merges `other` into this accumulator in ascending key order.
    void merge(const SparseAccumulator& other) {
        for (const auto& [key, value] : other.entries_) entries_[key] += value;
    }

    Eigen::SparseMatrix<double> to_matrix(Eigen::Index rows, Eigen::Index cols,
                                          double scale) const {
        std::vector<Eigen::Triplet<double>> triplets;
        triplets.reserve(entries_.size());
        for (const auto& [key, value] : entries_)
            triplets.emplace_back(static_cast<int>(key / cols), static_cast<int>(key % cols),
                                  value * scale);
        Eigen::SparseMatrix<double> m(rows, cols);
        m.setFromTriplets(triplets.begin(), triplets.end());
        return m;
    }

private:
    std::map<std::int64_t, double> entries_;
};

/// Scales supported rows of `a_hat` by 1 / visits(row) and solves for the
/// occupancy-scale parameter u; w = u / visits on support.
WeightEstimate solve_scaled_system(const Eigen::SparseMatrix<double>& a_hat,
                                   const Eigen::VectorXd& visits, const Eigen::VectorXd& b,
                                   double lambda, bool nonneg) {
    Eigen::SparseMatrix<double> g = a_hat;
    for (int outer = 0; outer < g.outerSize(); ++outer) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(g, outer); it; ++it) {
            const double v = visits(it.row());
            if (v > 0.0) it.valueRef() /= v;
        }
    }
    WeightSolveOptions options;
    options.lambda = lambda;
    options.nonneg = nonneg;
    options.tolerance = kSolveTolerance;
    options.max_iterations = kMaxSolveIterations;
    const WeightSolveResult solved = solve_weight_system(g, b, options);

    WeightEstimate estimate;
    estimate.u = solved.u;
    estimate.w = Eigen::VectorXd::Zero(visits.size());
    estimate.support_mask.assign(static_cast<std::size_t>(visits.size()), 0);
    for (Eigen::Index i = 0; i < visits.size(); ++i) {
        if (visits(i) > 0.0) {
            estimate.support_mask[static_cast<std::size_t>(i)] = 1;
            estimate.w(i) = solved.u(i) / visits(i);
        }
    }
    estimate.residual_norm = solved.residual_norm;
    estimate.lambda = lambda;
    estimate.converged = solved.converged;
    estimate.iterations = solved.iterations;
    estimate.rank_deficient = solved.rank_deficient;
    estimate.rank = solved.rank;
    return estimate;
}

}  // namespace

SufficientStats accumulate_stats(const EpisodeBatch& batch, const Policy& pi_e, int threads) {
    check_batch(batch, pi_e, "accumulate_stats");
    const std::int32_t n = batch.n_states;
    const std::int32_t h = batch.n_actions;
    const std::int64_t pairs = static_cast<std::int64_t>(n) * h;
    const std::int64_t m = batch.size();

    struct Partial {
        Eigen::VectorXd visits;
        Eigen::VectorXd rewards;
        Eigen::VectorXd mu;
        SparseAccumulator transitions;
        SparseAccumulator a_hat;
    };

    constexpr std::int64_t kChunk = 1024;
    const std::int64_t chunks = (m + kChunk - 1) / kChunk;
    std::vector<Partial> partials(static_cast<std::size_t>(chunks));
    parallel_chunks(chunks, threads, [&](std::int64_t c) {
        Partial& part = partials[static_cast<std::size_t>(c)];
        part.visits = Eigen::VectorXd::Zero(pairs);
        part.rewards = Eigen::VectorXd::Zero(pairs);
        part.mu = Eigen::VectorXd::Zero(n);
        const std::int64_t begin = c * kChunk;
        const std::int64_t end = std::min(m, begin + kChunk);
        for (std::int64_t i = begin; i < end; ++i) {
            const Episode& episode = batch.episodes[static_cast<std::size_t>(i)];
            if (episode.states.empty() || episode.states.front() >= n)
                throw ModelError("accumulate_stats: episode does not match batch signature");
            part.mu(episode.states.front()) += 1.0;
            for (std::int64_t t = 0; t < episode.length(); ++t) {
                const std::int32_t s = episode.states[static_cast<std::size_t>(t)];
                const std::int32_t a = episode.actions[static_cast<std::size_t>(t)];
                const std::int32_t s_next = episode.states[static_cast<std::size_t>(t) + 1];
                if (s >= n || a >= h || s_next > n)
                    throw ModelError("accumulate_stats: episode does not match batch signature");
                const std::int64_t cur = pair_index(s, a, h);
                part.visits(cur) += 1.0;
                part.rewards(cur) += episode.rewards[static_cast<std::size_t>(t)];
                part.transitions.add(cur * (n + 1) + s_next, 1.0);
                part.a_hat.add(cur * pairs + cur, -1.0);
                if (s_next < n) {
                    for (std::int32_t a_next = 0; a_next < h; ++a_next) {
                        const double p = pi_e.prob(s_next, a_next);
                        if (p > 0.0)
                            part.a_hat.add(cur * pairs + pair_index(s_next, a_next, h), p);
                    }
                }
            }
        }
    });

    Partial total;
    total.visits = Eigen::VectorXd::Zero(pairs);
    total.rewards = Eigen::VectorXd::Zero(pairs);
    total.mu = Eigen::VectorXd::Zero(n);
    for (const Partial& part : partials) {
        total.visits += part.visits;
        total.rewards += part.rewards;
        total.mu += part.mu;
        total.transitions.merge(part.transitions);
        total.a_hat.merge(part.a_hat);
    }

    SufficientStats stats;
    stats.n_states = n;
    stats.n_actions = h;
    stats.truncation = batch.truncation;
    stats.m = m;
    stats.seed = batch.seed;
    const double inv_m = 1.0 / static_cast<double>(m);
    stats.visit_counts = total.visits * inv_m;
    stats.reward_sums = std::move(total.rewards);
    stats.mu_hat = total.mu * inv_m;
    stats.transition_counts = total.transitions.to_matrix(pairs, n + 1, 1.0);
    stats.a_hat = total.a_hat.to_matrix(pairs, pairs, inv_m);
    stats.b_vec = Eigen::VectorXd::Zero(pairs);
    for (std::int32_t s = 0; s < n; ++s) {
        if (stats.mu_hat(s) == 0.0) continue;
        for (std::int32_t a = 0; a < h; ++a)
            stats.b_vec(pair_index(s, a, h)) = stats.mu_hat(s) * pi_e.prob(s, a);
    }
    return stats;
}

WeightEstimate mwla_solve(const SufficientStats& stats, double lambda, bool nonneg) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("mwla_solve: lambda must be nonnegative");
    return solve_scaled_system(stats.a_hat, stats.visit_counts, stats.b_vec, lambda, nonneg);
}

EstimateReport mwla_return(const SufficientStats& stats, const WeightEstimate& weights) {
    if (weights.w.size() != stats.visit_counts.size())
        throw ModelError("mwla_return: weight table does not match statistics signature");
    double total = 0.0;
    for (Eigen::Index i = 0; i < weights.w.size(); ++i)
        if (weights.support_mask[static_cast<std::size_t>(i)])
            total += weights.w(i) * stats.reward_sums(i);
    EstimateReport report;
    report.method = "MWLA";
    report.point_estimate = total / static_cast<double>(stats.m);
    report.m = stats.m;
    report.truncation = stats.truncation;
    report.lambda = weights.lambda;
    report.seed = stats.seed;
    report.solver_converged = weights.converged;
    return report;
}

double empirical_error(const SufficientStats& stats, const Policy& pi_e, const Eigen::VectorXd& w,
                       const Eigen::VectorXd& q) {
    const std::int32_t n = stats.n_states;
    const std::int32_t h = stats.n_actions;
    const std::int64_t pairs = static_cast<std::int64_t>(n) * h;
    if (w.size() != pairs || q.size() != pairs)
        throw ModelError("empirical_error: w/q length mismatch");

    Eigen::VectorXd qbar = Eigen::VectorXd::Zero(n);
    for (std::int32_t s = 0; s < n; ++s)
        for (std::int32_t a = 0; a < h; ++a) qbar(s) += pi_e.prob(s, a) * q(pair_index(s, a, h));

    double forward = 0.0;
    for (int outer = 0; outer < stats.transition_counts.outerSize(); ++outer) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(stats.transition_counts, outer); it;
             ++it) {
            const std::int32_t s_next = static_cast<std::int32_t>(it.col());
            if (s_next >= n) continue;  // discriminator vanishes at absorption
            forward += w(it.row()) * qbar(s_next) * it.value();
        }
    }
    forward /= static_cast<double>(stats.m);

    double self = 0.0;
    for (Eigen::Index i = 0; i < pairs; ++i) self += w(i) * q(i) * stats.visit_counts(i);

    double initial = 0.0;
    for (std::int32_t s = 0; s < n; ++s) initial += stats.mu_hat(s) * qbar(s);

    return forward - self + initial;
}

MswlaStats mswla_accumulate(const EpisodeBatch& batch, const Policy& pi_e, const Policy& pi_b) {
    check_batch(batch, pi_e, "mswla_accumulate");
    if (pi_b.n_states() != batch.n_states || pi_b.n_actions() != batch.n_actions)
        throw ModelError("mswla_accumulate: behavior policy shape mismatch");
    const std::int32_t n = batch.n_states;
    const std::int64_t m = batch.size();

    MswlaStats stats;
    stats.n_states = n;
    stats.n_actions = batch.n_actions;
    stats.truncation = batch.truncation;
    stats.m = m;
    stats.state_visits = Eigen::VectorXd::Zero(n);
    stats.mu_hat = Eigen::VectorXd::Zero(n);
    stats.ratio_reward_sums = Eigen::VectorXd::Zero(n);

    SparseAccumulator a_hat;
    for (const Episode& episode : batch.episodes) {
        stats.mu_hat(episode.states.front()) += 1.0;
        for (std::int64_t t = 0; t < episode.length(); ++t) {
            const std::int32_t s = episode.states[static_cast<std::size_t>(t)];
            const std::int32_t a = episode.actions[static_cast<std::size_t>(t)];
            const std::int32_t s_next = episode.states[static_cast<std::size_t>(t) + 1];
            const double pb = pi_b.prob(s, a);
            if (pb <= 0.0)
                throw ModelError(
                    "mswla_accumulate: behavior policy assigns zero probability to an observed "
                    "action");
            const double ratio = pi_e.prob(s, a) / pb;
            stats.state_visits(s) += 1.0;
            stats.ratio_reward_sums(s) += ratio * episode.rewards[static_cast<std::size_t>(t)];
            a_hat.add(static_cast<std::int64_t>(s) * n + s, -1.0);
            if (s_next < n) a_hat.add(static_cast<std::int64_t>(s) * n + s_next, ratio);
        }
    }
    const double inv_m = 1.0 / static_cast<double>(m);
    stats.state_visits *= inv_m;
    stats.mu_hat *= inv_m;
    stats.a_hat = a_hat.to_matrix(n, n, inv_m);
    return stats;
}

WeightEstimate mswla_weights(const MswlaStats& stats, double lambda, bool nonneg) {
    return solve_scaled_system(stats.a_hat, stats.state_visits, stats.mu_hat, lambda, nonneg);
}

EstimateReport mswla_solve(const EpisodeBatch& batch, const Policy& pi_e, const Policy& pi_b,
                           double lambda, bool nonneg) {
    const MswlaStats stats = mswla_accumulate(batch, pi_e, pi_b);
    const WeightEstimate weights = mswla_weights(stats, lambda, nonneg);
    double total = 0.0;
    for (Eigen::Index s = 0; s < stats.ratio_reward_sums.size(); ++s)
        if (weights.support_mask[static_cast<std::size_t>(s)])
            total += weights.w(s) * stats.ratio_reward_sums(s);
    EstimateReport report;
    report.method = "MSWLA";
    report.point_estimate = total / static_cast<double>(stats.m);
    report.m = stats.m;
    report.truncation = stats.truncation;
    report.lambda = lambda;
    report.seed = batch.seed;
    report.solver_converged = weights.converged;
    return report;
}

namespace {

EstimateReport batch_mean_report(const EpisodeBatch& batch, const char* method) {
    if (batch.episodes.empty()) throw ModelError(std::string(method) + ": empty batch");
    double total = 0.0;
    for (const Episode& episode : batch.episodes) total += episode.total_reward();
    EstimateReport report;
    report.method = method;
    report.point_estimate = total / static_cast<double>(batch.size());
    report.m = batch.size();
    report.truncation = batch.truncation;
    report.seed = batch.seed;
    return report;
}

}  // namespace

EstimateReport naive_average(const EpisodeBatch& batch) { return batch_mean_report(batch, "NAIVE"); }

EstimateReport on_policy_estimate(const EpisodeBatch& batch) {
    return batch_mean_report(batch, "ON_POLICY");
}

EstimateReport trajectory_is(const EpisodeBatch& batch, const Policy& pi_e, const Policy& pi_b) {
    check_batch(batch, pi_e, "trajectory_is");
    if (pi_b.n_states() != batch.n_states || pi_b.n_actions() != batch.n_actions)
        throw ModelError("trajectory_is: behavior policy shape mismatch");
    double total = 0.0;
    for (const Episode& episode : batch.episodes) {
        double weight = 1.0;
        for (std::int64_t t = 0; t < episode.length(); ++t) {
            const std::int32_t s = episode.states[static_cast<std::size_t>(t)];
            const std::int32_t a = episode.actions[static_cast<std::size_t>(t)];
            const double pb = pi_b.prob(s, a);
            if (pb <= 0.0)
                throw ModelError(
                    "trajectory_is: behavior policy assigns zero probability to an observed "
                    "action");
            weight *= pi_e.prob(s, a) / pb;
        }
        total += weight * episode.total_reward();
    }
    EstimateReport report;
    report.method = "IS";
    report.point_estimate = total / static_cast<double>(batch.size());
    report.m = batch.size();
    report.truncation = batch.truncation;
    report.seed = batch.seed;
    return report;
}

MwlGammaStats mwl_gamma_accumulate(const EpisodeBatch& batch, const Policy& pi_e, double gamma) {
    check_batch(batch, pi_e, "mwl_gamma_accumulate");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("mwl_gamma_accumulate: gamma must lie in (0, 1)");
    const std::int32_t n = batch.n_states;
    const std::int32_t h = batch.n_actions;
    const std::int64_t pairs = static_cast<std::int64_t>(n) * h;

    MwlGammaStats stats;
    stats.n_states = n;
    stats.n_actions = h;
    stats.m = batch.size();
    stats.gamma = gamma;
    stats.tuple_freq = Eigen::VectorXd::Zero(pairs);
    stats.reward_sums = Eigen::VectorXd::Zero(pairs);

    Eigen::VectorXd mu_hat = Eigen::VectorXd::Zero(n);
    SparseAccumulator a_hat;
    std::int64_t tuples = 0;
    for (const Episode& episode : batch.episodes) {
        mu_hat(episode.states.front()) += 1.0;
        for (std::int64_t t = 0; t < episode.length(); ++t) {
            const std::int32_t s = episode.states[static_cast<std::size_t>(t)];
            const std::int32_t a = episode.actions[static_cast<std::size_t>(t)];
            const std::int32_t s_next = episode.states[static_cast<std::size_t>(t) + 1];
            const std::int64_t cur = pair_index(s, a, h);
            ++tuples;
            stats.tuple_freq(cur) += 1.0;
            stats.reward_sums(cur) += episode.rewards[static_cast<std::size_t>(t)];
            a_hat.add(cur * pairs + cur, -1.0);
            if (s_next < n) {
                for (std::int32_t a_next = 0; a_next < h; ++a_next) {
                    const double p = pi_e.prob(s_next, a_next);
                    if (p > 0.0)
                        a_hat.add(cur * pairs + pair_index(s_next, a_next, h), gamma * p);
                }
            }
        }
    }
    if (tuples == 0) throw ModelError("mwl_gamma_accumulate: batch contains no transitions");
    stats.tuple_count = tuples;
    const double inv_n = 1.0 / static_cast<double>(tuples);
    stats.tuple_freq *= inv_n;
    stats.a_hat = a_hat.to_matrix(pairs, pairs, inv_n);
    mu_hat /= static_cast<double>(batch.size());
    stats.b_vec = Eigen::VectorXd::Zero(pairs);
    for (std::int32_t s = 0; s < n; ++s) {
        if (mu_hat(s) == 0.0) continue;
        for (std::int32_t a = 0; a < h; ++a)
            stats.b_vec(pair_index(s, a, h)) = (1.0 - gamma) * mu_hat(s) * pi_e.prob(s, a);
    }
    return stats;
}

WeightEstimate mwl_gamma_weights(const MwlGammaStats& stats, double lambda, bool nonneg) {
    return solve_scaled_system(stats.a_hat, stats.tuple_freq, stats.b_vec, lambda, nonneg);
}

EstimateReport mwl_gamma_solve(const EpisodeBatch& batch, const Policy& pi_e, double gamma,
                               double lambda, bool nonneg) {
    const MwlGammaStats stats = mwl_gamma_accumulate(batch, pi_e, gamma);
    const WeightEstimate weights = mwl_gamma_weights(stats, lambda, nonneg);
    double total = 0.0;
    for (Eigen::Index i = 0; i < weights.w.size(); ++i)
        if (weights.support_mask[static_cast<std::size_t>(i)])
            total += weights.w(i) * stats.reward_sums(i);
    EstimateReport report;
    report.method = "MWL_GAMMA";
    report.point_estimate = total / (static_cast<double>(stats.tuple_count) * (1.0 - gamma));
    report.m = stats.m;
    report.truncation = batch.truncation;
    report.lambda = lambda;
    report.gamma = gamma;
    report.seed = batch.seed;
    report.solver_converged = weights.converged;
    return report;
}

}  // namespace ope
