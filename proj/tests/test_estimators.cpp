#include <doctest.h>

#include <cmath>

#include "ope/estimators.hpp"
#include "ope/exact.hpp"
#include "ope/simulate.hpp"
#include "support/test_models.hpp"

using namespace ope;

namespace {

/// One episode (s=0, a=0, r=3.0) -> absorb on a 1-state 1-action signature.
EpisodeBatch single_step_batch() {
    EpisodeBatch batch;
    batch.n_states = 1;
    batch.n_actions = 1;
    batch.truncation = 10;
    Episode episode;
    episode.states = {0, 1};
    episode.actions = {0};
    episode.rewards = {3.0};
    episode.absorbed = true;
    episode.truncation = 10;
    batch.episodes.push_back(episode);
    return batch;
}

Policy single_action_policy(std::int32_t n) { return Policy(Eigen::MatrixXd::Ones(n, 1)); }

/// Recomputes the empirical error from raw episodes, as a per-episode sum
/// (independent route used against empirical_error and for its sampling
/// noise).
std::vector<double> per_episode_error_terms(const EpisodeBatch& batch, const Policy& pi_e,
                                            const Eigen::VectorXd& w, const Eigen::VectorXd& q) {
    const std::int32_t n = batch.n_states;
    const std::int32_t h = batch.n_actions;
    Eigen::VectorXd qbar = Eigen::VectorXd::Zero(n);
    for (std::int32_t s = 0; s < n; ++s)
        for (std::int32_t a = 0; a < h; ++a) qbar(s) += pi_e.prob(s, a) * q(pair_index(s, a, h));
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(batch.size()));
    for (const Episode& episode : batch.episodes) {
        double value = qbar(episode.states.front());
        for (std::int64_t t = 0; t < episode.length(); ++t) {
            const std::int64_t cur = pair_index(episode.states[static_cast<std::size_t>(t)],
                                                episode.actions[static_cast<std::size_t>(t)], h);
            const std::int32_t s_next = episode.states[static_cast<std::size_t>(t) + 1];
            value += w(cur) * ((s_next < n ? qbar(s_next) : 0.0) - q(cur));
        }
        terms.push_back(value);
    }
    return terms;
}

}  // namespace

TEST_CASE("sufficient statistics of the single-step batch by hand") {
    const EpisodeBatch batch = single_step_batch();
    const SufficientStats stats = accumulate_stats(batch, single_action_policy(1));
    CHECK(stats.m == 1);
    CHECK(stats.visit_counts(0) == doctest::Approx(1.0));
    CHECK(stats.reward_sums(0) == doctest::Approx(3.0));
    CHECK(stats.mu_hat(0) == doctest::Approx(1.0));
    CHECK(Eigen::MatrixXd(stats.a_hat)(0, 0) == doctest::Approx(-1.0));
    CHECK(stats.b_vec(0) == doctest::Approx(1.0));
    CHECK(Eigen::MatrixXd(stats.transition_counts)(0, 1) == doctest::Approx(1.0));

    CHECK_THROWS_AS(accumulate_stats(EpisodeBatch{1, 1, 10, 0, {}}, single_action_policy(1)),
                    ModelError);
}

TEST_CASE("duplicated episodes leave averaged statistics unchanged") {
    EpisodeBatch batch = single_step_batch();
    batch.episodes.push_back(batch.episodes.front());
    const SufficientStats one = accumulate_stats(single_step_batch(), single_action_policy(1));
    const SufficientStats two = accumulate_stats(batch, single_action_policy(1));
    CHECK(two.visit_counts(0) == doctest::Approx(one.visit_counts(0)));
    CHECK(Eigen::MatrixXd(two.a_hat)(0, 0) == doctest::Approx(Eigen::MatrixXd(one.a_hat)(0, 0)));
    CHECK(two.b_vec(0) == doctest::Approx(one.b_vec(0)));
    // raw totals double while averages stay put
    CHECK(two.reward_sums(0) == doctest::Approx(2.0 * one.reward_sums(0)));
}

TEST_CASE("sufficient statistics invariants and the truncated-occupancy oracle") {
    const TabularMdp mdp = testing::random_absorbing_mdp(141, 5, 2);
    const Policy pi_b = testing::random_policy(142, 5, 2);
    const Policy pi_e = testing::random_policy(143, 5, 2);
    const std::int32_t truncation = 6;
    const std::int64_t m = 10000;
    const EpisodeBatch batch = sample_batch(mdp, pi_b, m, truncation, 20240404);
    const SufficientStats stats = accumulate_stats(batch, pi_e);

    // transition totals match visit totals
    const Eigen::MatrixXd transitions(stats.transition_counts);
    for (Eigen::Index i = 0; i < stats.visit_counts.size(); ++i)
        CHECK(std::abs(transitions.row(i).sum() -
                       static_cast<double>(m) * stats.visit_counts(i)) <= 1e-9);

    // total visits match the average truncated length
    double mean_length = 0.0;
    for (const Episode& episode : batch.episodes)
        mean_length += static_cast<double>(episode.length());
    mean_length /= static_cast<double>(m);
    CHECK(stats.visit_counts.sum() == doctest::Approx(mean_length).epsilon(1e-12));

    // visit counts sit within 4 sigma of the truncation-level occupancy
    const Eigen::VectorXd expected = testing::truncated_occupancy(mdp, pi_b, truncation);
    for (Eigen::Index i = 0; i < expected.size(); ++i) {
        std::vector<double> per_episode;
        per_episode.reserve(static_cast<std::size_t>(m));
        for (const Episode& episode : batch.episodes) {
            double count = 0.0;
            for (std::int64_t t = 0; t < episode.length(); ++t)
                if (pair_index(episode.states[static_cast<std::size_t>(t)],
                               episode.actions[static_cast<std::size_t>(t)], 2) == i)
                    count += 1.0;
            per_episode.push_back(count);
        }
        const double se =
            testing::sample_moments(per_episode).stddev / std::sqrt(static_cast<double>(m));
        CHECK(std::abs(stats.visit_counts(i) - expected(i)) <= 4.0 * se + 1e-12);
    }

    // parallel fold matches the serial one exactly
    const SufficientStats parallel = accumulate_stats(batch, pi_e, 3);
    CHECK((parallel.visit_counts - stats.visit_counts).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((Eigen::MatrixXd(parallel.a_hat) - Eigen::MatrixXd(stats.a_hat))
              .lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("scalar weight solve by hand") {
    const SufficientStats stats = accumulate_stats(single_step_batch(), single_action_policy(1));
    const WeightEstimate unconstrained = mwla_solve(stats, 0.0, false);
    CHECK(unconstrained.u(0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(unconstrained.w(0) == doctest::Approx(1.0).epsilon(1e-10));
    const WeightEstimate constrained = mwla_solve(stats, 0.0, true);
    CHECK(constrained.w(0) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(constrained.converged);

    const EstimateReport report = mwla_return(stats, unconstrained);
    CHECK(report.point_estimate == doctest::Approx(3.0).epsilon(1e-10));

    WeightEstimate zero = unconstrained;
    zero.w.setZero();
    CHECK(mwla_return(stats, zero).point_estimate == 0.0);
}

TEST_CASE("population-limit statistics recover unit weights for identical policies") {
    const TabularMdp mdp = testing::random_absorbing_mdp(151, 4, 2);
    const Policy policy = testing::random_policy(152, 4, 2);
    const SufficientStats stats = testing::population_stats(mdp, policy, policy);
    const WeightEstimate weights = mwla_solve(stats, 0.0, false);
    for (Eigen::Index i = 0; i < weights.w.size(); ++i)
        CHECK(std::abs(weights.w(i) - 1.0) <= 1e-8);
}

TEST_CASE("population-limit statistics recover the exact occupancy ratio") {
    const TabularMdp mdp = testing::random_absorbing_mdp(161, 4, 2);
    const Policy pi_b = testing::random_policy(162, 4, 2);
    const Policy pi_e = testing::random_policy(163, 4, 2);
    const SufficientStats stats = testing::population_stats(mdp, pi_b, pi_e);
    const WeightEstimate weights = mwla_solve(stats, 0.0, false);
    const Eigen::VectorXd ratio =
        occupancy_ratio(exact_occupancy(mdp, pi_e), exact_occupancy(mdp, pi_b));
    CHECK((weights.w - ratio).lpNorm<Eigen::Infinity>() <= 1e-6);

    const EstimateReport report = mwla_return(stats, weights);
    CHECK(std::abs(report.point_estimate - exact_return(mdp, pi_e)) <= 1e-6);
}

TEST_CASE("weight table is zero exactly off the empirical support") {
    const TabularMdp mdp = testing::random_absorbing_mdp(171, 5, 3);
    // behavior policy that never takes action 2 in state 0
    Eigen::MatrixXd probs = testing::random_policy(172, 5, 3).probs();
    probs(0, 0) += probs(0, 2);
    probs(0, 2) = 0.0;
    const Policy pi_b(probs);
    const Policy pi_e = testing::random_policy(173, 5, 3);
    const EpisodeBatch batch = sample_batch(mdp, pi_b, 300, 20, 20240505);
    const SufficientStats stats = accumulate_stats(batch, pi_e);
    const WeightEstimate weights = mwla_solve(stats, 0.001, true);
    for (Eigen::Index i = 0; i < weights.w.size(); ++i) {
        if (stats.visit_counts(i) == 0.0) {
            CHECK(weights.w(i) == 0.0);
            CHECK(weights.support_mask[static_cast<std::size_t>(i)] == 0);
        }
    }
}

TEST_CASE("unconstrained solve satisfies the normal equations and scales linearly") {
    const TabularMdp mdp = testing::random_absorbing_mdp(181, 5, 2);
    const Policy pi_b = testing::random_policy(182, 5, 2);
    const Policy pi_e = testing::random_policy(183, 5, 2);
    const EpisodeBatch batch = sample_batch(mdp, pi_b, 500, 25, 20240606);
    SufficientStats stats = accumulate_stats(batch, pi_e);
    const WeightEstimate weights = mwla_solve(stats, 0.0, false);

    // rebuild the scaled system to validate the normal equations
    Eigen::MatrixXd g = Eigen::MatrixXd(stats.a_hat);
    for (Eigen::Index i = 0; i < stats.visit_counts.size(); ++i)
        if (stats.visit_counts(i) > 0.0) g.row(i) /= stats.visit_counts(i);
    const Eigen::VectorXd residual = g.transpose() * weights.u + stats.b_vec;
    CHECK((g * residual).lpNorm<Eigen::Infinity>() <= 1e-8);

    // scaling the rhs by a power of two scales the solution bit-exactly
    SufficientStats scaled = stats;
    scaled.b_vec *= 4.0;
    const WeightEstimate weights4 = mwla_solve(scaled, 0.0, false);
    CHECK((weights4.u - 4.0 * weights.u).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("empirical error: trivial cases and consistency with the population value") {
    const EpisodeBatch tiny = single_step_batch();
    const Policy pi1 = single_action_policy(1);
    const SufficientStats tiny_stats = accumulate_stats(tiny, pi1);
    Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
    CHECK(empirical_error(tiny_stats, pi1, one, one) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(empirical_error(tiny_stats, pi1, zero, one) == doctest::Approx(1.0).epsilon(1e-14));

    const TabularMdp mdp = testing::random_absorbing_mdp(191, 5, 2);
    const Policy pi_b = testing::random_policy(192, 5, 2);
    const Policy pi_e = testing::random_policy(193, 5, 2);
    const std::int64_t m = 10000;
    const std::int32_t truncation = 200;  // effectively untruncated for this model
    const EpisodeBatch batch = sample_batch(mdp, pi_b, m, truncation, 20240707);
    const SufficientStats stats = accumulate_stats(batch, pi_e);

    RngEngine rng(194);
    for (int k = 0; k < 20; ++k) {
        Eigen::VectorXd w(mdp.pair_count()), q(mdp.pair_count());
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            w(i) = uniform_double(rng, 0.0, 2.0);
            q(i) = uniform_double(rng, -1.0, 1.0);
        }
        const double empirical = empirical_error(stats, pi_e, w, q);
        const double population = population_error(mdp, pi_b, pi_e, w, q);
        const auto terms = per_episode_error_terms(batch, pi_e, w, q);
        const double se =
            testing::sample_moments(terms).stddev / std::sqrt(static_cast<double>(m));
        CHECK(std::abs(empirical - testing::sample_moments(terms).mean) <= 1e-10);
        CHECK(std::abs(empirical - population) <= 5.0 * se + 1e-8);
    }
}

TEST_CASE("empirical error contracts as the batch grows") {
    const TabularMdp mdp = testing::random_absorbing_mdp(201, 4, 2);
    const Policy pi_b = testing::random_policy(202, 4, 2);
    const Policy pi_e = testing::random_policy(203, 4, 2);
    RngEngine rng(204);
    Eigen::VectorXd w(mdp.pair_count()), q(mdp.pair_count());
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        w(i) = uniform_double(rng, 0.0, 2.0);
        q(i) = uniform_double(rng, -1.0, 1.0);
    }
    const double population = population_error(mdp, pi_b, pi_e, w, q);

    // average |error| over replicates at m and 4m: the ratio should sit near
    // 1/2 (within a factor of 2)
    auto mean_abs_error = [&](std::int64_t m, std::uint64_t seed_base) {
        double total = 0.0;
        const int replicates = 24;
        for (int r = 0; r < replicates; ++r) {
            const EpisodeBatch batch =
                sample_batch(mdp, pi_b, m, 100, mix_seed(seed_base, static_cast<std::uint64_t>(r)));
            const SufficientStats stats = accumulate_stats(batch, pi_e);
            total += std::abs(empirical_error(stats, pi_e, w, q) - population);
        }
        return total / replicates;
    };
    const double coarse = mean_abs_error(2000, 11);
    const double fine = mean_abs_error(8000, 22);
    CHECK(fine <= coarse);           // statistically near coarse/2
    CHECK(fine >= coarse / 4.0);     // and not implausibly small
}

TEST_CASE("state-weight variant: single state and population limits") {
    const EpisodeBatch tiny = single_step_batch();
    const Policy pi1 = single_action_policy(1);
    const EstimateReport tiny_report = mswla_solve(tiny, pi1, pi1, 0.0, false);
    CHECK(tiny_report.point_estimate == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(tiny_report.method == "MSWLA");

    const TabularMdp mdp = testing::random_absorbing_mdp(211, 4, 2);
    const Policy pi_b = testing::random_policy(212, 4, 2);
    const Policy pi_e = testing::random_policy(213, 4, 2);

    // identical policies: unit state weights
    const MswlaStats same = testing::population_mswla_stats(mdp, pi_b, pi_b);
    const WeightEstimate same_weights = mswla_weights(same, 0.0, false);
    for (Eigen::Index s = 0; s < same_weights.w.size(); ++s)
        CHECK(std::abs(same_weights.w(s) - 1.0) <= 1e-8);

    // distinct policies: exact state-occupancy ratio
    const MswlaStats stats = testing::population_mswla_stats(mdp, pi_b, pi_e);
    const WeightEstimate weights = mswla_weights(stats, 0.0, false);
    const Eigen::VectorXd ratio = occupancy_ratio(exact_solve(mdp, pi_e).state_occupancy,
                                                  exact_solve(mdp, pi_b).state_occupancy);
    CHECK((weights.w - ratio).lpNorm<Eigen::Infinity>() <= 1e-6);

    // and the population estimate reproduces the target return
    double estimate = 0.0;
    for (Eigen::Index s = 0; s < weights.w.size(); ++s)
        estimate += weights.w(s) * stats.ratio_reward_sums(s);
    CHECK(std::abs(estimate - exact_return(mdp, pi_e)) <= 1e-8);
}

TEST_CASE("state-weight variant rejects unsupported observed actions") {
    const TabularMdp mdp = testing::random_absorbing_mdp(221, 3, 2);
    const Policy pi_b = testing::random_policy(222, 3, 2);
    const EpisodeBatch batch = sample_batch(mdp, pi_b, 50, 10, 20240808);
    Eigen::MatrixXd degenerate(3, 2);
    degenerate << 1.0, 0.0, 1.0, 0.0, 1.0, 0.0;
    CHECK_THROWS_AS(mswla_solve(batch, testing::random_policy(223, 3, 2), Policy(degenerate),
                                0.001, true),
                    ModelError);
}

TEST_CASE("baseline averages: zeros, hand sums and oracle agreement") {
    EpisodeBatch batch;
    batch.n_states = 2;
    batch.n_actions = 1;
    batch.truncation = 5;
    Episode episode;
    episode.states = {0, 1, 2};
    episode.actions = {0, 0};
    episode.rewards = {1.0, 2.0};
    episode.absorbed = true;
    batch.episodes.push_back(episode);
    CHECK(naive_average(batch).point_estimate == doctest::Approx(3.0));
    CHECK(on_policy_estimate(batch).point_estimate == doctest::Approx(3.0));
    for (auto& r : batch.episodes.front().rewards) r = 0.0;
    CHECK(naive_average(batch).point_estimate == doctest::Approx(0.0));

    const TabularMdp mdp = testing::random_absorbing_mdp(231, 6, 2);
    const Policy policy = testing::random_policy(232, 6, 2);
    const std::int64_t m = 10000;
    const EpisodeBatch sampled = sample_batch(mdp, policy, m, 500, 20240909);
    std::vector<double> totals;
    for (const Episode& e : sampled.episodes) totals.push_back(e.total_reward());
    const double se = testing::sample_moments(totals).stddev / std::sqrt(static_cast<double>(m));
    CHECK(std::abs(naive_average(sampled).point_estimate - exact_return(mdp, policy)) <=
          4.0 * se);
}

TEST_CASE("trajectory importance sampling") {
    const TabularMdp mdp = testing::random_absorbing_mdp(241, 4, 2);
    const Policy pi_b = testing::random_policy(242, 4, 2);
    const Policy pi_e = testing::random_policy(243, 4, 2);

    SUBCASE("identical policies reproduce the naive average bit-exactly") {
        const EpisodeBatch batch = sample_batch(mdp, pi_b, 2000, 100, 20241010);
        CHECK(trajectory_is(batch, pi_b, pi_b).point_estimate ==
              naive_average(batch).point_estimate);
    }

    SUBCASE("an off-target action zeroes the episode weight") {
        EpisodeBatch batch;
        batch.n_states = 4;
        batch.n_actions = 2;
        batch.truncation = 5;
        Episode episode;
        episode.states = {0, 4};
        episode.actions = {1};
        episode.rewards = {10.0};
        episode.absorbed = true;
        batch.episodes.push_back(episode);
        Eigen::MatrixXd deterministic(4, 2);
        for (std::int32_t s = 0; s < 4; ++s) {
            deterministic(s, 0) = 1.0;
            deterministic(s, 1) = 0.0;
        }
        CHECK(trajectory_is(batch, Policy(deterministic), pi_b).point_estimate ==
              doctest::Approx(0.0));
    }

    SUBCASE("unbiasedness against the exact oracle") {
        const std::int64_t m = 100000;
        const EpisodeBatch batch = sample_batch(mdp, pi_b, m, 200, 20241111);
        std::vector<double> weighted;
        weighted.reserve(static_cast<std::size_t>(m));
        for (const Episode& episode : batch.episodes) {
            double weight = 1.0;
            for (std::int64_t t = 0; t < episode.length(); ++t)
                weight *= pi_e.prob(episode.states[static_cast<std::size_t>(t)],
                                    episode.actions[static_cast<std::size_t>(t)]) /
                          pi_b.prob(episode.states[static_cast<std::size_t>(t)],
                                    episode.actions[static_cast<std::size_t>(t)]);
            weighted.push_back(weight * episode.total_reward());
        }
        const double se =
            testing::sample_moments(weighted).stddev / std::sqrt(static_cast<double>(m));
        CHECK(std::abs(trajectory_is(batch, pi_e, pi_b).point_estimate -
                       exact_return(mdp, pi_e)) <= 4.0 * se);
    }
}

TEST_CASE("discounted-weight baseline: hand tuple, population identity, transform check") {
    SUBCASE("single tuple by hand") {
        EpisodeBatch batch;
        batch.n_states = 1;
        batch.n_actions = 1;
        batch.truncation = 10;
        Episode episode;
        episode.states = {0, 1};
        episode.actions = {0};
        episode.rewards = {2.5};
        episode.absorbed = true;
        batch.episodes.push_back(episode);
        const double gamma = 0.9;
        const Policy pi1 = single_action_policy(1);
        const MwlGammaStats stats = mwl_gamma_accumulate(batch, pi1, gamma);
        CHECK(Eigen::MatrixXd(stats.a_hat)(0, 0) == doctest::Approx(-1.0));
        CHECK(stats.b_vec(0) == doctest::Approx(1.0 - gamma));
        const WeightEstimate weights = mwl_gamma_weights(stats, 0.0, false);
        CHECK(weights.u(0) == doctest::Approx(1.0 - gamma).epsilon(1e-10));
        CHECK(weights.w(0) == doctest::Approx(1.0 - gamma).epsilon(1e-10));
        CHECK(mwl_gamma_solve(batch, pi1, gamma, 0.0, false).point_estimate ==
              doctest::Approx(2.5).epsilon(1e-9));
    }

    SUBCASE("unit weights solve the system at the discounted tuple distribution") {
        const TabularMdp mdp = testing::random_absorbing_mdp(251, 4, 2);
        const Policy policy = testing::random_policy(252, 4, 2);
        const double gamma = 0.8;
        const Eigen::VectorXd freq =
            testing::normalized_discounted_occupancy(mdp, policy, gamma);
        const MwlGammaStats stats =
            testing::population_mwl_gamma_stats(mdp, policy, gamma, freq);
        // w = 1 corresponds to u = tuple_freq in the scaled system
        Eigen::MatrixXd g = Eigen::MatrixXd(stats.a_hat);
        for (Eigen::Index i = 0; i < freq.size(); ++i)
            if (freq(i) > 0.0) g.row(i) /= freq(i);
        CHECK((g.transpose() * freq + stats.b_vec).lpNorm<Eigen::Infinity>() <= 1e-9);
        const WeightEstimate weights = mwl_gamma_weights(stats, 0.0, false);
        for (Eigen::Index i = 0; i < weights.w.size(); ++i)
            CHECK(std::abs(weights.w(i) - 1.0) <= 1e-7);
    }

    SUBCASE("on discount-transformed data the estimate is a discounted return") {
        const std::int32_t n = 4;
        const TabularMdp base = testing::random_nonabsorbing_mdp(261, n, 2);
        const Policy policy = testing::random_policy(262, n, 2);
        const double gamma_embed = 0.9;
        const double gamma_mwl = 0.95;
        const TabularMdp transformed = absorbing_from_discounted(base, gamma_embed);

        // population tuple distribution on the transformed model: its
        // normalized occupancy under the behavior policy
        Eigen::VectorXd occupancy = exact_occupancy(transformed, policy);
        const Eigen::VectorXd freq = occupancy / occupancy.sum();
        const MwlGammaStats stats =
            testing::population_mwl_gamma_stats(transformed, policy, gamma_mwl, freq);
        const WeightEstimate weights = mwl_gamma_weights(stats, 0.0, false);
        double estimate = 0.0;
        for (Eigen::Index i = 0; i < weights.w.size(); ++i)
            estimate += weights.w(i) * stats.reward_sums(i);
        estimate /= (1.0 - gamma_mwl);

        // the fitted quantity is the (gamma_mwl * gamma_embed)-discounted
        // return of the base model; as gamma_mwl -> 1 it approaches the
        // embedded discounted return
        const double expected =
            testing::discounted_return(base, policy, gamma_mwl * gamma_embed);
        CHECK(std::abs(estimate - expected) <= 1e-8);
        const double embedded = testing::discounted_return(base, policy, gamma_embed);
        CHECK(std::abs(estimate - embedded) <=
              std::abs(testing::discounted_return(base, policy, 0.5 * gamma_embed) - embedded));
    }
}

TEST_CASE("identical policies: weighted estimate approaches the naive average") {
    const TabularMdp mdp = testing::random_absorbing_mdp(271, 5, 2);
    const Policy policy = testing::random_policy(272, 5, 2);
    const std::int64_t m = 10000;
    const EpisodeBatch batch = sample_batch(mdp, policy, m, 200, 20241212);
    const SufficientStats stats = accumulate_stats(batch, policy);
    const WeightEstimate weights = mwla_solve(stats, 0.0, false);
    const double mwla = mwla_return(stats, weights).point_estimate;
    const double naive = naive_average(batch).point_estimate;
    std::vector<double> totals;
    for (const Episode& e : batch.episodes) totals.push_back(e.total_reward());
    const double se = testing::sample_moments(totals).stddev / std::sqrt(static_cast<double>(m));
    CHECK(std::abs(mwla - naive) <= 3.0 * se);
}
