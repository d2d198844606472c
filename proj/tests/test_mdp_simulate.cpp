#include <doctest.h>

#include <cmath>

#include "ope/mdp.hpp"
#include "ope/simulate.hpp"
#include "support/test_models.hpp"

using namespace ope;

namespace {

/// Single non-absorbing state; absorbs with probability p, self-loops
/// otherwise.
TabularMdp geometric_mdp(double p, double reward = 0.0) {
    std::vector<std::vector<TabularMdp::Transition>> rows(1);
    if (p < 1.0) rows[0].push_back({0, 1.0 - p});
    rows[0].push_back({1, p});
    Eigen::MatrixXd r(1, 1);
    r(0, 0) = reward;
    Eigen::VectorXd mu(1);
    mu(0) = 1.0;
    return TabularMdp(1, 1, std::move(rows), std::move(r), std::move(mu), 0.0);
}

Policy single_action_policy(std::int32_t n) {
    return Policy(Eigen::MatrixXd::Ones(n, 1));
}

/// Deterministic chain 0 -> 1 -> ... -> n-1 -> absorb.
TabularMdp chain_mdp(std::int32_t n, std::vector<double> rewards) {
    std::vector<std::vector<TabularMdp::Transition>> rows(static_cast<std::size_t>(n));
    for (std::int32_t s = 0; s < n; ++s) rows[static_cast<std::size_t>(s)].push_back({s + 1, 1.0});
    Eigen::MatrixXd r(n, 1);
    for (std::int32_t s = 0; s < n; ++s) r(s, 0) = rewards[static_cast<std::size_t>(s)];
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(n);
    mu(0) = 1.0;
    return TabularMdp(n, 1, std::move(rows), std::move(r), std::move(mu), 0.0);
}

}  // namespace

TEST_CASE("model validation rejects broken inputs") {
    std::vector<std::vector<TabularMdp::Transition>> rows(1);
    rows[0].push_back({0, 0.6});  // row sums to 0.6
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(1, 1);
    Eigen::VectorXd mu = Eigen::VectorXd::Ones(1);
    CHECK_THROWS_AS(TabularMdp(1, 1, rows, r, mu, 0.0), ModelError);

    rows[0] = {{1, 1.0}};
    Eigen::VectorXd bad_mu(1);
    bad_mu(0) = 0.5;
    CHECK_THROWS_AS(TabularMdp(1, 1, rows, r, bad_mu, 0.0), ModelError);
    CHECK_THROWS_AS(TabularMdp(1, 1, rows, r, mu, -0.1), ModelError);

    Eigen::MatrixXd bad_policy(1, 2);
    bad_policy << 0.7, 0.7;
    CHECK_THROWS_AS(Policy{bad_policy}, ModelError);
}

TEST_CASE("absorption heuristic warns on a non-absorbing kernel") {
    // pure self-loop: spectral radius 1 under any policy
    std::vector<std::vector<TabularMdp::Transition>> rows(1);
    rows[0].push_back({0, 1.0});
    const TabularMdp mdp(1, 1, rows, Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Ones(1), 0.0);
    CHECK(mdp.uniform_policy_spectral_radius() == doctest::Approx(1.0));
    CHECK_FALSE(mdp.warnings().empty());

    const TabularMdp absorbing = geometric_mdp(0.5);
    CHECK(absorbing.warnings().empty());
}

TEST_CASE("forced absorption gives a length-1 episode") {
    const TabularMdp mdp = geometric_mdp(1.0);
    RngEngine rng(7);
    const Episode episode = sample_episode(mdp, single_action_policy(1), 10, rng);
    CHECK(episode.length() == 1);
    CHECK(episode.absorbed);
    CHECK(episode.states.back() == mdp.absorbing_state());
}

TEST_CASE("deterministic chain truncates at H") {
    const TabularMdp mdp = chain_mdp(3, {0.0, 0.0, 0.0});
    RngEngine rng(3);
    const Episode episode = sample_episode(mdp, single_action_policy(3), 2, rng);
    CHECK(episode.states == std::vector<std::int32_t>{0, 1, 2});
    CHECK(episode.length() == 2);
    CHECK_FALSE(episode.absorbed);
}

TEST_CASE("geometric episode length matches the closed-form mean") {
    // absorb with probability 1/2: mean episode length 2, variance 2
    const TabularMdp mdp = geometric_mdp(0.5);
    const std::int64_t m = 100000;
    const BatchSummary summary =
        simulate_summary(mdp, single_action_policy(1), m, 1000000, 20240101);
    const double sigma = std::sqrt(2.0) / std::sqrt(static_cast<double>(m));
    CHECK(std::abs(summary.mean_length - 2.0) <= 3.0 * sigma);
    CHECK(summary.absorbed_fraction == doctest::Approx(1.0));
}

TEST_CASE("identical seeds give bit-identical episodes") {
    const TabularMdp mdp = testing::random_absorbing_mdp(11, 5, 2, 1.0, 0.25);
    const Policy policy = testing::random_policy(12, 5, 2);
    RngEngine rng_a(99), rng_b(99);
    const Episode a = sample_episode(mdp, policy, 50, rng_a);
    const Episode b = sample_episode(mdp, policy, 50, rng_b);
    CHECK(a.states == b.states);
    CHECK(a.actions == b.actions);
    CHECK(a.rewards == b.rewards);
    CHECK(a.absorbed == b.absorbed);
}

TEST_CASE("batch sampling is independent of the worker count") {
    const TabularMdp mdp = testing::random_absorbing_mdp(21, 6, 3);
    const Policy policy = testing::random_policy(22, 6, 3);
    const EpisodeBatch serial = sample_batch(mdp, policy, 700, 40, 555, 1);
    const EpisodeBatch parallel = sample_batch(mdp, policy, 700, 40, 555, 3);
    REQUIRE(serial.size() == parallel.size());
    for (std::int64_t i = 0; i < serial.size(); ++i) {
        const auto& a = serial.episodes[static_cast<std::size_t>(i)];
        const auto& b = parallel.episodes[static_cast<std::size_t>(i)];
        CHECK(a.states == b.states);
        CHECK(a.rewards == b.rewards);
    }
}

TEST_CASE("reward noise stays inside the stated halfwidth") {
    const TabularMdp mdp = testing::random_absorbing_mdp(31, 3, 2, 1.0, 0.5);
    const Policy policy = testing::random_policy(32, 3, 2);
    const EpisodeBatch batch = sample_batch(mdp, policy, 200, 30, 777);
    for (const Episode& episode : batch.episodes) {
        for (std::int64_t t = 0; t < episode.length(); ++t) {
            const double mean = mdp.mean_reward(episode.states[static_cast<std::size_t>(t)],
                                                episode.actions[static_cast<std::size_t>(t)]);
            CHECK(std::abs(episode.rewards[static_cast<std::size_t>(t)] - mean) <= 0.5);
        }
    }
}
