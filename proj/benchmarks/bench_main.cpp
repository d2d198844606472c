#include <benchmark/benchmark.h>

#include "ope/estimators.hpp"
#include "ope/exact.hpp"
#include "ope/simulate.hpp"
#include "ope/taxi.hpp"
#include "support/test_models.hpp"

using namespace ope;

namespace {

static void BM_ExactOccupancy(benchmark::State& state) {
    const std::int32_t n = static_cast<std::int32_t>(state.range(0));
    const TabularMdp mdp = testing::random_absorbing_mdp(1, n, 4);
    const Policy policy = testing::random_policy(2, n, 4);
    for (auto _ : state) benchmark::DoNotOptimize(exact_occupancy(mdp, policy));
}
BENCHMARK(BM_ExactOccupancy)->Arg(8)->Arg(64)->Arg(256);

static void BM_SampleBatch(benchmark::State& state) {
    const TabularMdp mdp = testing::random_absorbing_mdp(3, 16, 4);
    const Policy policy = testing::random_policy(4, 16, 4);
    const std::int64_t m = state.range(0);
    for (auto _ : state)
        benchmark::DoNotOptimize(sample_batch(mdp, policy, m, 100, 7, 1));
    state.SetItemsProcessed(state.iterations() * m);
}
BENCHMARK(BM_SampleBatch)->Arg(1000)->Arg(10000);

static void BM_AccumulateStats(benchmark::State& state) {
    const TabularMdp mdp = testing::random_absorbing_mdp(5, 16, 4);
    const Policy pi_b = testing::random_policy(6, 16, 4);
    const Policy pi_e = testing::random_policy(7, 16, 4);
    const EpisodeBatch batch = sample_batch(mdp, pi_b, state.range(0), 100, 8, 1);
    for (auto _ : state) benchmark::DoNotOptimize(accumulate_stats(batch, pi_e));
    state.SetItemsProcessed(state.iterations() * batch.size());
}
BENCHMARK(BM_AccumulateStats)->Arg(1000)->Arg(10000);

static void BM_MwlaSolve(benchmark::State& state) {
    const std::int32_t n = static_cast<std::int32_t>(state.range(0));
    const TabularMdp mdp = testing::random_absorbing_mdp(9, n, 4);
    const Policy pi_b = testing::random_policy(10, n, 4);
    const Policy pi_e = testing::random_policy(11, n, 4);
    const EpisodeBatch batch = sample_batch(mdp, pi_b, 5000, 100, 12, 1);
    const SufficientStats stats = accumulate_stats(batch, pi_e);
    for (auto _ : state) benchmark::DoNotOptimize(mwla_solve(stats, 0.001, true));
}
BENCHMARK(BM_MwlaSolve)->Arg(8)->Arg(32);

static void BM_TaxiBuild(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(taxi::build(0.05));
}
BENCHMARK(BM_TaxiBuild);

static void BM_TaxiQLearning(benchmark::State& state) {
    const TabularMdp env = taxi::build(0.05);
    const std::vector<std::uint8_t> mask = taxi::action_mask();
    taxi::QLearningOptions options;
    options.iterations = state.range(0);
    for (auto _ : state)
        benchmark::DoNotOptimize(taxi::q_learning_softmax(env, options, 13, &mask));
    state.SetItemsProcessed(state.iterations() * options.iterations);
}
BENCHMARK(BM_TaxiQLearning)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
