#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ope/analysis.hpp"
#include "ope/mdp.hpp"

namespace ope::sweep {

struct GroundTruthSettings {
    std::int64_t episodes = 2000000;
    std::int32_t truncation = 500;
    bool use_exact = false;  // score records against the closed-form value instead
};

/// Grid description for a seed-replicated sweep over
/// (method, alpha, H, m, replicate) and, for MWL_GAMMA, gamma.
struct SweepConfig {
    std::string model_file;                 // one of model_file /
    std::optional<double> taxi_appear_prob; // taxi_appear_prob must be set
    std::string pi_e_file;
    std::string pi_plus_file;
    std::vector<double> alphas;
    std::vector<std::int32_t> truncations;
    std::vector<std::int64_t> episode_counts;
    std::int32_t replicates = 1;
    std::vector<std::string> methods;
    std::vector<double> gammas;
    double lambda = 0.001;
    bool nonneg = true;
    std::uint64_t master_seed = 0;
    GroundTruthSettings ground_truth;
};

SweepConfig parse_sweep_config(const std::string& json_text);

struct ResultRecord {
    std::string method;
    double alpha = 0.0;
    std::int32_t truncation = 0;
    std::int64_t m = 0;
    std::optional<double> gamma;
    std::int32_t replicate = 0;
    double estimate = 0.0;
    double squared_error = 0.0;
    std::uint64_t seed = 0;
    std::int64_t runtime_ms = 0;  // measured in memory; written as 0 in CSV
    bool solver_converged = true;
    std::string error;  // nonempty when the cell failed; estimate is NaN then
};

/// Stated seed-derivation scheme for one record: chain mix_seed over the
/// master seed, the bit pattern of alpha, H, m and the replicate index, in
/// that order. The method is deliberately not folded in: estimators at one
/// grid point and replicate observe the same behavior data, so per-replicate
/// comparisons are paired (and IS on identical policies reproduces the naive
/// average record exactly).
std::uint64_t derive_record_seed(std::uint64_t master, double alpha, std::int32_t truncation,
                                 std::int64_t m, std::int32_t replicate);

struct GroundTruthResult {
    double monte_carlo = 0.0;
    double exact_value = 0.0;  // NaN when the exact solve fails
    std::int64_t episodes = 0;
    std::int32_t truncation = 0;
    std::uint64_t seed = 0;
};

/// Mean truncated Monte-Carlo return plus the closed-form value; both are
/// reported, the sweep scores against one of them per configuration.
GroundTruthResult ground_truth(const TabularMdp& mdp, const Policy& policy, std::int64_t episodes,
                               std::int32_t truncation, std::uint64_t seed, int threads = 0);

/// Samples a batch and writes the episode file (deterministic per seed).
void collect(const TabularMdp& mdp, const Policy& policy, std::int64_t m, std::int32_t truncation,
             std::uint64_t seed, const std::string& out_path, bool append = false,
             int threads = 0);

/// Error-bound-regime annotation for one behavior mixture: the largest
/// convergent exponential moment of the absorption time and, per (H, m)
/// grid point, which side of the regime threshold the configuration is on.
struct RegimeCell {
    std::int32_t truncation = 0;
    std::int64_t m = 0;
    analysis::BoundRegime regime = analysis::BoundRegime::LargeH;
};

struct RegimeAnnotation {
    double alpha = 0.0;
    std::optional<analysis::ExponentialMoment> moment;
    std::vector<RegimeCell> cells;  // empty when no grid moment converges
};

struct SweepOutput {
    std::vector<ResultRecord> records;
    GroundTruthResult truth;
    double scored_against = 0.0;  // the value squared errors were taken against
    std::vector<RegimeAnnotation> regimes;
};

/// Runs the full grid. Cells execute on a worker pool (OPE_ABSORB_THREADS
/// caps the width) but each record owns its seed-derived streams and lands
/// in a pre-assigned slot, so the output is byte-stable across worker
/// counts. Per-record failures are captured in the record, never aborting
/// the sweep.
SweepOutput run_sweep(const SweepConfig& config);

/// CSV with header method,alpha,H,m,gamma,replicate,estimate,squared_error,
/// seed,runtime_ms; 17-significant-digit decimals; gamma empty when unused;
/// runtime_ms written as 0 so repeated runs are byte-identical.
std::string records_to_csv(const std::vector<ResultRecord>& records);
std::vector<ResultRecord> parse_results_csv(const std::string& text);

struct SummaryRow {
    std::string method;
    double alpha = 0.0;
    std::int32_t truncation = 0;
    std::int64_t m = 0;
    std::optional<double> gamma;
    std::int64_t n = 0;
    double mean_estimate = 0.0;
    double band_halfwidth = 0.0;  // 2 * sample std / sqrt(n); 0 and flagged for n = 1
    double mse = 0.0;
    double log10_mse = 0.0;
    double log10_m = 0.0;
    bool flagged_single = false;
};

/// Per-cell summary: MSE, mean estimate, mean +- 2S/sqrt(N) band and
/// log-scale columns. Cells are ordered by (method, alpha, H, m, gamma).
std::vector<SummaryRow> report(const std::vector<ResultRecord>& records);

/// When markov_epsilon is given, a trailing markov_tail_bound column carries
/// min(1, mse/epsilon^2), the tail-probability bound for missing the target
/// by more than epsilon.
std::string summary_to_csv(const std::vector<SummaryRow>& rows,
                           std::optional<double> markov_epsilon = std::nullopt);

}  // namespace ope::sweep
