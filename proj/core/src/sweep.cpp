#include "ope/sweep.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "ope/estimators.hpp"
#include "ope/exact.hpp"
#include "ope/io.hpp"
#include "ope/parallel.hpp"
#include "ope/rng.hpp"
#include "ope/simulate.hpp"
#include "ope/taxi.hpp"

namespace ope::sweep {

namespace {

const std::vector<std::string> kMethods = {"MWLA", "MSWLA", "ON_POLICY",
                                           "NAIVE", "IS",    "MWL_GAMMA"};

bool known_method(const std::string& method) {
    return std::find(kMethods.begin(), kMethods.end(), method) != kMethods.end();
}

std::uint64_t double_bits(double value) { return std::bit_cast<std::uint64_t>(value); }

}  // namespace

SweepConfig parse_sweep_config(const std::string& json_text) {
    const nlohmann::json j = nlohmann::json::parse(json_text);
    SweepConfig config;
    if (j.contains("model_file")) config.model_file = j.at("model_file").get<std::string>();
    if (j.contains("taxi_appear_prob"))
        config.taxi_appear_prob = j.at("taxi_appear_prob").get<double>();
    if (config.model_file.empty() == !config.taxi_appear_prob.has_value())
        throw ModelError("sweep config: exactly one of model_file / taxi_appear_prob required");
    config.pi_e_file = j.at("pi_e_file").get<std::string>();
    config.pi_plus_file = j.at("pi_plus_file").get<std::string>();
    config.alphas = j.at("alphas").get<std::vector<double>>();
    config.truncations = j.at("H").get<std::vector<std::int32_t>>();
    config.episode_counts = j.at("m").get<std::vector<std::int64_t>>();
    config.replicates = j.at("replicates").get<std::int32_t>();
    config.methods = j.at("methods").get<std::vector<std::string>>();
    if (j.contains("gammas")) config.gammas = j.at("gammas").get<std::vector<double>>();
    if (j.contains("lambda")) config.lambda = j.at("lambda").get<double>();
    if (j.contains("nonneg")) config.nonneg = j.at("nonneg").get<bool>();
    config.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("ground_truth")) {
        const auto& g = j.at("ground_truth");
        if (g.contains("episodes"))
            config.ground_truth.episodes = g.at("episodes").get<std::int64_t>();
        if (g.contains("H")) config.ground_truth.truncation = g.at("H").get<std::int32_t>();
        if (g.contains("use_exact"))
            config.ground_truth.use_exact = g.at("use_exact").get<bool>();
    }

    if (config.alphas.empty() || config.truncations.empty() || config.episode_counts.empty() ||
        config.methods.empty())
        throw ModelError("sweep config: alphas/H/m/methods must be nonempty");
    if (config.replicates < 1) throw ModelError("sweep config: replicates must be >= 1");
    for (const std::int32_t truncation : config.truncations)
        if (truncation < 1) throw ModelError("sweep config: H values must be >= 1");
    for (const std::string& method : config.methods) {
        if (!known_method(method)) throw ModelError("sweep config: unknown method " + method);
        if (method == "MWL_GAMMA" && config.gammas.empty())
            throw ModelError("sweep config: MWL_GAMMA requires gammas");
    }
    return config;
}

std::uint64_t derive_record_seed(std::uint64_t master, double alpha, std::int32_t truncation,
                                 std::int64_t m, std::int32_t replicate) {
    std::uint64_t seed = master;
    seed = mix_seed(seed, double_bits(alpha));
    seed = mix_seed(seed, static_cast<std::uint64_t>(truncation));
    seed = mix_seed(seed, static_cast<std::uint64_t>(m));
    seed = mix_seed(seed, static_cast<std::uint64_t>(replicate));
    return seed;
}

GroundTruthResult ground_truth(const TabularMdp& mdp, const Policy& policy, std::int64_t episodes,
                               std::int32_t truncation, std::uint64_t seed, int threads) {
    GroundTruthResult result;
    result.episodes = episodes;
    result.truncation = truncation;
    result.seed = seed;
    result.monte_carlo =
        simulate_summary(mdp, policy, episodes, truncation, seed, threads).mean_total_reward;
    try {
        result.exact_value = exact_return(mdp, policy);
    } catch (const SingularSystemError&) {
        result.exact_value = std::numeric_limits<double>::quiet_NaN();
    }
    return result;
}

void collect(const TabularMdp& mdp, const Policy& policy, std::int64_t m, std::int32_t truncation,
             std::uint64_t seed, const std::string& out_path, bool append, int threads) {
    const EpisodeBatch batch = sample_batch(mdp, policy, m, truncation, seed, threads);
    io::write_episodes(batch, io::hash_hex(io::policy_hash(policy)),
                       io::hash_hex(io::model_hash(mdp)), out_path, append);
}

namespace {

struct CellSpec {
    std::string method;
    double alpha = 0.0;
    std::int32_t truncation = 0;
    std::int64_t m = 0;
    std::optional<double> gamma;
    std::int32_t replicate = 0;
};

ResultRecord run_cell(const CellSpec& cell, const TabularMdp& model, const Policy& pi_e,
                      const Policy& pi_plus, const SweepConfig& config, double truth) {
    ResultRecord record;
    record.method = cell.method;
    record.alpha = cell.alpha;
    record.truncation = cell.truncation;
    record.m = cell.m;
    record.gamma = cell.gamma;
    record.replicate = cell.replicate;
    record.seed = derive_record_seed(config.master_seed, cell.alpha, cell.truncation, cell.m,
                                     cell.replicate);
    const auto start = std::chrono::steady_clock::now();
    try {
        const Policy pi_b = taxi::mix_policies(pi_e, pi_plus, cell.alpha);
        const Policy& data_policy = cell.method == "ON_POLICY" ? pi_e : pi_b;
        const EpisodeBatch batch =
            sample_batch(model, data_policy, cell.m, cell.truncation, record.seed, 1);

        EstimateReport report;
        if (cell.method == "MWLA") {
            const SufficientStats stats = accumulate_stats(batch, pi_e, 1);
            const WeightEstimate weights = mwla_solve(stats, config.lambda, config.nonneg);
            report = mwla_return(stats, weights);
        } else if (cell.method == "MSWLA") {
            report = mswla_solve(batch, pi_e, pi_b, config.lambda, config.nonneg);
        } else if (cell.method == "ON_POLICY") {
            report = on_policy_estimate(batch);
        } else if (cell.method == "NAIVE") {
            report = naive_average(batch);
        } else if (cell.method == "IS") {
            report = trajectory_is(batch, pi_e, pi_b);
        } else if (cell.method == "MWL_GAMMA") {
            report = mwl_gamma_solve(batch, pi_e, *cell.gamma, config.lambda, config.nonneg);
        } else {
            throw ModelError("run_sweep: unknown method " + cell.method);
        }
        record.estimate = report.point_estimate;
        record.squared_error = (report.point_estimate - truth) * (report.point_estimate - truth);
        record.solver_converged = report.solver_converged;
    } catch (const std::exception& e) {
        record.estimate = std::numeric_limits<double>::quiet_NaN();
        record.squared_error = std::numeric_limits<double>::quiet_NaN();
        record.error = e.what();
    }
    record.runtime_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    return record;
}

}  // namespace

SweepOutput run_sweep(const SweepConfig& config) {
    const TabularMdp model = config.taxi_appear_prob.has_value()
                                 ? taxi::build(*config.taxi_appear_prob)
                                 : io::read_model(config.model_file);
    const Policy pi_e = io::read_policy(config.pi_e_file);
    const Policy pi_plus = io::read_policy(config.pi_plus_file);

    SweepOutput output;
    const std::uint64_t truth_seed = mix_seed(config.master_seed, fnv1a64("ground-truth"));
    output.truth = ground_truth(model, pi_e, config.ground_truth.episodes,
                                config.ground_truth.truncation, truth_seed);
    output.scored_against =
        config.ground_truth.use_exact ? output.truth.exact_value : output.truth.monte_carlo;

    std::vector<CellSpec> cells;
    for (const std::string& method : config.methods) {
        const bool uses_gamma = method == "MWL_GAMMA";
        const std::size_t gamma_count = uses_gamma ? config.gammas.size() : 1;
        for (const double alpha : config.alphas) {
            for (const std::int32_t truncation : config.truncations) {
                for (const std::int64_t m : config.episode_counts) {
                    for (std::size_t gi = 0; gi < gamma_count; ++gi) {
                        for (std::int32_t rep = 0; rep < config.replicates; ++rep) {
                            CellSpec cell;
                            cell.method = method;
                            cell.alpha = alpha;
                            cell.truncation = truncation;
                            cell.m = m;
                            if (uses_gamma) cell.gamma = config.gammas[gi];
                            cell.replicate = rep;
                            cells.push_back(std::move(cell));
                        }
                    }
                }
            }
        }
    }

    output.records.resize(cells.size());
    parallel_chunks(static_cast<std::int64_t>(cells.size()), 0, [&](std::int64_t i) {
        output.records[static_cast<std::size_t>(i)] =
            run_cell(cells[static_cast<std::size_t>(i)], model, pi_e, pi_plus, config,
                     output.scored_against);
    });

    for (const double alpha : config.alphas) {
        RegimeAnnotation annotation;
        annotation.alpha = alpha;
        annotation.moment = analysis::estimate_exponential_moment(
            model, taxi::mix_policies(pi_e, pi_plus, alpha));
        if (annotation.moment.has_value()) {
            for (const std::int32_t truncation : config.truncations)
                for (const std::int64_t m : config.episode_counts)
                    annotation.cells.push_back(
                        {truncation, m,
                         analysis::regime_classify(m, truncation, annotation.moment->lambda0,
                                                   annotation.moment->m0)});
        }
        output.regimes.push_back(std::move(annotation));
    }
    return output;
}

std::string records_to_csv(const std::vector<ResultRecord>& records) {
    std::string out = "method,alpha,H,m,gamma,replicate,estimate,squared_error,seed,runtime_ms\n";
    for (const ResultRecord& r : records) {
        out += r.method;
        out += ',';
        out += io::format_double(r.alpha);
        out += ',';
        out += std::to_string(r.truncation);
        out += ',';
        out += std::to_string(r.m);
        out += ',';
        if (r.gamma.has_value()) out += io::format_double(*r.gamma);
        out += ',';
        out += std::to_string(r.replicate);
        out += ',';
        out += io::format_double(r.estimate);
        out += ',';
        out += io::format_double(r.squared_error);
        out += ',';
        out += std::to_string(r.seed);
        // runtime is wall-clock and would break byte-stable reruns; the CSV
        // carries a null placeholder, timings go to the run log
        out += ",0\n";
    }
    return out;
}

std::vector<ResultRecord> parse_results_csv(const std::string& text) {
    std::istringstream stream(text);
    std::string line;
    if (!std::getline(stream, line)) throw ModelError("results csv: empty input");
    std::vector<ResultRecord> records;
    while (std::getline(stream, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (fields.size() == 9) fields.push_back("");  // trailing empty runtime
        if (fields.size() != 10) throw ModelError("results csv: malformed line: " + line);
        ResultRecord r;
        r.method = fields[0];
        r.alpha = std::strtod(fields[1].c_str(), nullptr);
        r.truncation = static_cast<std::int32_t>(std::stoll(fields[2]));
        r.m = std::stoll(fields[3]);
        if (!fields[4].empty()) r.gamma = std::strtod(fields[4].c_str(), nullptr);
        r.replicate = static_cast<std::int32_t>(std::stoll(fields[5]));
        r.estimate = std::strtod(fields[6].c_str(), nullptr);
        r.squared_error = std::strtod(fields[7].c_str(), nullptr);
        r.seed = std::stoull(fields[8]);
        r.runtime_ms = fields[9].empty() ? 0 : std::stoll(fields[9]);
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<SummaryRow> report(const std::vector<ResultRecord>& records) {
    using Key = std::tuple<std::string, double, std::int32_t, std::int64_t, double, bool>;
    std::map<Key, std::vector<const ResultRecord*>> cells;
    for (const ResultRecord& r : records) {
        const Key key{r.method, r.alpha, r.truncation, r.m, r.gamma.value_or(0.0),
                      r.gamma.has_value()};
        cells[key].push_back(&r);
    }
    std::vector<SummaryRow> rows;
    rows.reserve(cells.size());
    for (const auto& [key, group] : cells) {
        SummaryRow row;
        row.method = std::get<0>(key);
        row.alpha = std::get<1>(key);
        row.truncation = std::get<2>(key);
        row.m = std::get<3>(key);
        if (std::get<5>(key)) row.gamma = std::get<4>(key);
        row.n = static_cast<std::int64_t>(group.size());

        double sum = 0.0, sq_sum = 0.0, mse = 0.0;
        for (const ResultRecord* r : group) {
            sum += r->estimate;
            mse += r->squared_error;
        }
        row.mean_estimate = sum / static_cast<double>(row.n);
        row.mse = mse / static_cast<double>(row.n);
        for (const ResultRecord* r : group) {
            const double d = r->estimate - row.mean_estimate;
            sq_sum += d * d;
        }
        if (row.n > 1) {
            const double sample_std = std::sqrt(sq_sum / static_cast<double>(row.n - 1));
            row.band_halfwidth = 2.0 * sample_std / std::sqrt(static_cast<double>(row.n));
        } else {
            row.band_halfwidth = 0.0;
            row.flagged_single = true;
        }
        row.log10_mse = std::log10(row.mse);
        row.log10_m = std::log10(static_cast<double>(row.m));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string summary_to_csv(const std::vector<SummaryRow>& rows,
                           std::optional<double> markov_epsilon) {
    std::string out =
        "method,alpha,H,m,gamma,N,mean_estimate,band_halfwidth,mse,log10_mse,log10_m,"
        "single_replicate";
    if (markov_epsilon.has_value()) out += ",markov_tail_bound";
    out += '\n';
    for (const SummaryRow& row : rows) {
        out += row.method;
        out += ',';
        out += io::format_double(row.alpha);
        out += ',';
        out += std::to_string(row.truncation);
        out += ',';
        out += std::to_string(row.m);
        out += ',';
        if (row.gamma.has_value()) out += io::format_double(*row.gamma);
        out += ',';
        out += std::to_string(row.n);
        out += ',';
        out += io::format_double(row.mean_estimate);
        out += ',';
        out += io::format_double(row.band_halfwidth);
        out += ',';
        out += io::format_double(row.mse);
        out += ',';
        out += io::format_double(row.log10_mse);
        out += ',';
        out += io::format_double(row.log10_m);
        out += ',';
        out += row.flagged_single ? '1' : '0';
        if (markov_epsilon.has_value()) {
            out += ',';
            out += io::format_double(analysis::markov_bound(row.mse, *markov_epsilon));
        }
        out += '\n';
    }
    return out;
}

}  // namespace ope::sweep
