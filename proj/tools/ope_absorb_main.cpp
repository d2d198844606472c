// Command-line front end: builds the taxi environment, trains soft-max
// policies, collects episode datasets, computes ground truths, runs single
// estimates and full sweep/report pipelines over the library's file formats.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ope/analysis.hpp"
#include "ope/estimators.hpp"
#include "ope/io.hpp"
#include "ope/parallel.hpp"
#include "ope/rng.hpp"
#include "ope/sweep.hpp"
#include "ope/taxi.hpp"

namespace {

using nlohmann::json;

void print_warnings(const ope::TabularMdp& mdp) {
    for (const std::string& warning : mdp.warnings())
        std::cerr << "warning: " << warning << "\n";
}

void emit(const json& payload, const std::string& out_path) {
    const std::string text = payload.dump(2) + "\n";
    if (out_path.empty())
        std::cout << text;
    else
        ope::io::write_text_file(out_path, text);
}

ope::Policy load_behavior_policy(const std::string& pi_b_file, const std::string& pi_e_file,
                                 const std::string& pi_plus_file,
                                 std::optional<double> alpha) {
    if (!pi_b_file.empty()) return ope::io::read_policy(pi_b_file);
    if (pi_e_file.empty() || pi_plus_file.empty() || !alpha.has_value())
        throw ope::ModelError(
            "behavior policy: pass --pi-b, or --pi-e/--pi-plus with --alpha to mix one");
    return ope::taxi::mix_policies(ope::io::read_policy(pi_e_file),
                                   ope::io::read_policy(pi_plus_file), *alpha);
}

int run(int argc, char** argv) {
    CLI::App app{"Off-policy evaluation toolkit for absorbing MDPs"};
    app.require_subcommand(1);

    // ---- taxi-build ----
    auto* taxi_build = app.add_subcommand("taxi-build", "Write the episodic taxi model file");
    double appear_prob = 0.05;
    std::string taxi_out;
    taxi_build->add_option("--appear-prob", appear_prob, "Per-corner passenger flip probability")
        ->check(CLI::Range(0.0, 1.0));
    taxi_build->add_option("--out", taxi_out, "Model file path")->required();
    taxi_build->callback([&] {
        const ope::TabularMdp env = ope::taxi::build(appear_prob);
        print_warnings(env);
        ope::io::write_model(env, taxi_out);
        json meta{{"appear_prob", appear_prob},
                  {"n_states", env.n_states()},
                  {"n_actions", env.n_actions()},
                  {"env_hash", ope::io::hash_hex(ope::io::model_hash(env))}};
        ope::io::write_text_file(taxi_out + ".meta.json", meta.dump(2) + "\n");
        std::cerr << "wrote " << taxi_out << " (" << env.n_states() << " states)\n";
    });

    // ---- train-policies ----
    auto* train = app.add_subcommand(
        "train-policies", "Q-learning with soft-max preferences on the taxi environment");
    double train_appear_prob = 0.05;
    std::int64_t iters_target = 400000, iters_aux = 60000;
    double step_size = 0.1, temperature = 1.0, discount = 0.99;
    std::uint64_t train_seed = 1;
    std::string out_target, out_aux;
    train->add_option("--appear-prob", train_appear_prob, "Taxi flip probability")
        ->check(CLI::Range(0.0, 1.0));
    train->add_option("--iters-target", iters_target, "Iterations for the target policy");
    train->add_option("--iters-aux", iters_aux, "Iterations for the auxiliary policy");
    train->add_option("--step-size", step_size, "Q-learning step size");
    train->add_option("--temperature", temperature, "Soft-max temperature");
    train->add_option("--discount", discount, "Q-learning training discount");
    train->add_option("--seed", train_seed, "Training seed");
    train->add_option("--out-target", out_target, "Target policy file")->required();
    train->add_option("--out-aux", out_aux, "Auxiliary policy file")->required();
    train->callback([&] {
        const ope::TabularMdp env = ope::taxi::build(train_appear_prob);
        print_warnings(env);
        const std::vector<std::uint8_t> mask = ope::taxi::action_mask();
        ope::taxi::QLearningOptions options;
        options.step_size = step_size;
        options.temperature = temperature;
        options.discount = discount;

        options.iterations = iters_target;
        const ope::Policy pi_e =
            ope::taxi::q_learning_softmax(env, options, ope::mix_seed(train_seed, 1), &mask);
        ope::io::write_policy(pi_e, out_target);
        options.iterations = iters_aux;
        const ope::Policy pi_plus =
            ope::taxi::q_learning_softmax(env, options, ope::mix_seed(train_seed, 2), &mask);
        ope::io::write_policy(pi_plus, out_aux);

        json meta{{"appear_prob", train_appear_prob},
                  {"iters_target", iters_target},
                  {"iters_aux", iters_aux},
                  {"step_size", step_size},
                  {"temperature", temperature},
                  {"discount", discount},
                  {"seed", train_seed},
                  {"target_policy_hash", ope::io::hash_hex(ope::io::policy_hash(pi_e))},
                  {"aux_policy_hash", ope::io::hash_hex(ope::io::policy_hash(pi_plus))}};
        ope::io::write_text_file(out_target + ".meta.json", meta.dump(2) + "\n");
        std::cerr << "wrote " << out_target << " and " << out_aux << "\n";
    });

    // ---- collect ----
    auto* collect = app.add_subcommand("collect", "Sample a truncated episode dataset");
    std::string collect_model, collect_policy, collect_pi_e, collect_pi_plus, collect_out;
    std::optional<double> collect_alpha;
    std::int64_t collect_m = 1000;
    std::int32_t collect_h = 100;
    std::uint64_t collect_seed = 0;
    bool collect_append = false;
    collect->add_option("--model", collect_model, "Model file")->required();
    collect->add_option("--policy", collect_policy, "Behavior policy file");
    collect->add_option("--pi-e", collect_pi_e, "Target policy file (for --alpha mixing)");
    collect->add_option("--pi-plus", collect_pi_plus, "Auxiliary policy file");
    collect->add_option("--alpha", collect_alpha, "Mixing weight for the behavior policy");
    collect->add_option("--m", collect_m, "Episode count")->check(CLI::NonNegativeNumber);
    collect->add_option("--H", collect_h, "Truncation level")->check(CLI::PositiveNumber);
    collect->add_option("--seed", collect_seed, "Sampling seed");
    collect->add_option("--out", collect_out, "Episode file path")->required();
    collect->add_flag("--append", collect_append, "Append to an existing dataset");
    collect->callback([&] {
        const ope::TabularMdp mdp = ope::io::read_model(collect_model);
        print_warnings(mdp);
        const ope::Policy policy =
            load_behavior_policy(collect_policy, collect_pi_e, collect_pi_plus, collect_alpha);
        ope::sweep::collect(mdp, policy, collect_m, collect_h, collect_seed, collect_out,
                            collect_append);
        std::cerr << "wrote " << collect_m << " episodes to " << collect_out << "\n";
    });

    // ---- ground-truth ----
    auto* truth_cmd = app.add_subcommand(
        "ground-truth", "Monte-Carlo and closed-form expected return of a policy");
    std::string truth_model, truth_policy, truth_out;
    std::int64_t truth_episodes = 2000000;
    std::int32_t truth_h = 500;
    std::uint64_t truth_seed = 0;
    truth_cmd->add_option("--model", truth_model, "Model file")->required();
    truth_cmd->add_option("--policy", truth_policy, "Policy file")->required();
    truth_cmd->add_option("--episodes", truth_episodes, "Monte-Carlo episode count");
    truth_cmd->add_option("--H", truth_h, "Truncation level")->check(CLI::PositiveNumber);
    truth_cmd->add_option("--seed", truth_seed, "Sampling seed");
    truth_cmd->add_option("--out", truth_out, "Write the JSON report here instead of stdout");
    truth_cmd->callback([&] {
        const ope::TabularMdp mdp = ope::io::read_model(truth_model);
        print_warnings(mdp);
        const ope::Policy policy = ope::io::read_policy(truth_policy);
        const ope::sweep::GroundTruthResult result =
            ope::sweep::ground_truth(mdp, policy, truth_episodes, truth_h, truth_seed);
        emit(json{{"monte_carlo", result.monte_carlo},
                  {"exact", result.exact_value},
                  {"episodes", result.episodes},
                  {"H", result.truncation},
                  {"seed", result.seed}},
             truth_out);
    });

    // ---- estimate ----
    auto* estimate = app.add_subcommand("estimate", "Run one estimator on an episode dataset");
    std::string est_data, est_method = "MWLA", est_pi_e, est_pi_b, est_pi_plus, est_out;
    std::optional<double> est_alpha, est_gamma;
    double est_lambda = 0.001;
    bool est_nonneg = true;
    estimate->add_option("--data", est_data, "Episode file")->required();
    estimate->add_option("--method", est_method, "MWLA|MSWLA|ON_POLICY|NAIVE|IS|MWL_GAMMA");
    estimate->add_option("--pi-e", est_pi_e, "Target policy file");
    estimate->add_option("--pi-b", est_pi_b, "Behavior policy file (MSWLA, IS)");
    estimate->add_option("--pi-plus", est_pi_plus, "Auxiliary policy file (for --alpha mixing)");
    estimate->add_option("--alpha", est_alpha, "Mixing weight for the behavior policy");
    estimate->add_option("--gamma", est_gamma, "Discount for MWL_GAMMA");
    estimate->add_option("--lambda", est_lambda, "Regularization factor");
    estimate->add_option("--nonneg", est_nonneg,
                         "Nonnegative QP (default) vs unconstrained minimum-norm solve");
    estimate->add_option("--out", est_out, "Write the JSON report here instead of stdout");
    estimate->callback([&] {
        const ope::EpisodeBatch batch = ope::io::read_episodes(est_data);
        const bool nonneg = est_nonneg;
        ope::EstimateReport report;
        if (est_method == "NAIVE") {
            report = ope::naive_average(batch);
        } else if (est_method == "ON_POLICY") {
            report = ope::on_policy_estimate(batch);
        } else {
            if (est_pi_e.empty())
                throw ope::ModelError("estimate: --pi-e is required for " + est_method);
            const ope::Policy pi_e = ope::io::read_policy(est_pi_e);
            if (est_method == "MWLA") {
                const ope::SufficientStats stats =
                    ope::accumulate_stats(batch, pi_e, ope::resolve_threads(0));
                const ope::WeightEstimate weights =
                    ope::mwla_solve(stats, est_lambda, nonneg);
                if (!weights.converged)
                    std::cerr << "warning: weight solve stopped at the iteration cap with "
                                 "residual "
                              << weights.residual_norm << "\n";
                report = ope::mwla_return(stats, weights);
            } else if (est_method == "MSWLA") {
                const ope::Policy pi_b =
                    load_behavior_policy(est_pi_b, est_pi_e, est_pi_plus, est_alpha);
                report = ope::mswla_solve(batch, pi_e, pi_b, est_lambda, nonneg);
            } else if (est_method == "IS") {
                const ope::Policy pi_b =
                    load_behavior_policy(est_pi_b, est_pi_e, est_pi_plus, est_alpha);
                report = ope::trajectory_is(batch, pi_e, pi_b);
            } else if (est_method == "MWL_GAMMA") {
                if (!est_gamma.has_value())
                    throw ope::ModelError("estimate: MWL_GAMMA requires --gamma");
                report = ope::mwl_gamma_solve(batch, pi_e, *est_gamma, est_lambda, nonneg);
            } else {
                throw ope::ModelError("estimate: unknown method " + est_method);
            }
        }
        json payload{{"method", report.method},
                     {"estimate", report.point_estimate},
                     {"m", report.m},
                     {"H", report.truncation},
                     {"seed", report.seed},
                     {"solver_converged", report.solver_converged}};
        if (report.lambda.has_value()) payload["lambda"] = *report.lambda;
        if (report.gamma.has_value()) payload["gamma"] = *report.gamma;
        emit(payload, est_out);
    });

    // ---- sweep ----
    auto* sweep_cmd = app.add_subcommand(
        "sweep", "Seed-replicated sweep over (method, alpha, H, m) from a JSON config");
    std::string sweep_config_path, sweep_out;
    std::vector<double> sweep_alphas, sweep_gammas;
    std::vector<std::int32_t> sweep_hs;
    std::vector<std::int64_t> sweep_ms;
    std::vector<std::string> sweep_methods;
    std::optional<std::int32_t> sweep_replicates;
    std::optional<double> sweep_lambda;
    std::optional<bool> sweep_nonneg;
    std::optional<std::uint64_t> sweep_seed;
    sweep_cmd->add_option("--config", sweep_config_path, "Sweep config JSON")->required();
    sweep_cmd->add_option("--out", sweep_out, "Results CSV path")->required();
    sweep_cmd->add_option("--alpha", sweep_alphas, "Override the alpha grid");
    sweep_cmd->add_option("--H", sweep_hs, "Override the truncation grid");
    sweep_cmd->add_option("--m", sweep_ms, "Override the episode-count grid");
    sweep_cmd->add_option("--method", sweep_methods, "Override the method list");
    sweep_cmd->add_option("--gamma", sweep_gammas, "Override the MWL_GAMMA discount grid");
    sweep_cmd->add_option("--replicates", sweep_replicates, "Override the replicate count");
    sweep_cmd->add_option("--lambda", sweep_lambda, "Override the regularization factor");
    sweep_cmd->add_option("--nonneg", sweep_nonneg, "Override the nonnegativity flag");
    sweep_cmd->add_option("--seed", sweep_seed, "Override the master seed");
    sweep_cmd->callback([&] {
        ope::sweep::SweepConfig config =
            ope::sweep::parse_sweep_config(ope::io::read_text_file(sweep_config_path));
        if (!sweep_alphas.empty()) config.alphas = sweep_alphas;
        if (!sweep_hs.empty()) config.truncations = sweep_hs;
        if (!sweep_ms.empty()) config.episode_counts = sweep_ms;
        if (!sweep_methods.empty()) config.methods = sweep_methods;
        if (!sweep_gammas.empty()) config.gammas = sweep_gammas;
        if (sweep_replicates.has_value()) config.replicates = *sweep_replicates;
        if (sweep_lambda.has_value()) config.lambda = *sweep_lambda;
        if (sweep_nonneg.has_value()) config.nonneg = *sweep_nonneg;
        if (sweep_seed.has_value()) config.master_seed = *sweep_seed;

        const ope::sweep::SweepOutput output = ope::sweep::run_sweep(config);
        ope::io::write_text_file(sweep_out, ope::sweep::records_to_csv(output.records));

        std::int64_t failed = 0, slow = 0;
        std::int64_t total_ms = 0;
        for (const auto& record : output.records) {
            if (!record.error.empty()) {
                ++failed;
                std::cerr << "record failed (" << record.method << ", alpha=" << record.alpha
                          << ", H=" << record.truncation << ", m=" << record.m
                          << ", rep=" << record.replicate << "): " << record.error << "\n";
            }
            if (!record.solver_converged) ++slow;
            total_ms += record.runtime_ms;
        }
        json regimes = json::array();
        for (const auto& annotation : output.regimes) {
            json entry{{"alpha", annotation.alpha}};
            if (annotation.moment.has_value()) {
                entry["lambda0"] = annotation.moment->lambda0;
                entry["M0"] = annotation.moment->m0;
                json cells = json::array();
                for (const auto& cell : annotation.cells)
                    cells.push_back(json{{"H", cell.truncation},
                                         {"m", cell.m},
                                         {"regime", ope::analysis::to_string(cell.regime)}});
                entry["cells"] = cells;
            } else {
                entry["note"] = "no grid lambda with a finite absorption-time moment";
            }
            regimes.push_back(entry);
        }
        json meta{{"master_seed", config.master_seed},
                  {"records", output.records.size()},
                  {"failed_records", failed},
                  {"unconverged_solves", slow},
                  {"ground_truth_monte_carlo", output.truth.monte_carlo},
                  {"ground_truth_exact", output.truth.exact_value},
                  {"ground_truth_episodes", output.truth.episodes},
                  {"ground_truth_H", output.truth.truncation},
                  {"scored_against", output.scored_against},
                  {"bound_regimes", regimes},
                  {"total_estimator_ms", total_ms}};
        ope::io::write_text_file(sweep_out + ".meta.json", meta.dump(2) + "\n");
        std::cerr << "wrote " << output.records.size() << " records to " << sweep_out << " ("
                  << failed << " failed, " << slow << " unconverged solves)\n";
    });

    // ---- report ----
    auto* report_cmd =
        app.add_subcommand("report", "Summarize a results CSV into per-cell MSE and bands");
    std::string report_results, report_out;
    std::optional<double> report_epsilon;
    report_cmd->add_option("--results", report_results, "Results CSV from sweep")->required();
    report_cmd->add_option("--out", report_out, "Summary CSV path (stdout when omitted)");
    report_cmd->add_option("--epsilon", report_epsilon,
                           "Add a Markov tail-probability bound column for this accuracy");
    report_cmd->callback([&] {
        const auto records =
            ope::sweep::parse_results_csv(ope::io::read_text_file(report_results));
        const std::string summary =
            ope::sweep::summary_to_csv(ope::sweep::report(records), report_epsilon);
        if (report_out.empty())
            std::cout << summary;
        else
            ope::io::write_text_file(report_out, summary);
    });

    CLI11_PARSE(app, argc, argv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
