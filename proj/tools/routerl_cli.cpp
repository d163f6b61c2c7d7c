// Command-line front end: train / eval / solve / gen-instances.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "routerl/harness/checkpoint.hpp"
#include "routerl/harness/evaluate.hpp"
#include "routerl/harness/trainer.hpp"
#include "routerl/problems/io.hpp"
#include "routerl/problems/problem.hpp"
#include "routerl/rng.hpp"
#include "routerl/search/search.hpp"

namespace {

using namespace routerl;

std::vector<search::Strategy> parse_strategies(const std::string& csv) {
    std::vector<search::Strategy> out;
    std::string cur;
    for (char c : std::string(csv + ",")) {
        if (c != ',') {
            cur += c;
            continue;
        }
        if (!cur.empty()) out.push_back(search::strategy_from_string(cur));
        cur.clear();
    }
    if (out.empty()) throw ConfigError("no strategies given");
    return out;
}

void print_eval_table(const harness::EvalReport& report) {
    std::printf("%-14s %12s %12s %10s %12s %12s %10s\n", "strategy", "mean_length",
                "std_length", "mean_gap", "work", "env_steps", "seconds");
    for (const auto& r : report.rows)
        std::printf("%-14s %12.6f %12.6f %9.4f%% %12lld %12lld %10.3f\n",
                    search::to_string(r.strategy).c_str(), r.mean_length, r.std_length,
                    100.0 * r.mean_gap, static_cast<long long>(r.work),
                    static_cast<long long>(r.env_steps), r.wall_time);
    std::printf("reference: %s over %d instances\n", report.reference.c_str(),
                report.instances);
}

int run_train(const std::string& config_path, const std::vector<std::string>& overrides) {
    const harness::ExperimentConfig cfg = harness::load_config(config_path, overrides);
    const harness::TrainOutcome out = harness::train(cfg);
    std::printf("iterations: %d\n", out.iterations);
    std::printf("env_steps: %lld\n", static_cast<long long>(out.env_steps));
    if (!std::isnan(out.best_eval_length))
        std::printf("best_eval_length: %.6f\n", out.best_eval_length);
    if (out.diverged) std::printf("stopped: diverged (last good checkpoint kept)\n");
    if (out.reached_target) std::printf("stopped: reached target eval length\n");
    std::printf("config: %s\nmetrics: %s\nlast checkpoint: %s\n", out.config_path.c_str(),
                out.metrics_path.c_str(), out.last_checkpoint_path.c_str());
    if (!out.best_checkpoint_path.empty())
        std::printf("best checkpoint: %s\n", out.best_checkpoint_path.c_str());
    return out.diverged ? 1 : 0;
}

int run_eval(const std::string& ckpt_path, const std::string& instances_path,
             const std::string& strategies_csv, const harness::EvalOptions& opt,
             const std::string& out_path) {
    const harness::Checkpoint ckpt = harness::load_checkpoint(ckpt_path);
    model::AttentionModel m = harness::model_from_checkpoint(ckpt);
    const auto instances = problems::read_instances_file(instances_path);
    const auto strategies = parse_strategies(strategies_csv);
    const auto report = harness::evaluate_strategies(m, instances, strategies, opt);
    print_eval_table(report);
    if (!out_path.empty()) {
        harness::write_eval_table(out_path, report);
        std::printf("table: %s\n", out_path.c_str());
    }
    return 0;
}

int run_solve(const std::string& ckpt_path, const std::string& instances_path,
              const std::string& strategy_name, int width, int samples,
              const std::vector<int>& starts, int epochs, std::uint64_t seed,
              const std::string& out_path) {
    const harness::Checkpoint ckpt = harness::load_checkpoint(ckpt_path);
    model::AttentionModel m = harness::model_from_checkpoint(ckpt);
    const auto instances = problems::read_instances_file(instances_path);
    const search::Strategy strategy = search::strategy_from_string(strategy_name);
    Rng rng(seed_stream(seed, "solve"));

    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path, std::ios::trunc);
        if (!file) throw FormatError("cannot write solutions: " + out_path);
        os = &file;
    }
    for (const auto& inst : instances) {
        search::SearchResult r;
        switch (strategy) {
            case search::Strategy::Greedy:
                r = search::greedy_rollout(inst, m);
                break;
            case search::Strategy::Sample:
                r = search::sample_rollouts(inst, m, samples, rng);
                break;
            case search::Strategy::MultiGreedy: {
                std::vector<int> use = starts;
                if (use.empty()) {
                    const int lo = inst.kind == problems::ProblemKind::TSP ? 0 : 1;
                    for (int i = lo; i < inst.num_nodes(); ++i) use.push_back(i);
                }
                r = search::multi_greedy(inst, m, use);
                break;
            }
            case search::Strategy::Beam:
                r = search::beam_search(inst, m, width);
                break;
            case search::Strategy::ActiveSearch: {
                search::ActiveSearchConfig cfg;
                cfg.num_samples = samples;
                cfg.num_epochs = epochs;
                r = search::active_search(inst, m, cfg, rng);
                break;
            }
            case search::Strategy::BranchAndBound:
                r = search::dfs_branch_and_bound(inst, m);
                break;
        }
        nlohmann::ordered_json line;
        line["strategy"] = search::to_string(r.strategy);
        line["length"] = r.best_length;
        line["tour"] = r.best_tour.nodes;
        line["samples_or_expansions"] = r.samples_or_expansions;
        line["wall_time"] = r.wall_time;
        *os << line.dump() << '\n';
    }
    return 0;
}

int run_gen(const std::string& kind_name, int n, int count, std::uint64_t seed,
            const std::string& out_path) {
    const auto kind = problems::problem_kind_from_string(kind_name);
    std::vector<problems::ProblemInstance> instances;
    instances.reserve(count);
    for (int i = 0; i < count; ++i)
        instances.push_back(
            problems::generate_instance(kind, n, seed + static_cast<std::uint64_t>(i)));
    problems::write_instances_file(out_path, instances);
    std::printf("wrote %d %s instances (n=%d) to %s\n", count, kind_name.c_str(), n,
                out_path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Attention-based construction policies for routing problems"};
    app.require_subcommand(1);

    auto* train_cmd = app.add_subcommand("train", "train a policy");
    std::string config_path;
    std::vector<std::string> overrides;
    train_cmd->add_option("--config", config_path, "JSON config file (flat dotted keys)")
        ->envname("ROUTERL_CONFIG");
    train_cmd->add_option("--override", overrides, "key=value, applied after file and env");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint with several strategies");
    std::string ckpt_path, instances_path, table_path;
    std::string strategies_csv = "greedy,sample,multi-greedy,beam";
    harness::EvalOptions eopt;
    eval_cmd->add_option("--checkpoint", ckpt_path, "checkpoint file")
        ->required()
        ->envname("ROUTERL_CHECKPOINT");
    eval_cmd->add_option("--instances", instances_path, "instance JSONL file")
        ->required()
        ->envname("ROUTERL_INSTANCES");
    eval_cmd->add_option("--strategies", strategies_csv, "comma-separated strategy names");
    eval_cmd->add_option("--samples", eopt.num_samples, "sampled rollouts per instance");
    eval_cmd->add_option("--width", eopt.beam_width, "beam width");
    eval_cmd->add_option("--active-epochs", eopt.active_epochs, "active search rounds");
    eval_cmd->add_option("--active-samples", eopt.active_samples, "active search batch");
    eval_cmd->add_option("--seed", eopt.seed, "evaluation seed")->envname("ROUTERL_SEED");
    eval_cmd->add_option("--out", table_path, "write the table as CSV");

    auto* solve_cmd = app.add_subcommand("solve", "solve instances with one strategy");
    std::string strategy_name = "greedy", solve_out;
    int width = 5, samples = 128, epochs = 8;
    std::vector<int> starts;
    std::uint64_t solve_seed = 0;
    solve_cmd->add_option("--checkpoint", ckpt_path, "checkpoint file")
        ->required()
        ->envname("ROUTERL_CHECKPOINT");
    solve_cmd->add_option("--instances", instances_path, "instance JSONL file")
        ->required()
        ->envname("ROUTERL_INSTANCES");
    solve_cmd->add_option("--strategy", strategy_name,
                          "greedy|sample|multi-greedy|beam|active|bnb");
    solve_cmd->add_option("--width", width, "beam width");
    solve_cmd->add_option("--samples", samples, "rollouts (sample / active)");
    solve_cmd->add_option("--starts", starts, "multi-greedy start nodes (default: all)");
    solve_cmd->add_option("--epochs", epochs, "active search rounds");
    solve_cmd->add_option("--seed", solve_seed, "sampling seed")->envname("ROUTERL_SEED");
    solve_cmd->add_option("--out", solve_out, "solution JSONL (default: stdout)");

    auto* gen_cmd = app.add_subcommand("gen-instances", "generate random instances");
    std::string kind_name = "tsp", gen_out;
    int gen_n = 20, gen_count = 16;
    std::uint64_t gen_seed = 0;
    gen_cmd->add_option("--kind", kind_name, "tsp|cvrp");
    gen_cmd->add_option("--n", gen_n, "customers per instance");
    gen_cmd->add_option("--count", gen_count, "number of instances");
    gen_cmd->add_option("--seed", gen_seed, "base seed")->envname("ROUTERL_SEED");
    gen_cmd->add_option("--out", gen_out, "output JSONL file")
        ->required()
        ->envname("ROUTERL_OUT");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return run_train(config_path, overrides);
        if (eval_cmd->parsed())
            return run_eval(ckpt_path, instances_path, strategies_csv, eopt, table_path);
        if (solve_cmd->parsed())
            return run_solve(ckpt_path, instances_path, strategy_name, width, samples, starts,
                             epochs, solve_seed, solve_out);
        if (gen_cmd->parsed()) return run_gen(kind_name, gen_n, gen_count, gen_seed, gen_out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
