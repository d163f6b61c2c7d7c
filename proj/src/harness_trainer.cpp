#include "routerl/harness/trainer.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>

#include "routerl/algo/policy.hpp"
#include "routerl/algo/rollout.hpp"
#include "routerl/algo/updates.hpp"
#include "routerl/env/vector_env.hpp"
#include "routerl/harness/checkpoint.hpp"
#include "routerl/nn/optim.hpp"
#include "routerl/rng.hpp"

namespace routerl::harness {

namespace {

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

TrainOutcome train(const ExperimentConfig& cfg) {
    cfg.validate();
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);

    TrainOutcome out;
    out.config_path = cfg.out_dir + "/config.json";
    {
        std::ofstream f(out.config_path, std::ios::trunc);
        if (!f) throw FormatError("cannot write config copy: " + out.config_path);
        f << config_to_json(cfg) << '\n';
    }

    model::ModelConfig mc = cfg.model;
    mc.kind = cfg.kind;
    model::AttentionModel model(mc, cfg.seed);

    // Frozen comparison policy for the greedy-rollout baseline; starts as a
    // copy and only advances through significant promotions.
    std::unique_ptr<model::AttentionModel> baseline_model;
    const bool use_greedy_baseline = cfg.algorithm == Algorithm::Reinforce &&
                                     cfg.baseline.kind == algo::BaselineKind::GreedyRollout;
    if (use_greedy_baseline) {
        baseline_model = std::make_unique<model::AttentionModel>(mc, cfg.seed);
        baseline_model->params().assign_values(model.params().flatten_values());
        baseline_model->bump_param_version();
    }

    Rng instance_rng(seed_stream(cfg.seed, "train/instances"));
    Rng sampler_rng(seed_stream(cfg.seed, "train/sampler"));
    Rng update_rng(seed_stream(cfg.seed, "train/update"));

    // Training instances take even seeds, evaluation instances odd ones:
    // the held-out set is disjoint from training by construction.
    std::vector<problems::ProblemInstance> eval_set;
    eval_set.reserve(cfg.eval_instances);
    const std::uint64_t eval_base = seed_stream(cfg.eval_seed, "eval/instances");
    for (int i = 0; i < cfg.eval_instances; ++i)
        eval_set.push_back(problems::generate_instance(
            cfg.kind, cfg.num_customers,
            ((eval_base + static_cast<std::uint64_t>(i)) << 1) | 1ULL));

    const double lr = cfg.algorithm == Algorithm::PPO ? cfg.ppo.learning_rate
                                                      : cfg.reinforce.learning_rate;
    nn::Adam opt(model.params(), lr);
    algo::AttentionPolicy policy(model);
    const int T = algo::episode_horizon(cfg.kind, cfg.num_customers);
    const std::int64_t steps_per_iteration = static_cast<std::int64_t>(cfg.num_instances) *
                                             cfg.trajectories * T;

    out.last_checkpoint_path = cfg.out_dir + "/last.ckpt";
    const std::string best_path = cfg.out_dir + "/best.ckpt";
    save_checkpoint(out.last_checkpoint_path, model, cfg, 0);

    const auto t0 = std::chrono::steady_clock::now();
    int it = 0;
    while (out.env_steps < cfg.env_step_budget) {
        ++it;
        std::vector<problems::ProblemInstance> instances;
        instances.reserve(cfg.num_instances);
        for (int i = 0; i < cfg.num_instances; ++i)
            instances.push_back(problems::generate_instance(cfg.kind, cfg.num_customers,
                                                            instance_rng.next_u64() << 1));
        env::VectorEnv env(instances, cfg.trajectories, cfg.reward_mode);
        algo::RolloutBuffer buffer = algo::collect_rollouts(env, model, T, sampler_rng);
        const std::vector<double> returns = algo::episode_returns(buffer);

        algo::LossStats stats;
        try {
            if (cfg.algorithm == Algorithm::PPO) {
                algo::compute_advantages(buffer, cfg.ppo.gamma, cfg.ppo.gae_lambda);
                stats = algo::ppo_update(policy, opt, buffer, cfg.ppo, update_rng);
            } else {
                std::vector<double> base;
                if (cfg.baseline.kind == algo::BaselineKind::GreedyRollout) {
                    const auto greedy =
                        algo::greedy_rollout_returns(*baseline_model, instances);
                    base = algo::update_baseline(cfg.baseline.kind, buffer, returns, &greedy);
                } else {
                    base = algo::update_baseline(cfg.baseline.kind, buffer, returns);
                }
                std::vector<double> advantages(returns.size());
                for (std::size_t i = 0; i < returns.size(); ++i)
                    advantages[i] = returns[i] - base[i];
                stats = algo::reinforce_step(policy, opt, buffer, advantages, cfg.reinforce,
                                             cfg.baseline.kind == algo::BaselineKind::Critic);
            }
        } catch (const DivergenceError&) {
            // Parameters are tainted; keep the last good checkpoint on disk.
            out.diverged = true;
            break;
        }

        out.env_steps += steps_per_iteration;
        out.iterations = it;

        TrainRow row;
        row.iteration = it;
        row.env_steps = out.env_steps;
        row.mean_return = mean(returns);
        row.policy_loss = stats.policy_loss;
        row.value_loss = stats.value_loss;
        row.entropy = stats.entropy;
        row.clip_fraction = stats.clip_fraction;
        row.grad_norm = stats.grad_norm;

        const bool final_iteration = out.env_steps >= cfg.env_step_budget;
        if (it % cfg.eval_cadence == 0 || final_iteration) {
            const auto eval_returns = algo::greedy_rollout_returns(model, eval_set);
            const double eval_length = -mean(eval_returns);
            row.eval_length = eval_length;
            if (!(eval_length >= out.best_eval_length)) {  // NaN-safe first comparison
                out.best_eval_length = eval_length;
                out.best_checkpoint_path = best_path;
                save_checkpoint(best_path, model, cfg, out.env_steps);
            }
            if (use_greedy_baseline)
                algo::maybe_promote_baseline(model, *baseline_model, eval_set,
                                             cfg.baseline.alpha);
            if (cfg.target_eval_length > 0 && eval_length <= cfg.target_eval_length)
                out.reached_target = true;
        }
        row.best_eval_length = out.best_eval_length;
        row.wall_time =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.rows.push_back(row);

        if (it % cfg.checkpoint_cadence == 0 || final_iteration || out.reached_target)
            save_checkpoint(out.last_checkpoint_path, model, cfg, out.env_steps);
        if (out.reached_target) break;
    }

    out.metrics_path = cfg.out_dir + "/metrics.csv";
    write_metrics_csv(out.metrics_path, out.rows);
    return out;
}

}  // namespace routerl::harness
