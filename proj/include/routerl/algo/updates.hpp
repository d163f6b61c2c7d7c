#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "routerl/algo/policy.hpp"
#include "routerl/algo/rollout.hpp"
#include "routerl/nn/optim.hpp"

namespace routerl::algo {

struct PPOConfig {
    double learning_rate = 1e-3;
    int num_minibatches = 8;   // instance partition; clamped to the batch's M
    int update_epochs = 4;
    double clip_coef = 0.2;
    double gamma = 1.0;        // undiscounted: return = -tour length
    double gae_lambda = 0.95;
    double value_coef = 0.5;
    double entropy_coef = 0.0;
    double max_grad_norm = 0.5;

    void validate() const {
        if (learning_rate <= 0 || num_minibatches < 1 || update_epochs < 1 || clip_coef < 0 ||
            gamma <= 0 || gae_lambda < 0 || gae_lambda > 1 || value_coef < 0 ||
            entropy_coef < 0 || max_grad_norm <= 0)
            throw ConfigError("ppo config values out of range");
    }
};

struct LossStats {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
    double grad_norm = 0.0;  // pre-clip, averaged over optimizer steps
    double total_loss = 0.0;
    std::int64_t transitions = 0;
};

// Clipped-surrogate update over the buffer: update_epochs passes over a
// shuffled instance partition, one optimizer step per minibatch, advantage
// normalization per minibatch, gradient-norm clipping. Gradients are zeroed
// at the start of each minibatch and left in place afterwards. Throws
// DivergenceError when a loss turns non-finite.
LossStats ppo_update(Policy& policy, nn::Adam& opt, const RolloutBuffer& buffer,
                     const PPOConfig& cfg, Rng& rng);

enum class BaselineKind { Critic, GreedyRollout, SharedRollouts };

BaselineKind baseline_kind_from_string(const std::string& s);
std::string to_string(BaselineKind kind);

struct BaselineSpec {
    BaselineKind kind = BaselineKind::SharedRollouts;
    double alpha = 0.05;   // greedy_rollout promotion significance
    int num_rollouts = 8;  // shared_rollouts trajectories per instance

    void validate() const {
        if (alpha <= 0 || alpha >= 1 || num_rollouts < 1)
            throw ConfigError("baseline spec values out of range");
    }
};

// Per-row baseline values. Critic reads the collected value at s_0;
// GreedyRollout expands per-instance greedy returns (required argument);
// SharedRollouts averages the returns of each instance's rows.
std::vector<double> update_baseline(BaselineKind kind, const RolloutBuffer& buffer,
                                    const std::vector<double>& returns,
                                    const std::vector<double>* greedy_returns_per_instance = nullptr);

struct ReinforceConfig {
    double learning_rate = 1e-3;
    double value_coef = 0.5;    // critic baseline head training
    double entropy_coef = 0.0;
    double max_grad_norm = 0.5;

    void validate() const {
        if (learning_rate <= 0 || value_coef < 0 || entropy_coef < 0 || max_grad_norm <= 0)
            throw ConfigError("reinforce config values out of range");
    }
};

// Differentiable surrogate: -mean_b (advantage_b * sum_t log p(a_t)) over
// valid steps, plus critic MSE at s_0 when train_critic. Parts are exposed
// for statistics; `total` is what the optimizer minimizes.
struct ReinforceLoss {
    nn::TensorPtr total;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
};
ReinforceLoss reinforce_loss(Policy& policy, const RolloutBuffer& buffer,
                             const std::vector<double>& advantages, const ReinforceConfig& cfg,
                             bool train_critic);

// One REINFORCE gradient step on a collected buffer with precomputed
// per-row advantages (return minus baseline).
LossStats reinforce_step(Policy& policy, nn::Adam& opt, const RolloutBuffer& buffer,
                         const std::vector<double>& advantages, const ReinforceConfig& cfg,
                         bool train_critic);

// Full REINFORCE iteration: sample rollouts of `instances` (shared_rollouts
// uses spec.num_rollouts per instance, otherwise one), compute the baseline,
// take one gradient step. `baseline_model` is required for GreedyRollout.
LossStats reinforce_update(model::AttentionModel& m, model::AttentionModel* baseline_model,
                           nn::Adam& opt, const std::vector<problems::ProblemInstance>& instances,
                           const BaselineSpec& spec, const ReinforceConfig& cfg, Rng& rng,
                           env::RewardMode reward_mode = env::RewardMode::Dense);

// Greedy-decoded return per row over the given instances (no gradients).
std::vector<double> greedy_rollout_returns(model::AttentionModel& m,
                                           const std::vector<problems::ProblemInstance>& instances,
                                           int group = 1);

// Left-tail p-value of the one-sided paired t-test that mean(diffs) < 0.
// Zero spread degenerates to 0 (mean < 0) or 1; fewer than two samples is a
// configuration error.
double one_sided_paired_p(const std::vector<double>& diffs);

// Greedy-evaluate both models on the eval set and promote `current` into
// `baseline` iff the mean length difference is significantly negative
// (p < alpha). Returns whether promotion happened.
bool maybe_promote_baseline(model::AttentionModel& current, model::AttentionModel& baseline,
                            const std::vector<problems::ProblemInstance>& eval_set, double alpha);

}  // namespace routerl::algo
