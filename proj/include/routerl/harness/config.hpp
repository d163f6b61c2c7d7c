#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "routerl/algo/updates.hpp"
#include "routerl/env/scalar_env.hpp"
#include "routerl/model/config.hpp"
#include "routerl/problems/problem.hpp"

namespace routerl::harness {

enum class Algorithm { PPO, Reinforce };

Algorithm algorithm_from_string(const std::string& s);
std::string to_string(Algorithm algorithm);

// Everything a training run needs, addressable as a flat dotted-key document
// ("ppo.clip_coef", "train.seed", ...). Three layers, later wins:
// config file < ROUTERL_* environment variables < command-line overrides.
struct ExperimentConfig {
    problems::ProblemKind kind = problems::ProblemKind::TSP;
    int num_customers = 10;

    // One collection runs num_instances fresh instances x trajectories rows.
    int num_instances = 64;
    int trajectories = 8;
    env::RewardMode reward_mode = env::RewardMode::Dense;

    model::ModelConfig model;  // model.kind always mirrors `kind`

    Algorithm algorithm = Algorithm::PPO;
    algo::PPOConfig ppo;
    algo::ReinforceConfig reinforce;
    algo::BaselineSpec baseline;

    std::int64_t env_step_budget = 100000;  // decoder steps consumed by training
    int eval_instances = 256;
    std::uint64_t eval_seed = 9001;   // held-out set; disjoint from training by construction
    int eval_cadence = 10;            // collections between greedy evaluations
    int checkpoint_cadence = 10;      // collections between periodic checkpoints
    double target_eval_length = 0.0;  // early stop at or below; <= 0 disables
    std::string out_dir = "run";
    std::uint64_t seed = 0;

    void validate() const;
};

// Dotted keys in canonical (serialization) order.
const std::vector<std::string>& config_keys();

// Parse a flat JSON object of dotted keys. Unknown keys and type mismatches
// throw ConfigError. Missing keys keep their defaults. Does not validate();
// layering may fix an out-of-range value before the final check.
ExperimentConfig config_from_json(const std::string& text);

// Flat JSON object, every key present, canonical order, 2-space indent.
std::string config_to_json(const ExperimentConfig& cfg);

// "key=value" where value is parsed as a JSON scalar (fallback: bare string).
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

// "ppo.clip_coef" -> "ROUTERL_PPO_CLIP_COEF"
std::string env_var_for_key(const std::string& key);

// File (optional, "" skips) -> ROUTERL_* env vars -> overrides, then
// validate(). This is the one entry point that validates.
ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides = {});

}  // namespace routerl::harness
