#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "routerl/harness/config.hpp"
#include "routerl/harness/metrics.hpp"

namespace routerl::harness {

struct TrainOutcome {
    std::vector<TrainRow> rows;
    std::int64_t env_steps = 0;
    int iterations = 0;
    double best_eval_length = std::numeric_limits<double>::quiet_NaN();
    std::string best_checkpoint_path;  // empty until the first evaluation
    std::string last_checkpoint_path;
    std::string config_path;
    std::string metrics_path;
    bool diverged = false;
    bool reached_target = false;
};

// Full training run under cfg. Writes into cfg.out_dir: config.json (the
// effective configuration), last.ckpt (initial parameters immediately, then
// at checkpoint cadence and on exit), best.ckpt (at each eval improvement),
// metrics.csv (always, on exit).
//
// One iteration = num_instances fresh training instances x trajectories
// sampled rows for a full horizon, then one PPO update or one REINFORCE
// step; env_steps grows by exactly M * N * horizon. Greedy evaluation on the
// fixed held-out set runs every eval_cadence iterations and on the final
// one; its steps are not billed to the budget. Training instance seeds are
// even and evaluation seeds odd, so the sets cannot collide. A non-finite
// loss stops the run with diverged=true, keeping the last good checkpoint.
TrainOutcome train(const ExperimentConfig& cfg);

}  // namespace routerl::harness
