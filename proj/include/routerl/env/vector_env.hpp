// Bi-level vectorized environment: M instances x N trajectories each, flat
// batch B = M*N with row b belonging to instance b / N. All per-step state
// lives in preallocated struct-of-arrays buffers; step() performs no
// allocation.
#pragma once

#include <cstdint>
#include <vector>

#include "routerl/env/observation.hpp"
#include "routerl/env/scalar_env.hpp"
#include "routerl/problems/problem.hpp"

namespace routerl::env {

struct VectorEnvConfig {
    problems::ProblemKind kind = problems::ProblemKind::TSP;
    int n = 20;
    int num_instances = 1;           // M
    int trajectories_per_instance = 1;  // N
    std::uint64_t seed = 0;
    RewardMode reward_mode = RewardMode::Dense;
};

class VectorEnv {
public:
    explicit VectorEnv(const VectorEnvConfig& config);
    VectorEnv(std::vector<problems::ProblemInstance> instances, int trajectories_per_instance,
              RewardMode reward_mode = RewardMode::Dense);

    struct StepBatch {
        std::vector<double> rewards;     // [B]
        std::vector<std::uint8_t> dones; // [B]
    };

    const Observation& reset();
    // Finished rows ignore their action (sentinel no-op) and emit reward 0.
    // Active rows validate the action against the mask.
    const StepBatch& step(const std::vector<int>& actions);

    const Observation& observation() const { return obs_; }
    bool all_finished() const;
    int batch() const { return batch_; }
    int num_instances() const { return static_cast<int>(instances_.size()); }
    int trajectories_per_instance() const { return group_; }
    const std::vector<problems::ProblemInstance>& instances() const { return instances_; }
    const std::vector<std::uint8_t>& dones() const { return step_batch_.dones; }
    // Realized action sequence of row b since reset.
    const std::vector<int>& actions_of(int b) const {
        return actions_[static_cast<std::size_t>(b)];
    }

private:
    void refresh_mask_row(int b);
    bool row_action_permitted(int b, int action) const;

    std::vector<problems::ProblemInstance> instances_;
    int group_ = 1;  // N
    int batch_ = 0;  // B = M*N
    RewardMode reward_mode_ = RewardMode::Dense;

    // SoA state, one entry (or row) per batch element.
    std::vector<std::uint8_t> visited_;       // [B][n_nodes]
    std::vector<double> remaining_demand_;    // [B][n] (CVRP)
    std::vector<double> remaining_load_;      // [B] (CVRP)
    std::vector<int> first_node_;             // [B]
    std::vector<int> last_node_;              // [B]
    std::vector<int> step_count_;             // [B]
    std::vector<std::uint8_t> done_;          // [B]
    std::vector<int> pending_;                // [B] unvisited nodes (TSP) / unserved customers (CVRP)
    std::vector<double> episode_length_;      // [B]
    std::vector<std::vector<int>> actions_;   // [B] realized sequences

    Observation obs_;
    StepBatch step_batch_;
};

}  // namespace routerl::env
