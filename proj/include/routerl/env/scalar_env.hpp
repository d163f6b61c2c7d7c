// Single-episode reference environment. Written for clarity, not speed; the
// vectorized environment is validated against it step-for-step.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "routerl/env/observation.hpp"
#include "routerl/problems/problem.hpp"

namespace routerl::env {

enum class RewardMode { Dense, Terminal };

RewardMode reward_mode_from_string(const std::string& s);
std::string to_string(RewardMode mode);

struct StepResult {
    Observation obs;  // batch of 1
    double reward = 0.0;
    bool done = false;
    std::map<std::string, double> info;
};

class ScalarEnv {
public:
    explicit ScalarEnv(problems::ProblemInstance instance,
                       RewardMode reward_mode = RewardMode::Dense);

    Observation reset();
    // Applies one action. Throws TerminalStateError when already done,
    // IllegalActionError when the mask forbids the action.
    StepResult step(int action);

    // Current observation (batch of 1), identical to the one the last
    // reset/step returned. Lets callers avoid keeping their own copy.
    Observation observation() const { return make_observation(); }

    // Mask over actions, {0,1} with 1 = permitted. Throws TerminalStateError
    // when the episode is over.
    std::vector<double> get_mask() const;
    // TSP: empty. CVRP: {remaining_load}.
    std::vector<double> get_global_context() const;
    // TSP: n x 0. CVRP: n x 1 remaining demand per customer.
    std::vector<std::vector<double>> get_dynamic_node_features() const;

    bool done() const { return done_; }
    int step_count() const { return step_count_; }
    int last_node() const { return last_node_; }
    int first_node() const { return first_node_; }
    double remaining_load() const { return remaining_load_; }
    const problems::ProblemInstance& instance() const { return instance_; }
    // Actions applied since reset (the realized tour, depot visits included).
    const std::vector<int>& actions() const { return actions_; }

private:
    Observation make_observation() const;
    bool action_permitted(int action) const;

    problems::ProblemInstance instance_;
    RewardMode reward_mode_;
    std::vector<std::uint8_t> visited_;     // per node (CVRP slot 0 = depot)
    std::vector<double> remaining_demand_;  // CVRP, per customer
    double remaining_load_ = 0.0;
    int first_node_ = -1;
    int last_node_ = -1;
    int step_count_ = 0;
    bool done_ = false;
    double episode_length_ = 0.0;  // distance accumulated, for terminal mode
    std::vector<int> actions_;
};

bool all_finished(const std::vector<ScalarEnv>& envs);

}  // namespace routerl::env
