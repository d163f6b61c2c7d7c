#include "routerl/env/scalar_env.hpp"

#include <algorithm>

namespace routerl::env {

using problems::ProblemKind;

RewardMode reward_mode_from_string(const std::string& s) {
    if (s == "dense") return RewardMode::Dense;
    if (s == "terminal") return RewardMode::Terminal;
    throw ConfigError("unknown reward mode: " + s);
}

std::string to_string(RewardMode mode) {
    return mode == RewardMode::Dense ? "dense" : "terminal";
}

ScalarEnv::ScalarEnv(problems::ProblemInstance instance, RewardMode reward_mode)
    : instance_(std::move(instance)), reward_mode_(reward_mode) {
    reset();
}

Observation ScalarEnv::reset() {
    const int n_nodes = instance_.num_nodes();
    visited_.assign(static_cast<std::size_t>(n_nodes), 0);
    if (instance_.kind == ProblemKind::CVRP) {
        remaining_demand_ = instance_.demand;
        remaining_load_ = instance_.capacity;
    }
    first_node_ = -1;
    last_node_ = -1;
    step_count_ = 0;
    done_ = false;
    episode_length_ = 0.0;
    actions_.clear();
    return make_observation();
}

bool ScalarEnv::action_permitted(int action) const {
    const int n_actions =
        instance_.kind == ProblemKind::CVRP ? instance_.num_nodes() : instance_.num_nodes();
    if (action < 0 || action >= n_actions) return false;
    if (instance_.kind == ProblemKind::TSP) return !visited_[static_cast<std::size_t>(action)];
    // CVRP. Depot (0) is forbidden as the first action and right after a
    // depot visit; customers need remaining demand and a fitting load.
    if (action == 0) return last_node_ > 0;
    if (visited_[static_cast<std::size_t>(action)]) return false;
    return remaining_demand_[static_cast<std::size_t>(action - 1)] <= remaining_load_ + 1e-12;
}

std::vector<double> ScalarEnv::get_mask() const {
    if (done_) throw TerminalStateError("get_mask on finished episode");
    const int n_actions = instance_.num_nodes();
    std::vector<double> mask(static_cast<std::size_t>(n_actions), 0.0);
    for (int a = 0; a < n_actions; ++a)
        if (action_permitted(a)) mask[static_cast<std::size_t>(a)] = 1.0;
    return mask;
}

std::vector<double> ScalarEnv::get_global_context() const {
    if (instance_.kind == ProblemKind::TSP) return {};
    return {remaining_load_};
}

std::vector<std::vector<double>> ScalarEnv::get_dynamic_node_features() const {
    if (instance_.kind == ProblemKind::TSP)
        return std::vector<std::vector<double>>(static_cast<std::size_t>(instance_.num_nodes()));
    std::vector<std::vector<double>> feats;
    feats.reserve(remaining_demand_.size());
    for (double d : remaining_demand_) feats.push_back({d});
    return feats;
}

StepResult ScalarEnv::step(int action) {
    if (done_) throw TerminalStateError("step on finished episode");
    if (!action_permitted(action))
        throw IllegalActionError("action " + std::to_string(action) + " is masked");

    double distance;
    if (instance_.kind == ProblemKind::TSP) {
        distance = step_count_ == 0
                       ? 0.0
                       : problems::euclid(instance_.node(last_node_), instance_.node(action));
    } else {
        // The vehicle starts at the depot, so the first hop is charged.
        const auto& from = step_count_ == 0 ? instance_.depot : instance_.node(last_node_);
        distance = problems::euclid(from, instance_.node(action));
    }

    visited_[static_cast<std::size_t>(action)] = 1;
    if (step_count_ == 0) first_node_ = action;
    if (instance_.kind == ProblemKind::CVRP) {
        if (action == 0) {
            remaining_load_ = instance_.capacity;
        } else {
            remaining_load_ -= remaining_demand_[static_cast<std::size_t>(action - 1)];
            remaining_demand_[static_cast<std::size_t>(action - 1)] = 0.0;
        }
    }
    last_node_ = action;
    ++step_count_;
    actions_.push_back(action);

    if (instance_.kind == ProblemKind::TSP) {
        const bool all_visited =
            std::all_of(visited_.begin(), visited_.end(), [](std::uint8_t v) { return v != 0; });
        if (all_visited) {
            // Close the tour on the terminal step.
            distance += problems::euclid(instance_.node(action), instance_.node(first_node_));
            done_ = true;
        }
    } else {
        const bool all_served = std::all_of(remaining_demand_.begin(), remaining_demand_.end(),
                                            [](double d) { return d == 0.0; });
        done_ = all_served && action == 0;
    }

    episode_length_ += distance;
    double reward;
    if (reward_mode_ == RewardMode::Dense) {
        reward = -distance;
    } else {
        reward = done_ ? -episode_length_ : 0.0;
    }
    return StepResult{make_observation(), reward, done_, {}};
}

Observation ScalarEnv::make_observation() const {
    Observation obs;
    const int n = instance_.num_customers();
    obs.resize(instance_.kind, 1, n);
    for (int i = 0; i < n; ++i) {
        obs.observations[static_cast<std::size_t>(i) * 2] = instance_.coords[static_cast<std::size_t>(i)][0];
        obs.observations[static_cast<std::size_t>(i) * 2 + 1] = instance_.coords[static_cast<std::size_t>(i)][1];
    }
    if (!done_) {
        for (int a = 0; a < obs.num_actions; ++a)
            if (action_permitted(a)) obs.action_mask[static_cast<std::size_t>(a)] = 1.0;
    }
    if (instance_.kind == ProblemKind::TSP) obs.first_node_idx[0] = first_node_;
    obs.last_node_idx[0] = last_node_;
    obs.is_initial_action[0] = step_count_ == 0 ? 1 : 0;
    if (instance_.kind == ProblemKind::CVRP) {
        obs.depot[0] = instance_.depot[0];
        obs.depot[1] = instance_.depot[1];
        std::copy(remaining_demand_.begin(), remaining_demand_.end(), obs.demand.begin());
        obs.current_load[0] = remaining_load_;
    }
    return obs;
}

bool all_finished(const std::vector<ScalarEnv>& envs) {
    return std::all_of(envs.begin(), envs.end(), [](const ScalarEnv& e) { return e.done(); });
}

}  // namespace routerl::env
