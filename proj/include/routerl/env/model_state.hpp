// Adapter between the environment observation schema and the conventions the
// policy model expects: inverted mask (true = forbidden), current/first node
// accessors, and capacity expressed as "used" with a zero reference point.
#pragma once

#include <cstdint>
#include <vector>

#include "routerl/env/observation.hpp"

namespace routerl::env {

class ModelState {
public:
    static constexpr double VEHICLE_CAPACITY = 0.0;

    // Validates the observation against its kind's schema; throws SchemaError
    // naming the first missing field.
    explicit ModelState(const Observation& obs);

    int batch() const { return obs_->batch; }
    int num_actions() const { return obs_->num_actions; }
    problems::ProblemKind kind() const { return obs_->kind; }

    // true = forbidden, one entry per (row, action); the inversion of the
    // {0,1} permitted mask at the env boundary.
    const std::vector<std::uint8_t>& forbidden() const { return forbidden_; }

    bool is_initial_action(int b) const {
        return obs_->is_initial_action[static_cast<std::size_t>(b)] != 0;
    }
    // TSP only; -1 while is_initial_action.
    int first_a(int b) const { return obs_->first_node_idx[static_cast<std::size_t>(b)]; }
    int get_current_node(int b) const {
        return obs_->last_node_idx[static_cast<std::size_t>(b)];
    }

    // CVRP: load spent since the last depot visit, relative to a zero
    // capacity reference (negated current load).
    double used_capacity(int b) const {
        return -obs_->current_load[static_cast<std::size_t>(b)];
    }
    double remaining_load(int b) const { return VEHICLE_CAPACITY - used_capacity(b); }

    // Remaining demand of customer i as seen by row b (CVRP).
    double remaining_demand(int b, int i) const {
        return obs_->demand[static_cast<std::size_t>(b) * static_cast<std::size_t>(obs_->num_nodes) +
                            static_cast<std::size_t>(i)];
    }

    const Observation& observation() const { return *obs_; }

private:
    const Observation* obs_;
    std::vector<std::uint8_t> forbidden_;
};

}  // namespace routerl::env
