// Batched observation record emitted by the environments.
//
// Mask convention at this boundary is {0,1} real with 1 = permitted; the
// model-side adapter inverts it. CVRP rows carry depot/demand/current_load
// and no first_node_idx; TSP rows carry first_node_idx and no CVRP extras.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "routerl/problems/problem.hpp"

namespace routerl::env {

struct Observation {
    problems::ProblemKind kind = problems::ProblemKind::TSP;
    int batch = 0;        // B rows
    int num_nodes = 0;    // customer/node count n (excludes CVRP depot)
    int num_actions = 0;  // TSP: n, CVRP: n + 1 (action 0 = depot)

    std::vector<double> observations;          // [B][n][2] node coordinates
    std::vector<double> action_mask;           // [B][num_actions], {0,1}
    std::vector<int> first_node_idx;           // [B], TSP only; -1 before the first action
    std::vector<int> last_node_idx;            // [B]; -1 before the first action
    std::vector<std::uint8_t> is_initial_action;  // [B]

    std::vector<double> depot;         // [B][2], CVRP only
    std::vector<double> demand;        // [B][n] remaining demand, CVRP only
    std::vector<double> current_load;  // [B], CVRP only

    void resize(problems::ProblemKind k, int B, int n);
};

// One JSON object per batch row; keys exactly as the observation schema.
std::string observation_to_jsonl(const Observation& obs);

// Copy of the selected batch rows, in the given order.
Observation slice_rows(const Observation& obs, const std::vector<int>& rows);

// Stacks observations over the same problem shape into one batch, in order.
Observation concat_rows(const std::vector<const Observation*>& parts);

}  // namespace routerl::env
