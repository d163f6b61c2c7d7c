#include "routerl/env/observation.hpp"

#include <json.hpp>

namespace routerl::env {

void Observation::resize(problems::ProblemKind k, int B, int n) {
    kind = k;
    batch = B;
    num_nodes = n;
    num_actions = k == problems::ProblemKind::CVRP ? n + 1 : n;
    const auto b = static_cast<std::size_t>(B);
    const auto nn = static_cast<std::size_t>(n);
    observations.assign(b * nn * 2, 0.0);
    action_mask.assign(b * static_cast<std::size_t>(num_actions), 0.0);
    last_node_idx.assign(b, -1);
    is_initial_action.assign(b, 1);
    if (k == problems::ProblemKind::TSP) {
        first_node_idx.assign(b, -1);
        depot.clear();
        demand.clear();
        current_load.clear();
    } else {
        first_node_idx.clear();
        depot.assign(b * 2, 0.0);
        demand.assign(b * nn, 0.0);
        current_load.assign(b, 0.0);
    }
}

std::string observation_to_jsonl(const Observation& obs) {
    using nlohmann::json;
    std::string out;
    const auto n = static_cast<std::size_t>(obs.num_nodes);
    const auto na = static_cast<std::size_t>(obs.num_actions);
    for (int b = 0; b < obs.batch; ++b) {
        const auto bz = static_cast<std::size_t>(b);
        json j;
        json coords = json::array();
        for (std::size_t i = 0; i < n; ++i)
            coords.push_back({obs.observations[(bz * n + i) * 2],
                              obs.observations[(bz * n + i) * 2 + 1]});
        j["observations"] = std::move(coords);
        j["action_mask"] = std::vector<double>(obs.action_mask.begin() + static_cast<std::ptrdiff_t>(bz * na),
                                               obs.action_mask.begin() + static_cast<std::ptrdiff_t>((bz + 1) * na));
        if (obs.kind == problems::ProblemKind::TSP)
            j["first_node_idx"] = obs.first_node_idx[bz];
        j["last_node_idx"] = obs.last_node_idx[bz];
        j["is_initial_action"] = static_cast<bool>(obs.is_initial_action[bz]);
        if (obs.kind == problems::ProblemKind::CVRP) {
            j["depot"] = {obs.depot[bz * 2], obs.depot[bz * 2 + 1]};
            j["demand"] = std::vector<double>(obs.demand.begin() + static_cast<std::ptrdiff_t>(bz * n),
                                              obs.demand.begin() + static_cast<std::ptrdiff_t>((bz + 1) * n));
            j["current_load"] = obs.current_load[bz];
        }
        out += j.dump();
        out += "\n";
    }
    return out;
}

Observation slice_rows(const Observation& obs, const std::vector<int>& rows) {
    Observation out;
    out.resize(obs.kind, static_cast<int>(rows.size()), obs.num_nodes);
    const auto n = static_cast<std::size_t>(obs.num_nodes);
    const auto na = static_cast<std::size_t>(obs.num_actions);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const int row = rows[r];
        if (row < 0 || row >= obs.batch) throw ShapeError("slice_rows: row out of range");
        const auto b = static_cast<std::size_t>(row);
        std::copy_n(obs.observations.begin() + static_cast<std::ptrdiff_t>(b * n * 2), n * 2,
                    out.observations.begin() + static_cast<std::ptrdiff_t>(r * n * 2));
        std::copy_n(obs.action_mask.begin() + static_cast<std::ptrdiff_t>(b * na), na,
                    out.action_mask.begin() + static_cast<std::ptrdiff_t>(r * na));
        out.last_node_idx[r] = obs.last_node_idx[b];
        out.is_initial_action[r] = obs.is_initial_action[b];
        if (obs.kind == problems::ProblemKind::TSP) {
            out.first_node_idx[r] = obs.first_node_idx[b];
        } else {
            out.depot[r * 2] = obs.depot[b * 2];
            out.depot[r * 2 + 1] = obs.depot[b * 2 + 1];
            std::copy_n(obs.demand.begin() + static_cast<std::ptrdiff_t>(b * n), n,
                        out.demand.begin() + static_cast<std::ptrdiff_t>(r * n));
            out.current_load[r] = obs.current_load[b];
        }
    }
    return out;
}

Observation concat_rows(const std::vector<const Observation*>& parts) {
    if (parts.empty()) throw ShapeError("concat_rows: no observations");
    const Observation& head = *parts.front();
    int total = 0;
    for (const Observation* p : parts) {
        if (p == nullptr) throw ShapeError("concat_rows: null observation");
        if (p->kind != head.kind || p->num_nodes != head.num_nodes)
            throw ShapeError("concat_rows: mismatched observation shapes");
        total += p->batch;
    }
    Observation out;
    out.resize(head.kind, total, head.num_nodes);
    const auto n = static_cast<std::size_t>(head.num_nodes);
    const auto na = static_cast<std::size_t>(head.num_actions);
    std::size_t r = 0;
    for (const Observation* p : parts) {
        for (int row = 0; row < p->batch; ++row, ++r) {
            const auto b = static_cast<std::size_t>(row);
            std::copy_n(p->observations.begin() + static_cast<std::ptrdiff_t>(b * n * 2), n * 2,
                        out.observations.begin() + static_cast<std::ptrdiff_t>(r * n * 2));
            std::copy_n(p->action_mask.begin() + static_cast<std::ptrdiff_t>(b * na), na,
                        out.action_mask.begin() + static_cast<std::ptrdiff_t>(r * na));
            out.last_node_idx[r] = p->last_node_idx[b];
            out.is_initial_action[r] = p->is_initial_action[b];
            if (head.kind == problems::ProblemKind::TSP) {
                out.first_node_idx[r] = p->first_node_idx[b];
            } else {
                out.depot[r * 2] = p->depot[b * 2];
                out.depot[r * 2 + 1] = p->depot[b * 2 + 1];
                std::copy_n(p->demand.begin() + static_cast<std::ptrdiff_t>(b * n), n,
                            out.demand.begin() + static_cast<std::ptrdiff_t>(r * n));
                out.current_load[r] = p->current_load[b];
            }
        }
    }
    return out;
}

}  // namespace routerl::env
