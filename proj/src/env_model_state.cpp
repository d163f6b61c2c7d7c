#include "routerl/env/model_state.hpp"

namespace routerl::env {

namespace {
void require_size(std::size_t got, std::size_t want, const char* key) {
    if (got != want) throw SchemaError(std::string("observation field missing or wrong size: ") + key);
}
}  // namespace

ModelState::ModelState(const Observation& obs) : obs_(&obs) {
    const auto B = static_cast<std::size_t>(obs.batch);
    const auto n = static_cast<std::size_t>(obs.num_nodes);
    const auto na = static_cast<std::size_t>(obs.num_actions);
    require_size(obs.observations.size(), B * n * 2, "observations");
    require_size(obs.action_mask.size(), B * na, "action_mask");
    require_size(obs.last_node_idx.size(), B, "last_node_idx");
    require_size(obs.is_initial_action.size(), B, "is_initial_action");
    if (obs.kind == problems::ProblemKind::TSP) {
        require_size(obs.first_node_idx.size(), B, "first_node_idx");
    } else {
        require_size(obs.depot.size(), B * 2, "depot");
        require_size(obs.demand.size(), B * n, "demand");
        require_size(obs.current_load.size(), B, "current_load");
    }
    forbidden_.resize(B * na);
    for (std::size_t i = 0; i < forbidden_.size(); ++i)
        forbidden_[i] = obs.action_mask[i] == 0.0 ? 1 : 0;
}

}  // namespace routerl::env
