#include "routerl/env/vector_env.hpp"

#include <algorithm>

namespace routerl::env {

using problems::ProblemKind;

namespace {
std::vector<problems::ProblemInstance> generate_batch(const VectorEnvConfig& cfg) {
    if (cfg.num_instances < 1 || cfg.trajectories_per_instance < 1)
        throw ConfigError("vector env needs M >= 1 and N >= 1");
    std::vector<problems::ProblemInstance> out;
    out.reserve(static_cast<std::size_t>(cfg.num_instances));
    const std::uint64_t base = seed_stream(cfg.seed, "env/instances");
    for (int i = 0; i < cfg.num_instances; ++i)
        out.push_back(problems::generate_instance(cfg.kind, cfg.n,
                                                  base + static_cast<std::uint64_t>(i)));
    return out;
}
}  // namespace

VectorEnv::VectorEnv(const VectorEnvConfig& config)
    : VectorEnv(generate_batch(config), config.trajectories_per_instance, config.reward_mode) {}

VectorEnv::VectorEnv(std::vector<problems::ProblemInstance> instances,
                     int trajectories_per_instance, RewardMode reward_mode)
    : instances_(std::move(instances)), group_(trajectories_per_instance),
      reward_mode_(reward_mode) {
    if (instances_.empty()) throw ConfigError("vector env needs at least one instance");
    if (group_ < 1) throw ConfigError("trajectories_per_instance must be >= 1");
    const auto& first = instances_.front();
    for (const auto& inst : instances_) {
        if (inst.kind != first.kind || inst.num_customers() != first.num_customers())
            throw ShapeError("vector env instances must share kind and size");
    }
    batch_ = static_cast<int>(instances_.size()) * group_;
    reset();
}

const Observation& VectorEnv::reset() {
    const auto& proto = instances_.front();
    const int n = proto.num_customers();
    const int n_nodes = proto.num_nodes();
    const auto B = static_cast<std::size_t>(batch_);
    const bool cvrp = proto.kind == ProblemKind::CVRP;

    visited_.assign(B * static_cast<std::size_t>(n_nodes), 0);
    if (cvrp) {
        remaining_demand_.assign(B * static_cast<std::size_t>(n), 0.0);
        remaining_load_.assign(B, 0.0);
    }
    first_node_.assign(B, -1);
    last_node_.assign(B, -1);
    step_count_.assign(B, 0);
    done_.assign(B, 0);
    pending_.assign(B, 0);
    episode_length_.assign(B, 0.0);
    actions_.assign(B, {});
    for (auto& a : actions_) a.reserve(static_cast<std::size_t>(2 * n + 1));

    obs_.resize(proto.kind, batch_, n);
    step_batch_.rewards.assign(B, 0.0);
    step_batch_.dones.assign(B, 0);

    for (int b = 0; b < batch_; ++b) {
        const auto& inst = instances_[static_cast<std::size_t>(b / group_)];
        const auto bz = static_cast<std::size_t>(b);
        for (int i = 0; i < n; ++i) {
            obs_.observations[(bz * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)) * 2] =
                inst.coords[static_cast<std::size_t>(i)][0];
            obs_.observations[(bz * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)) * 2 + 1] =
                inst.coords[static_cast<std::size_t>(i)][1];
        }
        if (cvrp) {
            remaining_load_[bz] = inst.capacity;
            std::copy(inst.demand.begin(), inst.demand.end(),
                      remaining_demand_.begin() + static_cast<std::ptrdiff_t>(bz * static_cast<std::size_t>(n)));
            obs_.depot[bz * 2] = inst.depot[0];
            obs_.depot[bz * 2 + 1] = inst.depot[1];
            std::copy(inst.demand.begin(), inst.demand.end(),
                      obs_.demand.begin() + static_cast<std::ptrdiff_t>(bz * static_cast<std::size_t>(n)));
            obs_.current_load[bz] = inst.capacity;
            for (const double d : inst.demand)
                if (d != 0.0) ++pending_[bz];
        } else {
            pending_[bz] = n_nodes;
        }
        refresh_mask_row(b);
    }
    return obs_;
}

bool VectorEnv::row_action_permitted(int b, int action) const {
    const auto& inst = instances_[static_cast<std::size_t>(b / group_)];
    const int n_nodes = inst.num_nodes();
    if (action < 0 || action >= n_nodes) return false;
    const auto bz = static_cast<std::size_t>(b);
    if (inst.kind == ProblemKind::TSP)
        return !visited_[bz * static_cast<std::size_t>(n_nodes) + static_cast<std::size_t>(action)];
    if (action == 0) return last_node_[bz] > 0;
    if (visited_[bz * static_cast<std::size_t>(n_nodes) + static_cast<std::size_t>(action)])
        return false;
    const int n = inst.num_customers();
    return remaining_demand_[bz * static_cast<std::size_t>(n) + static_cast<std::size_t>(action - 1)] <=
           remaining_load_[bz] + 1e-12;
}

void VectorEnv::refresh_mask_row(int b) {
    const auto bz = static_cast<std::size_t>(b);
    const auto na = static_cast<std::size_t>(obs_.num_actions);
    double* row = obs_.action_mask.data() + bz * na;
    if (done_[bz]) {
        std::fill_n(row, na, 0.0);
        return;
    }
    for (int a = 0; a < obs_.num_actions; ++a)
        row[static_cast<std::size_t>(a)] = row_action_permitted(b, a) ? 1.0 : 0.0;
}

const VectorEnv::StepBatch& VectorEnv::step(const std::vector<int>& actions) {
    if (static_cast<int>(actions.size()) != batch_)
        throw ShapeError("vector_step: expected " + std::to_string(batch_) + " actions, got " +
                         std::to_string(actions.size()));
    const auto& proto = instances_.front();
    const int n = proto.num_customers();
    const int n_nodes = proto.num_nodes();
    const bool cvrp = proto.kind == ProblemKind::CVRP;

    for (int b = 0; b < batch_; ++b) {
        const auto bz = static_cast<std::size_t>(b);
        if (done_[bz]) {  // sentinel no-op: finished rows repeat terminal output
            step_batch_.rewards[bz] = 0.0;
            step_batch_.dones[bz] = 1;
            continue;
        }
        const int action = actions[bz];
        if (!row_action_permitted(b, action))
            throw IllegalActionError("row " + std::to_string(b) + ": action " +
                                     std::to_string(action) + " is masked");
        const auto& inst = instances_[static_cast<std::size_t>(b / group_)];

        double distance;
        if (!cvrp) {
            distance = step_count_[bz] == 0 ? 0.0
                                            : problems::euclid(inst.node(last_node_[bz]),
                                                               inst.node(action));
        } else {
            const auto& from = step_count_[bz] == 0 ? inst.depot : inst.node(last_node_[bz]);
            distance = problems::euclid(from, inst.node(action));
        }

        visited_[bz * static_cast<std::size_t>(n_nodes) + static_cast<std::size_t>(action)] = 1;
        if (step_count_[bz] == 0) first_node_[bz] = action;
        if (cvrp) {
            if (action == 0) {
                remaining_load_[bz] = inst.capacity;
            } else {
                const auto di = bz * static_cast<std::size_t>(n) + static_cast<std::size_t>(action - 1);
                remaining_load_[bz] -= remaining_demand_[di];
                if (remaining_demand_[di] != 0.0) --pending_[bz];
                remaining_demand_[di] = 0.0;
                obs_.demand[di] = 0.0;
            }
            obs_.current_load[bz] = remaining_load_[bz];
        }
        last_node_[bz] = action;
        ++step_count_[bz];
        actions_[bz].push_back(action);

        if (!cvrp) {
            if (--pending_[bz] == 0) {
                distance += problems::euclid(inst.node(action), inst.node(first_node_[bz]));
                done_[bz] = 1;
            }
        } else {
            done_[bz] = (pending_[bz] == 0 && action == 0) ? 1 : 0;
        }

        episode_length_[bz] += distance;
        if (reward_mode_ == RewardMode::Dense) {
            step_batch_.rewards[bz] = -distance;
        } else {
            step_batch_.rewards[bz] = done_[bz] ? -episode_length_[bz] : 0.0;
        }
        step_batch_.dones[bz] = done_[bz];

        if (!obs_.first_node_idx.empty()) obs_.first_node_idx[bz] = first_node_[bz];
        obs_.last_node_idx[bz] = last_node_[bz];
        obs_.is_initial_action[bz] = 0;

        // Mask update. A TSP visit only ever forbids the visited node, so the
        // row is patched in place; CVRP feasibility depends on the changed
        // load, so the whole row is recomputed.
        const auto na = static_cast<std::size_t>(obs_.num_actions);
        double* mrow = obs_.action_mask.data() + bz * na;
        if (done_[bz]) {
            std::fill_n(mrow, na, 0.0);
        } else if (!cvrp) {
            mrow[static_cast<std::size_t>(action)] = 0.0;
        } else {
            mrow[0] = last_node_[bz] > 0 ? 1.0 : 0.0;
            const std::uint8_t* vrow = visited_.data() + bz * static_cast<std::size_t>(n_nodes);
            const double* drow = remaining_demand_.data() + bz * static_cast<std::size_t>(n);
            const double load = remaining_load_[bz] + 1e-12;
            for (int a = 1; a < obs_.num_actions; ++a)
                mrow[static_cast<std::size_t>(a)] =
                    (!vrow[a] && drow[a - 1] <= load) ? 1.0 : 0.0;
        }
    }
    return step_batch_;
}

bool VectorEnv::all_finished() const {
    return std::all_of(done_.begin(), done_.end(), [](std::uint8_t d) { return d != 0; });
}

}  // namespace routerl::env
