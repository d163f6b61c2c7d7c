#pragma once

#include <cstdint>
#include <vector>

#include "routerl/env/vector_env.hpp"
#include "routerl/model/attention_model.hpp"
#include "routerl/rng.hpp"

namespace routerl::algo {

// Fixed-horizon batch of transitions from a vectorized rollout. Row layout
// matches the environment: B = instances * group, row b belongs to instance
// b / group. Rows that finish before the horizon keep emitting padding
// transitions: `padding[t][b]` marks steps taken after the row was already
// done; they carry zero reward and are excluded from every loss.
struct RolloutBuffer {
    int T = 0;
    int B = 0;
    int group = 1;
    std::vector<problems::ProblemInstance> instances;

    // Observation snapshots as the policy saw them (finished rows patched to
    // a permit-one-action sentinel so a decode over the batch stays valid).
    std::vector<env::Observation> observations;      // [T]
    std::vector<std::vector<int>> actions;           // [T][B]
    std::vector<std::vector<double>> log_probs;      // [T][B] behavior log p(a_t)
    std::vector<std::vector<double>> rewards;        // [T][B]
    std::vector<std::vector<std::uint8_t>> dones;    // [T][B] done after step t
    std::vector<std::vector<std::uint8_t>> padding;  // [T][B] row finished before step t
    std::vector<std::vector<double>> values;         // [T][B] critic at s_t
    std::vector<double> bootstrap_values;            // [B] critic at s_T, 0 if done

    std::vector<std::vector<double>> advantages;     // [T][B], after compute_advantages
    std::vector<std::vector<double>> returns;        // [T][B]
    bool advantages_ready = false;

    bool valid_at(int t, int b) const {
        return padding[static_cast<std::size_t>(t)][static_cast<std::size_t>(b)] == 0;
    }
    // Transitions that count toward losses.
    std::int64_t num_valid() const {
        std::int64_t c = 0;
        for (const auto& row : padding)
            for (auto p : row) c += p == 0 ? 1 : 0;
        return c;
    }
};

// Upper bound on episode length (TSP: n steps; CVRP: every customer plus a
// depot return after each, plus the final return).
int episode_horizon(problems::ProblemKind kind, int n);

// Finished rows expose an all-forbidden mask; a batched decode needs one
// permitted entry, so rewrite those rows to permit exactly action 0 (the
// sentinel the environment ignores).
void patch_finished_rows(env::Observation& obs, const std::vector<std::uint8_t>& finished);

// Runs T policy steps from reset, sampling actions (mode Sample) or taking
// argmax (Greedy). The encoder cache is built once and reused across steps;
// collection runs without gradient recording.
RolloutBuffer collect_rollouts(env::VectorEnv& env, model::AttentionModel& m, int T, Rng& rng,
                               model::SelectMode mode = model::SelectMode::Sample);

// Generalized advantage estimation over the buffer, in place:
//   delta_t = r_t + gamma * v_{t+1} * (1 - done_t) - v_t
//   A_t     = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}
// with v_T taken from bootstrap_values for rows truncated by the horizon.
// returns = A + v. Padding rows get zeros.
void compute_advantages(RolloutBuffer& buffer, double gamma, double lambda);

// Sum of rewards per row (padding steps contribute 0); with dense rewards
// this equals minus the realized tour length once the row is done.
std::vector<double> episode_returns(const RolloutBuffer& buffer);

}  // namespace routerl::algo
