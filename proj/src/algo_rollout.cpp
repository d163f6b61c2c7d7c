#include "routerl/algo/rollout.hpp"

#include <algorithm>

#include "routerl/env/model_state.hpp"

namespace routerl::algo {

using env::Observation;
using env::VectorEnv;
using model::AttentionModel;
using problems::ProblemKind;

int episode_horizon(ProblemKind kind, int n) {
    return kind == ProblemKind::TSP ? n : 2 * n + 1;
}

void patch_finished_rows(Observation& obs, const std::vector<std::uint8_t>& finished) {
    const auto na = static_cast<std::size_t>(obs.num_actions);
    for (std::size_t b = 0; b < finished.size(); ++b) {
        if (!finished[b]) continue;
        for (std::size_t a = 0; a < na; ++a) obs.action_mask[b * na + a] = a == 0 ? 1.0 : 0.0;
    }
}

namespace {

std::vector<const problems::ProblemInstance*> instance_ptrs(
    const std::vector<problems::ProblemInstance>& v) {
    std::vector<const problems::ProblemInstance*> p;
    p.reserve(v.size());
    for (const auto& inst : v) p.push_back(&inst);
    return p;
}

}  // namespace

RolloutBuffer collect_rollouts(VectorEnv& env, AttentionModel& m, int T, Rng& rng,
                               model::SelectMode mode) {
    if (T < 1) throw ConfigError("collect_rollouts: horizon must be positive");
    nn::NoGradGuard ng;

    RolloutBuffer buf;
    buf.T = T;
    buf.B = env.batch();
    buf.group = env.trajectories_per_instance();
    buf.instances = env.instances();

    env.reset();
    auto cache = m.encode(instance_ptrs(buf.instances));

    const auto B = static_cast<std::size_t>(buf.B);
    std::vector<std::uint8_t> finished(B, 0);
    buf.observations.reserve(static_cast<std::size_t>(T));

    for (int t = 0; t < T; ++t) {
        Observation obs = env.observation();
        patch_finished_rows(obs, finished);
        buf.observations.push_back(std::move(obs));

        env::ModelState st(buf.observations.back());
        auto po = m.parallel_decode(cache, st, buf.group);
        auto sel = model::actor_select(po.log_probs, mode, &rng);

        const auto& sb = env.step(sel.actions);
        buf.actions.push_back(std::move(sel.actions));
        buf.log_probs.push_back(std::move(sel.log_probs));
        buf.rewards.push_back(sb.rewards);
        buf.dones.push_back(sb.dones);
        buf.padding.push_back(finished);
        std::vector<double> vals(B);
        for (std::size_t b = 0; b < B; ++b) vals[b] = po.value->value[b];
        buf.values.push_back(std::move(vals));

        finished = sb.dones;
    }

    // Bootstrap values for rows the horizon truncated mid-episode.
    buf.bootstrap_values.assign(B, 0.0);
    if (!env.all_finished()) {
        Observation fin = env.observation();
        patch_finished_rows(fin, finished);
        env::ModelState st(fin);
        auto po = m.parallel_decode(cache, st, buf.group);
        for (std::size_t b = 0; b < B; ++b)
            buf.bootstrap_values[b] = finished[b] ? 0.0 : po.value->value[b];
    }
    return buf;
}

void compute_advantages(RolloutBuffer& buf, double gamma, double lambda) {
    const auto T = static_cast<std::size_t>(buf.T);
    const auto B = static_cast<std::size_t>(buf.B);
    buf.advantages.assign(T, std::vector<double>(B, 0.0));
    buf.returns.assign(T, std::vector<double>(B, 0.0));
    for (std::size_t b = 0; b < B; ++b) {
        double acc = 0.0;
        for (std::size_t t = T; t-- > 0;) {
            if (buf.padding[t][b]) {
                acc = 0.0;
                continue;
            }
            const double not_done = buf.dones[t][b] ? 0.0 : 1.0;
            const double v_next = t + 1 < T ? buf.values[t + 1][b] : buf.bootstrap_values[b];
            const double delta =
                buf.rewards[t][b] + gamma * v_next * not_done - buf.values[t][b];
            acc = delta + gamma * lambda * not_done * acc;
            buf.advantages[t][b] = acc;
            buf.returns[t][b] = acc + buf.values[t][b];
        }
    }
    buf.advantages_ready = true;
}

std::vector<double> episode_returns(const RolloutBuffer& buf) {
    std::vector<double> out(static_cast<std::size_t>(buf.B), 0.0);
    for (const auto& step : buf.rewards)
        for (std::size_t b = 0; b < step.size(); ++b) out[b] += step[b];
    return out;
}

}  // namespace routerl::algo
