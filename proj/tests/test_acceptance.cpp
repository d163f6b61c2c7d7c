// Acceptance gate: nine end-to-end checks over the whole stack, each printed
// as a single pass/fail line. Run with no arguments for all nine, or pass
// criterion numbers to run a subset. Exit code = number of failures.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "routerl/algo/policy.hpp"
#include "routerl/algo/rollout.hpp"
#include "routerl/algo/updates.hpp"
#include "routerl/env/model_state.hpp"
#include "routerl/env/scalar_env.hpp"
#include "routerl/env/vector_env.hpp"
#include "routerl/harness/checkpoint.hpp"
#include "routerl/harness/trainer.hpp"
#include "routerl/nn/ops.hpp"
#include "routerl/nn/optim.hpp"
#include "routerl/problems/oracles.hpp"
#include "routerl/search/search.hpp"
#include "support/finitediff.hpp"

using namespace routerl;
using Clock = std::chrono::steady_clock;

namespace {

double secs(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return buf;
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

model::ModelConfig small_model(problems::ProblemKind kind, int d, int heads, int layers,
                               int ff) {
    model::ModelConfig mc;
    mc.kind = kind;
    mc.embed_dim = d;
    mc.num_heads = heads;
    mc.num_encoder_layers = layers;
    mc.feedforward_dim = ff;
    return mc;
}

// Uniformly random permitted action for one mask row ({0,1} doubles).
int random_permitted(const double* mask, int na, Rng& rng) {
    int count = 0;
    for (int a = 0; a < na; ++a)
        if (mask[a] == 1.0) ++count;
    if (count == 0) return -1;
    int pick = static_cast<int>(rng.uniform_int(0, count - 1));
    for (int a = 0; a < na; ++a)
        if (mask[a] == 1.0 && pick-- == 0) return a;
    return -1;
}

// ---------------------------------------------------------------------------
// 1. Oracle exactness: branch-and-bound and exhaustive-width beam search both
//    reproduce the Held-Karp optimum on 200 TSP instances, n in 5..10,
//    within 1e-9, in under five minutes.
Outcome criterion_oracle_exactness() {
    const auto t0 = Clock::now();
    model::AttentionModel m(small_model(problems::ProblemKind::TSP, 8, 2, 1, 16), 42);
    const std::vector<std::pair<int, int>> plan = {{5, 50}, {6, 50}, {7, 40},
                                                   {8, 32}, {9, 23}, {10, 5}};
    int checked = 0;
    double worst = 0.0;
    for (const auto& [n, count] : plan) {
        for (int i = 0; i < count; ++i) {
            const auto inst = problems::generate_instance(
                problems::ProblemKind::TSP, n, 90000 + static_cast<std::uint64_t>(n) * 1000 +
                                                   static_cast<std::uint64_t>(i));
            const double opt = problems::exact_optimal(inst).length;
            const double bnb = search::dfs_branch_and_bound(inst, m).best_length;
            const double beam =
                search::beam_search(inst, m, std::numeric_limits<std::int64_t>::max())
                    .best_length;
            worst = std::max({worst, std::abs(bnb - opt), std::abs(beam - opt)});
            ++checked;
            if (worst > 1e-9)
                return {false, fmt("instance n=%d #%d deviates by %.3e", n, i, worst)};
        }
    }
    const double dt = secs(t0);
    const bool in_time = dt < 300.0;
    return {in_time && checked == 200,
            fmt("%d/200 instances exact, max |dev| %.2e, %.1fs (< 300s: %s)", checked, worst,
                dt, in_time ? "yes" : "NO")};
}

// ---------------------------------------------------------------------------
// 2. Environment equivalence: the vectorized env at M=8, N=4 matches 32
//    scalar environments bit-exactly over 1000 random action scripts for
//    TSP20 and CVRP20, and episode reward sums equal -tour_length to 1e-9.
Outcome criterion_env_equivalence() {
    const auto t0 = Clock::now();
    const int M = 8, N = 4, B = M * N, n = 20;
    std::int64_t compared = 0;
    for (const auto kind : {problems::ProblemKind::TSP, problems::ProblemKind::CVRP}) {
        for (int script = 0; script < 1000; ++script) {
            Rng rng(seed_stream(31337, (kind == problems::ProblemKind::TSP ? "tsp/" : "cvrp/") +
                                           std::to_string(script)));
            std::vector<problems::ProblemInstance> instances;
            for (int i = 0; i < M; ++i)
                instances.push_back(problems::generate_instance(
                    kind, n, 50000 + static_cast<std::uint64_t>(script) * 100 +
                                 static_cast<std::uint64_t>(i)));

            env::VectorEnv venv(instances, N);
            const env::Observation* vobs = &venv.reset();
            std::vector<env::ScalarEnv> senvs;
            std::vector<env::Observation> sobs;
            senvs.reserve(B);
            for (int b = 0; b < B; ++b) senvs.emplace_back(instances[static_cast<std::size_t>(b / N)]);
            for (auto& e : senvs) sobs.push_back(e.reset());

            std::vector<double> reward_sum(B, 0.0);
            std::vector<std::uint8_t> done(B, 0);

            auto compare_row = [&](int b) -> bool {
                const auto& s = sobs[static_cast<std::size_t>(b)];
                for (int j = 0; j < n * 2; ++j)
                    if (vobs->observations[static_cast<std::size_t>(b * n * 2 + j)] !=
                        s.observations[static_cast<std::size_t>(j)])
                        return false;
                const int na = vobs->num_actions;
                for (int a = 0; a < na; ++a)
                    if (vobs->action_mask[static_cast<std::size_t>(b * na + a)] !=
                        s.action_mask[static_cast<std::size_t>(a)])
                        return false;
                if (vobs->last_node_idx[static_cast<std::size_t>(b)] != s.last_node_idx[0])
                    return false;
                if (vobs->is_initial_action[static_cast<std::size_t>(b)] !=
                    s.is_initial_action[0])
                    return false;
                if (kind == problems::ProblemKind::TSP) {
                    if (vobs->first_node_idx[static_cast<std::size_t>(b)] !=
                        s.first_node_idx[0])
                        return false;
                } else {
                    if (vobs->current_load[static_cast<std::size_t>(b)] != s.current_load[0])
                        return false;
                    for (int j = 0; j < 2; ++j)
                        if (vobs->depot[static_cast<std::size_t>(b * 2 + j)] !=
                            s.depot[static_cast<std::size_t>(j)])
                            return false;
                    for (int j = 0; j < n; ++j)
                        if (vobs->demand[static_cast<std::size_t>(b * n + j)] !=
                            s.demand[static_cast<std::size_t>(j)])
                            return false;
                }
                ++compared;
                return true;
            };

            for (int b = 0; b < B; ++b)
                if (!compare_row(b))
                    return {false, fmt("reset observation mismatch, script %d row %d", script, b)};

            while (std::any_of(done.begin(), done.end(), [](std::uint8_t d) { return d == 0; })) {
                std::vector<int> actions(B, 0);
                for (int b = 0; b < B; ++b) {
                    if (done[static_cast<std::size_t>(b)]) continue;
                    const auto mask = senvs[static_cast<std::size_t>(b)].get_mask();
                    actions[static_cast<std::size_t>(b)] =
                        random_permitted(mask.data(), static_cast<int>(mask.size()), rng);
                }
                const auto& sb = venv.step(actions);
                vobs = &venv.observation();
                for (int b = 0; b < B; ++b) {
                    if (done[static_cast<std::size_t>(b)]) {
                        if (sb.rewards[static_cast<std::size_t>(b)] != 0.0)
                            return {false, fmt("finished row %d emitted reward", b)};
                        continue;
                    }
                    const auto res = senvs[static_cast<std::size_t>(b)].step(
                        actions[static_cast<std::size_t>(b)]);
                    if (res.reward != sb.rewards[static_cast<std::size_t>(b)])
                        return {false,
                                fmt("reward mismatch, script %d row %d: %.17g vs %.17g", script,
                                    b, res.reward, sb.rewards[static_cast<std::size_t>(b)])};
                    if (res.done != (sb.dones[static_cast<std::size_t>(b)] != 0))
                        return {false, fmt("done flag mismatch, script %d row %d", script, b)};
                    reward_sum[static_cast<std::size_t>(b)] += res.reward;
                    sobs[static_cast<std::size_t>(b)] = res.obs;
                    if (!res.done && !compare_row(b))
                        return {false,
                                fmt("step observation mismatch, script %d row %d", script, b)};
                    if (res.done) done[static_cast<std::size_t>(b)] = 1;
                }
            }

            for (int b = 0; b < B; ++b) {
                problems::Tour tour;
                if (kind == problems::ProblemKind::CVRP) tour.nodes.push_back(0);
                for (int a : venv.actions_of(b)) tour.nodes.push_back(a);
                const double len =
                    problems::tour_length(instances[static_cast<std::size_t>(b / N)], tour);
                if (std::abs(reward_sum[static_cast<std::size_t>(b)] + len) > 1e-9)
                    return {false, fmt("reward sum != -tour_length, script %d row %d", script, b)};
            }
        }
    }
    return {true, fmt("2000 scripts bit-exact (%lld row observations), %.1fs",
                      static_cast<long long>(compared), secs(t0))};
}

// ---------------------------------------------------------------------------
// 3. Model-path equivalence: forward == forward_cached == parallel_decode to
//    1e-5 on random TSP50 batches at d=128, M=16, N=8.
Outcome criterion_model_path_equivalence() {
    const auto t0 = Clock::now();
    const int M = 16, N = 8, B = M * N, n = 50;
    model::AttentionModel m(small_model(problems::ProblemKind::TSP, 128, 8, 3, 512), 7);
    nn::NoGradGuard ng;

    std::vector<problems::ProblemInstance> instances;
    for (int i = 0; i < M; ++i)
        instances.push_back(problems::generate_instance(problems::ProblemKind::TSP, n,
                                                        70000 + static_cast<std::uint64_t>(i)));
    std::vector<const problems::ProblemInstance*> shared_ptrs, expanded_ptrs;
    for (const auto& inst : instances) shared_ptrs.push_back(&inst);
    for (int b = 0; b < B; ++b)
        expanded_ptrs.push_back(&instances[static_cast<std::size_t>(b / N)]);

    env::VectorEnv env(instances, N);
    env.reset();
    auto cache = m.encode(shared_ptrs);
    Rng rng(404);
    double worst = 0.0;
    int checks = 0;
    for (int t = 0; t <= 25; ++t) {
        if (t == 0 || t == 10 || t == 25) {
            env::ModelState state(env.observation());
            const auto a = m.forward(expanded_ptrs, state);
            const auto b = m.forward_cached(cache, state);
            const auto c = m.parallel_decode(cache, state, N);
            for (std::size_t i = 0; i < a.log_probs->value.size(); ++i) {
                worst = std::max({worst, std::abs(a.log_probs->value[i] - b.log_probs->value[i]),
                                  std::abs(b.log_probs->value[i] - c.log_probs->value[i]),
                                  std::abs(a.log_probs->value[i] - c.log_probs->value[i])});
            }
            ++checks;
        }
        // Advance every row one random feasible action.
        const auto& obs = env.observation();
        std::vector<int> actions(B);
        for (int b = 0; b < B; ++b)
            actions[static_cast<std::size_t>(b)] = random_permitted(
                obs.action_mask.data() + static_cast<std::size_t>(b) * obs.num_actions,
                obs.num_actions, rng);
        env.step(actions);
    }
    return {worst <= 1e-5, fmt("max |log-prob dev| %.2e over %d decode steps (tol 1e-5), %.1fs",
                               worst, checks, secs(t0))};
}

// ---------------------------------------------------------------------------
// 4. Gradient correctness: REINFORCE and PPO losses agree with central finite
//    differences to 1e-4 on a d=8, 2-head, n=4 configuration in under a
//    minute.
Outcome criterion_gradient_checks() {
    const auto t0 = Clock::now();
    model::AttentionModel m(small_model(problems::ProblemKind::TSP, 8, 2, 1, 16), 13);
    algo::AttentionPolicy policy(m);

    std::vector<problems::ProblemInstance> instances = {
        problems::generate_instance(problems::ProblemKind::TSP, 4, 81),
        problems::generate_instance(problems::ProblemKind::TSP, 4, 82)};
    env::VectorEnv env(instances, 2);
    Rng rng(5);
    algo::RolloutBuffer buf = algo::collect_rollouts(env, m, 4, rng);
    algo::compute_advantages(buf, 1.0, 0.95);

    // REINFORCE surrogate with critic and entropy terms active.
    algo::ReinforceConfig rcfg;
    rcfg.value_coef = 0.5;
    rcfg.entropy_coef = 0.3;
    const std::vector<double> advantages = {0.7, -0.3, 0.4, -0.8};
    const auto rein = testsupport::gradcheck(m.params(), [&] {
        return algo::reinforce_loss(policy, buf, advantages, rcfg, true).total;
    });

    // PPO clipped surrogate, replicated exactly as the updater builds it for
    // one minibatch holding both instances (normalized advantages, clip,
    // value and entropy terms).
    algo::PPOConfig pcfg;
    pcfg.clip_coef = 0.2;
    pcfg.value_coef = 0.5;
    pcfg.entropy_coef = 0.01;
    const auto ppo_loss = [&]() -> nn::TensorPtr {
        const int T = buf.T, B = buf.B;
        double mean = 0.0;
        std::int64_t count = 0;
        for (int t = 0; t < T; ++t)
            for (int b = 0; b < B; ++b)
                if (buf.valid_at(t, b)) {
                    mean += buf.advantages[static_cast<std::size_t>(t)][static_cast<std::size_t>(b)];
                    ++count;
                }
        mean /= static_cast<double>(count);
        double var = 0.0;
        for (int t = 0; t < T; ++t)
            for (int b = 0; b < B; ++b)
                if (buf.valid_at(t, b)) {
                    const double c =
                        buf.advantages[static_cast<std::size_t>(t)][static_cast<std::size_t>(b)] - mean;
                    var += c * c;
                }
        const double denom = std::max(std::sqrt(var / static_cast<double>(count)), 1e-8);
        const double inv_count = 1.0 / static_cast<double>(count);

        policy.begin(buf, {0, 1});
        nn::TensorPtr pol_sum, val_sum, ent_sum;
        for (int t = 0; t < T; ++t) {
            auto po = policy.evaluate_step(t);
            std::vector<int> acts(static_cast<std::size_t>(B));
            std::vector<double> old_lp(static_cast<std::size_t>(B)), adv(static_cast<std::size_t>(B)),
                ret(static_cast<std::size_t>(B)), w_pol(static_cast<std::size_t>(B)),
                w_pos(static_cast<std::size_t>(B));
            for (int b = 0; b < B; ++b) {
                const auto tb = static_cast<std::size_t>(t), bb = static_cast<std::size_t>(b);
                acts[bb] = buf.actions[tb][bb];
                old_lp[bb] = buf.log_probs[tb][bb];
                const bool valid = buf.padding[tb][bb] == 0;
                adv[bb] = valid ? (buf.advantages[tb][bb] - mean) / denom : 0.0;
                ret[bb] = buf.returns[tb][bb];
                w_pol[bb] = valid ? -inv_count : 0.0;
                w_pos[bb] = valid ? inv_count : 0.0;
            }
            auto lp = nn::gather_cols(po.log_probs, acts);
            auto ratio = nn::exp_t(nn::sub(lp, nn::make_const({B}, old_lp)));
            auto advc = nn::make_const({B}, adv);
            auto objective =
                nn::minimum(nn::mul(ratio, advc),
                            nn::mul(nn::clamp(ratio, 1.0 - pcfg.clip_coef, 1.0 + pcfg.clip_coef),
                                    advc));
            auto pol_t = nn::weighted_sum(objective, w_pol);
            auto vdiff =
                nn::sub(nn::reshape(po.value, {B}), nn::make_const({B}, ret));
            auto val_t = nn::weighted_sum(nn::square(vdiff), w_pos);
            auto ent_t = nn::weighted_sum(nn::entropy_rows(po.log_probs), w_pos);
            pol_sum = pol_sum ? nn::add(pol_sum, pol_t) : pol_t;
            val_sum = val_sum ? nn::add(val_sum, val_t) : val_t;
            ent_sum = ent_sum ? nn::add(ent_sum, ent_t) : ent_t;
        }
        auto total = nn::add(pol_sum, nn::mul_scalar(val_sum, pcfg.value_coef));
        return nn::sub(total, nn::mul_scalar(ent_sum, pcfg.entropy_coef));
    };
    const auto ppo = testsupport::gradcheck(m.params(), ppo_loss);

    const double dt = secs(t0);
    const bool pass = rein.max_rel_err <= 1e-4 && ppo.max_rel_err <= 1e-4 && dt < 60.0;
    return {pass, fmt("max rel err: reinforce %.2e, ppo %.2e (tol 1e-4), %.1fs (< 60s: %s)",
                      rein.max_rel_err, ppo.max_rel_err, dt, dt < 60.0 ? "yes" : "NO")};
}

// ---------------------------------------------------------------------------
// 5. Algorithm sanity: PPO and all three baseline variants drive a 3-armed
//    softmax bandit's argmax to the best arm within 500 updates, 10/10 seeds.
struct BanditPolicy final : algo::Policy {
    nn::ParamStore store;
    nn::TensorPtr theta, vhead;
    int rows = 0;

    BanditPolicy(int arms, Rng& rng) {
        theta = store.add("theta", {1, arms}, 0.0, rng);
        vhead = store.add("v", {1, 1}, 0.0, rng);
    }
    nn::ParamStore& params() override { return store; }
    void begin(const algo::RolloutBuffer& buffer, const std::vector<int>& ids) override {
        rows = static_cast<int>(ids.size()) * buffer.group;
    }
    model::PolicyOutput evaluate_step(int) override {
        model::PolicyOutput out;
        out.log_probs = nn::masked_log_softmax(nn::repeat_rows(theta, rows));
        out.value = nn::repeat_rows(vhead, rows);
        return out;
    }
    void after_update() override {}

    int best_arm() const {
        int best = 0;
        for (std::size_t i = 1; i < theta->value.size(); ++i)
            if (theta->value[i] > theta->value[static_cast<std::size_t>(best)])
                best = static_cast<int>(i);
        return best;
    }
};

algo::RolloutBuffer bandit_rollout(BanditPolicy& pol, const std::vector<double>& arms, int B,
                                   Rng& rng) {
    algo::RolloutBuffer buf;
    buf.T = 1;
    buf.B = B;
    buf.group = B;
    buf.instances.push_back(problems::generate_instance(problems::ProblemKind::TSP, 3, 1));
    buf.actions.assign(1, std::vector<int>(static_cast<std::size_t>(B), 0));
    buf.log_probs.assign(1, std::vector<double>(static_cast<std::size_t>(B), 0.0));
    buf.rewards.assign(1, std::vector<double>(static_cast<std::size_t>(B), 0.0));
    buf.dones.assign(1, std::vector<std::uint8_t>(static_cast<std::size_t>(B), 1));
    buf.padding.assign(1, std::vector<std::uint8_t>(static_cast<std::size_t>(B), 0));
    buf.values.assign(1, std::vector<double>(static_cast<std::size_t>(B), pol.vhead->value[0]));
    buf.bootstrap_values.assign(static_cast<std::size_t>(B), 0.0);

    nn::NoGradGuard ng;
    pol.begin(buf, {0});
    auto po = pol.evaluate_step(0);
    auto sel = model::actor_select(po.log_probs, model::SelectMode::Sample, &rng);
    buf.actions[0] = sel.actions;
    buf.log_probs[0] = sel.log_probs;
    for (int b = 0; b < B; ++b)
        buf.rewards[0][static_cast<std::size_t>(b)] =
            arms[static_cast<std::size_t>(buf.actions[0][static_cast<std::size_t>(b)])];
    return buf;
}

Outcome criterion_bandit_sanity() {
    const auto t0 = Clock::now();
    const std::vector<double> arms = {0.2, 0.9, 0.5};
    const int best = 1, B = 64, updates = 500;
    const char* names[] = {"ppo", "critic", "greedy_rollout", "shared_rollouts"};
    int solved[4] = {0, 0, 0, 0};

    for (int variant = 0; variant < 4; ++variant) {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            Rng rng(seed_stream(seed, names[variant]));
            BanditPolicy pol(3, rng);
            if (variant == 0) {
                algo::PPOConfig cfg;
                cfg.learning_rate = 0.02;
                cfg.update_epochs = 2;
                cfg.num_minibatches = 1;
                nn::Adam opt(pol.store, cfg.learning_rate);
                for (int it = 0; it < updates; ++it) {
                    auto buf = bandit_rollout(pol, arms, B, rng);
                    algo::compute_advantages(buf, 1.0, 0.95);
                    algo::ppo_update(pol, opt, buf, cfg, rng);
                }
            } else {
                algo::ReinforceConfig cfg;
                cfg.learning_rate = 0.02;
                nn::Adam opt(pol.store, cfg.learning_rate);
                for (int it = 0; it < updates; ++it) {
                    auto buf = bandit_rollout(pol, arms, B, rng);
                    const auto rets = algo::episode_returns(buf);
                    std::vector<double> base;
                    if (variant == 1) {
                        base = algo::update_baseline(algo::BaselineKind::Critic, buf, rets);
                    } else if (variant == 2) {
                        // Self-critical: the frozen comparison policy is the
                        // current argmax arm, greedily decoded.
                        std::vector<double> greedy = {
                            arms[static_cast<std::size_t>(pol.best_arm())]};
                        base = algo::update_baseline(algo::BaselineKind::GreedyRollout, buf,
                                                     rets, &greedy);
                    } else {
                        base = algo::update_baseline(algo::BaselineKind::SharedRollouts, buf,
                                                     rets);
                    }
                    std::vector<double> adv(rets.size());
                    for (std::size_t i = 0; i < adv.size(); ++i) adv[i] = rets[i] - base[i];
                    algo::reinforce_step(pol, opt, buf, adv, cfg, variant == 1);
                }
            }
            if (pol.best_arm() == best) ++solved[variant];
        }
    }
    const bool pass = solved[0] == 10 && solved[1] == 10 && solved[2] == 10 && solved[3] == 10;
    return {pass, fmt("seeds solved: ppo %d/10, critic %d/10, greedy %d/10, shared %d/10, %.1fs",
                      solved[0], solved[1], solved[2], solved[3], secs(t0))};
}

// ---------------------------------------------------------------------------
// 6. Desk-scale training: TSP10 under PPO defaults reaches a mean greedy
//    length within 10% of the exact optimum on 256 held-out instances, and
//    multi-greedy over all 10 starts strictly improves the greedy mean.
Outcome criterion_desk_training() {
    const auto t0 = Clock::now();
    harness::ExperimentConfig cfg;
    cfg.kind = problems::ProblemKind::TSP;
    cfg.num_customers = 10;
    cfg.num_instances = 32;
    cfg.trajectories = 8;
    cfg.model = small_model(cfg.kind, 32, 4, 2, 64);
    cfg.ppo.learning_rate = 1e-3;
    cfg.env_step_budget = 1000000;
    cfg.eval_instances = 256;
    cfg.eval_cadence = 5;
    cfg.checkpoint_cadence = 50;
    cfg.out_dir = (std::filesystem::temp_directory_path() / "routerl_acceptance_tsp10").string();
    cfg.seed = 7;

    // The trainer's held-out set, rebuilt here for the exact references.
    std::vector<problems::ProblemInstance> eval_set;
    const std::uint64_t eval_base = seed_stream(cfg.eval_seed, "eval/instances");
    for (int i = 0; i < cfg.eval_instances; ++i)
        eval_set.push_back(problems::generate_instance(
            cfg.kind, cfg.num_customers,
            ((eval_base + static_cast<std::uint64_t>(i)) << 1) | 1ULL));
    double mean_opt = 0.0;
    for (const auto& inst : eval_set)
        mean_opt += problems::exact_optimal(inst).length / static_cast<double>(eval_set.size());
    cfg.target_eval_length = 1.10 * mean_opt;

    const auto out = harness::train(cfg);
    if (std::isnan(out.best_eval_length)) return {false, "training produced no evaluation"};

    model::AttentionModel trained =
        harness::model_from_checkpoint(harness::load_checkpoint(out.best_checkpoint_path));
    double greedy_mean = 0.0, multi_mean = 0.0;
    bool multi_le_greedy = true;
    for (const auto& inst : eval_set) {
        const double g = search::greedy_rollout(inst, trained).best_length;
        std::vector<int> starts(10);
        std::iota(starts.begin(), starts.end(), 0);
        const double mg = search::multi_greedy(inst, trained, starts).best_length;
        greedy_mean += g / static_cast<double>(eval_set.size());
        multi_mean += mg / static_cast<double>(eval_set.size());
        if (mg > g + 1e-9) multi_le_greedy = false;
    }
    const double dt = secs(t0);
    const double gap = (greedy_mean - mean_opt) / mean_opt;
    const bool pass =
        gap <= 0.10 && multi_mean < greedy_mean && multi_le_greedy && dt < 1800.0;
    return {pass, fmt("greedy gap %.2f%% (<= 10%%), multi-greedy %.4f < greedy %.4f: %s, "
                      "%lld env steps, %.1fs (< 1800s)",
                      100.0 * gap, multi_mean, greedy_mean,
                      multi_mean < greedy_mean && multi_le_greedy ? "yes" : "NO",
                      static_cast<long long>(out.env_steps), dt)};
}

// ---------------------------------------------------------------------------
// 7. Efficiency direction: encoder caching buys at least 2x on a full TSP50
//    episode, and the vectorized env steps at least 5x faster than a scalar
//    loop at M=256, N=8.
Outcome criterion_efficiency() {
    const auto t0 = Clock::now();
    // (a) cached vs uncached forward over one 50-step TSP50 episode.
    model::AttentionModel m(small_model(problems::ProblemKind::TSP, 128, 8, 3, 512), 3);
    const auto inst = problems::generate_instance(problems::ProblemKind::TSP, 50, 123);
    nn::NoGradGuard ng;

    std::vector<int> actions;
    double cached_time = 0.0, uncached_time = 0.0;
    {
        env::ScalarEnv env(inst);
        env.reset();
        const auto tc = Clock::now();
        auto cache = m.encode({&inst});
        while (!env.done()) {
            const env::Observation obs = env.observation();
            env::ModelState state(obs);
            const auto po = m.forward_cached(cache, state);
            const int a = model::greedy_row(po.log_probs->value.data(),
                                            static_cast<int>(po.log_probs->shape[1]));
            actions.push_back(a);
            env.step(a);
        }
        cached_time = secs(tc);
    }
    {
        // Same action sequence replayed, encoding from scratch every step.
        env::ScalarEnv env(inst);
        env.reset();
        const auto tu = Clock::now();
        for (int a : actions) {
            const env::Observation obs = env.observation();
            env::ModelState state(obs);
            (void)m.forward({&inst}, state);
            env.step(a);
        }
        uncached_time = secs(tu);
    }
    const double speedup_cache = uncached_time / cached_time;

    // (b) vectorized stepping vs a scalar-environment loop, M=256, N=8.
    const int M = 256, N = 8, B = M * N, n = 20, T = n;
    std::vector<problems::ProblemInstance> instances;
    for (int i = 0; i < M; ++i)
        instances.push_back(problems::generate_instance(problems::ProblemKind::TSP, n,
                                                        80000 + static_cast<std::uint64_t>(i)));
    // Feasible action script, prepared outside both timed phases.
    std::vector<std::vector<int>> script(T, std::vector<int>(B));
    {
        Rng rng(9);
        std::vector<env::ScalarEnv> envs;
        envs.reserve(B);
        for (int b = 0; b < B; ++b) envs.emplace_back(instances[static_cast<std::size_t>(b / N)]);
        for (auto& e : envs) e.reset();
        for (int t = 0; t < T; ++t)
            for (int b = 0; b < B; ++b) {
                auto& e = envs[static_cast<std::size_t>(b)];
                const auto mask = e.get_mask();
                const int a = random_permitted(mask.data(), static_cast<int>(mask.size()), rng);
                script[static_cast<std::size_t>(t)][static_cast<std::size_t>(b)] = a;
                e.step(a);
            }
    }
    double scalar_time = 0.0, vector_time = 0.0;
    {
        std::vector<env::ScalarEnv> envs;
        envs.reserve(B);
        for (int b = 0; b < B; ++b) envs.emplace_back(instances[static_cast<std::size_t>(b / N)]);
        for (auto& e : envs) e.reset();
        const auto ts = Clock::now();
        for (int t = 0; t < T; ++t)
            for (int b = 0; b < B; ++b)
                envs[static_cast<std::size_t>(b)].step(
                    script[static_cast<std::size_t>(t)][static_cast<std::size_t>(b)]);
        scalar_time = secs(ts);
    }
    {
        env::VectorEnv env(instances, N);
        env.reset();
        const auto tv = Clock::now();
        for (int t = 0; t < T; ++t) env.step(script[static_cast<std::size_t>(t)]);
        vector_time = secs(tv);
    }
    const double speedup_vec = scalar_time / vector_time;
    const bool pass = speedup_cache >= 2.0 && speedup_vec >= 5.0;
    return {pass, fmt("encoder cache %.1fx (>= 2x), vectorized step %.1fx (>= 5x), %.1fs",
                      speedup_cache, speedup_vec, secs(t0))};
}

// ---------------------------------------------------------------------------
// 8. Search ladder on 50 TSP8 instances with a briefly trained model:
//    bnb = exhaustive beam <= beam(5) <= multi-greedy(all starts) <= greedy
//    as means, every tour feasible.
Outcome criterion_search_ladder() {
    const auto t0 = Clock::now();
    harness::ExperimentConfig cfg;
    cfg.kind = problems::ProblemKind::TSP;
    cfg.num_customers = 8;
    cfg.num_instances = 32;
    cfg.trajectories = 8;
    cfg.model = small_model(cfg.kind, 32, 4, 2, 64);
    cfg.env_step_budget = 40 * 32 * 8 * 8;
    cfg.eval_instances = 64;
    cfg.eval_cadence = 10;
    cfg.checkpoint_cadence = 40;
    cfg.out_dir = (std::filesystem::temp_directory_path() / "routerl_acceptance_tsp8").string();
    cfg.seed = 21;
    const auto train_out = harness::train(cfg);
    model::AttentionModel m = harness::model_from_checkpoint(
        harness::load_checkpoint(train_out.best_checkpoint_path));

    double mean_bnb = 0, mean_ex = 0, mean_b5 = 0, mean_mg = 0, mean_g = 0;
    for (int i = 0; i < 50; ++i) {
        const auto inst = problems::generate_instance(problems::ProblemKind::TSP, 8,
                                                      4000 + static_cast<std::uint64_t>(i));
        const auto bnb = search::dfs_branch_and_bound(inst, m);
        const auto ex =
            search::beam_search(inst, m, std::numeric_limits<std::int64_t>::max());
        const auto b5 = search::beam_search(inst, m, 5);
        std::vector<int> starts(8);
        std::iota(starts.begin(), starts.end(), 0);
        const auto mg = search::multi_greedy(inst, m, starts);
        const auto g = search::greedy_rollout(inst, m);
        for (const auto* r : {&bnb, &ex, &b5, &mg, &g})
            if (!problems::validate_tour(inst, r->best_tour).feasible)
                return {false, fmt("infeasible tour from %s on instance %d",
                                   search::to_string(r->strategy).c_str(), i)};
        mean_bnb += bnb.best_length / 50.0;
        mean_ex += ex.best_length / 50.0;
        mean_b5 += b5.best_length / 50.0;
        mean_mg += mg.best_length / 50.0;
        mean_g += g.best_length / 50.0;
    }
    const bool pass = std::abs(mean_bnb - mean_ex) <= 1e-9 && mean_ex <= mean_b5 + 1e-9 &&
                      mean_b5 <= mean_mg + 1e-9 && mean_mg <= mean_g + 1e-9;
    return {pass, fmt("means: bnb %.4f = exhaustive %.4f <= beam5 %.4f <= multi %.4f <= "
                      "greedy %.4f, all feasible, %.1fs",
                      mean_bnb, mean_ex, mean_b5, mean_mg, mean_g, secs(t0))};
}

// ---------------------------------------------------------------------------
// 9. Active search: with an untrained model on 20 TSP8 instances, 30x64
//    fine-tuning rollouts find tours at least as short on average as 1920
//    plain sampling rollouts.
Outcome criterion_active_search() {
    const auto t0 = Clock::now();
    model::AttentionModel m(small_model(problems::ProblemKind::TSP, 16, 2, 1, 32), 99);
    double mean_active = 0, mean_sampling = 0;
    for (int i = 0; i < 20; ++i) {
        const auto inst = problems::generate_instance(problems::ProblemKind::TSP, 8,
                                                      6000 + static_cast<std::uint64_t>(i));
        search::ActiveSearchConfig ac;
        ac.num_samples = 64;
        ac.num_epochs = 30;
        Rng r_active(seed_stream(77, "as/" + std::to_string(i)));
        Rng r_sampling(seed_stream(77, "sa/" + std::to_string(i)));
        mean_active += search::active_search(inst, m, ac, r_active).best_length / 20.0;
        mean_sampling +=
            search::sample_rollouts(inst, m, 30 * 64, r_sampling).best_length / 20.0;
    }
    const bool pass = mean_active <= mean_sampling + 1e-9;
    return {pass, fmt("active %.4f <= sampling %.4f + 1e-9, %.1fs", mean_active, mean_sampling,
                      secs(t0))};
}

}  // namespace

int main(int argc, char** argv) {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "oracle exactness", criterion_oracle_exactness},
        {2, "environment equivalence", criterion_env_equivalence},
        {3, "model-path equivalence", criterion_model_path_equivalence},
        {4, "gradient correctness", criterion_gradient_checks},
        {5, "algorithm sanity", criterion_bandit_sanity},
        {6, "desk-scale training", criterion_desk_training},
        {7, "efficiency direction", criterion_efficiency},
        {8, "search ladder", criterion_search_ladder},
        {9, "active search", criterion_active_search},
    };

    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

    int failures = 0;
    for (const auto& c : criteria) {
        if (!wanted.empty() && wanted.count(c.id) == 0) continue;
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        std::printf("criterion %d (%s): %s — %s\n", c.id, c.name, out.pass ? "PASS" : "FAIL",
                    out.detail.c_str());
        std::fflush(stdout);
        if (!out.pass) ++failures;
    }
    if (failures == 0)
        std::printf("acceptance: all criteria passed\n");
    else
        std::printf("acceptance: %d criterion(s) FAILED\n", failures);
    return failures;
}
