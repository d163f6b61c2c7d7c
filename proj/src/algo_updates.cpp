#include "routerl/algo/updates.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <boost/math/distributions/students_t.hpp>

#include "routerl/env/model_state.hpp"

namespace routerl::algo {

using nn::TensorPtr;

namespace {

std::vector<int> expand_rows(const std::vector<int>& ids, int group) {
    std::vector<int> rows;
    rows.reserve(ids.size() * static_cast<std::size_t>(group));
    for (int id : ids)
        for (int g = 0; g < group; ++g) rows.push_back(id * group + g);
    return rows;
}

void require_finite(double v, const std::string& what, const LossStats& parts) {
    if (std::isfinite(v)) return;
    throw DivergenceError(what + " is non-finite (policy=" + std::to_string(parts.policy_loss) +
                          ", value=" + std::to_string(parts.value_loss) +
                          ", entropy=" + std::to_string(parts.entropy) + ")");
}

// One clipped-surrogate optimizer step over the rows of `ids`.
LossStats ppo_minibatch(Policy& policy, nn::Adam& opt, const RolloutBuffer& buf,
                        const PPOConfig& cfg, const std::vector<int>& ids) {
    const auto rows = expand_rows(ids, buf.group);
    const auto R = rows.size();
    const auto T = static_cast<std::size_t>(buf.T);

    // Advantage normalization over this minibatch's valid transitions.
    double mean = 0.0;
    std::int64_t count = 0;
    for (std::size_t t = 0; t < T; ++t)
        for (int row : rows)
            if (buf.valid_at(static_cast<int>(t), row)) {
                mean += buf.advantages[t][static_cast<std::size_t>(row)];
                ++count;
            }
    if (count == 0) throw ConfigError("ppo_update: minibatch holds no valid transitions");
    mean /= static_cast<double>(count);
    double var = 0.0;
    for (std::size_t t = 0; t < T; ++t)
        for (int row : rows)
            if (buf.valid_at(static_cast<int>(t), row)) {
                const double c = buf.advantages[t][static_cast<std::size_t>(row)] - mean;
                var += c * c;
            }
    const double denom = std::max(std::sqrt(var / static_cast<double>(count)), 1e-8);
    const double inv_count = 1.0 / static_cast<double>(count);

    policy.params().zero_grad();
    policy.begin(buf, ids);

    TensorPtr pol_sum, val_sum, ent_sum;
    std::int64_t clipped = 0;
    for (std::size_t t = 0; t < T; ++t) {
        auto po = policy.evaluate_step(static_cast<int>(t));

        std::vector<int> acts(R);
        std::vector<double> old_lp(R), adv(R), ret(R), w_pol(R), w_pos(R);
        for (std::size_t r = 0; r < R; ++r) {
            const auto row = static_cast<std::size_t>(rows[r]);
            acts[r] = buf.actions[t][row];
            old_lp[r] = buf.log_probs[t][row];
            const bool valid = buf.padding[t][row] == 0;
            adv[r] = valid ? (buf.advantages[t][row] - mean) / denom : 0.0;
            ret[r] = buf.returns[t][row];
            w_pol[r] = valid ? -inv_count : 0.0;
            w_pos[r] = valid ? inv_count : 0.0;
        }

        auto lp = nn::gather_cols(po.log_probs, acts);
        auto ratio = nn::exp_t(nn::sub(lp, nn::make_const({static_cast<std::int64_t>(R)}, old_lp)));
        auto advc = nn::make_const({static_cast<std::int64_t>(R)}, adv);
        auto objective = nn::minimum(nn::mul(ratio, advc),
                                     nn::mul(nn::clamp(ratio, 1.0 - cfg.clip_coef, 1.0 + cfg.clip_coef), advc));
        auto pol_t = nn::weighted_sum(objective, w_pol);  // = -mean of the surrogate

        auto vflat = nn::reshape(po.value, {static_cast<std::int64_t>(R)});
        auto vdiff = nn::sub(vflat, nn::make_const({static_cast<std::int64_t>(R)}, ret));
        auto val_t = nn::weighted_sum(nn::square(vdiff), w_pos);
        auto ent_t = nn::weighted_sum(nn::entropy_rows(po.log_probs), w_pos);

        pol_sum = pol_sum ? nn::add(pol_sum, pol_t) : pol_t;
        val_sum = val_sum ? nn::add(val_sum, val_t) : val_t;
        ent_sum = ent_sum ? nn::add(ent_sum, ent_t) : ent_t;

        for (std::size_t r = 0; r < R; ++r)
            if (w_pos[r] != 0.0 && std::abs(ratio->value[r] - 1.0) > cfg.clip_coef) ++clipped;
    }

    auto total = nn::add(pol_sum, nn::mul_scalar(val_sum, cfg.value_coef));
    total = nn::sub(total, nn::mul_scalar(ent_sum, cfg.entropy_coef));

    LossStats st;
    st.policy_loss = pol_sum->value[0];
    st.value_loss = val_sum->value[0];
    st.entropy = ent_sum->value[0];
    st.total_loss = total->value[0];
    st.clip_fraction = static_cast<double>(clipped) / static_cast<double>(count);
    st.transitions = count;
    require_finite(st.total_loss, "ppo loss", st);

    nn::backward(total);
    st.grad_norm = policy.params().clip_grad_norm(cfg.max_grad_norm);
    opt.lr = cfg.learning_rate;
    opt.step();
    policy.after_update();
    return st;
}

}  // namespace

LossStats ppo_update(Policy& policy, nn::Adam& opt, const RolloutBuffer& buf,
                     const PPOConfig& cfg, Rng& rng) {
    cfg.validate();
    if (!buf.advantages_ready)
        throw ConfigError("ppo_update: run compute_advantages on the buffer first");
    const int M = static_cast<int>(buf.instances.size());
    if (M == 0) throw ConfigError("ppo_update: empty buffer");
    const int nmb = std::min(cfg.num_minibatches, M);

    std::vector<int> order(static_cast<std::size_t>(M));
    std::iota(order.begin(), order.end(), 0);

    LossStats agg;
    int updates = 0;
    for (int epoch = 0; epoch < cfg.update_epochs; ++epoch) {
        rng.shuffle(order);
        const int base = M / nmb, rem = M % nmb;
        std::size_t pos = 0;
        for (int k = 0; k < nmb; ++k) {
            const int len = base + (k < rem ? 1 : 0);
            std::vector<int> ids(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                 order.begin() + static_cast<std::ptrdiff_t>(pos + static_cast<std::size_t>(len)));
            pos += static_cast<std::size_t>(len);
            auto st = ppo_minibatch(policy, opt, buf, cfg, ids);
            agg.policy_loss += st.policy_loss;
            agg.value_loss += st.value_loss;
            agg.entropy += st.entropy;
            agg.clip_fraction += st.clip_fraction;
            agg.grad_norm += st.grad_norm;
            agg.total_loss += st.total_loss;
            ++updates;
        }
    }
    const double inv = 1.0 / static_cast<double>(updates);
    agg.policy_loss *= inv;
    agg.value_loss *= inv;
    agg.entropy *= inv;
    agg.clip_fraction *= inv;
    agg.grad_norm *= inv;
    agg.total_loss *= inv;
    agg.transitions = buf.num_valid();
    return agg;
}

BaselineKind baseline_kind_from_string(const std::string& s) {
    if (s == "critic") return BaselineKind::Critic;
    if (s == "greedy_rollout") return BaselineKind::GreedyRollout;
    if (s == "shared_rollouts") return BaselineKind::SharedRollouts;
    throw ConfigError("unknown baseline kind: " + s);
}

std::string to_string(BaselineKind kind) {
    switch (kind) {
        case BaselineKind::Critic: return "critic";
        case BaselineKind::GreedyRollout: return "greedy_rollout";
        case BaselineKind::SharedRollouts: return "shared_rollouts";
    }
    throw ConfigError("unknown baseline kind");
}

std::vector<double> update_baseline(BaselineKind kind, const RolloutBuffer& buf,
                                    const std::vector<double>& returns,
                                    const std::vector<double>* greedy_returns_per_instance) {
    const auto B = static_cast<std::size_t>(buf.B);
    const auto group = static_cast<std::size_t>(buf.group);
    std::vector<double> b(B, 0.0);
    switch (kind) {
        case BaselineKind::Critic:
            for (std::size_t i = 0; i < B; ++i) b[i] = buf.values[0][i];
            return b;
        case BaselineKind::GreedyRollout: {
            if (greedy_returns_per_instance == nullptr)
                throw ConfigError("greedy_rollout baseline needs per-instance greedy returns");
            if (greedy_returns_per_instance->size() != buf.instances.size())
                throw ShapeError("greedy returns size != instance count");
            for (std::size_t i = 0; i < B; ++i) b[i] = (*greedy_returns_per_instance)[i / group];
            return b;
        }
        case BaselineKind::SharedRollouts: {
            for (std::size_t m = 0; m < buf.instances.size(); ++m) {
                double s = 0.0;
                for (std::size_t g = 0; g < group; ++g) s += returns[m * group + g];
                s /= static_cast<double>(group);
                for (std::size_t g = 0; g < group; ++g) b[m * group + g] = s;
            }
            return b;
        }
    }
    throw ConfigError("unknown baseline kind");
}

ReinforceLoss reinforce_loss(Policy& policy, const RolloutBuffer& buf,
                             const std::vector<double>& advantages, const ReinforceConfig& cfg,
                             bool train_critic) {
    const auto B = static_cast<std::size_t>(buf.B);
    if (advantages.size() != B) throw ShapeError("reinforce_loss: advantage per row required");
    std::vector<int> ids(buf.instances.size());
    std::iota(ids.begin(), ids.end(), 0);
    policy.begin(buf, ids);

    const double inv_b = 1.0 / static_cast<double>(B);
    const double inv_valid = 1.0 / static_cast<double>(buf.num_valid());
    TensorPtr pol_sum, ent_sum, val_term;
    for (int t = 0; t < buf.T; ++t) {
        auto po = policy.evaluate_step(t);
        const auto tz = static_cast<std::size_t>(t);
        std::vector<double> w(B), w_ent(B);
        for (std::size_t r = 0; r < B; ++r) {
            const bool valid = buf.padding[tz][r] == 0;
            w[r] = valid ? -advantages[r] * inv_b : 0.0;
            w_ent[r] = valid ? inv_valid : 0.0;
        }
        auto lp = nn::gather_cols(po.log_probs, buf.actions[tz]);
        auto pol_t = nn::weighted_sum(lp, w);
        auto ent_t = nn::weighted_sum(nn::entropy_rows(po.log_probs), w_ent);
        pol_sum = pol_sum ? nn::add(pol_sum, pol_t) : pol_t;
        ent_sum = ent_sum ? nn::add(ent_sum, ent_t) : ent_t;

        if (t == 0 && train_critic) {
            auto ret = episode_returns(buf);
            auto vdiff = nn::sub(nn::reshape(po.value, {static_cast<std::int64_t>(B)}),
                                 nn::make_const({static_cast<std::int64_t>(B)}, ret));
            std::vector<double> w_v(B, inv_b);
            val_term = nn::weighted_sum(nn::square(vdiff), w_v);
        }
    }

    ReinforceLoss out;
    out.policy_loss = pol_sum->value[0];
    out.entropy = ent_sum->value[0];
    out.total = pol_sum;
    if (val_term) {
        out.value_loss = val_term->value[0];
        out.total = nn::add(out.total, nn::mul_scalar(val_term, cfg.value_coef));
    }
    out.total = nn::sub(out.total, nn::mul_scalar(ent_sum, cfg.entropy_coef));
    return out;
}

LossStats reinforce_step(Policy& policy, nn::Adam& opt, const RolloutBuffer& buf,
                         const std::vector<double>& advantages, const ReinforceConfig& cfg,
                         bool train_critic) {
    policy.params().zero_grad();
    auto loss = reinforce_loss(policy, buf, advantages, cfg, train_critic);
    LossStats st;
    st.policy_loss = loss.policy_loss;
    st.value_loss = loss.value_loss;
    st.entropy = loss.entropy;
    st.total_loss = loss.total->value[0];
    st.transitions = buf.num_valid();
    require_finite(st.total_loss, "reinforce loss", st);

    nn::backward(loss.total);
    st.grad_norm = policy.params().clip_grad_norm(cfg.max_grad_norm);
    opt.lr = cfg.learning_rate;
    opt.step();
    policy.after_update();
    return st;
}

LossStats reinforce_update(model::AttentionModel& m, model::AttentionModel* baseline_model,
                           nn::Adam& opt, const std::vector<problems::ProblemInstance>& instances,
                           const BaselineSpec& spec, const ReinforceConfig& cfg, Rng& rng,
                           env::RewardMode reward_mode) {
    if (instances.empty()) throw ConfigError("reinforce_update: no instances");
    const int N = spec.kind == BaselineKind::SharedRollouts ? spec.num_rollouts : 1;
    if (N < 1) throw ConfigError("reinforce_update: num_rollouts must be positive");

    env::VectorEnv env(instances, N, reward_mode);
    const int T = episode_horizon(instances[0].kind, instances[0].num_customers());
    auto buf = collect_rollouts(env, m, T, rng, model::SelectMode::Sample);
    auto returns = episode_returns(buf);

    std::vector<double> greedy;
    const std::vector<double>* gp = nullptr;
    if (spec.kind == BaselineKind::GreedyRollout) {
        if (baseline_model == nullptr)
            throw ConfigError("greedy_rollout baseline requires a baseline model");
        greedy = greedy_rollout_returns(*baseline_model, instances);
        gp = &greedy;
    }
    auto b = update_baseline(spec.kind, buf, returns, gp);

    std::vector<double> adv(returns.size());
    for (std::size_t i = 0; i < adv.size(); ++i) adv[i] = returns[i] - b[i];

    AttentionPolicy policy(m);
    return reinforce_step(policy, opt, buf, adv, cfg, spec.kind == BaselineKind::Critic);
}

std::vector<double> greedy_rollout_returns(model::AttentionModel& m,
                                           const std::vector<problems::ProblemInstance>& instances,
                                           int group) {
    nn::NoGradGuard ng;
    env::VectorEnv env(instances, group);
    env.reset();
    std::vector<const problems::ProblemInstance*> ptrs;
    for (const auto& inst : instances) ptrs.push_back(&inst);
    auto cache = m.encode(ptrs);

    const auto B = static_cast<std::size_t>(env.batch());
    std::vector<double> out(B, 0.0);
    std::vector<std::uint8_t> finished(B, 0);
    const int cap = episode_horizon(instances[0].kind, instances[0].num_customers());
    for (int t = 0; t < cap && !env.all_finished(); ++t) {
        env::Observation obs = env.observation();
        // Rows already finished keep a harmless permitted action.
        const auto na = static_cast<std::size_t>(obs.num_actions);
        for (std::size_t b = 0; b < B; ++b) {
            if (!finished[b]) continue;
            for (std::size_t a = 0; a < na; ++a) obs.action_mask[b * na + a] = a == 0 ? 1.0 : 0.0;
        }
        env::ModelState st(obs);
        auto po = m.parallel_decode(cache, st, group);
        auto sel = model::actor_select(po.log_probs, model::SelectMode::Greedy);
        const auto& sb = env.step(sel.actions);
        for (std::size_t b = 0; b < B; ++b) out[b] += sb.rewards[b];
        finished = sb.dones;
    }
    return out;
}

double one_sided_paired_p(const std::vector<double>& diffs) {
    const auto n = diffs.size();
    if (n < 2) throw ConfigError("paired test needs at least two samples");
    double mean = 0.0;
    for (double d : diffs) mean += d;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double d : diffs) ss += (d - mean) * (d - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd == 0.0) return mean < 0.0 ? 0.0 : 1.0;
    const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
    boost::math::students_t dist(static_cast<double>(n - 1));
    return boost::math::cdf(dist, t);
}

bool maybe_promote_baseline(model::AttentionModel& current, model::AttentionModel& baseline,
                            const std::vector<problems::ProblemInstance>& eval_set, double alpha) {
    auto rc = greedy_rollout_returns(current, eval_set);
    auto rb = greedy_rollout_returns(baseline, eval_set);
    // Length difference current - baseline; negative mean favors promotion.
    std::vector<double> diffs(rc.size());
    for (std::size_t i = 0; i < rc.size(); ++i) diffs[i] = rb[i] - rc[i];
    if (one_sided_paired_p(diffs) < alpha) {
        baseline.params().assign_values(current.params().flatten_values());
        baseline.bump_param_version();
        return true;
    }
    return false;
}

}  // namespace routerl::algo
