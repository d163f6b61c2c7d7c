#include "routerl/model/attention_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace routerl::model {

using nn::TensorPtr;
using problems::ProblemInstance;
using problems::ProblemKind;

int greedy_row(const double* log_probs, int n) {
    int choice = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        if (std::isfinite(log_probs[i]) && log_probs[i] > best) {
            best = log_probs[i];
            choice = i;
        }
    }
    return choice;
}

int sample_row(const double* log_probs, int n, Rng& rng) {
    const double u = rng.uniform();
    double cum = 0.0;
    int last_finite = -1;
    for (int i = 0; i < n; ++i) {
        if (!std::isfinite(log_probs[i])) continue;
        last_finite = i;
        cum += std::exp(log_probs[i]);
        if (u < cum) return i;
    }
    // Rounding can leave cum slightly below 1; fall back to the last
    // feasible entry.
    return last_finite;
}

ActorSelection actor_select(const TensorPtr& log_probs, SelectMode mode, Rng* rng) {
    if (log_probs->ndim() != 2) throw ShapeError("actor_select: log_probs must be [B, n]");
    if (mode == SelectMode::Sample && rng == nullptr)
        throw ConfigError("actor_select: Sample mode needs an rng");
    const std::int64_t B = log_probs->shape[0], n = log_probs->shape[1];
    ActorSelection sel;
    sel.actions.resize(static_cast<std::size_t>(B));
    sel.log_probs.resize(static_cast<std::size_t>(B));
    for (std::int64_t b = 0; b < B; ++b) {
        const double* lp = log_probs->value.data() + b * n;
        const int choice = mode == SelectMode::Greedy ? greedy_row(lp, static_cast<int>(n))
                                                      : sample_row(lp, static_cast<int>(n), *rng);
        if (choice < 0) throw NoFeasibleActionError("actor_select: row has no feasible action");
        sel.actions[static_cast<std::size_t>(b)] = choice;
        sel.log_probs[static_cast<std::size_t>(b)] = lp[choice];
    }
    return sel;
}

TensorPtr attention_score(const TensorPtr& q, const TensorPtr& keys,
                          const std::uint8_t* forbidden, int group) {
    return nn::attention_scores(q, keys, forbidden, group);
}

TensorPtr attention_score_clipped(const TensorPtr& q, const TensorPtr& keys,
                                  const std::uint8_t* forbidden, double clip, int group) {
    return nn::clipped_scores(q, keys, forbidden, clip, group);
}

TensorPtr multi_head_attention(const TensorPtr& q, const TensorPtr& keys, const TensorPtr& values,
                               const std::uint8_t* forbidden, int num_heads,
                               const TensorPtr& w_out, int group) {
    TensorPtr q3 = q;
    if (q->ndim() == 2) q3 = nn::reshape(q, {q->shape[0], 1, q->shape[1]});
    auto heads = nn::multi_head_attention_core(q3, keys, values, forbidden, num_heads, group);
    return nn::linear(heads, w_out);
}

AttentionModel::AttentionModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
    config_.validate();
    const std::int64_t d = config_.embed_dim;
    const std::int64_t ff = config_.feedforward_dim;
    const bool cvrp = config_.kind == ProblemKind::CVRP;
    context_dim_ = cvrp ? 2 * d + 1 : 3 * d;

    Rng rng(seed_stream(seed, "model/init"));
    auto weight = [&](const std::string& name, std::int64_t in, std::int64_t out) {
        return params_.add(name, {in, out}, 1.0 / std::sqrt(static_cast<double>(in)), rng);
    };
    auto bias = [&](const std::string& name, std::int64_t n, std::int64_t fan_in) {
        return params_.add(name, {n}, 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
    };
    auto norm_affine = [&](const std::string& prefix) {
        auto gamma = params_.add(prefix + ".gamma", {d}, 0.0, rng);
        std::fill(gamma->value.begin(), gamma->value.end(), 1.0);
        params_.add(prefix + ".beta", {d}, 0.0, rng);
    };

    // Creation order below is the canonical parameter order (serialization,
    // optimizer state, flatten_values).
    weight("embed.w", cvrp ? 3 : 2, d);
    bias("embed.b", d, cvrp ? 3 : 2);
    if (cvrp) {
        weight("embed_depot.w", 2, d);
        bias("embed_depot.b", d, 2);
    }
    for (int i = 0; i < config_.num_encoder_layers; ++i) {
        const std::string p = "enc" + std::to_string(i);
        weight(p + ".attn.wq", d, d);
        weight(p + ".attn.wk", d, d);
        weight(p + ".attn.wv", d, d);
        weight(p + ".attn.wo", d, d);
        norm_affine(p + ".norm1");
        weight(p + ".ff.w1", d, ff);
        bias(p + ".ff.b1", ff, d);
        weight(p + ".ff.w2", ff, d);
        bias(p + ".ff.b2", d, ff);
        norm_affine(p + ".norm2");
    }
    weight("dec.ctx.wq", context_dim_, d);
    weight("dec.glimpse.wk", d, d);
    weight("dec.glimpse.wv", d, d);
    weight("dec.glimpse.wo", d, d);
    weight("dec.logit.wk", d, d);
    if (!cvrp) params_.add("dec.placeholder.first", {d}, 1.0 / std::sqrt(static_cast<double>(d)), rng);
    params_.add("dec.placeholder.last", {d}, 1.0 / std::sqrt(static_cast<double>(d)), rng);
    if (cvrp) {
        weight("dyn.wk", 1, d);
        weight("dyn.wv", 1, d);
        if (config_.dynamic_logit_keys) weight("dyn.wk_logit", 1, d);
    }
    weight("critic.w1", d, d);
    bias("critic.b1", d, d);
    weight("critic.w2", d, 1);
    bias("critic.b2", 1, d);
}

TensorPtr AttentionModel::param(const std::string& name) const { return params_.find(name); }

TensorPtr AttentionModel::embed_static(const std::vector<const ProblemInstance*>& instances) {
    if (instances.empty()) throw ShapeError("embed_static: empty instance batch");
    const bool cvrp = config_.kind == ProblemKind::CVRP;
    const std::int64_t M = static_cast<std::int64_t>(instances.size());
    const int n_cust = instances[0]->num_customers();
    for (const auto* inst : instances) {
        if (inst == nullptr) throw ShapeError("embed_static: null instance");
        if (inst->kind != config_.kind)
            throw SchemaError("embed_static: instance kind does not match the model");
        if (inst->num_customers() != n_cust)
            throw ShapeError("embed_static: instances must share one node count");
    }
    const std::int64_t d = config_.embed_dim;
    const std::int64_t in_dim = cvrp ? 3 : 2;

    std::vector<double> cust_in;
    cust_in.reserve(static_cast<std::size_t>(M * n_cust * in_dim));
    for (const auto* inst : instances) {
        for (int c = 0; c < n_cust; ++c) {
            cust_in.push_back(inst->coords[static_cast<std::size_t>(c)][0]);
            cust_in.push_back(inst->coords[static_cast<std::size_t>(c)][1]);
            if (cvrp) cust_in.push_back(inst->demand[static_cast<std::size_t>(c)]);
        }
    }
    auto cust = nn::linear(nn::make_const({M * n_cust, in_dim}, cust_in), param("embed.w"),
                           param("embed.b"));  // [M*n_cust, d]
    if (!cvrp) return nn::reshape(cust, {M, n_cust, d});

    std::vector<double> depot_in;
    depot_in.reserve(static_cast<std::size_t>(M * 2));
    for (const auto* inst : instances) {
        depot_in.push_back(inst->depot[0]);
        depot_in.push_back(inst->depot[1]);
    }
    auto depot = nn::linear(nn::make_const({M, 2}, depot_in), param("embed_depot.w"),
                            param("embed_depot.b"));  // [M, d]
    // Row-major concat of [M, d] and [M, n*d] lays out node 0 (depot) first.
    auto wide = nn::concat_cols({depot, nn::reshape(cust, {M, n_cust * d})});
    return nn::reshape(wide, {M, n_cust + 1, d});
}

EncoderCache AttentionModel::encode(const std::vector<const ProblemInstance*>& instances) {
    const std::int64_t d = config_.embed_dim;
    auto h = embed_static(instances);  // [M, n, d]
    const std::int64_t M = h->shape[0], n = h->shape[1];

    for (int i = 0; i < config_.num_encoder_layers; ++i) {
        const std::string p = "enc" + std::to_string(i);
        auto flat = nn::reshape(h, {M * n, d});
        auto q = nn::reshape(nn::linear(flat, param(p + ".attn.wq")), {M, n, d});
        auto k = nn::reshape(nn::linear(flat, param(p + ".attn.wk")), {M, n, d});
        auto v = nn::reshape(nn::linear(flat, param(p + ".attn.wv")), {M, n, d});
        auto heads = nn::multi_head_attention_core(q, k, v, nullptr, config_.num_heads);
        auto x0 = nn::add(flat, nn::linear(heads, param(p + ".attn.wo")));
        auto x1 = nn::normalize(nn::reshape(x0, {M, n, d}), param(p + ".norm1.gamma"),
                                param(p + ".norm1.beta"), config_.normalization);
        auto x1f = nn::reshape(x1, {M * n, d});
        auto mlp = nn::linear(nn::relu(nn::linear(x1f, param(p + ".ff.w1"), param(p + ".ff.b1"))),
                              param(p + ".ff.w2"), param(p + ".ff.b2"));
        auto x2 = nn::add(x1f, mlp);
        h = nn::normalize(nn::reshape(x2, {M, n, d}), param(p + ".norm2.gamma"),
                          param(p + ".norm2.beta"), config_.normalization);
    }

    EncoderCache cache;
    cache.h = h;
    cache.h_mean = nn::mean_nodes(h);
    auto hf = nn::reshape(h, {M * n, d});
    cache.k_glimpse = nn::reshape(nn::linear(hf, param("dec.glimpse.wk")), {M, n, d});
    cache.v_glimpse = nn::reshape(nn::linear(hf, param("dec.glimpse.wv")), {M, n, d});
    cache.k_logit = nn::reshape(nn::linear(hf, param("dec.logit.wk")), {M, n, d});
    cache.num_instances = M;
    cache.num_nodes = n;
    cache.version = version_;
    return cache;
}

PolicyOutput AttentionModel::parallel_decode(const EncoderCache& cache,
                                             const env::ModelState& state, int group) {
    if (cache.version != version_)
        throw StaleCacheError("encoder cache was built from older parameter values");
    if (group < 1) throw ShapeError("parallel_decode: group must be >= 1");
    const std::int64_t B = state.batch();
    if (B != cache.num_instances * group)
        throw ShapeError("parallel_decode: trajectory count != cached instances * group");
    if (state.kind() != config_.kind)
        throw SchemaError("parallel_decode: state kind does not match the model");
    if (state.num_actions() != cache.num_nodes)
        throw ShapeError("parallel_decode: action width != cached node count");

    const std::int64_t d = config_.embed_dim;
    const std::int64_t n = cache.num_nodes;
    const bool cvrp = config_.kind == ProblemKind::CVRP;
    const std::uint8_t* forbidden = state.forbidden().data();

    // Previous-node embedding; rows before their first action read a learned
    // placeholder instead (index 0 is a harmless stand-in for the gather).
    std::vector<int> last_idx(static_cast<std::size_t>(B));
    std::vector<std::uint8_t> initial(static_cast<std::size_t>(B));
    for (std::int64_t b = 0; b < B; ++b) {
        const bool init = state.is_initial_action(static_cast<int>(b));
        initial[static_cast<std::size_t>(b)] = init ? 1 : 0;
        const int lastn = state.get_current_node(static_cast<int>(b));
        last_idx[static_cast<std::size_t>(b)] = init ? 0 : lastn;
    }
    auto h_last = nn::replace_rows(nn::gather_nodes(cache.h, last_idx, group),
                                   param("dec.placeholder.last"), initial);
    auto h_mean = group == 1 ? cache.h_mean : nn::repeat_rows(cache.h_mean, group);

    TensorPtr ctx;
    if (!cvrp) {
        std::vector<int> first_idx(static_cast<std::size_t>(B));
        for (std::int64_t b = 0; b < B; ++b) {
            const int f = state.first_a(static_cast<int>(b));
            first_idx[static_cast<std::size_t>(b)] = f < 0 ? 0 : f;
        }
        auto h_first = nn::replace_rows(nn::gather_nodes(cache.h, first_idx, group),
                                        param("dec.placeholder.first"), initial);
        ctx = nn::concat_cols({h_mean, h_first, h_last});
    } else {
        std::vector<double> load(static_cast<std::size_t>(B));
        for (std::int64_t b = 0; b < B; ++b)
            load[static_cast<std::size_t>(b)] = state.remaining_load(static_cast<int>(b));
        ctx = nn::concat_cols({h_mean, h_last, nn::make_const({B, 1}, load)});
    }
    auto q = nn::reshape(nn::linear(ctx, param("dec.ctx.wq")), {B, 1, d});

    TensorPtr k_glimpse = cache.k_glimpse;
    TensorPtr v_glimpse = cache.v_glimpse;
    TensorPtr k_logit = cache.k_logit;
    int glimpse_group = group;
    int logit_group = group;
    if (cvrp) {
        // Remaining demand is the per-step node feature; its projections are
        // added on top of the cached key/value projections. Depot row is 0.
        std::vector<double> dyn(static_cast<std::size_t>(B * n), 0.0);
        for (std::int64_t b = 0; b < B; ++b)
            for (std::int64_t i = 1; i < n; ++i)
                dyn[static_cast<std::size_t>(b * n + i)] =
                    state.remaining_demand(static_cast<int>(b), static_cast<int>(i - 1));
        auto dyn_in = nn::make_const({B * n, 1}, dyn);
        auto add_dyn = [&](const char* w, const TensorPtr& base) {
            auto proj = nn::reshape(nn::linear(dyn_in, param(w)), {B, n, d});
            return nn::add_grouped(proj, base, group);
        };
        k_glimpse = add_dyn("dyn.wk", k_glimpse);
        v_glimpse = add_dyn("dyn.wv", v_glimpse);
        glimpse_group = 1;
        if (config_.dynamic_logit_keys) {
            k_logit = add_dyn("dyn.wk_logit", k_logit);
            logit_group = 1;
        }
    }

    auto heads = nn::multi_head_attention_core(q, k_glimpse, v_glimpse, forbidden,
                                               config_.num_heads, glimpse_group);
    PolicyOutput out;
    out.glimpse = nn::linear(heads, param("dec.glimpse.wo"));  // [B, d]
    auto logits = nn::clipped_scores(out.glimpse, k_logit, forbidden, config_.logit_clip,
                                     logit_group);
    out.log_probs = nn::masked_log_softmax(logits);
    auto hidden = nn::relu(nn::linear(out.glimpse, param("critic.w1"), param("critic.b1")));
    out.value = nn::linear(hidden, param("critic.w2"), param("critic.b2"));  // [B, 1]
    return out;
}

PolicyOutput AttentionModel::forward_cached(const EncoderCache& cache,
                                            const env::ModelState& state) {
    if (cache.num_instances <= 0) throw ShapeError("forward_cached: empty cache");
    if (state.batch() % cache.num_instances != 0)
        throw ShapeError("forward_cached: batch is not a multiple of cached instances");
    return parallel_decode(cache, state,
                           static_cast<int>(state.batch() / cache.num_instances));
}

PolicyOutput AttentionModel::forward(const std::vector<const ProblemInstance*>& instances,
                                     const env::ModelState& state) {
    auto cache = encode(instances);
    return forward_cached(cache, state);
}

}  // namespace routerl::model
