#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "routerl/env/model_state.hpp"
#include "routerl/model/config.hpp"
#include "routerl/nn/ops.hpp"
#include "routerl/rng.hpp"

namespace routerl::model {

// Frozen per-instance encoder state: node embeddings, their mean, and the
// three decoder-side projections that do not change across decoding steps.
// All tensors have M rows (one per instance); a decode over M*N trajectories
// reads row b/N. `version` ties the cache to the parameter values it was
// computed from.
struct EncoderCache {
    nn::TensorPtr h;        // [M, n_nodes, d]
    nn::TensorPtr h_mean;   // [M, d]
    nn::TensorPtr k_glimpse;  // [M, n_nodes, d]
    nn::TensorPtr v_glimpse;  // [M, n_nodes, d]
    nn::TensorPtr k_logit;    // [M, n_nodes, d]
    std::int64_t num_instances = 0;
    std::int64_t num_nodes = 0;
    std::uint64_t version = 0;
};

// One decoding step's outputs for a batch of B trajectories.
struct PolicyOutput {
    nn::TensorPtr log_probs;  // [B, num_actions]; forbidden entries are -inf
    nn::TensorPtr glimpse;    // [B, d]
    nn::TensorPtr value;      // [B, 1] critic estimate, a function of glimpse
};

enum class SelectMode { Greedy, Sample };

struct ActorSelection {
    std::vector<int> actions;
    std::vector<double> log_probs;  // log-prob of the chosen action per row
};

// Pick one action per row from log-probabilities. Greedy takes the argmax
// (lowest index on exact ties); Sample draws from the categorical
// distribution using `rng` (required for Sample, ignored for Greedy).
ActorSelection actor_select(const nn::TensorPtr& log_probs, SelectMode mode, Rng* rng = nullptr);

// Single-row selection over n log-probabilities (masked entries = -inf).
// Return -1 when nothing is feasible. The sampler consumes exactly one
// uniform draw, so per-row streams stay aligned regardless of batch shape.
int greedy_row(const double* log_probs, int n);
int sample_row(const double* log_probs, int n, Rng& rng);

// Exposed score kernels (thin wrappers over the tensor ops, same masking
// convention: forbidden != 0 means the entry becomes -inf / is skipped).
nn::TensorPtr attention_score(const nn::TensorPtr& q, const nn::TensorPtr& keys,
                              const std::uint8_t* forbidden, int group = 1);
nn::TensorPtr attention_score_clipped(const nn::TensorPtr& q, const nn::TensorPtr& keys,
                                      const std::uint8_t* forbidden, double clip, int group = 1);
nn::TensorPtr multi_head_attention(const nn::TensorPtr& q, const nn::TensorPtr& keys,
                                   const nn::TensorPtr& values, const std::uint8_t* forbidden,
                                   int num_heads, const nn::TensorPtr& w_out, int group = 1);

// Encoder-decoder policy over routing states. Parameters live in a ParamStore
// under stable dotted names; their creation order is fixed so flattened
// vectors are reproducible. A version counter invalidates encoder caches
// whenever parameter values change.
class AttentionModel {
public:
    AttentionModel(const ModelConfig& config, std::uint64_t seed);

    const ModelConfig& config() const { return config_; }
    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }

    std::uint64_t param_version() const { return version_; }
    // Call after any in-place change to parameter values (optimizer step,
    // checkpoint load). Outstanding EncoderCaches become stale.
    void bump_param_version() { ++version_; }

    // Static per-node embeddings: customers through one affine map (coords,
    // plus initial demand for capacitated instances), the depot through its
    // own. Rows follow node indexing: depot first where present. All
    // instances must share the same node count. Output [M, n_nodes, d].
    nn::TensorPtr embed_static(const std::vector<const problems::ProblemInstance*>& instances);

    // Full encoder: embeddings through the attention layers plus the cached
    // decoder projections. With zero layers the embeddings pass through.
    EncoderCache encode(const std::vector<const problems::ProblemInstance*>& instances);

    // One decoder step for B = M * group trajectories, where trajectory b
    // reads instance row b / group of the cache. group == 1 is the plain
    // batched step; group > 1 decodes several trajectories per instance
    // against one shared cache.
    PolicyOutput parallel_decode(const EncoderCache& cache, const env::ModelState& state,
                                 int group);

    // Plain batched step: one trajectory per cached instance.
    PolicyOutput decode_step(const EncoderCache& cache, const env::ModelState& state) {
        return parallel_decode(cache, state, 1);
    }

    // parallel_decode with group inferred from the state/cache sizes, after
    // checking the cache is not stale.
    PolicyOutput forward_cached(const EncoderCache& cache, const env::ModelState& state);

    // Encode then decode in one call (no reusable cache).
    PolicyOutput forward(const std::vector<const problems::ProblemInstance*>& instances,
                         const env::ModelState& state);

private:
    nn::TensorPtr param(const std::string& name) const;

    ModelConfig config_;
    nn::ParamStore params_;
    std::uint64_t version_ = 1;
    std::int64_t context_dim_ = 0;
};

}  // namespace routerl::model
