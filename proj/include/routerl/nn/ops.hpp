// Differentiable operations used by the attention model and the training
// losses. Shapes are written [rows, cols] or [B, n, d]; all layouts are
// row-major and contiguous.
#pragma once

#include <cstdint>
#include <optional>

#include "routerl/nn/tensor.hpp"

namespace routerl::nn {

// y = x @ W (+ b).  x: [R, K], W: [K, M], b: [M] or null.
TensorPtr linear(const TensorPtr& x, const TensorPtr& W, const TensorPtr& b = nullptr);

TensorPtr add(const TensorPtr& a, const TensorPtr& b);       // same shape
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);       // same shape
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);       // elementwise
TensorPtr mul_scalar(const TensorPtr& x, double c);
TensorPtr add_scalar(const TensorPtr& x, double c);
TensorPtr exp_t(const TensorPtr& x);
TensorPtr tanh_t(const TensorPtr& x);
TensorPtr relu(const TensorPtr& x);
TensorPtr square(const TensorPtr& x);
// Elementwise min; at ties the gradient goes to `a`.
TensorPtr minimum(const TensorPtr& a, const TensorPtr& b);
// Clamp to [lo, hi]; gradient passes only where un-clamped.
TensorPtr clamp(const TensorPtr& x, double lo, double hi);

// Concatenate along the last (feature) axis; all inputs share leading rows R.
TensorPtr concat_cols(const std::vector<TensorPtr>& parts);

// Same data, new shape (numel must match). Copies; identity gradient.
TensorPtr reshape(const TensorPtr& x, std::vector<std::int64_t> shape);

// out[b, i, :] = big[b, i, :] + small[b / group, i, :].
// big: [B, n, d], small: [Bk, n, d], B = Bk * group.
TensorPtr add_grouped(const TensorPtr& big, const TensorPtr& small, int group);

// out[b, :] = h[b / group, idx[b], :].  h: [M, n, d] -> out: [M*group, d].
TensorPtr gather_nodes(const TensorPtr& h, const std::vector<int>& idx, int group = 1);

// Mean over the node axis. h: [B, n, d] -> [B, d].
TensorPtr mean_nodes(const TensorPtr& h);

// Repeats each row `group` times. x: [M, c...] -> [M*group, c...].
TensorPtr repeat_rows(const TensorPtr& x, int group);

// Rows where flags[b] != 0 are replaced by the (learned) row vector `fill`.
// x: [B, d], fill: [d].
TensorPtr replace_rows(const TensorPtr& x, const TensorPtr& fill, const std::vector<std::uint8_t>& flags);

// Feature normalization with affine parameters gamma/beta of size [d].
//   instance: statistics over the node axis, per (row, feature)
//   batch:    statistics over (rows*nodes), per feature
enum class NormKind { Instance, Batch };
TensorPtr normalize(const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta,
                    NormKind kind, double eps = 1e-5);

// Multi-head attention core (no projections). Q: [Bq, nq, d], K/V: [Bk, n, d]
// with Bq = Bk * group; query row b attends over key row b / group.
// forbidden, when given, has Bq * nq * n entries (1 = masked out).
// Returns the concatenated heads [Bq * nq, d]; the output projection is a
// separate linear().
TensorPtr multi_head_attention_core(const TensorPtr& Q, const TensorPtr& K, const TensorPtr& V,
                                    const std::uint8_t* forbidden, int num_heads, int group = 1);

// Single-head compatibility scores u_j = q . k_j / sqrt(d); forbidden
// entries set to -inf. q: [B, d], K: [Bk, n, d], B = Bk * group.
TensorPtr attention_scores(const TensorPtr& q, const TensorPtr& K, const std::uint8_t* forbidden,
                           int group = 1);

// As attention_scores but squashed: u_j = C * tanh(q . k_j / sqrt(d)).
TensorPtr clipped_scores(const TensorPtr& q, const TensorPtr& K, const std::uint8_t* forbidden,
                         double clip, int group = 1);

// Row-wise log-softmax over entries that are > -inf; -inf rows entries stay
// -inf. Throws NoFeasibleActionError if a row is entirely -inf.
TensorPtr masked_log_softmax(const TensorPtr& logits);

// out[b] = x[b, idx[b]].  x: [B, n] -> [B].
TensorPtr gather_cols(const TensorPtr& x, const std::vector<int>& idx);

// Entropy of each categorical row given log-probabilities (masked = -inf).
TensorPtr entropy_rows(const TensorPtr& log_probs);

TensorPtr sum_all(const TensorPtr& x);
TensorPtr mean_all(const TensorPtr& x);
// sum_i w[i] * x[i] for flat x; w is plain data (no gradient into w).
TensorPtr weighted_sum(const TensorPtr& x, const std::vector<double>& w);

}  // namespace routerl::nn
