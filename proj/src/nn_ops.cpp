#include "routerl/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace routerl::nn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void expect(bool cond, const char* msg) {
    if (!cond) throw ShapeError(msg);
}

// Builds the output node and wires the autodiff graph when recording.
TensorPtr node(std::vector<std::int64_t> shape, std::vector<TensorPtr> parents) {
    auto out = std::make_shared<Tensor>(std::move(shape));
    if (grad_enabled()) {
        bool rg = false;
        for (const auto& p : parents)
            if (p && p->requires_grad) rg = true;
        if (rg) {
            out->requires_grad = true;
            out->ensure_grad();
            for (auto& p : parents) {
                if (!p) continue;
                if (p->requires_grad) p->ensure_grad();
                out->parents.push_back(std::move(p));
            }
        }
    }
    return out;
}

// C[RxM] += A[RxK] @ B[KxM]
void gemm_nn(const double* A, const double* B, double* C, std::int64_t R, std::int64_t K,
             std::int64_t M) {
    for (std::int64_t i = 0; i < R; ++i) {
        const double* Arow = A + i * K;
        double* Crow = C + i * M;
        for (std::int64_t k = 0; k < K; ++k) {
            const double a = Arow[k];
            if (a == 0.0) continue;
            const double* Brow = B + k * M;
            for (std::int64_t j = 0; j < M; ++j) Crow[j] += a * Brow[j];
        }
    }
}

// C[KxM] += A^T @ B with A: [RxK], B: [RxM]
void gemm_tn(const double* A, const double* B, double* C, std::int64_t R, std::int64_t K,
             std::int64_t M) {
    for (std::int64_t i = 0; i < R; ++i) {
        const double* Arow = A + i * K;
        const double* Brow = B + i * M;
        for (std::int64_t k = 0; k < K; ++k) {
            const double a = Arow[k];
            if (a == 0.0) continue;
            double* Crow = C + k * M;
            for (std::int64_t j = 0; j < M; ++j) Crow[j] += a * Brow[j];
        }
    }
}

// C[RxK] += A @ B^T with A: [RxM], B: [KxM]
void gemm_nt(const double* A, const double* B, double* C, std::int64_t R, std::int64_t M,
             std::int64_t K) {
    for (std::int64_t i = 0; i < R; ++i) {
        const double* Arow = A + i * M;
        double* Crow = C + i * K;
        for (std::int64_t k = 0; k < K; ++k) {
            const double* Brow = B + k * M;
            double dot = 0.0;
            for (std::int64_t j = 0; j < M; ++j) dot += Arow[j] * Brow[j];
            Crow[k] += dot;
        }
    }
}

std::int64_t rows_of(const TensorPtr& x) {
    std::int64_t r = 1;
    for (std::size_t i = 0; i + 1 < x->shape.size(); ++i) r *= x->shape[i];
    return r;
}

TensorPtr unary_map(const TensorPtr& x, double (*f)(double),
                    std::function<double(double v, double y)> dfdx_from_vy) {
    auto out = node(x->shape, {x});
    const std::int64_t n = x->numel();
    for (std::int64_t i = 0; i < n; ++i) out->value[i] = f(x->value[i]);
    if (out->requires_grad) {
        auto xp = x;
        auto df = std::move(dfdx_from_vy);
        out->backward_fn = [xp, df](Tensor& self) {
            const std::int64_t m = self.numel();
            for (std::int64_t i = 0; i < m; ++i)
                xp->grad[i] += self.grad[i] * df(xp->value[i], self.value[i]);
        };
    }
    return out;
}

}  // namespace

TensorPtr linear(const TensorPtr& x, const TensorPtr& W, const TensorPtr& b) {
    expect(W->ndim() == 2, "linear: W must be 2-D");
    const std::int64_t K = W->shape[0], M = W->shape[1];
    expect(x->shape.back() == K, "linear: inner dimensions disagree");
    const std::int64_t R = rows_of(x);
    if (b) expect(b->numel() == M, "linear: bias size mismatch");

    std::vector<std::int64_t> out_shape = x->shape;
    out_shape.back() = M;
    auto out = node(std::move(out_shape), {x, W, b});
    if (b) {
        for (std::int64_t i = 0; i < R; ++i)
            std::copy(b->value.begin(), b->value.end(), out->value.begin() + i * M);
    }
    gemm_nn(x->value.data(), W->value.data(), out->value.data(), R, K, M);

    if (out->requires_grad) {
        auto xp = x, Wp = W, bp = b;
        out->backward_fn = [xp, Wp, bp, R, K, M](Tensor& self) {
            if (xp->requires_grad)
                gemm_nt(self.grad.data(), Wp->value.data(), xp->grad.data(), R, M, K);
            if (Wp->requires_grad)
                gemm_tn(xp->value.data(), self.grad.data(), Wp->grad.data(), R, K, M);
            if (bp && bp->requires_grad) {
                for (std::int64_t i = 0; i < R; ++i)
                    for (std::int64_t j = 0; j < M; ++j) bp->grad[j] += self.grad[i * M + j];
            }
        };
    }
    return out;
}

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
    expect(a->shape == b->shape, "add: shape mismatch");
    auto out = node(a->shape, {a, b});
    const std::int64_t n = a->numel();
    for (std::int64_t i = 0; i < n; ++i) out->value[i] = a->value[i] + b->value[i];
    if (out->requires_grad) {
        auto ap = a, bp = b;
        out->backward_fn = [ap, bp](Tensor& self) {
            const std::int64_t m = self.numel();
            for (std::int64_t i = 0; i < m; ++i) {
                if (ap->requires_grad) ap->grad[i] += self.grad[i];
                if (bp->requires_grad) bp->grad[i] += self.grad[i];
            }
        };
    }
    return out;
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
    expect(a->shape == b->shape, "sub: shape mismatch");
    auto out = node(a->shape, {a, b});
    const std::int64_t n = a->numel();
    for (std::int64_t i = 0; i < n; ++i) out->value[i] = a->value[i] - b->value[i];
    if (out->requires_grad) {
        auto ap = a, bp = b;
        out->backward_fn = [ap, bp](Tensor& self) {
            const std::int64_t m = self.numel();
            for (std::int64_t i = 0; i < m; ++i) {
                if (ap->requires_grad) ap->grad[i] += self.grad[i];
                if (bp->requires_grad) bp->grad[i] -= self.grad[i];
            }
        };
    }
    return out;
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
    expect(a->shape == b->shape, "mul: shape mismatch");
    auto out = node(a->shape, {a, b});
    const std::int64_t n = a->numel();
    for (std::int64_t i = 0; i < n; ++i) out->value[i] = a->value[i] * b->value[i];
    if (out->requires_grad) {
        auto ap = a, bp = b;
        out->backward_fn = [ap, bp](Tensor& self) {
            const std::int64_t m = self.numel();
            for (std::int64_t i = 0; i < m; ++i) {
                if (ap->requires_grad) ap->grad[i] += self.grad[i] * bp->value[i];
                if (bp->requires_grad) bp->grad[i] += self.grad[i] * ap->value[i];
            }
        };
    }
    return out;
}

TensorPtr mul_scalar(const TensorPtr& x, double c) {
    auto out = node(x->shape, {x});
    const std::int64_t n = x->numel();
    for (std::int64_t i = 0; i < n; ++i) out->value[i] = x->value[i] * c;
    if (out->requires_grad) {
        auto xp = x;
        out->backward_fn = [xp, c](Tensor& self) {
            const std::int64_t m = self.numel();
            for (std::int64_t i = 0; i < m; ++i) xp->grad[i] += self.grad[i] * c;
        };
    }
    return out;
}

TensorPtr add_scalar(const TensorPtr& x, double c) {
    auto out = node(x->shape, {x});
    const std::int64_t n = x->numel();
    for (std::int64_t i = 0; i < n; ++i) out->value[i] = x->value[i] + c;
    if (out->requires_grad) {
        auto xp = x;
        out->backward_fn = [xp](Tensor& self) {
            const std::int64_t m = self.numel();
            for (std::int64_t i = 0; i < m; ++i) xp->grad[i] += self.grad[i];
        };
    }
    return out;
}

TensorPtr exp_t(const TensorPtr& x) {
    return unary_map(x, [](double v) { return std::exp(v); },
                     [](double, double y) { return y; });
}

TensorPtr tanh_t(const TensorPtr& x) {
    return unary_map(x, [](double v) { return std::tanh(v); },
                     [](double, double y) { return 1.0 - y * y; });
}

TensorPtr relu(const TensorPtr& x) {
    return unary_map(x, [](double v) { return v > 0.0 ? v : 0.0; },
                     [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

TensorPtr square(const TensorPtr& x) {
    return unary_map(x, [](double v) { return v * v; },
                     [](double v, double) { return 2.0 * v; });
}

TensorPtr minimum(const TensorPtr& a, const TensorPtr& b) {
    expect(a->shape == b->shape, "minimum: shape mismatch");
    auto out = node(a->shape, {a, b});
    const std::int64_t n = a->numel();
    for (std::int64_t i = 0; i < n; ++i) out->value[i] = std::min(a->value[i], b->value[i]);
    if (out->requires_grad) {
        auto ap = a, bp = b;
        out->backward_fn = [ap, bp](Tensor& self) {
            const std::int64_t m = self.numel();
            for (std::int64_t i = 0; i < m; ++i) {
                if (ap->value[i] <= bp->value[i]) {
                    if (ap->requires_grad) ap->grad[i] += self.grad[i];
                } else if (bp->requires_grad) {
                    bp->grad[i] += self.grad[i];
                }
            }
        };
    }
    return out;
}

TensorPtr clamp(const TensorPtr& x, double lo, double hi) {
    expect(lo <= hi, "clamp: lo > hi");
    auto out = node(x->shape, {x});
    const std::int64_t n = x->numel();
    for (std::int64_t i = 0; i < n; ++i) out->value[i] = std::clamp(x->value[i], lo, hi);
    if (out->requires_grad) {
        auto xp = x;
        out->backward_fn = [xp, lo, hi](Tensor& self) {
            const std::int64_t m = self.numel();
            for (std::int64_t i = 0; i < m; ++i) {
                const double v = xp->value[i];
                if (v >= lo && v <= hi) xp->grad[i] += self.grad[i];
            }
        };
    }
    return out;
}

TensorPtr concat_cols(const std::vector<TensorPtr>& parts) {
    expect(!parts.empty(), "concat_cols: no inputs");
    const std::int64_t R = rows_of(parts[0]);
    std::int64_t total = 0;
    for (const auto& p : parts) {
        expect(p->ndim() == 2 && rows_of(p) == R, "concat_cols: row mismatch");
        total += p->shape[1];
    }
    auto out = node({R, total}, {parts.begin(), parts.end()});
    std::int64_t off = 0;
    for (const auto& p : parts) {
        const std::int64_t c = p->shape[1];
        for (std::int64_t i = 0; i < R; ++i)
            std::copy_n(p->value.begin() + i * c, c, out->value.begin() + i * total + off);
        off += c;
    }
    if (out->requires_grad) {
        auto ps = parts;
        out->backward_fn = [ps, R, total](Tensor& self) {
            std::int64_t off2 = 0;
            for (const auto& p : ps) {
                const std::int64_t c = p->shape[1];
                if (p->requires_grad) {
                    for (std::int64_t i = 0; i < R; ++i)
                        for (std::int64_t j = 0; j < c; ++j)
                            p->grad[i * c + j] += self.grad[i * total + off2 + j];
                }
                off2 += c;
            }
        };
    }
    return out;
}

TensorPtr reshape(const TensorPtr& x, std::vector<std::int64_t> shape) {
    auto out = node(std::move(shape), {x});
    expect(out->numel() == x->numel(), "reshape: numel mismatch");
    out->value = x->value;
    if (out->requires_grad) {
        auto xp = x;
        out->backward_fn = [xp](Tensor& self) {
            const std::int64_t m = self.numel();
            for (std::int64_t i = 0; i < m; ++i) xp->grad[i] += self.grad[i];
        };
    }
    return out;
}

TensorPtr add_grouped(const TensorPtr& big, const TensorPtr& small, int group) {
    expect(big->ndim() == 3 && small->ndim() == 3, "add_grouped: inputs must be [B, n, d]");
    expect(big->shape[1] == small->shape[1] && big->shape[2] == small->shape[2],
           "add_grouped: trailing shape mismatch");
    expect(big->shape[0] == small->shape[0] * group, "add_grouped: B != Bk * group");
    auto out = node(big->shape, {big, small});
    const std::int64_t B = big->shape[0], nd = big->shape[1] * big->shape[2];
    for (std::int64_t b = 0; b < B; ++b) {
        const double* pb = big->value.data() + b * nd;
        const double* ps = small->value.data() + (b / group) * nd;
        double* po = out->value.data() + b * nd;
        for (std::int64_t i = 0; i < nd; ++i) po[i] = pb[i] + ps[i];
    }
    if (out->requires_grad) {
        auto bp = big, sp = small;
        out->backward_fn = [bp, sp, group, B, nd](Tensor& self) {
            for (std::int64_t b = 0; b < B; ++b) {
                const double* g = self.grad.data() + b * nd;
                if (bp->requires_grad) {
                    double* gb = bp->grad.data() + b * nd;
                    for (std::int64_t i = 0; i < nd; ++i) gb[i] += g[i];
                }
                if (sp->requires_grad) {
                    double* gs = sp->grad.data() + (b / group) * nd;
                    for (std::int64_t i = 0; i < nd; ++i) gs[i] += g[i];
                }
            }
        };
    }
    return out;
}

TensorPtr gather_nodes(const TensorPtr& h, const std::vector<int>& idx, int group) {
    expect(h->ndim() == 3, "gather_nodes: h must be [M, n, d]");
    const std::int64_t M = h->shape[0], n = h->shape[1], d = h->shape[2];
    const std::int64_t B = static_cast<std::int64_t>(idx.size());
    expect(B == M * group, "gather_nodes: idx size != M * group");
    for (int v : idx) expect(v >= 0 && v < n, "gather_nodes: index out of range");
    auto out = node({B, d}, {h});
    for (std::int64_t b = 0; b < B; ++b)
        std::copy_n(h->value.begin() + ((b / group) * n + idx[b]) * d, d,
                    out->value.begin() + b * d);
    if (out->requires_grad) {
        auto hp = h;
        auto ix = idx;
        out->backward_fn = [hp, ix, n, d, group](Tensor& self) {
            const std::int64_t B2 = static_cast<std::int64_t>(ix.size());
            for (std::int64_t b = 0; b < B2; ++b) {
                double* dst = hp->grad.data() + ((b / group) * n + ix[b]) * d;
                const double* g = self.grad.data() + b * d;
                for (std::int64_t j = 0; j < d; ++j) dst[j] += g[j];
            }
        };
    }
    return out;
}

TensorPtr mean_nodes(const TensorPtr& h) {
    expect(h->ndim() == 3, "mean_nodes: h must be [B, n, d]");
    const std::int64_t B = h->shape[0], n = h->shape[1], d = h->shape[2];
    auto out = node({B, d}, {h});
    for (std::int64_t b = 0; b < B; ++b) {
        double* o = out->value.data() + b * d;
        for (std::int64_t i = 0; i < n; ++i) {
            const double* src = h->value.data() + (b * n + i) * d;
            for (std::int64_t j = 0; j < d; ++j) o[j] += src[j];
        }
        for (std::int64_t j = 0; j < d; ++j) o[j] /= static_cast<double>(n);
    }
    if (out->requires_grad) {
        auto hp = h;
        out->backward_fn = [hp, B, n, d](Tensor& self) {
            const double inv = 1.0 / static_cast<double>(n);
            for (std::int64_t b = 0; b < B; ++b) {
                const double* g = self.grad.data() + b * d;
                for (std::int64_t i = 0; i < n; ++i) {
                    double* dst = hp->grad.data() + (b * n + i) * d;
                    for (std::int64_t j = 0; j < d; ++j) dst[j] += g[j] * inv;
                }
            }
        };
    }
    return out;
}

TensorPtr repeat_rows(const TensorPtr& x, int group) {
    expect(group >= 1, "repeat_rows: group must be >= 1");
    const std::int64_t M = x->shape[0];
    std::int64_t stride = x->numel() / M;
    std::vector<std::int64_t> shape = x->shape;
    shape[0] = M * group;
    auto out = node(std::move(shape), {x});
    for (std::int64_t b = 0; b < M * group; ++b)
        std::copy_n(x->value.begin() + (b / group) * stride, stride,
                    out->value.begin() + b * stride);
    if (out->requires_grad) {
        auto xp = x;
        out->backward_fn = [xp, M, group, stride](Tensor& self) {
            for (std::int64_t b = 0; b < M * group; ++b) {
                double* dst = xp->grad.data() + (b / group) * stride;
                const double* g = self.grad.data() + b * stride;
                for (std::int64_t j = 0; j < stride; ++j) dst[j] += g[j];
            }
        };
    }
    return out;
}

TensorPtr replace_rows(const TensorPtr& x, const TensorPtr& fill,
                       const std::vector<std::uint8_t>& flags) {
    expect(x->ndim() == 2, "replace_rows: x must be [B, d]");
    const std::int64_t B = x->shape[0], d = x->shape[1];
    expect(fill->numel() == d, "replace_rows: fill size mismatch");
    expect(static_cast<std::int64_t>(flags.size()) == B, "replace_rows: flags size mismatch");
    auto out = node(x->shape, {x, fill});
    for (std::int64_t b = 0; b < B; ++b) {
        const double* src = flags[b] ? fill->value.data() : x->value.data() + b * d;
        std::copy_n(src, d, out->value.begin() + b * d);
    }
    if (out->requires_grad) {
        auto xp = x, fp = fill;
        auto fl = flags;
        out->backward_fn = [xp, fp, fl, B, d](Tensor& self) {
            for (std::int64_t b = 0; b < B; ++b) {
                const double* g = self.grad.data() + b * d;
                if (fl[b]) {
                    if (fp->requires_grad)
                        for (std::int64_t j = 0; j < d; ++j) fp->grad[j] += g[j];
                } else if (xp->requires_grad) {
                    double* dst = xp->grad.data() + b * d;
                    for (std::int64_t j = 0; j < d; ++j) dst[j] += g[j];
                }
            }
        };
    }
    return out;
}

TensorPtr normalize(const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta,
                    NormKind kind, double eps) {
    expect(x->ndim() == 3, "normalize: x must be [B, n, d]");
    const std::int64_t B = x->shape[0], n = x->shape[1], d = x->shape[2];
    expect(gamma->numel() == d && beta->numel() == d, "normalize: affine size mismatch");
    auto out = node(x->shape, {x, gamma, beta});

    // One statistics group = a list of flat indices sharing mean/var.
    // instance: (b, f) over nodes; batch: (f) over rows*nodes.
    // Captured by value: the backward closure outlives this stack frame.
    auto for_each_group = [B, n, d, kind](auto&& fn) {
        if (kind == NormKind::Instance) {
            for (std::int64_t b = 0; b < B; ++b)
                for (std::int64_t f = 0; f < d; ++f) fn(b * n * d + f, n, d, f);
        } else {
            for (std::int64_t f = 0; f < d; ++f) fn(f, B * n, d, f);
        }
    };

    for_each_group([&](std::int64_t base, std::int64_t m, std::int64_t stride, std::int64_t f) {
        double mean = 0.0;
        for (std::int64_t i = 0; i < m; ++i) mean += x->value[base + i * stride];
        mean /= static_cast<double>(m);
        double var = 0.0;
        for (std::int64_t i = 0; i < m; ++i) {
            const double c = x->value[base + i * stride] - mean;
            var += c * c;
        }
        var /= static_cast<double>(m);
        const double inv_s = 1.0 / std::sqrt(var + eps);
        const double g = gamma->value[f], be = beta->value[f];
        for (std::int64_t i = 0; i < m; ++i) {
            const double xh = (x->value[base + i * stride] - mean) * inv_s;
            out->value[base + i * stride] = g * xh + be;
        }
    });

    if (out->requires_grad) {
        auto xp = x, gp = gamma, bp = beta;
        out->backward_fn = [xp, gp, bp, B, n, d, kind, eps, for_each_group](Tensor& self) {
            for_each_group([&](std::int64_t base, std::int64_t m, std::int64_t stride,
                               std::int64_t f) {
                double mean = 0.0;
                for (std::int64_t i = 0; i < m; ++i) mean += xp->value[base + i * stride];
                mean /= static_cast<double>(m);
                double var = 0.0;
                for (std::int64_t i = 0; i < m; ++i) {
                    const double c = xp->value[base + i * stride] - mean;
                    var += c * c;
                }
                var /= static_cast<double>(m);
                const double inv_s = 1.0 / std::sqrt(var + eps);
                const double g = gp->value[f];
                double sum_gh = 0.0, sum_ghxh = 0.0;
                for (std::int64_t i = 0; i < m; ++i) {
                    const double xh = (xp->value[base + i * stride] - mean) * inv_s;
                    const double go = self.grad[base + i * stride];
                    if (gp->requires_grad) gp->grad[f] += go * xh;
                    if (bp->requires_grad) bp->grad[f] += go;
                    const double gh = go * g;
                    sum_gh += gh;
                    sum_ghxh += gh * xh;
                }
                if (xp->requires_grad) {
                    const double inv_m = 1.0 / static_cast<double>(m);
                    for (std::int64_t i = 0; i < m; ++i) {
                        const double xh = (xp->value[base + i * stride] - mean) * inv_s;
                        const double gh = self.grad[base + i * stride] * g;
                        xp->grad[base + i * stride] +=
                            inv_s * (gh - inv_m * sum_gh - xh * inv_m * sum_ghxh);
                    }
                }
            });
        };
    }
    return out;
}

TensorPtr multi_head_attention_core(const TensorPtr& Q, const TensorPtr& K, const TensorPtr& V,
                                    const std::uint8_t* forbidden, int num_heads, int group) {
    expect(Q->ndim() == 3 && K->ndim() == 3 && V->ndim() == 3, "mha: inputs must be 3-D");
    const std::int64_t Bq = Q->shape[0], nq = Q->shape[1], d = Q->shape[2];
    const std::int64_t Bk = K->shape[0], n = K->shape[1];
    expect(K->shape == V->shape, "mha: K/V shape mismatch");
    expect(K->shape[2] == d, "mha: feature dims disagree");
    expect(Bq == Bk * group, "mha: Bq != Bk * group");
    expect(num_heads >= 1 && d % num_heads == 0, "mha: d must divide num_heads");
    const std::int64_t dk = d / num_heads;
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));

    std::vector<std::uint8_t> mask;
    if (forbidden) mask.assign(forbidden, forbidden + Bq * nq * n);

    auto out = node({Bq * nq, d}, {Q, K, V});

    // Shared row kernel: computes softmax weights for one (row, head) pair.
    // Captured by value: the backward closure outlives this stack frame.
    auto attend = [n, d, dk, inv_sqrt_dk](const double* qv, const double* Kb, std::int64_t head,
                                          const std::uint8_t* row_mask, std::vector<double>& a) {
        const std::int64_t off = head * dk;
        double best = kNegInf;
        for (std::int64_t i = 0; i < n; ++i) {
            if (row_mask && row_mask[i]) {
                a[i] = kNegInf;
                continue;
            }
            const double* kv = Kb + i * d + off;
            double dot = 0.0;
            for (std::int64_t j = 0; j < dk; ++j) dot += qv[j] * kv[j];
            a[i] = dot * inv_sqrt_dk;
            best = std::max(best, a[i]);
        }
        if (best == kNegInf) throw NoFeasibleActionError("attention row fully masked");
        double z = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            if (a[i] == kNegInf) {
                a[i] = 0.0;
            } else {
                a[i] = std::exp(a[i] - best);
                z += a[i];
            }
        }
        for (std::int64_t i = 0; i < n; ++i) a[i] /= z;
    };

    {
        std::vector<double> a(n);
        for (std::int64_t b = 0; b < Bq; ++b) {
            const std::int64_t kb = b / group;
            const double* Kb = K->value.data() + kb * n * d;
            const double* Vb = V->value.data() + kb * n * d;
            for (std::int64_t qi = 0; qi < nq; ++qi) {
                const std::uint8_t* row_mask =
                    mask.empty() ? nullptr : mask.data() + (b * nq + qi) * n;
                for (std::int64_t h = 0; h < num_heads; ++h) {
                    const std::int64_t off = h * dk;
                    const double* qv = Q->value.data() + (b * nq + qi) * d + off;
                    attend(qv, Kb, h, row_mask, a);
                    double* o = out->value.data() + (b * nq + qi) * d + off;
                    for (std::int64_t i = 0; i < n; ++i) {
                        if (a[i] == 0.0) continue;
                        const double* vv = Vb + i * d + off;
                        for (std::int64_t j = 0; j < dk; ++j) o[j] += a[i] * vv[j];
                    }
                }
            }
        }
    }

    if (out->requires_grad) {
        auto Qp = Q, Kp = K, Vp = V;
        out->backward_fn = [Qp, Kp, Vp, mask, num_heads, group, attend, Bq, nq, n, d, dk,
                            inv_sqrt_dk](Tensor& self) {
            std::vector<double> a(n), da(n);
            for (std::int64_t b = 0; b < Bq; ++b) {
                const std::int64_t kb = b / group;
                const double* Kb = Kp->value.data() + kb * n * d;
                const double* Vb = Vp->value.data() + kb * n * d;
                for (std::int64_t qi = 0; qi < nq; ++qi) {
                    const std::uint8_t* row_mask =
                        mask.empty() ? nullptr : mask.data() + (b * nq + qi) * n;
                    for (std::int64_t h = 0; h < num_heads; ++h) {
                        const std::int64_t off = h * dk;
                        const double* qv = Qp->value.data() + (b * nq + qi) * d + off;
                        attend(qv, Kb, h, row_mask, a);
                        const double* g = self.grad.data() + (b * nq + qi) * d + off;
                        double sum_ada = 0.0;
                        for (std::int64_t i = 0; i < n; ++i) {
                            if (a[i] == 0.0) {
                                da[i] = 0.0;
                                continue;
                            }
                            const double* vv = Vb + i * d + off;
                            double dot = 0.0;
                            for (std::int64_t j = 0; j < dk; ++j) dot += g[j] * vv[j];
                            da[i] = dot;
                            sum_ada += a[i] * dot;
                            if (Vp->requires_grad) {
                                double* gv = Vp->grad.data() + (kb * n + i) * d + off;
                                for (std::int64_t j = 0; j < dk; ++j) gv[j] += a[i] * g[j];
                            }
                        }
                        for (std::int64_t i = 0; i < n; ++i) {
                            if (a[i] == 0.0) continue;
                            const double du = a[i] * (da[i] - sum_ada) * inv_sqrt_dk;
                            if (du == 0.0) continue;
                            const double* kv = Kb + i * d + off;
                            if (Qp->requires_grad) {
                                double* gq = Qp->grad.data() + (b * nq + qi) * d + off;
                                for (std::int64_t j = 0; j < dk; ++j) gq[j] += du * kv[j];
                            }
                            if (Kp->requires_grad) {
                                double* gk = Kp->grad.data() + (kb * n + i) * d + off;
                                for (std::int64_t j = 0; j < dk; ++j) gk[j] += du * qv[j];
                            }
                        }
                    }
                }
            }
        };
    }
    return out;
}

TensorPtr attention_scores(const TensorPtr& q, const TensorPtr& K, const std::uint8_t* forbidden,
                           int group) {
    expect(q->ndim() == 2 && K->ndim() == 3, "attention_scores: q [B,d], K [Bk,n,d]");
    const std::int64_t B = q->shape[0], d = q->shape[1];
    const std::int64_t Bk = K->shape[0], n = K->shape[1];
    expect(K->shape[2] == d, "attention_scores: feature dims disagree");
    expect(B == Bk * group, "attention_scores: B != Bk * group");
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

    std::vector<std::uint8_t> mask;
    if (forbidden) mask.assign(forbidden, forbidden + B * n);

    auto out = node({B, n}, {q, K});
    for (std::int64_t b = 0; b < B; ++b) {
        const double* qv = q->value.data() + b * d;
        const double* Kb = K->value.data() + (b / group) * n * d;
        double* o = out->value.data() + b * n;
        for (std::int64_t i = 0; i < n; ++i) {
            if (!mask.empty() && mask[b * n + i]) {
                o[i] = kNegInf;
                continue;
            }
            const double* kv = Kb + i * d;
            double dot = 0.0;
            for (std::int64_t j = 0; j < d; ++j) dot += qv[j] * kv[j];
            o[i] = dot * inv_sqrt_d;
        }
    }

    if (out->requires_grad) {
        auto qp = q, Kp = K;
        out->backward_fn = [qp, Kp, mask, group, B, n, d, inv_sqrt_d](Tensor& self) {
            for (std::int64_t b = 0; b < B; ++b) {
                const double* qv = qp->value.data() + b * d;
                const std::int64_t kb = b / group;
                for (std::int64_t i = 0; i < n; ++i) {
                    if (!mask.empty() && mask[b * n + i]) continue;
                    const double dt = self.grad[b * n + i] * inv_sqrt_d;
                    if (dt == 0.0) continue;
                    const double* kv = Kp->value.data() + (kb * n + i) * d;
                    if (qp->requires_grad) {
                        double* gq = qp->grad.data() + b * d;
                        for (std::int64_t j = 0; j < d; ++j) gq[j] += dt * kv[j];
                    }
                    if (Kp->requires_grad) {
                        double* gk = Kp->grad.data() + (kb * n + i) * d;
                        for (std::int64_t j = 0; j < d; ++j) gk[j] += dt * qv[j];
                    }
                }
            }
        };
    }
    return out;
}

TensorPtr clipped_scores(const TensorPtr& q, const TensorPtr& K, const std::uint8_t* forbidden,
                         double clip, int group) {
    expect(q->ndim() == 2 && K->ndim() == 3, "clipped_scores: q [B,d], K [Bk,n,d]");
    const std::int64_t B = q->shape[0], d = q->shape[1];
    const std::int64_t Bk = K->shape[0], n = K->shape[1];
    expect(K->shape[2] == d, "clipped_scores: feature dims disagree");
    expect(B == Bk * group, "clipped_scores: B != Bk * group");
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

    std::vector<std::uint8_t> mask;
    if (forbidden) mask.assign(forbidden, forbidden + B * n);

    auto out = node({B, n}, {q, K});
    for (std::int64_t b = 0; b < B; ++b) {
        const double* qv = q->value.data() + b * d;
        const double* Kb = K->value.data() + (b / group) * n * d;
        double* o = out->value.data() + b * n;
        for (std::int64_t i = 0; i < n; ++i) {
            if (!mask.empty() && mask[b * n + i]) {
                o[i] = kNegInf;
                continue;
            }
            const double* kv = Kb + i * d;
            double dot = 0.0;
            for (std::int64_t j = 0; j < d; ++j) dot += qv[j] * kv[j];
            o[i] = clip * std::tanh(dot * inv_sqrt_d);
        }
    }

    if (out->requires_grad) {
        auto qp = q, Kp = K;
        out->backward_fn = [qp, Kp, mask, clip, group, B, n, d, inv_sqrt_d](Tensor& self) {
            for (std::int64_t b = 0; b < B; ++b) {
                const double* qv = qp->value.data() + b * d;
                const std::int64_t kb = b / group;
                for (std::int64_t i = 0; i < n; ++i) {
                    if (!mask.empty() && mask[b * n + i]) continue;
                    const double gu = self.grad[b * n + i];
                    if (gu == 0.0) continue;
                    const double th = self.value[b * n + i] / clip;  // tanh(t)
                    const double dt = gu * clip * (1.0 - th * th) * inv_sqrt_d;
                    const double* kv = Kp->value.data() + (kb * n + i) * d;
                    if (qp->requires_grad) {
                        double* gq = qp->grad.data() + b * d;
                        for (std::int64_t j = 0; j < d; ++j) gq[j] += dt * kv[j];
                    }
                    if (Kp->requires_grad) {
                        double* gk = Kp->grad.data() + (kb * n + i) * d;
                        for (std::int64_t j = 0; j < d; ++j) gk[j] += dt * qv[j];
                    }
                }
            }
        };
    }
    return out;
}

TensorPtr masked_log_softmax(const TensorPtr& logits) {
    expect(logits->ndim() == 2, "masked_log_softmax: logits must be [B, n]");
    const std::int64_t B = logits->shape[0], n = logits->shape[1];
    auto out = node(logits->shape, {logits});
    for (std::int64_t b = 0; b < B; ++b) {
        const double* u = logits->value.data() + b * n;
        double* o = out->value.data() + b * n;
        double best = kNegInf;
        for (std::int64_t i = 0; i < n; ++i) best = std::max(best, u[i]);
        if (best == kNegInf)
            throw NoFeasibleActionError("log-softmax row has no feasible entry");
        double z = 0.0;
        for (std::int64_t i = 0; i < n; ++i)
            if (u[i] != kNegInf) z += std::exp(u[i] - best);
        const double lse = best + std::log(z);
        for (std::int64_t i = 0; i < n; ++i) o[i] = u[i] == kNegInf ? kNegInf : u[i] - lse;
    }
    if (out->requires_grad) {
        auto lp = logits;
        out->backward_fn = [lp, B, n](Tensor& self) {
            for (std::int64_t b = 0; b < B; ++b) {
                const double* o = self.value.data() + b * n;
                const double* g = self.grad.data() + b * n;
                double gsum = 0.0;
                for (std::int64_t i = 0; i < n; ++i)
                    if (o[i] != kNegInf) gsum += g[i];
                double* gl = lp->grad.data() + b * n;
                for (std::int64_t i = 0; i < n; ++i)
                    if (o[i] != kNegInf) gl[i] += g[i] - std::exp(o[i]) * gsum;
            }
        };
    }
    return out;
}

TensorPtr gather_cols(const TensorPtr& x, const std::vector<int>& idx) {
    expect(x->ndim() == 2, "gather_cols: x must be [B, n]");
    const std::int64_t B = x->shape[0], n = x->shape[1];
    expect(static_cast<std::int64_t>(idx.size()) == B, "gather_cols: idx size mismatch");
    for (int v : idx) expect(v >= 0 && v < n, "gather_cols: index out of range");
    auto out = node({B}, {x});
    for (std::int64_t b = 0; b < B; ++b) out->value[b] = x->value[b * n + idx[b]];
    if (out->requires_grad) {
        auto xp = x;
        auto ix = idx;
        out->backward_fn = [xp, ix, n](Tensor& self) {
            const std::int64_t B2 = static_cast<std::int64_t>(ix.size());
            for (std::int64_t b = 0; b < B2; ++b) xp->grad[b * n + ix[b]] += self.grad[b];
        };
    }
    return out;
}

TensorPtr entropy_rows(const TensorPtr& log_probs) {
    expect(log_probs->ndim() == 2, "entropy_rows: input must be [B, n]");
    const std::int64_t B = log_probs->shape[0], n = log_probs->shape[1];
    auto out = node({B}, {log_probs});
    for (std::int64_t b = 0; b < B; ++b) {
        double h = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            const double lp = log_probs->value[b * n + i];
            if (lp != kNegInf) h -= std::exp(lp) * lp;
        }
        out->value[b] = h;
    }
    if (out->requires_grad) {
        auto lpp = log_probs;
        out->backward_fn = [lpp, B, n](Tensor& self) {
            for (std::int64_t b = 0; b < B; ++b) {
                const double g = self.grad[b];
                if (g == 0.0) continue;
                for (std::int64_t i = 0; i < n; ++i) {
                    const double lp = lpp->value[b * n + i];
                    if (lp != kNegInf) lpp->grad[b * n + i] -= g * std::exp(lp) * (1.0 + lp);
                }
            }
        };
    }
    return out;
}

TensorPtr sum_all(const TensorPtr& x) {
    auto out = node({1}, {x});
    double s = 0.0;
    for (double v : x->value) s += v;
    out->value[0] = s;
    if (out->requires_grad) {
        auto xp = x;
        out->backward_fn = [xp](Tensor& self) {
            for (double& g : xp->grad) g += self.grad[0];
        };
    }
    return out;
}

TensorPtr mean_all(const TensorPtr& x) {
    auto out = node({1}, {x});
    double s = 0.0;
    for (double v : x->value) s += v;
    const double inv = 1.0 / static_cast<double>(x->numel());
    out->value[0] = s * inv;
    if (out->requires_grad) {
        auto xp = x;
        out->backward_fn = [xp, inv](Tensor& self) {
            for (double& g : xp->grad) g += self.grad[0] * inv;
        };
    }
    return out;
}

TensorPtr weighted_sum(const TensorPtr& x, const std::vector<double>& w) {
    expect(x->numel() == static_cast<std::int64_t>(w.size()), "weighted_sum: size mismatch");
    auto out = node({1}, {x});
    double s = 0.0;
    for (std::int64_t i = 0; i < x->numel(); ++i) s += x->value[i] * w[i];
    out->value[0] = s;
    if (out->requires_grad) {
        auto xp = x;
        auto wc = w;
        out->backward_fn = [xp, wc](Tensor& self) {
            for (std::size_t i = 0; i < wc.size(); ++i) xp->grad[i] += self.grad[0] * wc[i];
        };
    }
    return out;
}

}  // namespace routerl::nn
