#include "routerl/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace routerl::nn {

bool& grad_enabled() {
    thread_local bool enabled = true;
    return enabled;
}

TensorPtr make_tensor(std::vector<std::int64_t> shape, bool requires_grad) {
    auto t = std::make_shared<Tensor>(std::move(shape));
    t->requires_grad = requires_grad && grad_enabled();
    if (t->requires_grad) t->ensure_grad();
    return t;
}

TensorPtr make_const(std::vector<std::int64_t> shape, const std::vector<double>& data) {
    auto t = std::make_shared<Tensor>(std::move(shape));
    if (static_cast<std::int64_t>(data.size()) != t->numel())
        throw ShapeError("make_const: data size does not match shape");
    t->value = data;
    return t;
}

TensorPtr make_scalar(double v) {
    auto t = std::make_shared<Tensor>(std::vector<std::int64_t>{1});
    t->value[0] = v;
    return t;
}

void backward(const TensorPtr& root) {
    if (!root || root->numel() != 1)
        throw ShapeError("backward: root must be a scalar tensor");
    if (!root->requires_grad) return;

    // Post-order DFS, iterative; graphs can be thousands of nodes deep when a
    // whole episode's losses share one encoder cache.
    std::vector<Tensor*> order;
    std::unordered_set<Tensor*> seen;
    struct Frame {
        Tensor* node;
        std::size_t next_parent;
    };
    std::vector<Frame> stack;
    stack.push_back({root.get(), 0});
    seen.insert(root.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.node->parents.size()) {
            Tensor* p = f.node->parents[f.next_parent++].get();
            if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }

    root->ensure_grad();
    std::fill(root->grad.begin(), root->grad.end(), 0.0);
    root->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Tensor* t = *it;
        if (t->backward_fn) t->backward_fn(*t);
    }
}

TensorPtr ParamStore::add(const std::string& name, std::vector<std::int64_t> shape,
                          double init_scale, Rng& rng) {
    auto t = std::make_shared<Tensor>(std::move(shape));
    t->requires_grad = true;
    t->ensure_grad();
    for (auto& v : t->value) v = rng.uniform(-init_scale, init_scale);
    items_.emplace_back(name, t);
    return t;
}

TensorPtr ParamStore::find(const std::string& name) const {
    for (const auto& [n, t] : items_)
        if (n == name) return t;
    return nullptr;
}

std::int64_t ParamStore::total_numel() const {
    std::int64_t n = 0;
    for (const auto& [_, t] : items_) n += t->numel();
    return n;
}

void ParamStore::zero_grad() {
    for (auto& [_, t] : items_) t->zero_grad();
}

double ParamStore::grad_norm() const {
    double sq = 0.0;
    for (const auto& [_, t] : items_)
        for (double g : t->grad) sq += g * g;
    return std::sqrt(sq);
}

double ParamStore::clip_grad_norm(double max_norm) {
    const double norm = grad_norm();
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (auto& [_, t] : items_)
            for (double& g : t->grad) g *= scale;
    }
    return norm;
}

std::vector<double> ParamStore::flatten_values() const {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(total_numel()));
    for (const auto& [_, t] : items_) flat.insert(flat.end(), t->value.begin(), t->value.end());
    return flat;
}

void ParamStore::assign_values(const std::vector<double>& flat) {
    if (flat.size() != static_cast<std::size_t>(total_numel()))
        throw ShapeError("assign_values: size mismatch");
    std::size_t off = 0;
    for (auto& [_, t] : items_) {
        std::copy(flat.begin() + off, flat.begin() + off + t->value.size(), t->value.begin());
        off += t->value.size();
    }
}

}  // namespace routerl::nn
