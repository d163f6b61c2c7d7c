// Dense double-precision tensors with reverse-mode automatic differentiation.
//
// Each operation in ops.hpp records its inputs and a backward closure on the
// output tensor; backward() replays the closures in reverse topological
// order. Graph recording is skipped entirely inside a NoGradGuard, which is
// the inference fast path.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "routerl/error.hpp"
#include "routerl/rng.hpp"

namespace routerl::nn {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

class Tensor {
public:
    std::vector<std::int64_t> shape;
    std::vector<double> value;
    std::vector<double> grad;  // allocated iff requires_grad
    bool requires_grad = false;

    // Autograd graph edges. backward_fn reads this->grad and accumulates
    // into the parents' grads.
    std::vector<TensorPtr> parents;
    std::function<void(Tensor&)> backward_fn;

    Tensor() = default;
    explicit Tensor(std::vector<std::int64_t> s) : shape(std::move(s)) {
        value.assign(static_cast<std::size_t>(numel()), 0.0);
    }

    std::int64_t numel() const {
        std::int64_t n = 1;
        for (auto d : shape) n *= d;
        return n;
    }
    std::int64_t dim(std::size_t i) const { return shape.at(i); }
    std::size_t ndim() const { return shape.size(); }

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
    void zero_grad() {
        if (requires_grad) grad.assign(value.size(), 0.0);
    }
    // Drops graph edges so the tensor can outlive the episode it was built in.
    void detach_() {
        parents.clear();
        backward_fn = nullptr;
    }
};

bool& grad_enabled();

struct NoGradGuard {
    bool prev;
    NoGradGuard() : prev(grad_enabled()) { grad_enabled() = false; }
    ~NoGradGuard() { grad_enabled() = prev; }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
};

TensorPtr make_tensor(std::vector<std::int64_t> shape, bool requires_grad = false);
TensorPtr make_const(std::vector<std::int64_t> shape, const std::vector<double>& data);
TensorPtr make_scalar(double v);

// Runs reverse-mode accumulation from a scalar root. Root grad is seeded to 1.
void backward(const TensorPtr& root);

// Named, ordered parameter collection. Order is the canonical serialization
// and optimizer-state order.
class ParamStore {
public:
    TensorPtr add(const std::string& name, std::vector<std::int64_t> shape, double init_scale, Rng& rng);
    TensorPtr find(const std::string& name) const;

    const std::vector<std::pair<std::string, TensorPtr>>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }
    std::int64_t total_numel() const;

    void zero_grad();
    double grad_norm() const;
    // Scales all gradients so the global L2 norm is at most max_norm.
    // Returns the pre-clip norm.
    double clip_grad_norm(double max_norm);

    std::vector<double> flatten_values() const;
    void assign_values(const std::vector<double>& flat);

private:
    std::vector<std::pair<std::string, TensorPtr>> items_;
};

}  // namespace routerl::nn
