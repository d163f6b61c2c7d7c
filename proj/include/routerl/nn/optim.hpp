#pragma once

#include <cmath>
#include <vector>

#include "routerl/nn/tensor.hpp"

namespace routerl::nn {

// Adam with bias correction. Holds first/second moment estimates per
// parameter; the step count is shared so partially-built stores must not be
// handed in (moments are sized once, at construction).
class Adam {
public:
    explicit Adam(ParamStore& params, double lr, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : lr(lr), params_(params), beta1_(beta1), beta2_(beta2), eps_(eps) {
        for (const auto& [_, t] : params.items()) {
            m_.emplace_back(t->numel(), 0.0);
            v_.emplace_back(t->numel(), 0.0);
        }
    }

    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        std::size_t pi = 0;
        for (auto& [_, p] : params_.items()) {
            auto& m = m_[pi];
            auto& v = v_[pi];
            ++pi;
            for (std::size_t i = 0; i < p->value.size(); ++i) {
                const double g = p->grad[i];
                m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
                v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
                p->value[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
            }
        }
    }

    double lr;

private:
    ParamStore& params_;
    double beta1_, beta2_, eps_;
    long long t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

}  // namespace routerl::nn
