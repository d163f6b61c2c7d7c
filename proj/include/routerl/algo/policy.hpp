#pragma once

#include <vector>

#include "routerl/algo/rollout.hpp"
#include "routerl/model/attention_model.hpp"

namespace routerl::algo {

// What the update rules need from a policy: differentiable re-evaluation of
// the buffered steps for a subset of instances, parameter access, and a
// notification after each optimizer step. Kept abstract so the update code
// is testable against tiny tabular policies.
class Policy {
public:
    virtual ~Policy() = default;
    virtual nn::ParamStore& params() = 0;
    // Select the instances whose rows the next evaluate_step calls cover
    // (e.g. re-encode their embeddings). Instance ids index buffer.instances.
    virtual void begin(const RolloutBuffer& buffer, const std::vector<int>& instance_ids) = 0;
    // Differentiable outputs for step t over the selected rows, in instance
    // order (group consecutive rows per instance).
    virtual model::PolicyOutput evaluate_step(int t) = 0;
    // Parameters changed in place (optimizer step / load).
    virtual void after_update() = 0;
};

// The attention model as a Policy: begin() re-encodes the selected instances
// so encoder gradients flow through the cached projections at every step.
class AttentionPolicy : public Policy {
public:
    explicit AttentionPolicy(model::AttentionModel& m) : model_(m) {}

    nn::ParamStore& params() override { return model_.params(); }
    void begin(const RolloutBuffer& buffer, const std::vector<int>& instance_ids) override;
    model::PolicyOutput evaluate_step(int t) override;
    void after_update() override { model_.bump_param_version(); }

    model::AttentionModel& model() { return model_; }

private:
    model::AttentionModel& model_;
    const RolloutBuffer* buffer_ = nullptr;
    model::EncoderCache cache_;
    std::vector<int> rows_;
    int group_ = 1;
};

}  // namespace routerl::algo
