#include "routerl/algo/policy.hpp"

#include "routerl/env/model_state.hpp"

namespace routerl::algo {

void AttentionPolicy::begin(const RolloutBuffer& buffer, const std::vector<int>& instance_ids) {
    buffer_ = &buffer;
    group_ = buffer.group;
    rows_.clear();
    std::vector<const problems::ProblemInstance*> sel;
    sel.reserve(instance_ids.size());
    for (int id : instance_ids) {
        if (id < 0 || id >= static_cast<int>(buffer.instances.size()))
            throw ShapeError("AttentionPolicy: instance id out of range");
        sel.push_back(&buffer.instances[static_cast<std::size_t>(id)]);
        for (int g = 0; g < group_; ++g) rows_.push_back(id * group_ + g);
    }
    cache_ = model_.encode(sel);
}

model::PolicyOutput AttentionPolicy::evaluate_step(int t) {
    if (buffer_ == nullptr) throw ConfigError("AttentionPolicy: begin() before evaluate_step()");
    if (t < 0 || t >= buffer_->T) throw ShapeError("AttentionPolicy: step index out of range");
    // The state only feeds the decode call; tensors copy what they need.
    env::Observation sub = env::slice_rows(buffer_->observations[static_cast<std::size_t>(t)], rows_);
    env::ModelState st(sub);
    return model_.parallel_decode(cache_, st, group_);
}

}  // namespace routerl::algo
