#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "routerl/harness/config.hpp"
#include "routerl/model/attention_model.hpp"

namespace routerl::harness {

// Single-file binary snapshot:
//   "RTCK" | u32 version | u64 meta_len | meta JSON | u64 count | doubles | u64 checksum
// Integers and doubles are little-endian; the trailing checksum is FNV-1a
// over every preceding byte. Corruption anywhere fails the whole load —
// there is no partial restore.
struct Checkpoint {
    ExperimentConfig config;
    std::int64_t env_steps = 0;
    std::vector<std::pair<std::string, std::vector<std::int64_t>>> param_shapes;
    std::vector<double> values;  // concatenated in param_shapes order
};

void save_checkpoint(const std::string& path, const model::AttentionModel& m,
                     const ExperimentConfig& cfg, std::int64_t env_steps);

Checkpoint load_checkpoint(const std::string& path);

// Copies values into an existing model; every name and shape must match
// (SchemaError otherwise). Bumps the model's parameter version.
void restore_parameters(model::AttentionModel& m, const Checkpoint& ckpt);

// Fresh model built from the checkpoint's own model config.
model::AttentionModel model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace routerl::harness
