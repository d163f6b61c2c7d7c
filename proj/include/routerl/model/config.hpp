#pragma once

#include "routerl/error.hpp"
#include "routerl/nn/ops.hpp"
#include "routerl/problems/problem.hpp"

namespace routerl::model {

struct ModelConfig {
    problems::ProblemKind kind = problems::ProblemKind::TSP;
    int embed_dim = 128;
    int num_heads = 8;
    int num_encoder_layers = 3;
    int feedforward_dim = 512;
    double logit_clip = 10.0;
    nn::NormKind normalization = nn::NormKind::Instance;
    // Feed per-step demand projections into the output logit keys as well as
    // the glimpse keys/values. Off by default: the glimpse alone carries the
    // dynamic signal.
    bool dynamic_logit_keys = false;

    void validate() const {
        if (embed_dim < 1) throw ConfigError("embed_dim must be positive");
        if (num_heads < 1) throw ConfigError("num_heads must be positive");
        if (embed_dim % num_heads != 0)
            throw ConfigError("embed_dim must be divisible by num_heads");
        if (num_encoder_layers < 0)
            throw ConfigError("num_encoder_layers must be non-negative");
        if (feedforward_dim < 1) throw ConfigError("feedforward_dim must be positive");
        if (logit_clip <= 0.0) throw ConfigError("logit_clip must be positive");
    }
};

}  // namespace routerl::model
