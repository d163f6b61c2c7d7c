#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "routerl/harness/metrics.hpp"
#include "routerl/model/attention_model.hpp"
#include "routerl/problems/problem.hpp"
#include "routerl/search/search.hpp"

namespace routerl::harness {

struct EvalOptions {
    int num_samples = 128;   // Strategy::Sample rollouts per instance
    int beam_width = 5;
    int active_epochs = 8;   // Strategy::ActiveSearch refinement rounds
    int active_samples = 64;
    std::uint64_t seed = 0;  // per-strategy streams derive from this
};

struct StrategyEval {
    search::Strategy strategy;
    double mean_length = 0.0;
    double std_length = 0.0;  // population std over instances
    double mean_gap = 0.0;    // mean of (length - reference) / reference
    std::int64_t work = 0;    // summed samples_or_expansions
    // Decoder invocations, estimated: rollouts x horizon for rollout-shaped
    // strategies, raw expansions for beam / branch-and-bound.
    std::int64_t env_steps = 0;
    double wall_time = 0.0;
};

struct EvalReport {
    std::vector<StrategyEval> rows;
    int instances = 0;
    // Gap reference, chosen once for the whole set: "exact" when every
    // instance fits the exact-solver caps, otherwise "heuristic" for all of
    // them. Never mixed within a report.
    std::string reference;
};

// Runs each strategy over the whole instance set (all instances must share
// one problem kind). Strategy order in the report follows the request.
EvalReport evaluate_strategies(model::AttentionModel& m,
                               const std::vector<problems::ProblemInstance>& instances,
                               const std::vector<search::Strategy>& strategies,
                               const EvalOptions& opt);

struct ReportPaths {
    std::string curve_csv;  // evaluated iterations only
    std::string table_csv;  // one row per strategy; absent without a report
};

void write_eval_table(const std::string& path, const EvalReport& report);

// curve.csv from the training log (+ table.csv when an EvalReport is given).
ReportPaths emit_report(const std::string& dir, const std::vector<TrainRow>& rows,
                        const EvalReport* report = nullptr);

}  // namespace routerl::harness
