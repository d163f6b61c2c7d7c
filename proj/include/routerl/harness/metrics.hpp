#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace routerl::harness {

// One training iteration (= one collection + one update). eval_length is NaN
// on iterations without a greedy evaluation and serializes as an empty cell;
// best_eval_length is NaN until the first evaluation. wall_time (seconds
// since training start) is deliberately the last column so deterministic
// comparisons can strip it.
struct TrainRow {
    int iteration = 0;
    std::int64_t env_steps = 0;
    double mean_return = 0.0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
    double grad_norm = 0.0;
    double eval_length = std::numeric_limits<double>::quiet_NaN();
    double best_eval_length = std::numeric_limits<double>::quiet_NaN();
    double wall_time = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "iteration,env_steps,mean_return,policy_loss,value_loss,entropy,"
    "clip_fraction,grad_norm,eval_length,best_eval_length,wall_time";

// %.17g cells: a read-back row reproduces the doubles bit-for-bit.
std::string csv_row(const TrainRow& row);
TrainRow parse_csv_row(const std::string& line);

void write_metrics_csv(const std::string& path, const std::vector<TrainRow>& rows);
std::vector<TrainRow> read_metrics_csv(const std::string& path);

// env_steps of the first evaluated row at or below the threshold, -1 if the
// log never crosses it.
std::int64_t steps_to_threshold(const std::vector<TrainRow>& rows, double threshold);

}  // namespace routerl::harness
