// Inference-time decoding strategies over a policy: construct tours without
// further training (greedy / sampling / multi-start / beam / exact
// branch-and-bound) or with instance-specific fine-tuning (active search).
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "routerl/model/attention_model.hpp"
#include "routerl/problems/problem.hpp"
#include "routerl/rng.hpp"

namespace routerl::search {

enum class Strategy { Greedy, Sample, MultiGreedy, Beam, ActiveSearch, BranchAndBound };

Strategy strategy_from_string(const std::string& s);
std::string to_string(Strategy s);

struct SearchResult {
    problems::Tour best_tour;
    double best_length = 0.0;  // tour_length(best_tour)
    Strategy strategy = Strategy::Greedy;
    // Rollouts drawn (greedy/sample/multi-greedy/active) or nodes expanded
    // (beam items stepped, branch-and-bound decodes).
    std::int64_t samples_or_expansions = 0;
    double wall_time = 0.0;  // seconds
};

// Argmax decode (lowest index on ties), one rollout.
SearchResult greedy_rollout(const problems::ProblemInstance& instance, model::AttentionModel& m);

// Best of num_samples independent sampled rollouts. Each rollout consumes
// its own derived stream, so the first N1 rollouts of a run with N2 > N1
// samples are identical to an N1-sample run seeded the same way (nested
// sample sets; best length is non-increasing in N).
SearchResult sample_rollouts(const problems::ProblemInstance& instance, model::AttentionModel& m,
                             int num_samples, Rng& rng);

// One greedy rollout per forced first visit, decoded in parallel from a
// single encoder cache; returns the best. TSP start nodes are node indices;
// CVRP start nodes are customers (1..n) forced as the first visit after the
// depot.
SearchResult multi_greedy(const problems::ProblemInstance& instance, model::AttentionModel& m,
                          const std::vector<int>& start_nodes);

// A kept partial sequence and its accumulated log-probability score, exposed
// so tests can re-score prefixes independently.
struct BeamEntry {
    std::vector<int> actions;
    double score = 0.0;
    bool finished = false;
};

// Width-w beam over cumulative log-probability. Feasible children only;
// selection is stable on ties (score, then generation order); completed
// sequences leave the beam for a final pool; the shortest completed tour
// wins. `trace`, when given, records the kept entries after every step.
SearchResult beam_search(const problems::ProblemInstance& instance, model::AttentionModel& m,
                         std::int64_t width,
                         std::vector<std::vector<BeamEntry>>* trace = nullptr);

struct ActiveSearchConfig {
    int num_samples = 64;      // rollouts per round (B)
    int num_epochs = 8;        // gradient rounds (T); 0 = pure sampling
    double learning_rate = 1e-3;
    double entropy_coef = 0.0;
    double max_grad_norm = 0.5;
};

// Fine-tunes a private copy of the model on the single instance (one
// shared-rollouts gradient round per epoch) and returns the best tour seen
// across the initial sampling round and every epoch. The original model is
// left untouched. With num_epochs = 0 this is exactly sample_rollouts
// (identical rng consumption).
SearchResult active_search(const problems::ProblemInstance& instance, model::AttentionModel& m,
                           const ActiveSearchConfig& cfg, Rng& rng);

// Exact solver: depth-first search ordered by descending policy probability,
// pruning partial tours whose accumulated length (open path; CVRP partial
// routes) already meets the incumbent. Caps: TSP n <= 12, CVRP n <= 7.
// `incumbents`, when given, records each improvement (strictly decreasing).
SearchResult dfs_branch_and_bound(const problems::ProblemInstance& instance,
                                  model::AttentionModel& m,
                                  std::vector<double>* incumbents = nullptr);

}  // namespace routerl::search
