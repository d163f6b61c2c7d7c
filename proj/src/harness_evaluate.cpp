#include "routerl/harness/evaluate.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "routerl/algo/rollout.hpp"
#include "routerl/problems/oracles.hpp"
#include "routerl/rng.hpp"

namespace routerl::harness {

namespace {

// Exact-solver limits; above these every gap falls back to the heuristic.
int exact_cap(problems::ProblemKind kind) {
    return kind == problems::ProblemKind::TSP ? 15 : 8;
}

search::SearchResult run_strategy(search::Strategy s, const problems::ProblemInstance& inst,
                                  model::AttentionModel& m, const EvalOptions& opt, Rng& rng) {
    switch (s) {
        case search::Strategy::Greedy:
            return search::greedy_rollout(inst, m);
        case search::Strategy::Sample:
            return search::sample_rollouts(inst, m, opt.num_samples, rng);
        case search::Strategy::MultiGreedy: {
            std::vector<int> starts;
            if (inst.kind == problems::ProblemKind::TSP)
                for (int i = 0; i < inst.num_nodes(); ++i) starts.push_back(i);
            else
                for (int i = 1; i <= inst.num_customers(); ++i) starts.push_back(i);
            return search::multi_greedy(inst, m, starts);
        }
        case search::Strategy::Beam:
            return search::beam_search(inst, m, opt.beam_width);
        case search::Strategy::ActiveSearch: {
            search::ActiveSearchConfig cfg;
            cfg.num_samples = opt.active_samples;
            cfg.num_epochs = opt.active_epochs;
            return search::active_search(inst, m, cfg, rng);
        }
        case search::Strategy::BranchAndBound:
            return search::dfs_branch_and_bound(inst, m);
    }
    throw ConfigError("unknown strategy");
}

bool rollout_shaped(search::Strategy s) {
    return s == search::Strategy::Greedy || s == search::Strategy::Sample ||
           s == search::Strategy::MultiGreedy || s == search::Strategy::ActiveSearch;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

EvalReport evaluate_strategies(model::AttentionModel& m,
                               const std::vector<problems::ProblemInstance>& instances,
                               const std::vector<search::Strategy>& strategies,
                               const EvalOptions& opt) {
    if (instances.empty()) throw ConfigError("evaluate_strategies: empty instance set");
    const auto kind = instances.front().kind;
    bool exact_ok = true;
    for (const auto& inst : instances) {
        if (inst.kind != kind)
            throw ConfigError("evaluate_strategies: mixed problem kinds in one set");
        if (inst.num_customers() > exact_cap(kind)) exact_ok = false;
    }

    EvalReport report;
    report.instances = static_cast<int>(instances.size());
    report.reference = exact_ok ? "exact" : "heuristic";
    std::vector<double> reference(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i)
        reference[i] = exact_ok ? problems::exact_optimal(instances[i]).length
                                : problems::heuristic_baseline(instances[i]).length;

    for (search::Strategy s : strategies) {
        Rng rng(seed_stream(opt.seed, "eval/" + search::to_string(s)));
        StrategyEval row;
        row.strategy = s;
        std::vector<double> lengths(instances.size());
        const auto t0 = std::chrono::steady_clock::now();
        for (std::size_t i = 0; i < instances.size(); ++i) {
            const auto r = run_strategy(s, instances[i], m, opt, rng);
            lengths[i] = r.best_length;
            row.work += r.samples_or_expansions;
            if (rollout_shaped(s)) {
                const int horizon =
                    algo::episode_horizon(kind, instances[i].num_customers());
                row.env_steps += r.samples_or_expansions * horizon;
            } else {
                row.env_steps += r.samples_or_expansions;
            }
            row.mean_gap += (r.best_length - reference[i]) / reference[i];
        }
        row.wall_time =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const double n = static_cast<double>(instances.size());
        row.mean_length = std::accumulate(lengths.begin(), lengths.end(), 0.0) / n;
        double var = 0.0;
        for (double len : lengths) var += (len - row.mean_length) * (len - row.mean_length);
        row.std_length = std::sqrt(var / n);
        row.mean_gap /= n;
        report.rows.push_back(row);
    }
    return report;
}

void write_eval_table(const std::string& path, const EvalReport& report) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError("cannot write eval table: " + path);
    out << "strategy,mean_length,std_length,mean_gap,reference,instances,work,env_steps,"
           "wall_time\n";
    for (const StrategyEval& r : report.rows)
        out << search::to_string(r.strategy) << ',' << fmt(r.mean_length) << ','
            << fmt(r.std_length) << ',' << fmt(r.mean_gap) << ',' << report.reference << ','
            << report.instances << ',' << r.work << ',' << r.env_steps << ','
            << fmt(r.wall_time) << '\n';
    if (!out) throw FormatError("short write on eval table: " + path);
}

ReportPaths emit_report(const std::string& dir, const std::vector<TrainRow>& rows,
                        const EvalReport* report) {
    std::filesystem::create_directories(dir);
    ReportPaths paths;
    paths.curve_csv = dir + "/curve.csv";
    std::ofstream curve(paths.curve_csv, std::ios::trunc);
    if (!curve) throw FormatError("cannot write curve: " + paths.curve_csv);
    curve << "iteration,env_steps,eval_length,best_eval_length\n";
    for (const TrainRow& r : rows) {
        if (std::isnan(r.eval_length)) continue;
        curve << r.iteration << ',' << r.env_steps << ',' << fmt(r.eval_length) << ','
              << fmt(r.best_eval_length) << '\n';
    }
    if (!curve) throw FormatError("short write on curve: " + paths.curve_csv);
    if (report != nullptr) {
        paths.table_csv = dir + "/table.csv";
        write_eval_table(paths.table_csv, *report);
    }
    return paths;
}

}  // namespace routerl::harness
