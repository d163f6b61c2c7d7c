#include "routerl/search/search.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <memory>
#include <utility>

#include "routerl/algo/policy.hpp"
#include "routerl/algo/rollout.hpp"
#include "routerl/algo/updates.hpp"
#include "routerl/env/model_state.hpp"
#include "routerl/env/scalar_env.hpp"
#include "routerl/env/vector_env.hpp"
#include "routerl/nn/optim.hpp"

namespace routerl::search {

using env::Observation;
using env::ScalarEnv;
using env::VectorEnv;
using model::AttentionModel;
using problems::ProblemInstance;
using problems::ProblemKind;
using problems::Tour;

Strategy strategy_from_string(const std::string& s) {
    if (s == "greedy") return Strategy::Greedy;
    if (s == "sample") return Strategy::Sample;
    if (s == "multi-greedy") return Strategy::MultiGreedy;
    if (s == "beam") return Strategy::Beam;
    if (s == "active") return Strategy::ActiveSearch;
    if (s == "bnb") return Strategy::BranchAndBound;
    throw ConfigError("unknown strategy: " + s);
}

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::Greedy: return "greedy";
        case Strategy::Sample: return "sample";
        case Strategy::MultiGreedy: return "multi-greedy";
        case Strategy::Beam: return "beam";
        case Strategy::ActiveSearch: return "active";
        case Strategy::BranchAndBound: return "bnb";
    }
    throw ConfigError("unknown strategy enum value");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Environment action sequences already are tours, except that CVRP tours
// start at the depot before the first action.
Tour realized_tour(const ProblemInstance& inst, const std::vector<int>& actions) {
    Tour t;
    if (inst.kind == ProblemKind::CVRP) t.nodes.push_back(0);
    t.nodes.insert(t.nodes.end(), actions.begin(), actions.end());
    return t;
}

// Lengths come from tour_length on the realized tour rather than from summed
// rewards, so the result invariant holds exactly.
void consider(const ProblemInstance& inst, const std::vector<int>& actions, SearchResult& result,
              bool& has_any) {
    Tour t = realized_tour(inst, actions);
    const double len = problems::tour_length(inst, t);
    if (!has_any || len < result.best_length) {
        result.best_tour = std::move(t);
        result.best_length = len;
        has_any = true;
    }
}

// Best realized row of a finished vectorized rollout.
void consider_env_rows(const ProblemInstance& inst, const VectorEnv& env, SearchResult& result,
                       bool& has_any) {
    for (int b = 0; b < env.batch(); ++b) consider(inst, env.actions_of(b), result, has_any);
}

}  // namespace

SearchResult greedy_rollout(const ProblemInstance& instance, AttentionModel& m) {
    const auto t0 = Clock::now();
    VectorEnv env({instance}, 1);
    Rng unused(0);  // greedy selection never draws
    algo::collect_rollouts(env, m, algo::episode_horizon(instance.kind, instance.num_customers()),
                           unused, model::SelectMode::Greedy);
    SearchResult result;
    result.strategy = Strategy::Greedy;
    result.samples_or_expansions = 1;
    bool has_any = false;
    consider_env_rows(instance, env, result, has_any);
    result.wall_time = seconds_since(t0);
    return result;
}

SearchResult sample_rollouts(const ProblemInstance& instance, AttentionModel& m, int num_samples,
                             Rng& rng) {
    if (num_samples < 1) throw ConfigError("sample_rollouts: need at least one sample");
    const auto t0 = Clock::now();
    nn::NoGradGuard ng;

    VectorEnv env({instance}, num_samples);
    env.reset();
    const ProblemInstance* inst_ptr = &instance;
    auto cache = m.encode({inst_ptr});

    // One derived stream per rollout: a rollout's draws depend only on its
    // index and its own episode, which makes sample sets nested across
    // different num_samples for the same incoming rng state.
    const std::uint64_t base = rng.next_u64();
    std::vector<Rng> streams;
    streams.reserve(static_cast<std::size_t>(num_samples));
    for (int b = 0; b < num_samples; ++b)
        streams.emplace_back(seed_stream(base, "rollout/" + std::to_string(b)));

    std::vector<int> actions(static_cast<std::size_t>(num_samples), 0);
    while (!env.all_finished()) {
        Observation obs = env.observation();
        // dones() is sized only after the first step; before that no row can
        // be finished anyway.
        const auto& finished = env.dones();
        const bool any_finished = finished.size() == static_cast<std::size_t>(num_samples) &&
                                  std::any_of(finished.begin(), finished.end(),
                                              [](std::uint8_t f) { return f != 0; });
        if (any_finished) algo::patch_finished_rows(obs, finished);
        env::ModelState state(obs);
        auto po = m.parallel_decode(cache, state, num_samples);
        const std::int64_t na = po.log_probs->shape[1];
        for (int b = 0; b < num_samples; ++b) {
            if (any_finished && finished[static_cast<std::size_t>(b)]) {
                actions[static_cast<std::size_t>(b)] = 0;
                continue;
            }
            const int a = model::sample_row(po.log_probs->value.data() + b * na,
                                            static_cast<int>(na), streams[static_cast<std::size_t>(b)]);
            if (a < 0) throw NoFeasibleActionError("sample_rollouts: no feasible action");
            actions[static_cast<std::size_t>(b)] = a;
        }
        env.step(actions);
    }

    SearchResult result;
    result.strategy = Strategy::Sample;
    result.samples_or_expansions = num_samples;
    bool has_any = false;
    consider_env_rows(instance, env, result, has_any);
    result.wall_time = seconds_since(t0);
    return result;
}

SearchResult multi_greedy(const ProblemInstance& instance, AttentionModel& m,
                          const std::vector<int>& start_nodes) {
    if (start_nodes.empty()) throw ConfigError("multi_greedy: start_nodes must be non-empty");
    const int n = instance.num_customers();
    for (int s : start_nodes) {
        if (instance.kind == ProblemKind::TSP && (s < 0 || s >= n))
            throw ConfigError("multi_greedy: start node out of range");
        // The depot is where every CVRP route already starts; forcing it
        // would be a no-op start, so only customers qualify.
        if (instance.kind == ProblemKind::CVRP && (s < 1 || s > n))
            throw ConfigError("multi_greedy: start must be a customer");
    }

    const auto t0 = Clock::now();
    nn::NoGradGuard ng;
    const int K = static_cast<int>(start_nodes.size());
    VectorEnv env({instance}, K);
    env.reset();
    const ProblemInstance* inst_ptr = &instance;
    auto cache = m.encode({inst_ptr});

    env.step(start_nodes);  // forced first visit, one rollout per start
    std::vector<int> actions(static_cast<std::size_t>(K), 0);
    while (!env.all_finished()) {
        Observation obs = env.observation();
        algo::patch_finished_rows(obs, env.dones());
        env::ModelState state(obs);
        auto po = m.parallel_decode(cache, state, K);
        const std::int64_t na = po.log_probs->shape[1];
        for (int b = 0; b < K; ++b) {
            const int a = model::greedy_row(po.log_probs->value.data() + b * na, static_cast<int>(na));
            if (a < 0) throw NoFeasibleActionError("multi_greedy: no feasible action");
            actions[static_cast<std::size_t>(b)] = a;
        }
        env.step(actions);
    }

    SearchResult result;
    result.strategy = Strategy::MultiGreedy;
    result.samples_or_expansions = K;
    bool has_any = false;
    consider_env_rows(instance, env, result, has_any);
    result.wall_time = seconds_since(t0);
    return result;
}

SearchResult beam_search(const ProblemInstance& instance, AttentionModel& m, std::int64_t width,
                         std::vector<std::vector<BeamEntry>>* trace) {
    if (width < 1) throw ConfigError("beam_search: width must be >= 1");
    const auto t0 = Clock::now();
    nn::NoGradGuard ng;

    struct Item {
        ScalarEnv env;
        double score;  // accumulated log-probability
    };

    // unique_ptr so a parent releases the moment its last child is built:
    // exhaustive widths put millions of items in flight and the peak matters.
    ScalarEnv root(instance);
    root.reset();
    std::vector<std::unique_ptr<Item>> beam;
    beam.push_back(std::make_unique<Item>(Item{std::move(root), 0.0}));

    const ProblemInstance* inst_ptr = &instance;
    auto cache = m.encode({inst_ptr});

    SearchResult result;
    result.strategy = Strategy::Beam;
    bool has_any = false;

    while (!beam.empty()) {
        result.samples_or_expansions += static_cast<std::int64_t>(beam.size());

        // Candidate generation order (item, then action) is the insertion
        // order that breaks score ties.
        struct Cand {
            double score;
            int item;
            int action;
        };
        std::vector<Cand> cands;

        // Scores are row-independent, so decoding the level in bounded
        // chunks changes nothing except the peak allocation size.
        constexpr std::size_t kChunk = 65536;
        for (std::size_t lo = 0; lo < beam.size(); lo += kChunk) {
            const std::size_t hi = std::min(beam.size(), lo + kChunk);
            std::vector<Observation> chunk_obs;
            chunk_obs.reserve(hi - lo);
            std::vector<const Observation*> parts;
            parts.reserve(hi - lo);
            for (std::size_t i = lo; i < hi; ++i) {
                chunk_obs.push_back(beam[i]->env.observation());
                parts.push_back(&chunk_obs.back());
            }
            Observation batched = env::concat_rows(parts);
            env::ModelState state(batched);
            auto po = m.parallel_decode(cache, state, static_cast<int>(hi - lo));
            const std::int64_t na = po.log_probs->shape[1];
            for (std::size_t i = lo; i < hi; ++i) {
                const std::int64_t row = static_cast<std::int64_t>(i - lo);
                const double* lp = po.log_probs->value.data() + row * na;
                const double* mask = batched.action_mask.data() + row * na;
                for (int a = 0; a < static_cast<int>(na); ++a)
                    if (mask[a] == 1.0)
                        cands.push_back({beam[i]->score + lp[a], static_cast<int>(i), a});
            }
        }
        std::stable_sort(cands.begin(), cands.end(),
                         [](const Cand& x, const Cand& y) { return x.score > y.score; });
        if (static_cast<std::int64_t>(cands.size()) > width)
            cands.resize(static_cast<std::size_t>(width));

        std::vector<int> remaining(beam.size(), 0);
        for (const Cand& c : cands) ++remaining[static_cast<std::size_t>(c.item)];

        std::vector<std::unique_ptr<Item>> next;
        next.reserve(cands.size());
        std::vector<BeamEntry> kept;
        if (trace) kept.reserve(cands.size());
        for (const Cand& c : cands) {
            const auto p = static_cast<std::size_t>(c.item);
            const bool last_child = --remaining[p] == 0;
            ScalarEnv child_env = last_child ? std::move(beam[p]->env) : beam[p]->env;
            if (last_child) beam[p].reset();
            auto res = child_env.step(c.action);
            if (trace) kept.push_back({child_env.actions(), c.score, res.done});
            if (res.done)
                consider(instance, child_env.actions(), result, has_any);
            else
                next.push_back(std::make_unique<Item>(Item{std::move(child_env), c.score}));
        }
        if (trace) trace->push_back(std::move(kept));
        beam = std::move(next);
    }

    result.wall_time = seconds_since(t0);
    return result;
}

SearchResult active_search(const ProblemInstance& instance, AttentionModel& m,
                           const ActiveSearchConfig& cfg, Rng& rng) {
    if (cfg.num_samples < 1) throw ConfigError("active_search: need at least one sample per round");
    if (cfg.num_epochs < 0) throw ConfigError("active_search: negative epoch count");
    const auto t0 = Clock::now();

    // Private copy: fine-tuning must not disturb the caller's parameters.
    AttentionModel clone(m.config(), 0);
    clone.params().assign_values(m.params().flatten_values());
    clone.bump_param_version();

    // Round zero is plain sampling under the unmodified parameters, so with
    // num_epochs = 0 the call degenerates to sample_rollouts exactly.
    SearchResult result = sample_rollouts(instance, clone, cfg.num_samples, rng);
    result.strategy = Strategy::ActiveSearch;
    bool has_any = true;

    algo::ReinforceConfig rcfg;
    rcfg.learning_rate = cfg.learning_rate;
    rcfg.entropy_coef = cfg.entropy_coef;
    rcfg.max_grad_norm = cfg.max_grad_norm;
    nn::Adam opt(clone.params(), rcfg.learning_rate);
    algo::AttentionPolicy policy(clone);
    const int horizon = algo::episode_horizon(instance.kind, instance.num_customers());

    for (int epoch = 0; epoch < cfg.num_epochs; ++epoch) {
        VectorEnv env({instance}, cfg.num_samples);
        auto buf = algo::collect_rollouts(env, clone, horizon, rng);
        consider_env_rows(instance, env, result, has_any);
        result.samples_or_expansions += cfg.num_samples;

        const auto returns = algo::episode_returns(buf);
        const auto base = algo::update_baseline(algo::BaselineKind::SharedRollouts, buf, returns);
        std::vector<double> adv(returns.size());
        for (std::size_t i = 0; i < adv.size(); ++i) adv[i] = returns[i] - base[i];
        algo::reinforce_step(policy, opt, buf, adv, rcfg, false);
    }

    result.wall_time = seconds_since(t0);
    return result;
}

SearchResult dfs_branch_and_bound(const ProblemInstance& instance, AttentionModel& m,
                                  std::vector<double>* incumbents) {
    const int n = instance.num_customers();
    const int cap = instance.kind == ProblemKind::TSP ? 12 : 7;
    if (n > cap) throw SizeCapError("dfs_branch_and_bound: instance above the enumeration cap");

    const auto t0 = Clock::now();
    nn::NoGradGuard ng;
    const ProblemInstance* inst_ptr = &instance;
    auto cache = m.encode({inst_ptr});

    SearchResult result;
    result.strategy = Strategy::BranchAndBound;
    bool has_any = false;
    double incumbent = std::numeric_limits<double>::infinity();

    ScalarEnv root(instance);
    Observation root_obs = root.reset();

    // Children in descending policy probability (ties: lower action index,
    // via stable sort). Partial cost only ever grows, so any partial at or
    // above the incumbent is safe to prune.
    auto visit = [&](auto&& self, const ScalarEnv& env, const Observation& obs,
                     double cost) -> void {
        env::ModelState state(obs);
        auto po = m.parallel_decode(cache, state, 1);
        ++result.samples_or_expansions;
        const auto na = static_cast<int>(po.log_probs->shape[1]);
        std::vector<std::pair<double, int>> order;
        for (int a = 0; a < na; ++a)
            if (obs.action_mask[static_cast<std::size_t>(a)] == 1.0)
                order.emplace_back(po.log_probs->value[static_cast<std::size_t>(a)], a);
        std::stable_sort(order.begin(), order.end(),
                         [](const auto& x, const auto& y) { return x.first > y.first; });
        for (const auto& [lp, a] : order) {
            ScalarEnv child = env;
            auto res = child.step(a);
            const double child_cost = cost - res.reward;  // dense reward = -edge length
            if (child_cost >= incumbent) continue;
            if (res.done) {
                incumbent = child_cost;
                if (incumbents) incumbents->push_back(incumbent);
                consider(instance, child.actions(), result, has_any);
            } else {
                self(self, child, res.obs, child_cost);
            }
        }
    };
    visit(visit, root, root_obs, 0.0);

    result.wall_time = seconds_since(t0);
    return result;
}

}  // namespace routerl::search
