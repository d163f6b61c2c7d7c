#include "routerl/problems/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace routerl::problems {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> distance_matrix(const ProblemInstance& inst) {
    const int n = inst.num_nodes();
    std::vector<double> d(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            d[static_cast<std::size_t>(i) * n + j] = euclid(inst.node(i), inst.node(j));
    return d;
}

OracleSolution held_karp(const ProblemInstance& inst) {
    const int n = inst.num_nodes();
    const auto d = distance_matrix(inst);
    auto D = [&](int i, int j) { return d[static_cast<std::size_t>(i) * n + j]; };
    if (n == 2) return {2.0 * D(0, 1), Tour{{0, 1}}};

    // dp[mask][j]: shortest path from 0 through `mask` (mask excludes node 0,
    // bit i-1 <-> node i) ending at node j.
    const int m = n - 1;
    const std::size_t masks = std::size_t{1} << m;
    std::vector<double> dp(masks * m, kInf);
    std::vector<std::int16_t> parent(masks * m, -1);
    for (int j = 0; j < m; ++j) dp[(std::size_t{1} << j) * m + j] = D(0, j + 1);
    for (std::size_t mask = 1; mask < masks; ++mask) {
        for (int j = 0; j < m; ++j) {
            if (!(mask & (std::size_t{1} << j))) continue;
            const double cur = dp[mask * m + j];
            if (cur == kInf) continue;
            for (int k = 0; k < m; ++k) {
                if (mask & (std::size_t{1} << k)) continue;
                const std::size_t nxt = mask | (std::size_t{1} << k);
                const double cand = cur + D(j + 1, k + 1);
                if (cand < dp[nxt * m + k]) {
                    dp[nxt * m + k] = cand;
                    parent[nxt * m + k] = static_cast<std::int16_t>(j);
                }
            }
        }
    }
    const std::size_t full = masks - 1;
    double best = kInf;
    int best_j = 0;
    for (int j = 0; j < m; ++j) {
        const double cand = dp[full * m + j] + D(j + 1, 0);
        if (cand < best) {
            best = cand;
            best_j = j;
        }
    }
    std::vector<int> rev;
    std::size_t mask = full;
    int j = best_j;
    while (j >= 0) {
        rev.push_back(j + 1);
        const int pj = parent[mask * m + j];
        mask &= ~(std::size_t{1} << j);
        j = pj;
    }
    std::vector<int> tour{0};
    tour.insert(tour.end(), rev.rbegin(), rev.rend());
    return {best, Tour{std::move(tour)}};
}

// Optimal partition of a fixed customer ordering into capacity-feasible
// routes (shortest-path over split points).
double best_split(const ProblemInstance& inst, const std::vector<int>& order,
                  std::vector<int>* breaks_out) {
    const int n = static_cast<int>(order.size());
    std::vector<double> cost(static_cast<std::size_t>(n) + 1, kInf);
    std::vector<int> from(static_cast<std::size_t>(n) + 1, -1);
    cost[0] = 0.0;
    for (int i = 0; i < n; ++i) {
        if (cost[static_cast<std::size_t>(i)] == kInf) continue;
        double load = 0.0;
        double inner = 0.0;
        for (int j = i; j < n; ++j) {  // route serves order[i..j]
            load += inst.node_demand(order[static_cast<std::size_t>(j)]);
            if (load > inst.capacity + 1e-9) break;
            if (j > i)
                inner += euclid(inst.node(order[static_cast<std::size_t>(j - 1)]),
                                inst.node(order[static_cast<std::size_t>(j)]));
            const double route = euclid(inst.depot, inst.node(order[static_cast<std::size_t>(i)])) +
                                 inner +
                                 euclid(inst.node(order[static_cast<std::size_t>(j)]), inst.depot);
            const double cand = cost[static_cast<std::size_t>(i)] + route;
            if (cand < cost[static_cast<std::size_t>(j) + 1]) {
                cost[static_cast<std::size_t>(j) + 1] = cand;
                from[static_cast<std::size_t>(j) + 1] = i;
            }
        }
    }
    if (breaks_out) {
        breaks_out->clear();
        int at = n;
        while (at > 0) {
            breaks_out->push_back(at);
            at = from[static_cast<std::size_t>(at)];
        }
        std::reverse(breaks_out->begin(), breaks_out->end());
    }
    return cost[static_cast<std::size_t>(n)];
}

Tour assemble_cvrp_tour(const std::vector<int>& order, const std::vector<int>& breaks) {
    Tour t;
    t.nodes.push_back(0);
    int at = 0;
    for (int b : breaks) {
        for (int i = at; i < b; ++i) t.nodes.push_back(order[static_cast<std::size_t>(i)]);
        t.nodes.push_back(0);
        at = b;
    }
    return t;
}

OracleSolution cvrp_exact(const ProblemInstance& inst) {
    const int n = inst.num_customers();
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 1);
    double best = kInf;
    std::vector<int> best_order, best_breaks, breaks;
    // Every solution's customer sequence is a permutation; the split DP finds
    // the best depot placement for each, so the minimum is global.
    do {
        const double len = best_split(inst, order, &breaks);
        if (len < best) {
            best = len;
            best_order = order;
            best_breaks = breaks;
        }
    } while (std::next_permutation(order.begin(), order.end()));
    return {best, assemble_cvrp_tour(best_order, best_breaks)};
}

// Best-improvement 2-opt sweeps on a cyclic tour. Reversing seq[i..j]
// replaces edges (i-1,i) and (j,j+1 mod n).
void two_opt_cycle(const ProblemInstance& inst, std::vector<int>& seq) {
    const int n = static_cast<int>(seq.size());
    if (n < 4) return;
    auto D = [&](int a, int b) { return euclid(inst.node(a), inst.node(b)); };
    bool improved = true;
    while (improved) {
        improved = false;
        double best_delta = -1e-12;
        int bi = -1, bj = -1;
        for (int i = 1; i < n - 1; ++i) {
            for (int j = i + 1; j < n; ++j) {
                if (i == 1 && j == n - 1) continue;  // reversal of the whole cycle
                const int a = seq[static_cast<std::size_t>(i - 1)];
                const int b = seq[static_cast<std::size_t>(i)];
                const int c = seq[static_cast<std::size_t>(j)];
                const int e = seq[static_cast<std::size_t>((j + 1) % n)];
                const double delta = D(a, c) + D(b, e) - D(a, b) - D(c, e);
                if (delta < best_delta) {
                    best_delta = delta;
                    bi = i;
                    bj = j;
                }
            }
        }
        if (bi >= 0) {
            std::reverse(seq.begin() + bi, seq.begin() + bj + 1);
            improved = true;
        }
    }
}

// 2-opt on one vehicle route; seq holds customers only, with the depot
// (node 0) implicitly attached at both ends.
void two_opt_route(const ProblemInstance& inst, std::vector<int>& seq) {
    const int n = static_cast<int>(seq.size());
    if (n < 2) return;
    auto D = [&](int a, int b) { return euclid(inst.node(a), inst.node(b)); };
    bool improved = true;
    while (improved) {
        improved = false;
        double best_delta = -1e-12;
        int bi = -1, bj = -1;
        for (int i = 0; i < n - 1; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const int a = i > 0 ? seq[static_cast<std::size_t>(i - 1)] : 0;
                const int b = seq[static_cast<std::size_t>(i)];
                const int c = seq[static_cast<std::size_t>(j)];
                const int e = j + 1 < n ? seq[static_cast<std::size_t>(j + 1)] : 0;
                const double delta = D(a, c) + D(b, e) - D(a, b) - D(c, e);
                if (delta < best_delta) {
                    best_delta = delta;
                    bi = i;
                    bj = j;
                }
            }
        }
        if (bi >= 0) {
            std::reverse(seq.begin() + bi, seq.begin() + bj + 1);
            improved = true;
        }
    }
}

OracleSolution tsp_heuristic(const ProblemInstance& inst) {
    const int n = inst.num_nodes();
    std::vector<char> used(static_cast<std::size_t>(n), 0);
    std::vector<int> tour{0};
    used[0] = 1;
    int cur = 0;
    for (int step = 1; step < n; ++step) {
        int best = -1;
        double bd = kInf;
        for (int j = 0; j < n; ++j) {
            if (used[static_cast<std::size_t>(j)]) continue;
            const double dd = euclid(inst.node(cur), inst.node(j));
            if (dd < bd) {
                bd = dd;
                best = j;
            }
        }
        used[static_cast<std::size_t>(best)] = 1;
        tour.push_back(best);
        cur = best;
    }
    two_opt_cycle(inst, tour);
    Tour t{std::move(tour)};
    return {tour_length_unchecked(inst, t), std::move(t)};
}

OracleSolution cvrp_heuristic(const ProblemInstance& inst) {
    const int n = inst.num_customers();
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    Tour t;
    t.nodes.push_back(0);
    int cur = 0, remaining = n;
    double load = 0.0;
    std::vector<std::pair<std::size_t, std::size_t>> routes;  // [begin, end) in t.nodes
    std::size_t route_begin = 1;
    while (remaining > 0) {
        int best = -1;
        double bd = kInf;
        for (int j = 1; j <= n; ++j) {
            if (used[static_cast<std::size_t>(j)]) continue;
            if (load + inst.node_demand(j) > inst.capacity + 1e-9) continue;
            const double dd = euclid(inst.node(cur), inst.node(j));
            if (dd < bd) {
                bd = dd;
                best = j;
            }
        }
        if (best < 0) {  // refill at depot
            routes.emplace_back(route_begin, t.nodes.size());
            t.nodes.push_back(0);
            route_begin = t.nodes.size();
            cur = 0;
            load = 0.0;
            continue;
        }
        used[static_cast<std::size_t>(best)] = 1;
        t.nodes.push_back(best);
        load += inst.node_demand(best);
        cur = best;
        --remaining;
    }
    routes.emplace_back(route_begin, t.nodes.size());
    t.nodes.push_back(0);
    // Intra-route improvement keeps per-route demand unchanged, so the
    // result stays feasible.
    for (auto [b, e] : routes) {
        if (e - b >= 2) {
            std::vector<int> seq(t.nodes.begin() + static_cast<std::ptrdiff_t>(b),
                                 t.nodes.begin() + static_cast<std::ptrdiff_t>(e));
            two_opt_route(inst, seq);
            std::copy(seq.begin(), seq.end(), t.nodes.begin() + static_cast<std::ptrdiff_t>(b));
        }
    }
    return {tour_length_unchecked(inst, t), std::move(t)};
}

}  // namespace

OracleSolution exact_optimal(const ProblemInstance& instance) {
    if (instance.kind == ProblemKind::TSP) {
        if (instance.num_nodes() > 15)
            throw SizeCapError("exact TSP limited to n <= 15");
        return held_karp(instance);
    }
    if (instance.num_customers() > 8)
        throw SizeCapError("exact CVRP limited to n <= 8 customers");
    return cvrp_exact(instance);
}

OracleSolution heuristic_baseline(const ProblemInstance& instance) {
    return instance.kind == ProblemKind::TSP ? tsp_heuristic(instance) : cvrp_heuristic(instance);
}

}  // namespace routerl::problems
