#include "routerl/problems/problem.hpp"

#include <algorithm>
#include <cmath>

namespace routerl::problems {

namespace {
constexpr double kCapacityTol = 1e-9;
}

std::string to_string(ProblemKind kind) {
    return kind == ProblemKind::TSP ? "tsp" : "cvrp";
}

ProblemKind problem_kind_from_string(const std::string& s) {
    if (s == "tsp" || s == "TSP") return ProblemKind::TSP;
    if (s == "cvrp" || s == "CVRP") return ProblemKind::CVRP;
    throw ConfigError("unknown problem kind: " + s);
}

int raw_capacity_for(int n) {
    if (n <= 20) return 30;
    if (n <= 50) return 40;
    return 50;
}

double euclid(const std::array<double, 2>& a, const std::array<double, 2>& b) {
    const double dx = a[0] - b[0], dy = a[1] - b[1];
    return std::sqrt(dx * dx + dy * dy);
}

ProblemInstance generate_instance(ProblemKind kind, int n, std::uint64_t seed) {
    if (n < 2) throw ConfigError("generate_instance: n must be >= 2");
    // Mix n into the stream so different sizes under one seed are independent.
    Rng rng(seed_stream(seed ^ (static_cast<std::uint64_t>(n) * 0x9e3779b97f4a7c15ULL),
                        kind == ProblemKind::TSP ? "gen/tsp" : "gen/cvrp"));
    ProblemInstance inst;
    inst.kind = kind;
    inst.seed = seed;
    if (kind == ProblemKind::CVRP) {
        inst.depot = {rng.uniform(), rng.uniform()};
    }
    inst.coords.resize(static_cast<std::size_t>(n));
    for (auto& c : inst.coords) c = {rng.uniform(), rng.uniform()};
    if (kind == ProblemKind::CVRP) {
        const double raw = static_cast<double>(raw_capacity_for(n));
        inst.demand.resize(static_cast<std::size_t>(n));
        for (auto& d : inst.demand) d = static_cast<double>(rng.uniform_int(1, 9)) / raw;
        inst.capacity = 1.0;
    }
    return inst;
}

ValidityReport validate_tour(const ProblemInstance& instance, const Tour& tour) {
    ValidityReport rep;
    auto flag = [&rep](const std::string& v) {
        rep.feasible = false;
        rep.violations.push_back(v);
    };
    const int n_nodes = instance.num_nodes();
    for (int v : tour.nodes) {
        if (v < 0 || v >= n_nodes) {
            flag("node index out of range");
            return rep;
        }
    }
    if (instance.kind == ProblemKind::TSP) {
        if (static_cast<int>(tour.nodes.size()) != n_nodes) flag("wrong tour size");
        std::vector<int> count(static_cast<std::size_t>(n_nodes), 0);
        for (int v : tour.nodes) count[static_cast<std::size_t>(v)]++;
        if (std::any_of(count.begin(), count.end(), [](int c) { return c > 1; })) flag("repeat");
        if (std::any_of(count.begin(), count.end(), [](int c) { return c == 0; }))
            flag("missing node");
    } else {
        if (tour.nodes.empty() || tour.nodes.front() != 0) flag("does not start at depot");
        if (tour.nodes.empty() || tour.nodes.back() != 0) flag("does not end at depot");
        std::vector<int> count(static_cast<std::size_t>(n_nodes), 0);
        for (int v : tour.nodes) count[static_cast<std::size_t>(v)]++;
        for (int i = 1; i < n_nodes; ++i) {
            if (count[static_cast<std::size_t>(i)] > 1) {
                flag("repeat");
                break;
            }
        }
        for (int i = 1; i < n_nodes; ++i) {
            if (count[static_cast<std::size_t>(i)] == 0) {
                flag("missing node");
                break;
            }
        }
        double load = 0.0;
        bool overflow = false;
        for (int v : tour.nodes) {
            if (v == 0) {
                load = 0.0;
            } else {
                load += instance.node_demand(v);
                if (load > instance.capacity + kCapacityTol) overflow = true;
            }
        }
        if (overflow) flag("capacity overflow");
    }
    return rep;
}

double tour_length_unchecked(const ProblemInstance& instance, const Tour& tour) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < tour.nodes.size(); ++i)
        total += euclid(instance.node(tour.nodes[i]), instance.node(tour.nodes[i + 1]));
    if (instance.kind == ProblemKind::TSP && tour.nodes.size() >= 2)
        total += euclid(instance.node(tour.nodes.back()), instance.node(tour.nodes.front()));
    return total;
}

double tour_length(const ProblemInstance& instance, const Tour& tour) {
    const auto rep = validate_tour(instance, tour);
    if (!rep.feasible) throw FeasibilityError("infeasible tour: " + rep.violations.front());
    return tour_length_unchecked(instance, tour);
}

Tour canonical_tsp_tour(const Tour& tour) {
    const auto& t = tour.nodes;
    const std::size_t n = t.size();
    std::size_t start = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (t[i] == 0) start = i;
    std::vector<int> fwd(n), bwd(n);
    for (std::size_t i = 0; i < n; ++i) {
        fwd[i] = t[(start + i) % n];
        bwd[i] = t[(start + n - i) % n];
    }
    return Tour{std::min(fwd, bwd)};
}

}  // namespace routerl::problems
