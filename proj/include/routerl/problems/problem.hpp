// Routing problem instances, tours, feasibility and objective evaluation.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "routerl/error.hpp"
#include "routerl/rng.hpp"

namespace routerl::problems {

enum class ProblemKind { TSP, CVRP };

std::string to_string(ProblemKind kind);
ProblemKind problem_kind_from_string(const std::string& s);

// Node indexing convention: TSP nodes are 0..n-1 (all customers). CVRP node 0
// is the depot and customers are 1..n; `coords`/`demand` hold customers only.
struct ProblemInstance {
    ProblemKind kind = ProblemKind::TSP;
    std::vector<std::array<double, 2>> coords;  // customer coordinates
    std::array<double, 2> depot{0.0, 0.0};      // CVRP only
    std::vector<double> demand;                 // CVRP only, normalized by raw capacity
    double capacity = 0.0;                      // CVRP only; 1.0 after normalization
    std::uint64_t seed = 0;

    int num_customers() const { return static_cast<int>(coords.size()); }
    // Total node count as seen by tours and environments.
    int num_nodes() const {
        return num_customers() + (kind == ProblemKind::CVRP ? 1 : 0);
    }
    const std::array<double, 2>& node(int i) const {
        if (kind == ProblemKind::CVRP) return i == 0 ? depot : coords[static_cast<std::size_t>(i - 1)];
        return coords[static_cast<std::size_t>(i)];
    }
    double node_demand(int i) const {
        return (kind == ProblemKind::CVRP && i > 0) ? demand[static_cast<std::size_t>(i - 1)] : 0.0;
    }
};

// TSP: a permutation of 0..n-1. CVRP: starts and ends at depot 0, every
// customer exactly once, demand between consecutive depot visits <= capacity.
struct Tour {
    std::vector<int> nodes;
};

struct ValidityReport {
    bool feasible = true;
    std::vector<std::string> violations;  // e.g. "repeat", "missing node", "capacity overflow"
};

// Raw (integer) vehicle capacity used before normalization, by customer count.
int raw_capacity_for(int n);

double euclid(const std::array<double, 2>& a, const std::array<double, 2>& b);

// Coordinates i.i.d. uniform on the unit square; CVRP demands uniform on
// {1..9} scaled by the raw capacity. Pure function of (kind, n, seed).
ProblemInstance generate_instance(ProblemKind kind, int n, std::uint64_t seed);

ValidityReport validate_tour(const ProblemInstance& instance, const Tour& tour);

// Total Euclidean length (TSP includes the closing edge; CVRP tours carry
// their depot anchors explicitly). Throws FeasibilityError, naming the first
// violated constraint, on any tour validate_tour rejects.
double tour_length(const ProblemInstance& instance, const Tour& tour);

// Edge sum without feasibility checks, for search inner loops.
double tour_length_unchecked(const ProblemInstance& instance, const Tour& tour);

// Rotates/reflects a TSP tour to start at node 0 in the lexicographically
// smaller direction. Comparison helper for tests; never used for scoring.
Tour canonical_tsp_tour(const Tour& tour);

}  // namespace routerl::problems
