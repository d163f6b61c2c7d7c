// Exact and heuristic reference solvers, used to verify learned policies.
#pragma once

#include "routerl/problems/problem.hpp"

namespace routerl::problems {

struct OracleSolution {
    double length = 0.0;
    Tour tour;
};

// Globally optimal solution. TSP uses the Held-Karp dynamic program (n <= 15);
// CVRP enumerates customer orderings with an optimal capacity split (n <= 8).
// Throws SizeCapError above those limits.
OracleSolution exact_optimal(const ProblemInstance& instance);

// Nearest-neighbor construction followed by 2-opt improvement (intra-route
// for CVRP, so capacity feasibility is preserved). Deterministic.
OracleSolution heuristic_baseline(const ProblemInstance& instance);

}  // namespace routerl::problems
