#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "routerl/problems/io.hpp"
#include "routerl/problems/oracles.hpp"
#include "routerl/problems/problem.hpp"

using namespace routerl;
using namespace routerl::problems;

namespace {

ProblemInstance corners() {
    ProblemInstance inst;
    inst.kind = ProblemKind::TSP;
    inst.coords = {{0, 0}, {0, 1}, {1, 1}, {1, 0}};
    return inst;
}

// Brute force over all TSP tours with node 0 fixed first.
double tsp_brute_force(const ProblemInstance& inst) {
    const int n = inst.num_nodes();
    std::vector<int> perm(static_cast<std::size_t>(n) - 1);
    std::iota(perm.begin(), perm.end(), 1);
    double best = 1e300;
    do {
        Tour t;
        t.nodes = {0};
        t.nodes.insert(t.nodes.end(), perm.begin(), perm.end());
        best = std::min(best, tour_length_unchecked(inst, t));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// Brute force CVRP: every customer permutation x every depot-break placement.
double cvrp_brute_force(const ProblemInstance& inst) {
    const int n = inst.num_customers();
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 1);
    double best = 1e300;
    do {
        for (unsigned gaps = 0; gaps < (1u << (n - 1)); ++gaps) {
            Tour t;
            t.nodes.push_back(0);
            for (int i = 0; i < n; ++i) {
                t.nodes.push_back(perm[static_cast<std::size_t>(i)]);
                if (i + 1 < n && (gaps & (1u << i))) t.nodes.push_back(0);
            }
            t.nodes.push_back(0);
            if (validate_tour(inst, t).feasible)
                best = std::min(best, tour_length_unchecked(inst, t));
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace

TEST_CASE("generation is a pure function of kind, n, seed") {
    const auto a = generate_instance(ProblemKind::TSP, 4, 123);
    const auto b = generate_instance(ProblemKind::TSP, 4, 123);
    REQUIRE(a.coords.size() == 4);
    CHECK(a.coords == b.coords);
    const auto c = generate_instance(ProblemKind::TSP, 4, 124);
    CHECK(a.coords != c.coords);
    for (const auto& p : a.coords) {
        CHECK(p[0] >= 0.0);
        CHECK(p[0] < 1.0);
        CHECK(p[1] >= 0.0);
        CHECK(p[1] < 1.0);
    }
}

TEST_CASE("cvrp generation normalizes demands against the size-dependent capacity") {
    const auto inst = generate_instance(ProblemKind::CVRP, 50, 7);
    CHECK(inst.capacity == 1.0);
    REQUIRE(inst.demand.size() == 50);
    CHECK(raw_capacity_for(50) == 40);
    CHECK(raw_capacity_for(20) == 30);
    CHECK(raw_capacity_for(100) == 50);
    for (double d : inst.demand) {
        CHECK(d > 0.0);
        CHECK(d <= inst.capacity);
        const double raw = d * 40.0;
        CHECK(std::abs(raw - std::round(raw)) < 1e-12);  // integer raw demand
        CHECK(std::round(raw) >= 1);
        CHECK(std::round(raw) <= 9);
    }
    CHECK(inst.num_nodes() == 51);  // depot + customers
}

TEST_CASE("generation rejects degenerate sizes") {
    CHECK_THROWS_AS(generate_instance(ProblemKind::TSP, 1, 0), ConfigError);
}

TEST_CASE("tour length on the unit square perimeter") {
    const auto inst = corners();
    CHECK(tour_length(inst, Tour{{0, 1, 2, 3}}) == doctest::Approx(4.0));
}

TEST_CASE("tour length of coincident nodes is zero") {
    ProblemInstance inst;
    inst.kind = ProblemKind::TSP;
    inst.coords = {{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}};
    CHECK(tour_length(inst, Tour{{0, 1, 2}}) == doctest::Approx(0.0));
}

TEST_CASE("tour length equals an independent edge-by-edge summation") {
    const auto inst = generate_instance(ProblemKind::TSP, 7, 99);
    Tour t{{3, 1, 6, 0, 2, 5, 4}};
    double expect = 0.0;
    for (int i = 0; i < 7; ++i) {
        const auto& a = inst.coords[static_cast<std::size_t>(t.nodes[static_cast<std::size_t>(i)])];
        const auto& b =
            inst.coords[static_cast<std::size_t>(t.nodes[static_cast<std::size_t>((i + 1) % 7)])];
        expect += std::hypot(a[0] - b[0], a[1] - b[1]);
    }
    CHECK(tour_length(inst, t) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("tsp tour length is invariant under rotation and reversal") {
    const auto inst = generate_instance(ProblemKind::TSP, 9, 5);
    Tour t{{0, 1, 2, 3, 4, 5, 6, 7, 8}};
    Rng rng(17);
    rng.shuffle(t.nodes);
    const double base = tour_length(inst, t);
    for (int r = 0; r < 9; ++r) {
        Tour rot = t;
        std::rotate(rot.nodes.begin(), rot.nodes.begin() + r, rot.nodes.end());
        CHECK(tour_length(inst, rot) == doctest::Approx(base).epsilon(1e-12));
    }
    Tour rev = t;
    std::reverse(rev.nodes.begin(), rev.nodes.end());
    CHECK(tour_length(inst, rev) == doctest::Approx(base).epsilon(1e-12));
    CHECK(canonical_tsp_tour(rev).nodes == canonical_tsp_tour(t).nodes);
}

TEST_CASE("validate reports specific violations") {
    const auto inst = corners();
    CHECK(validate_tour(inst, Tour{{2, 0, 1, 3}}).feasible);
    const auto rep = validate_tour(inst, Tour{{0, 1, 1, 3}});
    CHECK_FALSE(rep.feasible);
    REQUIRE_FALSE(rep.violations.empty());
    CHECK(std::find(rep.violations.begin(), rep.violations.end(), "repeat") !=
          rep.violations.end());
    CHECK(std::find(rep.violations.begin(), rep.violations.end(), "missing node") !=
          rep.violations.end());
    CHECK_THROWS_AS(tour_length(inst, Tour{{0, 1, 1, 3}}), FeasibilityError);
    CHECK_FALSE(validate_tour(inst, Tour{{0, 1, 2}}).feasible);  // wrong size
    CHECK_FALSE(validate_tour(inst, Tour{{0, 1, 2, 7}}).feasible);
}

TEST_CASE("cvrp validation enforces depot anchoring and capacity") {
    ProblemInstance inst;
    inst.kind = ProblemKind::CVRP;
    inst.coords = {{0.1, 0.1}, {0.9, 0.9}, {0.5, 0.2}};
    inst.depot = {0.0, 0.0};
    inst.demand = {0.5, 0.5, 0.5};
    inst.capacity = 1.0;
    CHECK(validate_tour(inst, Tour{{0, 1, 2, 0, 3, 0}}).feasible);
    CHECK_FALSE(validate_tour(inst, Tour{{1, 2, 0, 3, 0}}).feasible);  // missing start depot
    CHECK_FALSE(validate_tour(inst, Tour{{0, 1, 2, 0, 3}}).feasible);  // missing end depot
    const auto rep = validate_tour(inst, Tour{{0, 1, 2, 3, 0}});        // 1.5 > capacity
    CHECK_FALSE(rep.feasible);
    CHECK(std::find(rep.violations.begin(), rep.violations.end(), "capacity overflow") !=
          rep.violations.end());

    // Exactly at capacity stays feasible; epsilon over trips the check.
    inst.demand = {0.5, 0.5, 0.5 + 1e-6};
    CHECK(validate_tour(inst, Tour{{0, 1, 2, 0, 3, 0}}).feasible);
    CHECK_FALSE(validate_tour(inst, Tour{{0, 1, 3, 0, 2, 0}}).feasible);
}

TEST_CASE("validate accepts exactly the tours tour_length scores") {
    const auto inst = generate_instance(ProblemKind::CVRP, 5, 3);
    Rng rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        Tour t;
        const int len = static_cast<int>(rng.uniform_int(0, 9));
        for (int i = 0; i < len; ++i)
            t.nodes.push_back(static_cast<int>(rng.uniform_int(0, inst.num_nodes() - 1)));
        const bool ok = validate_tour(inst, t).feasible;
        bool threw = false;
        try {
            tour_length(inst, t);
        } catch (const FeasibilityError&) {
            threw = true;
        }
        CHECK(ok == !threw);
    }
}

TEST_CASE("exact tsp matches brute force and hits the size cap") {
    CHECK(exact_optimal(corners()).length == doctest::Approx(4.0));
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        const auto inst = generate_instance(ProblemKind::TSP, 8, seed);
        const auto sol = exact_optimal(inst);
        CHECK(sol.length == doctest::Approx(tsp_brute_force(inst)).epsilon(1e-12));
        CHECK(validate_tour(inst, sol.tour).feasible);
        CHECK(tour_length(inst, sol.tour) == doctest::Approx(sol.length).epsilon(1e-12));
    }
    const auto big = generate_instance(ProblemKind::TSP, 30, 0);
    CHECK_THROWS_AS(exact_optimal(big), SizeCapError);
}

TEST_CASE("exact cvrp matches an independent enumeration") {
    for (std::uint64_t seed : {4ULL, 5ULL, 6ULL}) {
        const auto inst = generate_instance(ProblemKind::CVRP, 5, seed);
        const auto sol = exact_optimal(inst);
        CHECK(sol.length == doctest::Approx(cvrp_brute_force(inst)).epsilon(1e-12));
        CHECK(validate_tour(inst, sol.tour).feasible);
        CHECK(tour_length(inst, sol.tour) == doctest::Approx(sol.length).epsilon(1e-9));
    }
    const auto big = generate_instance(ProblemKind::CVRP, 9, 0);
    CHECK_THROWS_AS(exact_optimal(big), SizeCapError);
}

TEST_CASE("heuristic is feasible, deterministic, and bounded by the optimum") {
    CHECK(heuristic_baseline(corners()).length == doctest::Approx(4.0));
    for (std::uint64_t seed : {10ULL, 11ULL}) {
        const auto inst = generate_instance(ProblemKind::TSP, 10, seed);
        const auto h1 = heuristic_baseline(inst);
        const auto h2 = heuristic_baseline(inst);
        CHECK(h1.tour.nodes == h2.tour.nodes);
        CHECK(validate_tour(inst, h1.tour).feasible);
        CHECK(h1.length >= exact_optimal(inst).length - 1e-12);
    }
    for (std::uint64_t seed : {12ULL, 13ULL}) {
        const auto inst = generate_instance(ProblemKind::CVRP, 7, seed);
        const auto h = heuristic_baseline(inst);
        CHECK(validate_tour(inst, h.tour).feasible);
        CHECK(h.length >= exact_optimal(inst).length - 1e-12);
        CHECK(h.length == doctest::Approx(tour_length(inst, h.tour)));
    }
    const auto big = generate_instance(ProblemKind::CVRP, 60, 1);
    const auto h = heuristic_baseline(big);
    CHECK(validate_tour(big, h.tour).feasible);
}

TEST_CASE("instance files round-trip") {
    std::vector<ProblemInstance> insts = {generate_instance(ProblemKind::TSP, 6, 1),
                                          generate_instance(ProblemKind::CVRP, 5, 2)};
    std::stringstream ss;
    write_instances(ss, insts);
    const auto back = read_instances(ss);
    REQUIRE(back.size() == 2);
    CHECK(back[0].kind == ProblemKind::TSP);
    CHECK(back[0].coords == insts[0].coords);
    CHECK(back[1].depot == insts[1].depot);
    CHECK(back[1].demand == insts[1].demand);
    CHECK(back[1].capacity == insts[1].capacity);
}

TEST_CASE("solution files round-trip") {
    const auto inst = generate_instance(ProblemKind::TSP, 6, 3);
    const auto sol = exact_optimal(inst);
    std::stringstream ss;
    write_solutions(ss, {{inst, sol.tour, sol.length}});
    const auto back = read_solutions(ss);
    REQUIRE(back.size() == 1);
    CHECK(back[0].tour.nodes == sol.tour.nodes);
    CHECK(back[0].length == doctest::Approx(sol.length));
}

TEST_CASE("malformed files raise typed errors") {
    {
        std::stringstream ss("this is not json\n");
        CHECK_THROWS_AS(read_instances(ss), FormatError);
    }
    {
        std::stringstream ss(R"({"kind":"tsp"})"
                             "\n");
        CHECK_THROWS_AS(read_instances(ss), SchemaError);
    }
    {
        std::stringstream ss(R"({"kind":"cvrp","coords":[[0.1,0.2]],"depot":[0,0],"demand":[0.5]})"
                             "\n");
        CHECK_THROWS_AS(read_instances(ss), SchemaError);  // no capacity
    }
    {
        std::stringstream ss(R"({"kind":"spp","coords":[]})"
                             "\n");
        CHECK_THROWS_AS(read_instances(ss), ConfigError);
    }
}
