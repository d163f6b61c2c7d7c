// Instance and solution files: one JSON object per line.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "routerl/problems/problem.hpp"

namespace routerl::problems {

struct LabeledSolution {
    ProblemInstance instance;
    Tour tour;
    double length = 0.0;
};

void write_instances(std::ostream& os, const std::vector<ProblemInstance>& instances);
void write_instances_file(const std::string& path, const std::vector<ProblemInstance>& instances);
// Throws FormatError on unparsable lines, SchemaError on missing keys.
std::vector<ProblemInstance> read_instances(std::istream& is);
std::vector<ProblemInstance> read_instances_file(const std::string& path);

void write_solutions(std::ostream& os, const std::vector<LabeledSolution>& solutions);
void write_solutions_file(const std::string& path, const std::vector<LabeledSolution>& solutions);
std::vector<LabeledSolution> read_solutions(std::istream& is);
std::vector<LabeledSolution> read_solutions_file(const std::string& path);

}  // namespace routerl::problems
