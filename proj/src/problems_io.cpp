#include "routerl/problems/io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace routerl::problems {

namespace {

using nlohmann::json;

json instance_to_json(const ProblemInstance& inst) {
    json j;
    j["kind"] = to_string(inst.kind);
    j["seed"] = inst.seed;
    json coords = json::array();
    for (const auto& c : inst.coords) coords.push_back({c[0], c[1]});
    j["coords"] = std::move(coords);
    if (inst.kind == ProblemKind::CVRP) {
        j["depot"] = {inst.depot[0], inst.depot[1]};
        j["demand"] = inst.demand;
        j["capacity"] = inst.capacity;
    }
    return j;
}

const json& require(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw SchemaError(std::string("missing key: ") + key);
    return *it;
}

ProblemInstance instance_from_json(const json& j) {
    ProblemInstance inst;
    inst.kind = problem_kind_from_string(require(j, "kind").get<std::string>());
    if (j.contains("seed")) inst.seed = j["seed"].get<std::uint64_t>();
    for (const auto& c : require(j, "coords")) {
        if (!c.is_array() || c.size() != 2) throw SchemaError("coords entries must be [x, y]");
        inst.coords.push_back({c[0].get<double>(), c[1].get<double>()});
    }
    if (inst.kind == ProblemKind::CVRP) {
        const auto& d = require(j, "depot");
        if (!d.is_array() || d.size() != 2) throw SchemaError("depot must be [x, y]");
        inst.depot = {d[0].get<double>(), d[1].get<double>()};
        inst.demand = require(j, "demand").get<std::vector<double>>();
        inst.capacity = require(j, "capacity").get<double>();
        if (inst.demand.size() != inst.coords.size())
            throw SchemaError("demand size does not match coords");
    }
    return inst;
}

json parse_line(const std::string& line, std::size_t lineno) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw FormatError("line " + std::to_string(lineno) + ": not a JSON object");
    return j;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw FormatError("cannot open " + path);
    return f;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw FormatError("cannot open " + path + " for writing");
    return f;
}

}  // namespace

void write_instances(std::ostream& os, const std::vector<ProblemInstance>& instances) {
    for (const auto& inst : instances) os << instance_to_json(inst).dump() << "\n";
}

void write_instances_file(const std::string& path, const std::vector<ProblemInstance>& instances) {
    auto f = open_out(path);
    write_instances(f, instances);
}

std::vector<ProblemInstance> read_instances(std::istream& is) {
    std::vector<ProblemInstance> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        out.push_back(instance_from_json(parse_line(line, lineno)));
    }
    return out;
}

std::vector<ProblemInstance> read_instances_file(const std::string& path) {
    auto f = open_in(path);
    return read_instances(f);
}

void write_solutions(std::ostream& os, const std::vector<LabeledSolution>& solutions) {
    for (const auto& sol : solutions) {
        json j = instance_to_json(sol.instance);
        j["tour"] = sol.tour.nodes;
        j["length"] = sol.length;
        os << j.dump() << "\n";
    }
}

void write_solutions_file(const std::string& path, const std::vector<LabeledSolution>& solutions) {
    auto f = open_out(path);
    write_solutions(f, solutions);
}

std::vector<LabeledSolution> read_solutions(std::istream& is) {
    std::vector<LabeledSolution> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = parse_line(line, lineno);
        LabeledSolution sol;
        sol.instance = instance_from_json(j);
        sol.tour.nodes = require(j, "tour").get<std::vector<int>>();
        sol.length = require(j, "length").get<double>();
        out.push_back(std::move(sol));
    }
    return out;
}

std::vector<LabeledSolution> read_solutions_file(const std::string& path) {
    auto f = open_in(path);
    return read_solutions(f);
}

}  // namespace routerl::problems
