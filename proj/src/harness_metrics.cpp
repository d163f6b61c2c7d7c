#include "routerl/harness/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "routerl/error.hpp"

namespace routerl::harness {

namespace {

std::string fmt(double v) {
    if (std::isnan(v)) return "";  // empty cell, not "nan"
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_cell(const std::string& cell) {
    if (cell.empty()) return std::numeric_limits<double>::quiet_NaN();
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size()) throw FormatError("bad metrics cell: " + cell);
    return v;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

}  // namespace

std::string csv_row(const TrainRow& r) {
    std::ostringstream out;
    out << r.iteration << ',' << r.env_steps << ',' << fmt(r.mean_return) << ','
        << fmt(r.policy_loss) << ',' << fmt(r.value_loss) << ',' << fmt(r.entropy) << ','
        << fmt(r.clip_fraction) << ',' << fmt(r.grad_norm) << ',' << fmt(r.eval_length) << ','
        << fmt(r.best_eval_length) << ',' << fmt(r.wall_time);
    return out.str();
}

TrainRow parse_csv_row(const std::string& line) {
    const auto cells = split_csv(line);
    if (cells.size() != 11) throw FormatError("metrics row needs 11 cells: " + line);
    TrainRow r;
    r.iteration = static_cast<int>(parse_cell(cells[0]));
    r.env_steps = static_cast<std::int64_t>(parse_cell(cells[1]));
    r.mean_return = parse_cell(cells[2]);
    r.policy_loss = parse_cell(cells[3]);
    r.value_loss = parse_cell(cells[4]);
    r.entropy = parse_cell(cells[5]);
    r.clip_fraction = parse_cell(cells[6]);
    r.grad_norm = parse_cell(cells[7]);
    r.eval_length = parse_cell(cells[8]);
    r.best_eval_length = parse_cell(cells[9]);
    r.wall_time = parse_cell(cells[10]);
    return r;
}

void write_metrics_csv(const std::string& path, const std::vector<TrainRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError("cannot write metrics: " + path);
    out << kMetricsHeader << '\n';
    for (const TrainRow& r : rows) out << csv_row(r) << '\n';
    if (!out) throw FormatError("short write on metrics: " + path);
}

std::vector<TrainRow> read_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot read metrics: " + path);
    std::string line;
    if (!std::getline(in, line) || line != kMetricsHeader)
        throw FormatError("bad metrics header in " + path);
    std::vector<TrainRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        rows.push_back(parse_csv_row(line));
    }
    return rows;
}

std::int64_t steps_to_threshold(const std::vector<TrainRow>& rows, double threshold) {
    for (const TrainRow& r : rows)
        if (!std::isnan(r.eval_length) && r.eval_length <= threshold) return r.env_steps;
    return -1;
}

}  // namespace routerl::harness
