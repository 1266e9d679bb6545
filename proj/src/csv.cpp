#include "backstep/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "backstep/errors.hpp"

namespace backstep {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file: " + path);
    return out;
}

}  // namespace

void write_kernel_csv(const std::string& path, const KernelSet& k) {
    auto out = open_out(path);
    out << "x,xi,F1,F2,F3,F4\n";
    const TriangularGrid& grid = k.f1().grid();
    for (int i = 0; i < grid.n(); ++i) {
        for (int j = 0; j <= i; ++j) {
            out << fmt(grid.coord(i)) << ',' << fmt(grid.coord(j)) << ',' << fmt(k.f1().at(i, j))
                << ',' << fmt(k.f2().at(i, j)) << ',' << fmt(k.f3().at(i, j)) << ','
                << fmt(k.f4().at(i, j)) << '\n';
        }
    }
}

void write_gains_csv(const std::string& path, const ControllerGains& g) {
    auto out = open_out(path);
    out << "xi,kvu,kvv,phi1,phi2\n";
    const double h = 1.0 / (g.m() - 1);
    for (int l = 0; l < g.m(); ++l) {
        out << fmt(l * h) << ',' << fmt(g.kvu[l]) << ',' << fmt(g.kvv[l]) << ','
            << fmt(g.phi1_scale[l]) << ',' << fmt(g.phi2_scale[l]) << '\n';
    }
}

void write_trace_csv(const std::string& path, const SimulationTrace& t) {
    auto out = open_out(path);
    out << "t,L2,H1,H2,sup,a,b,U\n";
    for (std::size_t k = 0; k < t.size(); ++k) {
        out << fmt(t.times[k]) << ',' << fmt(t.norms[k].l2) << ',' << fmt(t.norms[k].h1) << ','
            << fmt(t.norms[k].h2) << ',' << fmt(t.norms[k].sup) << ',' << fmt(t.a[k]) << ','
            << fmt(t.b[k]) << ',' << fmt(t.control[k]) << '\n';
    }
}

void write_state_csv(const std::string& path, const StateField& s) {
    auto out = open_out(path);
    out << "x,z1,z2\n";
    for (int k = 0; k < s.m(); ++k) {
        out << fmt(s.x(k)) << ',' << fmt(s.c1[k]) << ',' << fmt(s.c2[k]) << '\n';
    }
}

void write_diagnostics_csv(const std::string& path, const std::vector<double>& times,
                           const std::vector<double>& v1,
                           const std::vector<double>& rate_estimate) {
    auto out = open_out(path);
    out << "t,V1,rate_window_estimate\n";
    for (std::size_t k = 0; k < times.size(); ++k) {
        out << fmt(times[k]) << ',' << fmt(v1[k]) << ',' << fmt(rate_estimate[k]) << '\n';
    }
}

SimulationTrace read_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open trace file: " + path);
    SimulationTrace t;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty trace file: " + path);
    if (line.rfind("t,", 0) != 0) throw ConfigError("missing trace header in " + path);
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(row, cell, ',')) vals.push_back(std::stod(cell));
        if (vals.size() != 8) {
            throw ConfigError(path + ": line " + std::to_string(lineno) + ": expected 8 columns");
        }
        t.times.push_back(vals[0]);
        t.norms.push_back(NormRow{vals[1], vals[2], vals[3], vals[4]});
        t.a.push_back(vals[5]);
        t.b.push_back(vals[6]);
        t.control.push_back(vals[7]);
    }
    return t;
}

}  // namespace backstep
