#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "backstep/expression.hpp"

namespace backstep {

enum class ScenarioKind { Linear, Quasilinear, TargetExact };

/// Parsed scenario description. Coefficient functions are expressions in x
/// (and z1, z2 for the quasilinear matrix entries); g0 is an expression in
/// z2, the incoming boundary trace.
struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::Linear;

    // [system] - linear / target-exact kinds
    Expression eps1, eps2, c1, c2;
    double q = 0.0;
    // [system] - quasilinear kind
    Expression lambda11, lambda12, lambda21, lambda22;
    Expression f1, f2, g0;

    // [kernel]
    int grid_n = 101;
    double picard_tol = 1e-10;
    int picard_max_iter = 200;

    // [scheme]
    int m = 400;
    double cfl = 0.9;
    double t_end = 0.0;  // 0 = pick 1.25 * finite-time horizon
    int snapshot_stride = 1;

    // [control]
    double d1 = 1.0;
    double d2 = 2.0;
    bool closed_loop = true;

    // [initial]
    Expression init1, init2;

    // [output]
    std::string out_dir = ".";
};

/// Parses the flat key-value format with [section] headers and '#' comments.
/// Throws ConfigError / MissingField / SyntaxError.
ScenarioConfig parse_config_text(const std::string& text);
ScenarioConfig load_config(const std::string& path);

/// Non-throwing validation: returns human-readable diagnostics, one per
/// problem; empty means the config is runnable.
std::vector<std::string> validate_config_text(const std::string& text);
std::vector<std::string> validate_config_file(const std::string& path);

}  // namespace backstep
