#pragma once

#include <optional>
#include <string>

#include "backstep/config.hpp"

namespace backstep {

struct RunOptions {
    std::optional<std::string> out_dir;  // overrides [output] out_dir
    std::optional<int> grid_n;           // overrides [kernel] n
    bool quiet = false;
    bool kernels_only = false;  // stop after kernels + gains
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

/// Runs the configured scenario end to end: kernels, gains, simulation and
/// diagnostics, with CSV outputs under the output directory. Prints a
/// summary on success and a machine-readable
/// `ERROR stage=... code=... msg="..."` line on failure.
int run_scenario(const ScenarioConfig& cfg, const RunOptions& opts = {});

/// Convenience wrapper: load + run, mapping load failures to kExitConfig.
int run_scenario_file(const std::string& path, const RunOptions& opts = {});

}  // namespace backstep
