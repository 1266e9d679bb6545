#pragma once

#include <string>
#include <vector>

#include "backstep/backstepping.hpp"
#include "backstep/core.hpp"
#include "backstep/goursat.hpp"

namespace backstep {

/// Kernel dump: header x,xi,F1,F2,F3,F4; one row per triangular node,
/// row-major in i then j; 17 significant digits.
void write_kernel_csv(const std::string& path, const KernelSet& k);

/// Gain export: xi,kvu,kvv,phi1,phi2 per simulation node.
void write_gains_csv(const std::string& path, const ControllerGains& g);

/// Trace export: t,L2,H1,H2,sup,a,b,U.
void write_trace_csv(const std::string& path, const SimulationTrace& t);

/// Snapshot export: x,z1,z2.
void write_state_csv(const std::string& path, const StateField& s);

/// Diagnostic report: t,V1,rate_window_estimate.
void write_diagnostics_csv(const std::string& path, const std::vector<double>& times,
                           const std::vector<double>& v1,
                           const std::vector<double>& rate_estimate);

/// Reads a trace written by write_trace_csv (snapshots are not recovered).
SimulationTrace read_trace_csv(const std::string& path);

}  // namespace backstep
