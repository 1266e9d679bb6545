#pragma once

#include <optional>
#include <string>
#include <vector>

#include "backstep/backstepping.hpp"
#include "backstep/core.hpp"
#include "backstep/goursat.hpp"

namespace backstep {

struct SchemeConfig {
    int m = 400;
    double cfl = 0.9;
    double t_end = 1.0;
    int snapshot_stride = 1;

    void validate() const;
};

/// Exact solution of the cascade target system: rightward transport with
/// reflection q at x=0 for the first component, leftward transport with
/// zero inflow for the second.
class TargetExact {
public:
    TargetExact(const LinearSystemSpec& sys, ScalarFn alpha0, ScalarFn beta0,
                int quad_points = 1025);

    std::array<double, 2> operator()(double x, double t) const;
    double t_final() const { return maps_.t_final(); }
    const CharacteristicMaps& maps() const { return maps_; }

private:
    double beta_at_left(double t) const;

    CharacteristicMaps maps_;
    ScalarFn alpha0_;
    ScalarFn beta0_;
    double q_;
};

/// Time horizon of the target system, phi1(1) + phi2(1).
double finite_time_horizon(const LinearSystemSpec& sys, int quad_points = 1025);

/// First-order upwind march of the linear design system under boundary
/// feedback (open loop when gains are absent). Throws UnstableStep when the
/// L2 norm exceeds 1e6 times its initial value.
SimulationTrace simulate_linear(const LinearSystemSpec& sys,
                                const std::optional<ControllerGains>& gains,
                                const StateField& w0, const SchemeConfig& cfg);

/// Upwind march of the quasilinear plant with the designed feedback and the
/// exactly-integrated controller extension. Throws HyperbolicitySignChange
/// when the state leaves the validity region of the frozen-sign scheme.
SimulationTrace simulate_quasilinear(const QuasilinearSystemSpec& q,
                                     const ControllerGains& gains,
                                     const DynamicExtension& ext0, const StateField& z0,
                                     const SchemeConfig& cfg);

/// Per-time norm table of a trace, one formatted line per entry.
std::string step_report(const SimulationTrace& trace);

}  // namespace backstep
