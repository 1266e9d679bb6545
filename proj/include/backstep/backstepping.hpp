#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "backstep/core.hpp"
#include "backstep/goursat.hpp"

namespace backstep {

/// Boundary feedback gains: the top row of the direct kernels sampled on
/// the simulation grid, plus the diagonal state scalings used when the
/// design is applied to a quasilinear plant (identically 1 otherwise).
struct ControllerGains {
    std::vector<double> kvu;  // third kernel at x = 1
    std::vector<double> kvv;  // fourth kernel at x = 1
    std::vector<double> phi1_scale;
    std::vector<double> phi2_scale;
    double phi2_at_1 = 1.0;

    int m() const { return static_cast<int>(kvu.size()); }
};

/// Auxiliary controller states with exact exponential dynamics
/// a' = -d1 a, b' = -d2 b.
struct DynamicExtension {
    double a = 0.0;
    double b = 0.0;
    double d1 = 1.0;
    double d2 = 2.0;
};

/// Threshold below which the q != 0 kernel assembly refuses to divide by q.
inline constexpr double kQMin = 1e-6;

/// Kernel problem whose solution defines the state-to-target transform.
/// `deriv_step` is the central-difference step for the speed derivatives
/// when the system carries no analytic ones.
GoursatProblem assemble_direct_kernel_problem(const LinearSystemSpec& sys,
                                              double deriv_step = 1e-3);

/// Kernel problem for the inverse (target-to-state) transform.
GoursatProblem assemble_inverse_kernel_problem(const LinearSystemSpec& sys,
                                               double deriv_step = 1e-3);

/// Direct kernel problem for |q| < kQMin: the xi=0 row of the first kernel
/// is freely assigned (h_free, default 0) and the fourth reduces to a pure
/// reflection of the third.
GoursatProblem assemble_q0_kernel_problem(const LinearSystemSpec& sys,
                                          const ScalarFn& h_free = nullptr,
                                          double deriv_step = 1e-3);

/// Forcing g(x) of the modified target system in the q=0 branch, computed
/// from the solved kernels: g = q eps1(0) h_free - eps2(0) F2(x, 0).
ScalarFn q0_target_forcing(const LinearSystemSpec& sys, const ScalarFn& h_free,
                           const KernelSet& solved);

/// Volterra transform gamma = w - int_0^x K(x,xi) w(xi) dxi (trapezoid).
StateField direct_transform(const KernelSet& k, const StateField& w);
/// Inverse Volterra transform w = gamma + int_0^x L(x,xi) gamma(xi) dxi.
StateField inverse_transform(const KernelSet& l, const StateField& g);

/// Volterra transform with the kernel pre-sampled on a fixed m-point grid;
/// use for repeated application along a trace. sign -1 gives the direct
/// transform, +1 the inverse.
class CachedVolterra {
public:
    CachedVolterra(const KernelSet& k, int m, double sign);
    StateField apply(const StateField& s) const;

private:
    int m_;
    double sign_;
    std::vector<double> k11_, k12_, k21_, k22_;  // lower-triangular, row-major
};

/// Samples the gain rows at x=1 on an m-point simulation grid. phi1/phi2
/// default to 1 (plain linear design).
ControllerGains extract_gains(const KernelSet& k, int m, const ScalarFn& phi1 = nullptr,
                              const ScalarFn& phi2 = nullptr);

/// Boundary value: (1/phi2(1)) * int (kvu z1 phi1 + kvv z2 phi2) + a + b.
double control_value(const ControllerGains& gains, const StateField& z,
                     const DynamicExtension& ext);
double control_value(const ControllerGains& gains, const StateField& z);

/// Linear design data derived from a quasilinear plant.
struct LinearDesign {
    LinearSystemSpec sys;
    ScalarFn phi1;
    ScalarFn phi2;
};

/// Builds the linear design system for a quasilinear plant: speeds from
/// the frozen Lambda, couplings from the scaled linearized drift, q from
/// G0'(0). Throws HyperbolicityViolation when the frozen speeds have the
/// wrong signs.
LinearDesign build_linear_spec(const QuasilinearSystemSpec& q);

/// Drift of the scaled plant in the design variable w; its negated
/// Jacobian at w=0 is the coupling matrix of the linear design.
std::array<double, 2> scaled_drift(const QuasilinearSystemSpec& q, const LinearDesign& design,
                                   const std::array<double, 2>& w, double x);

/// Lambda(w-coordinates) minus its frozen value; vanishes at w=0.
Mat2 lambda_nl(const QuasilinearSystemSpec& q, const LinearDesign& design,
               const std::array<double, 2>& w, double x);

/// Initial controller states chosen so the actuated-boundary compatibility
/// conditions hold for arbitrary initial data.
DynamicExtension init_extension(const QuasilinearSystemSpec& q, const ControllerGains& gains,
                                const StateField& z0, double d1, double d2);

/// P1 = z2(1) - int k^T z; P2 is its analogue for the time-differentiated
/// boundary condition. Exposed for tests.
std::pair<double, double> compatibility_functionals(const QuasilinearSystemSpec& q,
                                                    const ControllerGains& gains,
                                                    const StateField& z0);

/// Residuals of the two artificial compatibility conditions for given
/// controller initial states.
std::pair<double, double> extension_compatibility_residuals(const QuasilinearSystemSpec& q,
                                                            const ControllerGains& gains,
                                                            const StateField& z0,
                                                            const DynamicExtension& ext);

/// Residuals of the natural (left-boundary) compatibility conditions.
std::pair<double, double> check_natural_compatibility(const QuasilinearSystemSpec& q,
                                                      const StateField& z0);

}  // namespace backstep
