#pragma once

#include <array>
#include <functional>
#include <vector>

#include "backstep/core.hpp"
#include "backstep/interp.hpp"

namespace backstep {

using SurfaceFn = std::function<double(double, double)>;

/// Generic 4x4 hyperbolic problem on the triangle T = {0 <= xi <= x <= 1}:
///
///   eps1(x) F1_x + eps1(xi) F1_xi = g1 + sum_i C[0][i] Fi
///   eps1(x) F2_x - eps2(xi) F2_xi = g2 + sum_i C[1][i] Fi
///   eps2(x) F3_x - eps1(xi) F3_xi = g3 + sum_i C[2][i] Fi
///   eps2(x) F4_x + eps2(xi) F4_xi = g4 + sum_i C[3][i] Fi
///
/// with data h2, h3 on the diagonal x = xi and coupled data on xi = 0:
///   F1(x,0) = h1(x) + qb1(x) F2(x,0) + qb2(x) F3(x,0)
///   F4(x,0) = h4(x) + qb3(x) F2(x,0) + qb4(x) F3(x,0)
///
/// Unset std::function entries are treated as identically zero, which the
/// solver exploits to skip dead couplings.
struct GoursatProblem {
    ScalarFn eps1;
    ScalarFn eps2;
    std::array<std::array<SurfaceFn, 4>, 4> C{};
    std::array<SurfaceFn, 4> g{};
    std::array<ScalarFn, 4> h{};
    std::array<ScalarFn, 4> qb{};
};

/// Characteristic geometry of a GoursatProblem: the monotone maps
/// phi1, phi2, phi3 = phi1 + phi2 with inverses, the per-equation
/// characteristic curves (x_i(s), xi_i(s)) and their exit parameters.
class CharacteristicMaps {
public:
    CharacteristicMaps(ScalarFn eps1, ScalarFn eps2, int quad_points);

    double phi1(double x) const { return fwd1_(x); }
    double phi2(double x) const { return fwd2_(x); }
    double phi3(double x) const { return fwd3_(x); }
    double phi1_inv(double y) const { return inv1_(y); }
    double phi2_inv(double y) const { return inv2_(y); }
    double phi3_inv(double y) const { return inv3_(y); }

    /// Total transit time phi1(1) + phi2(1).
    double t_final() const { return fwd1_.back() + fwd2_.back(); }

    /// Curve (x_eq(s), xi_eq(s)) for s in [0, s_final], anchored so that
    /// s = s_final lands on (x, xi) and s = 0 on the data boundary.
    struct Curve {
        const MonotoneCubic* inv_x;   // map for the x component
        const MonotoneCubic* inv_xi;  // map for the xi component
        double cx;                    // x(s)  = inv_x (cx + s)
        double cxi;                   // xi(s) = inv_xi(cxi + dir * s)
        double dir;                   // +1 for eqs 1,4; -1 for eqs 2,3
        double s_final;

        double x_at(double s, int& hint) const { return inv_x->eval(cx + s, hint); }
        double xi_at(double s, int& hint) const { return inv_xi->eval(cxi + dir * s, hint); }
    };

    /// eq in 0..3.
    Curve curve(int eq, double x, double xi) const;
    double s_final(int eq, double x, double xi) const { return curve(eq, x, xi).s_final; }
    double x_at(int eq, double x, double xi, double s) const;
    double xi_at(int eq, double x, double xi, double s) const;

    /// sup of 1/eps over the tabulation samples.
    double k_eps() const { return k_eps_; }

private:
    MonotoneCubic fwd1_, fwd2_, fwd3_;
    MonotoneCubic inv1_, inv2_, inv3_;
    double k_eps_ = 0.0;
};

CharacteristicMaps build_characteristics(const GoursatProblem& p, int quad_points);

/// Increment history and bound constants recorded by picard_solve.
struct PicardCertificate {
    std::vector<double> increments;  // increments[n] = sup |F^n - F^{n-1}|, n=0 is sup|F^0|
    double phi_bar = 0.0;
    double c_bar = 0.0;
    double k_eps = 0.0;
};

/// Fixed point of the characteristic integral equations.
struct KernelSet {
    std::array<GridFunction2T, 4> F;
    int iterations = 0;
    double final_increment = 0.0;
    double certified_bound = 0.0;  // phi_bar * exp(c_bar * k_eps)
    PicardCertificate certificate;

    const GridFunction2T& f1() const { return F[0]; }
    const GridFunction2T& f2() const { return F[1]; }
    const GridFunction2T& f3() const { return F[2]; }
    const GridFunction2T& f4() const { return F[3]; }
};

struct PicardOptions {
    double tol = 1e-10;
    int max_iter = 200;
    int sub_samples = 4;      // minimum quadrature panels per characteristic
    int quad_points = 1025;   // phi tabulation samples
    int threads = 0;          // 0 = hardware concurrency
};

/// Solves the integral equations by successive approximation on `grid`.
/// Throws NoConvergence if the sup increment never reaches tol.
KernelSet picard_solve(const GoursatProblem& p, const TriangularGrid& grid,
                       const PicardOptions& opts = {});

struct ResidualReport {
    double interior = 0.0;  // sup of the PDE residual at interior nodes
    double boundary = 0.0;  // sup violation of the boundary rows
};

/// Central-difference residual of the differential form plus boundary rows.
ResidualReport residual_check(const GoursatProblem& p, const KernelSet& k);

/// True iff every recorded increment obeys phi_bar * (c_bar*k_eps)^n / n!.
bool verify_picard_bound(const std::vector<double>& increments, double phi_bar,
                         double c_bar, double k_eps);

/// One extra sweep applied to a solved kernel set; returns the sup change.
double extra_sweep_change(const GoursatProblem& p, const TriangularGrid& grid,
                          const KernelSet& k, const PicardOptions& opts = {});

}  // namespace backstep
