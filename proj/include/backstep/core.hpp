#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

namespace backstep {

using ScalarFn = std::function<double(double)>;

/// 2x2 matrix in row-major order.
struct Mat2 {
    double a11 = 0.0, a12 = 0.0, a21 = 0.0, a22 = 0.0;

    static Mat2 diag(double d1, double d2) { return {d1, 0.0, 0.0, d2}; }
    Mat2 operator+(const Mat2& o) const { return {a11 + o.a11, a12 + o.a12, a21 + o.a21, a22 + o.a22}; }
    Mat2 operator-(const Mat2& o) const { return {a11 - o.a11, a12 - o.a12, a21 - o.a21, a22 - o.a22}; }
    Mat2 operator*(const Mat2& o) const {
        return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
                a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
    }
    std::array<double, 2> operator*(const std::array<double, 2>& v) const {
        return {a11 * v[0] + a12 * v[1], a21 * v[0] + a22 * v[1]};
    }
    double max_abs() const;
};

using MatrixFn = std::function<Mat2(const std::array<double, 2>&, double)>;
using VectorFn = std::function<std::array<double, 2>(const std::array<double, 2>&, double)>;

/// Coefficients of the linear design system: transport speeds eps1, eps2 > 0,
/// antidiagonal couplings c1, c2, and the left reflection coefficient q.
struct LinearSystemSpec {
    ScalarFn eps1;
    ScalarFn eps2;
    ScalarFn c1;
    ScalarFn c2;
    double q = 0.0;

    /// Optional analytic speed derivatives; finite differences are used
    /// by the kernel assembly when absent.
    ScalarFn eps1_prime;
    ScalarFn eps2_prime;

    /// Checks positivity and finiteness of the coefficients at `samples`
    /// uniformly spaced points. Throws NonPositiveSpeed / NonFiniteCoefficient.
    void validate(int samples = 257) const;
};

/// Quasilinear plant: z_t + Lambda(z,x) z_x + f(z,x) = 0 with left boundary
/// z1(0) = G0(z2(0)). Linearization data at z=0 enters the controller design.
struct QuasilinearSystemSpec {
    MatrixFn Lambda;
    VectorFn f;
    ScalarFn G0;

    /// Entries of df/dz at z=0 as functions of x.
    ScalarFn f11, f12, f21, f22;
    /// dG0/dv at v=0.
    double q0_deriv = 0.0;

    /// Fills f11..f22 and q0_deriv by central differences (step 1e-6)
    /// where they were not supplied analytically.
    void fill_linearization();

    /// Checks hyperbolicity of Lambda(0,x), f(0,x)=0 and G0(0)=0 at grid
    /// samples. Throws HyperbolicityViolation / NonFiniteCoefficient.
    void validate(int samples = 257) const;
};

/// Uniform grid on the triangle { (x,xi) : 0 <= xi <= x <= 1 }.
class TriangularGrid {
public:
    explicit TriangularGrid(int n);

    int n() const { return n_; }
    double h() const { return h_; }
    std::size_t node_count() const { return static_cast<std::size_t>(n_) * (n_ + 1) / 2; }

    /// Row-major linear index of node (i, j), j <= i.
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(i) * (i + 1) / 2 + j;
    }
    double coord(int i) const { return static_cast<double>(i) * h_; }

private:
    int n_;
    double h_;
};

/// Scalar function sampled on a TriangularGrid with bilinear interpolation;
/// cells touching the diagonal are interpolated barycentrically so the
/// diagonal edge interpolates between its two end nodes.
class GridFunction2T {
public:
    explicit GridFunction2T(const TriangularGrid& grid, double fill = 0.0);

    const TriangularGrid& grid() const { return grid_; }
    double& at(int i, int j) { return values_[grid_.index(i, j)]; }
    double at(int i, int j) const { return values_[grid_.index(i, j)]; }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    double operator()(double x, double xi) const;

    /// Interpolation stencil: up to four (index, weight) pairs.
    struct Stencil {
        std::array<std::size_t, 4> idx;
        std::array<double, 4> w;
        int count;
    };
    Stencil stencil(double x, double xi) const { return stencil_for(grid_, x, xi); }
    static Stencil stencil_for(const TriangularGrid& grid, double x, double xi);
    double apply(const Stencil& s) const {
        double r = 0.0;
        for (int k = 0; k < s.count; ++k) r += s.w[k] * values_[s.idx[k]];
        return r;
    }

private:
    TriangularGrid grid_;
    std::vector<double> values_;
};

/// Two-component state sampled on a uniform grid over [0, 1].
struct StateField {
    std::vector<double> c1;
    std::vector<double> c2;

    StateField() = default;
    explicit StateField(int m) : c1(m, 0.0), c2(m, 0.0) {}

    int m() const { return static_cast<int>(c1.size()); }
    double h() const { return 1.0 / (m() - 1); }
    double x(int k) const { return static_cast<double>(k) * h(); }

    static StateField sample(int m, const ScalarFn& first, const ScalarFn& second);
};

struct NormRow {
    double l2 = 0.0;
    double h1 = 0.0;
    double h2 = 0.0;
    double sup = 0.0;
};

/// Time series of state snapshots, controller states and norms.
struct SimulationTrace {
    std::vector<double> times;
    std::vector<StateField> snapshots;
    std::vector<double> a;
    std::vector<double> b;
    std::vector<double> control;
    std::vector<NormRow> norms;

    std::size_t size() const { return times.size(); }
};

/// Composite-trapezoid L2 norm sqrt(int (c1^2 + c2^2)).
double norm_L2(const StateField& s);
/// Sum-of-norms H1 = L2(s) + L2(s_x); derivatives by central differences
/// with second-order one-sided ends.
double norm_H1(const StateField& s);
/// H2 = H1 + L2(s_xx). Throws GridTooCoarse for m < 4.
double norm_H2(const StateField& s);
double norm_sup(const StateField& s);
NormRow all_norms(const StateField& s);

/// First derivative of a sampled function (central interior, second-order
/// one-sided at the ends). Needs m >= 3.
std::vector<double> derivative(const std::vector<double>& v, double h);
/// Second derivative; needs m >= 4.
std::vector<double> second_derivative(const std::vector<double>& v, double h);

/// Composite trapezoid of nodal values with spacing h.
double trapezoid(const std::vector<double>& v, double h);

}  // namespace backstep
