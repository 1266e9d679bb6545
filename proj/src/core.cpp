#include "backstep/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "backstep/errors.hpp"

namespace backstep {

double Mat2::max_abs() const {
    return std::max({std::abs(a11), std::abs(a12), std::abs(a21), std::abs(a22)});
}

void LinearSystemSpec::validate(int samples) const {
    if (!eps1 || !eps2) throw NonFiniteCoefficient("speeds eps1/eps2 not set");
    for (int k = 0; k < samples; ++k) {
        const double x = static_cast<double>(k) / (samples - 1);
        const double e1 = eps1(x);
        const double e2 = eps2(x);
        if (!(e1 > 0.0)) throw NonPositiveSpeed(x, e1);
        if (!(e2 > 0.0)) throw NonPositiveSpeed(x, e2);
        const double v1 = c1 ? c1(x) : 0.0;
        const double v2 = c2 ? c2(x) : 0.0;
        if (!std::isfinite(e1) || !std::isfinite(e2) || !std::isfinite(v1) || !std::isfinite(v2)) {
            throw NonFiniteCoefficient("coefficient not finite at x=" + std::to_string(x));
        }
    }
    if (!std::isfinite(q)) throw NonFiniteCoefficient("q not finite");
}

void QuasilinearSystemSpec::fill_linearization() {
    const double step = 1e-6;
    auto entry = [this, step](int row, int col) {
        return [this, step, row, col](double x) {
            std::array<double, 2> zp{0.0, 0.0}, zm{0.0, 0.0};
            zp[col] = step;
            zm[col] = -step;
            const auto fp = f(zp, x);
            const auto fm = f(zm, x);
            return (fp[row] - fm[row]) / (2.0 * step);
        };
    };
    if (!f11) f11 = entry(0, 0);
    if (!f12) f12 = entry(0, 1);
    if (!f21) f21 = entry(1, 0);
    if (!f22) f22 = entry(1, 1);
    if (q0_deriv == 0.0 && G0) {
        q0_deriv = (G0(step) - G0(-step)) / (2.0 * step);
        if (std::abs(q0_deriv) < 1e-12) q0_deriv = 0.0;
    }
}

void QuasilinearSystemSpec::validate(int samples) const {
    if (!Lambda || !f || !G0) throw NonFiniteCoefficient("Lambda/f/G0 not set");
    const std::array<double, 2> zero{0.0, 0.0};
    for (int k = 0; k < samples; ++k) {
        const double x = static_cast<double>(k) / (samples - 1);
        const Mat2 L = Lambda(zero, x);
        if (!(L.a11 > 0.0) || !(L.a22 < 0.0)) {
            throw HyperbolicityViolation("Lambda(0,x) eigenvalue signs wrong at x=" + std::to_string(x));
        }
        if (std::abs(L.a12) > 1e-12 || std::abs(L.a21) > 1e-12) {
            throw HyperbolicityViolation("Lambda(0,x) not diagonal at x=" + std::to_string(x));
        }
        const auto f0 = f(zero, x);
        if (std::abs(f0[0]) > 1e-12 || std::abs(f0[1]) > 1e-12) {
            throw NonFiniteCoefficient("f(0,x) != 0 at x=" + std::to_string(x));
        }
        if (!std::isfinite(L.max_abs())) {
            throw NonFiniteCoefficient("Lambda not finite at x=" + std::to_string(x));
        }
    }
    if (std::abs(G0(0.0)) > 1e-12) throw NonFiniteCoefficient("G0(0) != 0");
}

TriangularGrid::TriangularGrid(int n) : n_(n) {
    if (n < 2) throw GridTooCoarse("triangular grid needs n >= 2");
    h_ = 1.0 / static_cast<double>(n - 1);
}

GridFunction2T::GridFunction2T(const TriangularGrid& grid, double fill)
    : grid_(grid), values_(grid.node_count(), fill) {}

GridFunction2T::Stencil GridFunction2T::stencil_for(const TriangularGrid& grid, double x,
                                                    double xi) {
    const int n = grid.n();
    const double h = grid.h();
    x = std::clamp(x, 0.0, 1.0);
    xi = std::clamp(xi, 0.0, x);

    int i = std::min(static_cast<int>(x / h), n - 2);
    int j = std::min(static_cast<int>(xi / h), n - 2);
    if (j > i) j = i;
    // local coordinates in the cell
    double u = (x - grid.coord(i)) / h;
    double v = (xi - grid.coord(j)) / h;

    Stencil s{};
    if (j < i) {
        // interior square cell
        s.count = 4;
        s.idx = {grid.index(i, j), grid.index(i + 1, j), grid.index(i, j + 1),
                 grid.index(i + 1, j + 1)};
        s.w = {(1.0 - u) * (1.0 - v), u * (1.0 - v), (1.0 - u) * v, u * v};
    } else {
        // diagonal cell: triangle (i,i), (i+1,i), (i+1,i+1)
        if (v > u) v = u;
        s.count = 3;
        s.idx = {grid.index(i, i), grid.index(i + 1, i), grid.index(i + 1, i + 1), 0};
        s.w = {1.0 - u, u - v, v, 0.0};
    }
    return s;
}

double GridFunction2T::operator()(double x, double xi) const {
    return apply(stencil(x, xi));
}

StateField StateField::sample(int m, const ScalarFn& first, const ScalarFn& second) {
    StateField s(m);
    for (int k = 0; k < m; ++k) {
        const double xk = s.x(k);
        s.c1[k] = first ? first(xk) : 0.0;
        s.c2[k] = second ? second(xk) : 0.0;
    }
    return s;
}

double trapezoid(const std::vector<double>& v, double h) {
    if (v.size() < 2) return 0.0;
    double sum = 0.5 * (v.front() + v.back());
    for (std::size_t k = 1; k + 1 < v.size(); ++k) sum += v[k];
    return sum * h;
}

std::vector<double> derivative(const std::vector<double>& v, double h) {
    const std::size_t m = v.size();
    if (m < 3) throw GridTooCoarse("derivative needs m >= 3");
    std::vector<double> d(m);
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    for (std::size_t k = 1; k + 1 < m; ++k) d[k] = (v[k + 1] - v[k - 1]) / (2.0 * h);
    d[m - 1] = (3.0 * v[m - 1] - 4.0 * v[m - 2] + v[m - 3]) / (2.0 * h);
    return d;
}

std::vector<double> second_derivative(const std::vector<double>& v, double h) {
    const std::size_t m = v.size();
    if (m < 4) throw GridTooCoarse("second derivative needs m >= 4");
    std::vector<double> d(m);
    const double h2 = h * h;
    d[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h2;
    for (std::size_t k = 1; k + 1 < m; ++k) d[k] = (v[k + 1] - 2.0 * v[k] + v[k - 1]) / h2;
    d[m - 1] = (2.0 * v[m - 1] - 5.0 * v[m - 2] + 4.0 * v[m - 3] - v[m - 4]) / h2;
    return d;
}

double norm_L2(const StateField& s) {
    const int m = s.m();
    if (m < 2) throw GridTooCoarse("norm_L2 needs m >= 2");
    std::vector<double> sq(m);
    for (int k = 0; k < m; ++k) sq[k] = s.c1[k] * s.c1[k] + s.c2[k] * s.c2[k];
    return std::sqrt(trapezoid(sq, s.h()));
}

namespace {
double l2_of(const std::vector<double>& a, const std::vector<double>& b, double h) {
    std::vector<double> sq(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) sq[k] = a[k] * a[k] + b[k] * b[k];
    return std::sqrt(trapezoid(sq, h));
}
}  // namespace

double norm_H1(const StateField& s) {
    const auto d1 = derivative(s.c1, s.h());
    const auto d2 = derivative(s.c2, s.h());
    return norm_L2(s) + l2_of(d1, d2, s.h());
}

double norm_H2(const StateField& s) {
    const auto dd1 = second_derivative(s.c1, s.h());
    const auto dd2 = second_derivative(s.c2, s.h());
    return norm_H1(s) + l2_of(dd1, dd2, s.h());
}

double norm_sup(const StateField& s) {
    double m = 0.0;
    for (int k = 0; k < s.m(); ++k) {
        m = std::max(m, std::abs(s.c1[k]) + std::abs(s.c2[k]));
    }
    return m;
}

NormRow all_norms(const StateField& s) {
    NormRow r;
    r.l2 = norm_L2(s);
    r.h1 = norm_H1(s);
    r.h2 = norm_H2(s);
    r.sup = norm_sup(s);
    return r;
}

}  // namespace backstep
