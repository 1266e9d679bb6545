#include "backstep/backstepping.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "backstep/errors.hpp"
#include "backstep/interp.hpp"

namespace backstep {

namespace {

ScalarFn derivative_of(const ScalarFn& f, const ScalarFn& analytic, double step) {
    if (analytic) return analytic;
    return [f, step](double x) {
        const double lo = std::max(0.0, x - step);
        const double hi = std::min(1.0, x + step);
        return (f(hi) - f(lo)) / (hi - lo);
    };
}

void common_diagonal_data(const LinearSystemSpec& sys, GoursatProblem& p) {
    const ScalarFn e1 = sys.eps1, e2 = sys.eps2, c1 = sys.c1, c2 = sys.c2;
    if (c1) p.h[1] = [c1, e1, e2](double x) { return c1(x) / (e1(x) + e2(x)); };
    if (c2) p.h[2] = [c2, e1, e2](double x) { return -c2(x) / (e1(x) + e2(x)); };
}

}  // namespace

GoursatProblem assemble_direct_kernel_problem(const LinearSystemSpec& sys, double deriv_step) {
    if (std::abs(sys.q) < kQMin) throw QNearZero(sys.q);
    sys.validate();

    GoursatProblem p;
    p.eps1 = sys.eps1;
    p.eps2 = sys.eps2;
    const ScalarFn e1p = derivative_of(sys.eps1, sys.eps1_prime, deriv_step);
    const ScalarFn e2p = derivative_of(sys.eps2, sys.eps2_prime, deriv_step);
    const ScalarFn c1 = sys.c1, c2 = sys.c2;

    p.C[0][0] = [e1p](double, double xi) { return -e1p(xi); };
    if (c2) p.C[0][1] = [c2](double, double xi) { return -c2(xi); };
    if (c1) p.C[1][0] = [c1](double, double xi) { return -c1(xi); };
    p.C[1][1] = [e2p](double, double xi) { return e2p(xi); };
    p.C[2][2] = [e1p](double, double xi) { return e1p(xi); };
    if (c2) p.C[2][3] = [c2](double, double xi) { return c2(xi); };
    if (c1) p.C[3][2] = [c1](double, double xi) { return c1(xi); };
    p.C[3][3] = [e2p](double, double xi) { return -e2p(xi); };

    common_diagonal_data(sys, p);
    const double q1 = sys.eps2(0.0) / (sys.q * sys.eps1(0.0));
    const double q4 = sys.q * sys.eps1(0.0) / sys.eps2(0.0);
    p.qb[0] = [q1](double) { return q1; };
    p.qb[3] = [q4](double) { return q4; };
    return p;
}

GoursatProblem assemble_inverse_kernel_problem(const LinearSystemSpec& sys, double deriv_step) {
    if (std::abs(sys.q) < kQMin) throw QNearZero(sys.q);
    sys.validate();

    GoursatProblem p;
    p.eps1 = sys.eps1;
    p.eps2 = sys.eps2;
    const ScalarFn e1p = derivative_of(sys.eps1, sys.eps1_prime, deriv_step);
    const ScalarFn e2p = derivative_of(sys.eps2, sys.eps2_prime, deriv_step);
    const ScalarFn c1 = sys.c1, c2 = sys.c2;

    // couplings depend on x here, not xi
    p.C[0][0] = [e1p](double, double xi) { return -e1p(xi); };
    if (c1) p.C[0][2] = [c1](double x, double) { return c1(x); };
    p.C[1][1] = [e2p](double, double xi) { return e2p(xi); };
    if (c1) p.C[1][3] = [c1](double x, double) { return c1(x); };
    if (c2) p.C[2][0] = [c2](double x, double) { return -c2(x); };
    p.C[2][2] = [e1p](double, double xi) { return e1p(xi); };
    if (c2) p.C[3][1] = [c2](double x, double) { return -c2(x); };
    p.C[3][3] = [e2p](double, double xi) { return -e2p(xi); };

    common_diagonal_data(sys, p);
    const double q1 = sys.eps2(0.0) / (sys.q * sys.eps1(0.0));
    const double q4 = sys.q * sys.eps1(0.0) / sys.eps2(0.0);
    p.qb[0] = [q1](double) { return q1; };
    p.qb[3] = [q4](double) { return q4; };
    return p;
}

GoursatProblem assemble_q0_kernel_problem(const LinearSystemSpec& sys, const ScalarFn& h_free,
                                          double deriv_step) {
    sys.validate();

    GoursatProblem p;
    p.eps1 = sys.eps1;
    p.eps2 = sys.eps2;
    const ScalarFn e1p = derivative_of(sys.eps1, sys.eps1_prime, deriv_step);
    const ScalarFn e2p = derivative_of(sys.eps2, sys.eps2_prime, deriv_step);
    const ScalarFn c1 = sys.c1, c2 = sys.c2;

    p.C[0][0] = [e1p](double, double xi) { return -e1p(xi); };
    if (c2) p.C[0][1] = [c2](double, double xi) { return -c2(xi); };
    if (c1) p.C[1][0] = [c1](double, double xi) { return -c1(xi); };
    p.C[1][1] = [e2p](double, double xi) { return e2p(xi); };
    p.C[2][2] = [e1p](double, double xi) { return e1p(xi); };
    if (c2) p.C[2][3] = [c2](double, double xi) { return c2(xi); };
    if (c1) p.C[3][2] = [c1](double, double xi) { return c1(xi); };
    p.C[3][3] = [e2p](double, double xi) { return -e2p(xi); };

    common_diagonal_data(sys, p);
    // first row freely assigned; fourth row keeps the reflection coupling,
    // which vanishes when q is exactly zero
    if (h_free) p.h[0] = h_free;
    if (sys.q != 0.0) {
        const double q4 = sys.q * sys.eps1(0.0) / sys.eps2(0.0);
        p.qb[3] = [q4](double) { return q4; };
    }
    return p;
}

ScalarFn q0_target_forcing(const LinearSystemSpec& sys, const ScalarFn& h_free,
                           const KernelSet& solved) {
    const double qe1 = sys.q * sys.eps1(0.0);
    const double e2 = sys.eps2(0.0);
    auto kuv = std::make_shared<GridFunction2T>(solved.f2());
    return [qe1, e2, kuv, h_free](double x) {
        const double hv = h_free ? h_free(x) : 0.0;
        return qe1 * hv - e2 * (*kuv)(x, 0.0);
    };
}

namespace {

StateField volterra(const std::array<const GridFunction2T*, 4>& ker, const StateField& in,
                    double sign) {
    const int m = in.m();
    const double h = in.h();
    StateField out(m);
    std::vector<double> row1(m), row2(m);
    for (int r = 0; r < m; ++r) {
        const double x = in.x(r);
        double i1 = 0.0, i2 = 0.0;
        if (r > 0) {
            for (int l = 0; l <= r; ++l) {
                const double xi = in.x(l);
                const double w = (l == 0 || l == r) ? 0.5 * h : h;
                const auto st = ker[0]->stencil(x, xi);
                const double k11 = ker[0]->apply(st);
                const double k12 = ker[1]->apply(st);
                const double k21 = ker[2]->apply(st);
                const double k22 = ker[3]->apply(st);
                i1 += w * (k11 * in.c1[l] + k12 * in.c2[l]);
                i2 += w * (k21 * in.c1[l] + k22 * in.c2[l]);
            }
        }
        out.c1[r] = in.c1[r] + sign * i1;
        out.c2[r] = in.c2[r] + sign * i2;
    }
    return out;
}

}  // namespace

StateField direct_transform(const KernelSet& k, const StateField& w) {
    return volterra({&k.f1(), &k.f2(), &k.f3(), &k.f4()}, w, -1.0);
}

StateField inverse_transform(const KernelSet& l, const StateField& g) {
    return volterra({&l.f1(), &l.f2(), &l.f3(), &l.f4()}, g, +1.0);
}

CachedVolterra::CachedVolterra(const KernelSet& k, int m, double sign) : m_(m), sign_(sign) {
    const std::size_t count = static_cast<std::size_t>(m) * (m + 1) / 2;
    k11_.resize(count);
    k12_.resize(count);
    k21_.resize(count);
    k22_.resize(count);
    const double h = 1.0 / (m - 1);
    std::size_t idx = 0;
    for (int r = 0; r < m; ++r) {
        for (int l = 0; l <= r; ++l, ++idx) {
            const auto st = k.f1().stencil(r * h, l * h);
            k11_[idx] = k.f1().apply(st);
            k12_[idx] = k.f2().apply(st);
            k21_[idx] = k.f3().apply(st);
            k22_[idx] = k.f4().apply(st);
        }
    }
}

StateField CachedVolterra::apply(const StateField& s) const {
    if (s.m() != m_) throw std::invalid_argument("cached transform grid mismatch");
    const double h = s.h();
    StateField out(m_);
    for (int r = 0; r < m_; ++r) {
        double i1 = 0.0, i2 = 0.0;
        if (r > 0) {
            const std::size_t base = static_cast<std::size_t>(r) * (r + 1) / 2;
            for (int l = 0; l <= r; ++l) {
                const double w = (l == 0 || l == r) ? 0.5 * h : h;
                const std::size_t idx = base + l;
                i1 += w * (k11_[idx] * s.c1[l] + k12_[idx] * s.c2[l]);
                i2 += w * (k21_[idx] * s.c1[l] + k22_[idx] * s.c2[l]);
            }
        }
        out.c1[r] = s.c1[r] + sign_ * i1;
        out.c2[r] = s.c2[r] + sign_ * i2;
    }
    return out;
}

ControllerGains extract_gains(const KernelSet& k, int m, const ScalarFn& phi1,
                              const ScalarFn& phi2) {
    ControllerGains gains;
    gains.kvu.resize(m);
    gains.kvv.resize(m);
    gains.phi1_scale.resize(m);
    gains.phi2_scale.resize(m);
    const double h = 1.0 / (m - 1);
    for (int l = 0; l < m; ++l) {
        const double xi = l * h;
        gains.kvu[l] = k.f3()(1.0, xi);
        gains.kvv[l] = k.f4()(1.0, xi);
        gains.phi1_scale[l] = phi1 ? phi1(xi) : 1.0;
        gains.phi2_scale[l] = phi2 ? phi2(xi) : 1.0;
        if (!std::isfinite(gains.kvu[l]) || !std::isfinite(gains.kvv[l])) {
            throw NonFiniteCoefficient("gain row not finite at xi=" + std::to_string(xi));
        }
        if (!(gains.phi1_scale[l] > 0.0) || !(gains.phi2_scale[l] > 0.0)) {
            throw NonFiniteCoefficient("state scaling not positive at xi=" + std::to_string(xi));
        }
    }
    if (std::abs(gains.phi1_scale[0] - 1.0) > 1e-9 || std::abs(gains.phi2_scale[0] - 1.0) > 1e-9) {
        throw NonFiniteCoefficient("state scalings must equal 1 at x=0");
    }
    gains.phi2_at_1 = phi2 ? phi2(1.0) : 1.0;
    return gains;
}

double control_value(const ControllerGains& gains, const StateField& z,
                     const DynamicExtension& ext) {
    const int m = z.m();
    if (gains.m() != m) throw std::invalid_argument("gains and state live on different grids");
    std::vector<double> integrand(m);
    for (int l = 0; l < m; ++l) {
        integrand[l] = gains.kvu[l] * z.c1[l] * gains.phi1_scale[l] +
                       gains.kvv[l] * z.c2[l] * gains.phi2_scale[l];
    }
    return trapezoid(integrand, z.h()) / gains.phi2_at_1 + ext.a + ext.b;
}

double control_value(const ControllerGains& gains, const StateField& z) {
    DynamicExtension none;
    none.a = none.b = 0.0;
    return control_value(gains, z, none);
}

LinearDesign build_linear_spec(const QuasilinearSystemSpec& q) {
    q.validate();
    QuasilinearSystemSpec qs = q;
    qs.fill_linearization();

    const std::array<double, 2> zero{0.0, 0.0};
    // exponent tables for the diagonal scalings
    const int n = 1025;
    std::vector<double> xs(n), i1(n, 0.0), i2(n, 0.0);
    const double h = 1.0 / (n - 1);
    double prev1 = 0.0, prev2 = 0.0;
    for (int k = 0; k < n; ++k) {
        const double x = k * h;
        xs[k] = x;
        const Mat2 L = qs.Lambda(zero, x);
        if (!(L.a11 > 0.0) || !(L.a22 < 0.0)) {
            throw HyperbolicityViolation("frozen speeds change sign at x=" + std::to_string(x));
        }
        const double g1 = qs.f11(x) / L.a11;
        const double g2 = qs.f22(x) / L.a22;
        if (k > 0) {
            i1[k] = i1[k - 1] + 0.5 * h * (prev1 + g1);
            i2[k] = i2[k - 1] + 0.5 * h * (prev2 + g2);
        }
        prev1 = g1;
        prev2 = g2;
    }
    auto exp1 = std::make_shared<MonotoneCubic>(xs, std::move(i1));
    auto exp2 = std::make_shared<MonotoneCubic>(std::move(xs), std::move(i2));

    LinearDesign design;
    design.phi1 = [exp1](double x) { return std::exp((*exp1)(x)); };
    design.phi2 = [exp2](double x) { return std::exp((*exp2)(x)); };

    const MatrixFn Lam = qs.Lambda;
    design.sys.eps1 = [Lam](double x) { return Lam({0.0, 0.0}, x).a11; };
    design.sys.eps2 = [Lam](double x) { return -Lam({0.0, 0.0}, x).a22; };
    const ScalarFn f12 = qs.f12, f21 = qs.f21;
    const ScalarFn p1 = design.phi1, p2 = design.phi2;
    design.sys.c1 = [f12, p1, p2](double x) { return -f12(x) * p1(x) / p2(x); };
    design.sys.c2 = [f21, p1, p2](double x) { return -f21(x) * p2(x) / p1(x); };
    design.sys.q = qs.q0_deriv;

    // consistency check: the couplings must equal the negated Jacobian of
    // the scaled drift at w = 0
    const double step = 1e-6;
    for (int k = 0; k <= 32; ++k) {
        const double x = static_cast<double>(k) / 32.0;
        Mat2 jac;
        for (int col = 0; col < 2; ++col) {
            std::array<double, 2> wp{0.0, 0.0}, wm{0.0, 0.0};
            (col == 0 ? wp[0] : wp[1]) = step;
            (col == 0 ? wm[0] : wm[1]) = -step;
            const auto fp = scaled_drift(qs, design, wp, x);
            const auto fm = scaled_drift(qs, design, wm, x);
            if (col == 0) {
                jac.a11 = (fp[0] - fm[0]) / (2.0 * step);
                jac.a21 = (fp[1] - fm[1]) / (2.0 * step);
            } else {
                jac.a12 = (fp[0] - fm[0]) / (2.0 * step);
                jac.a22 = (fp[1] - fm[1]) / (2.0 * step);
            }
        }
        const Mat2 expect{0.0, -design.sys.c1(x), -design.sys.c2(x), 0.0};
        if ((jac - expect).max_abs() > 1e-6) {
            throw Error("linear design couplings disagree with the drift Jacobian at x=" +
                        std::to_string(x));
        }
    }
    return design;
}

std::array<double, 2> scaled_drift(const QuasilinearSystemSpec& q, const LinearDesign& design,
                                   const std::array<double, 2>& w, double x) {
    const double p1 = design.phi1(x);
    const double p2 = design.phi2(x);
    const std::array<double, 2> z{w[0] / p1, w[1] / p2};
    const Mat2 L = q.Lambda(z, x);
    const Mat2 Lbar{L.a11, L.a12 * p1 / p2, L.a21 * p2 / p1, L.a22};
    const auto fz = q.f(z, x);
    const Mat2 L0 = q.Lambda({0.0, 0.0}, x);
    const double m1 = -q.f11(x) / L0.a11;
    const double m2 = -q.f22(x) / L0.a22;
    const std::array<double, 2> mw{m1 * w[0], m2 * w[1]};
    const auto lm = Lbar * mw;
    return {p1 * fz[0] + lm[0], p2 * fz[1] + lm[1]};
}

Mat2 lambda_nl(const QuasilinearSystemSpec& q, const LinearDesign& design,
               const std::array<double, 2>& w, double x) {
    const double p1 = design.phi1(x);
    const double p2 = design.phi2(x);
    const std::array<double, 2> z{w[0] / p1, w[1] / p2};
    const Mat2 L = q.Lambda(z, x);
    const Mat2 Lbar{L.a11, L.a12 * p1 / p2, L.a21 * p2 / p1, L.a22};
    return Lbar - q.Lambda({0.0, 0.0}, x);
}

namespace {

std::vector<double> boundary_gain_row(const QuasilinearSystemSpec&, const ControllerGains& g,
                                      int component) {
    std::vector<double> k(g.m());
    for (int l = 0; l < g.m(); ++l) {
        k[l] = component == 0 ? g.phi1_scale[l] * g.kvu[l] / g.phi2_at_1
                              : g.phi2_scale[l] * g.kvv[l] / g.phi2_at_1;
    }
    return k;
}

}  // namespace

std::pair<double, double> compatibility_functionals(const QuasilinearSystemSpec& q,
                                                    const ControllerGains& gains,
                                                    const StateField& z0) {
    const int m = z0.m();
    if (m < 4) throw GridTooCoarse("compatibility functionals need m >= 4");
    if (gains.m() != m) throw std::invalid_argument("gains and z0 live on different grids");
    const auto k1 = boundary_gain_row(q, gains, 0);
    const auto k2 = boundary_gain_row(q, gains, 1);

    std::vector<double> kz(m);
    for (int l = 0; l < m; ++l) kz[l] = k1[l] * z0.c1[l] + k2[l] * z0.c2[l];
    const double p1 = z0.c2.back() - trapezoid(kz, z0.h());

    const auto d1 = derivative(z0.c1, z0.h());
    const auto d2 = derivative(z0.c2, z0.h());
    std::vector<double> rate1(m), rate2(m), krate(m);
    for (int l = 0; l < m; ++l) {
        const std::array<double, 2> z{z0.c1[l], z0.c2[l]};
        const double x = z0.x(l);
        const Mat2 L = q.Lambda(z, x);
        const auto fv = q.f(z, x);
        rate1[l] = L.a11 * d1[l] + L.a12 * d2[l] + fv[0];
        rate2[l] = L.a21 * d1[l] + L.a22 * d2[l] + fv[1];
        krate[l] = k1[l] * rate1[l] + k2[l] * rate2[l];
    }
    const double p2 = rate2.back() - trapezoid(krate, z0.h());
    return {p1, p2};
}

DynamicExtension init_extension(const QuasilinearSystemSpec& q, const ControllerGains& gains,
                                const StateField& z0, double d1, double d2) {
    if (!(d1 > 0.0) || !(d2 > 0.0) || std::abs(d1 - d2) <= 1e-9) throw DegenerateRates(d1, d2);
    const auto [p1, p2] = compatibility_functionals(q, gains, z0);
    DynamicExtension ext;
    ext.d1 = d1;
    ext.d2 = d2;
    ext.a = -(p2 + d2 * p1) / (d1 - d2);
    ext.b = (d1 * p1 + p2) / (d1 - d2);
    return ext;
}

std::pair<double, double> extension_compatibility_residuals(const QuasilinearSystemSpec& q,
                                                            const ControllerGains& gains,
                                                            const StateField& z0,
                                                            const DynamicExtension& ext) {
    const auto [p1, p2] = compatibility_functionals(q, gains, z0);
    const double r1 = ext.a + ext.b - p1;
    const double r2 = -ext.d1 * ext.a - ext.d2 * ext.b - p2;
    return {r1, r2};
}

std::pair<double, double> check_natural_compatibility(const QuasilinearSystemSpec& q,
                                                      const StateField& z0) {
    if (z0.m() < 4) throw GridTooCoarse("compatibility check needs m >= 4");
    const double r1 = q.G0(z0.c2.front()) - z0.c1.front();

    const auto d1 = derivative(z0.c1, z0.h());
    const auto d2 = derivative(z0.c2, z0.h());
    const std::array<double, 2> z{z0.c1.front(), z0.c2.front()};
    const Mat2 L = q.Lambda(z, 0.0);
    const auto fv = q.f(z, 0.0);
    const double rate1 = L.a11 * d1.front() + L.a12 * d2.front() + fv[0];
    const double rate2 = L.a21 * d1.front() + L.a22 * d2.front() + fv[1];
    const double step = 1e-6;
    const double g0p = (q.G0(z0.c2.front() + step) - q.G0(z0.c2.front() - step)) / (2.0 * step);
    const double r2 = g0p * rate2 - rate1;
    return {r1, r2};
}

}  // namespace backstep
