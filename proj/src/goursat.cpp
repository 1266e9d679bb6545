#include "backstep/goursat.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <thread>

#include "backstep/errors.hpp"
#include "parallel.hpp"

namespace backstep {

namespace {

// Characteristics shorter than this are treated as degenerate: the value
// reduces to the boundary data (diagonal nodes for eqs 2,3, xi=0 for 1,4).
constexpr double kTinyCurve = 1e-14;

std::vector<double> cumulative_inverse_speed(const ScalarFn& eps, int quad_points) {
    const double h = 1.0 / static_cast<double>(quad_points - 1);
    std::vector<double> phi(quad_points, 0.0);
    double prev = 1.0 / eps(0.0);
    if (!(eps(0.0) > 0.0)) throw NonPositiveSpeed(0.0, eps(0.0));
    for (int k = 1; k < quad_points; ++k) {
        const double x = static_cast<double>(k) * h;
        const double e = eps(x);
        if (!(e > 0.0)) throw NonPositiveSpeed(x, e);
        const double cur = 1.0 / e;
        phi[k] = phi[k - 1] + 0.5 * h * (prev + cur);
        prev = cur;
    }
    return phi;
}

}  // namespace

CharacteristicMaps::CharacteristicMaps(ScalarFn eps1, ScalarFn eps2, int quad_points)
    : fwd1_({0.0, 1.0}, {0.0, 1.0}),
      fwd2_({0.0, 1.0}, {0.0, 1.0}),
      fwd3_({0.0, 1.0}, {0.0, 1.0}),
      inv1_({0.0, 1.0}, {0.0, 1.0}),
      inv2_({0.0, 1.0}, {0.0, 1.0}),
      inv3_({0.0, 1.0}, {0.0, 1.0}) {
    if (quad_points < 16) throw GridTooCoarse("characteristic tabulation needs quad_points >= 16");
    const int n = quad_points;
    std::vector<double> xs(n);
    for (int k = 0; k < n; ++k) xs[k] = static_cast<double>(k) / (n - 1);

    auto p1 = cumulative_inverse_speed(eps1, n);
    auto p2 = cumulative_inverse_speed(eps2, n);
    std::vector<double> p3(n);
    for (int k = 0; k < n; ++k) p3[k] = p1[k] + p2[k];

    k_eps_ = 0.0;
    for (int k = 0; k < n; ++k) {
        k_eps_ = std::max(k_eps_, std::max(1.0 / eps1(xs[k]), 1.0 / eps2(xs[k])));
    }

    fwd1_ = MonotoneCubic(xs, p1);
    fwd2_ = MonotoneCubic(xs, p2);
    fwd3_ = MonotoneCubic(xs, p3);
    inv1_ = MonotoneCubic(p1, xs);
    inv2_ = MonotoneCubic(p2, xs);
    inv3_ = MonotoneCubic(std::move(p3), xs);
}

CharacteristicMaps::Curve CharacteristicMaps::curve(int eq, double x, double xi) const {
    Curve c{};
    switch (eq) {
        case 0: {  // speeds (eps1, eps1), data on xi = 0
            c.inv_x = &inv1_;
            c.inv_xi = &inv1_;
            c.cx = fwd1_(x) - fwd1_(xi);
            c.cxi = 0.0;
            c.dir = 1.0;
            c.s_final = fwd1_(xi);
            break;
        }
        case 1: {  // speeds (eps1, -eps2), data on the diagonal
            const double p = inv3_(fwd1_(x) + fwd2_(xi));
            c.inv_x = &inv1_;
            c.inv_xi = &inv2_;
            c.cx = fwd1_(p);
            c.cxi = fwd2_(p);
            c.dir = -1.0;
            c.s_final = fwd1_(x) - c.cx;
            break;
        }
        case 2: {  // speeds (eps2, -eps1), data on the diagonal
            const double p = inv3_(fwd2_(x) + fwd1_(xi));
            c.inv_x = &inv2_;
            c.inv_xi = &inv1_;
            c.cx = fwd2_(p);
            c.cxi = fwd1_(p);
            c.dir = -1.0;
            c.s_final = fwd2_(x) - c.cx;
            break;
        }
        default: {  // eq 3: speeds (eps2, eps2), data on xi = 0
            c.inv_x = &inv2_;
            c.inv_xi = &inv2_;
            c.cx = fwd2_(x) - fwd2_(xi);
            c.cxi = 0.0;
            c.dir = 1.0;
            c.s_final = fwd2_(xi);
            break;
        }
    }
    c.s_final = std::max(c.s_final, 0.0);
    return c;
}

double CharacteristicMaps::x_at(int eq, double x, double xi, double s) const {
    int hint = 0;
    return curve(eq, x, xi).x_at(s, hint);
}

double CharacteristicMaps::xi_at(int eq, double x, double xi, double s) const {
    int hint = 0;
    return curve(eq, x, xi).xi_at(s, hint);
}

CharacteristicMaps build_characteristics(const GoursatProblem& p, int quad_points) {
    return CharacteristicMaps(p.eps1, p.eps2, quad_points);
}

namespace {

using Curve = CharacteristicMaps::Curve;
using Bank = std::array<GridFunction2T, 4>;

struct CouplingRow {
    int count = 0;
    std::array<int, 4> idx{};
    std::array<const GridFunction2T*, 4> tab{};
};

/// Everything picard sweeps need, precomputed once per (problem, grid).
class SweepEngine {
public:
    SweepEngine(const GoursatProblem& p, const TriangularGrid& grid, const PicardOptions& opts)
        : grid_(grid), maps_(p.eps1, p.eps2, opts.quad_points), opts_(opts) {
        tabulate_couplings(p);
        precompute_nodes(p);
        compute_constants(p);
    }

    const CharacteristicMaps& maps() const { return maps_; }
    double phi_bar() const { return phi_bar_; }
    double c_bar() const { return c_bar_; }
    double k_eps() const { return maps_.k_eps(); }

    Bank initial_bank() const {
        Bank b{GridFunction2T(grid_), GridFunction2T(grid_), GridFunction2T(grid_),
               GridFunction2T(grid_)};
        for (int eq = 0; eq < 4; ++eq) b[eq].values() = base_[eq];
        return b;
    }

    /// One application of the integral operator: out = base + Q[in] + I[in].
    /// Returns the sup change |out - in|.
    double sweep(const Bank& in, Bank& out) const {
        const std::size_t count = grid_.node_count();
        const unsigned workers = opts_.threads > 0
                                     ? static_cast<unsigned>(opts_.threads)
                                     : std::max(1u, std::thread::hardware_concurrency());
        std::vector<double> local_max(std::max<unsigned>(workers, 1), 0.0);
        std::atomic<unsigned> wid{0};

        detail::parallel_for_chunks(count, opts_.threads, [&](std::size_t lo, std::size_t hi) {
            const unsigned me = wid.fetch_add(1);
            double worst = 0.0;
            for (std::size_t nd = lo; nd < hi; ++nd) {
                for (int eq = 0; eq < 4; ++eq) {
                    double val = base_[eq][nd] +
                                 integrate_row(rows_[eq], curves_[eq][nd], panels_[eq][nd], in);
                    if ((eq == 0 && has_q01_) || (eq == 3 && has_q23_)) {
                        const int side = eq == 0 ? 0 : 1;
                        const double f2 = qf_[2 * side][nd];
                        const double f3 = qf_[2 * side + 1][nd];
                        if (f2 != 0.0) {
                            val += f2 * integrate_row(rows_[1], aux2_[side][nd],
                                                      aux2_panels_[side][nd], in);
                        }
                        if (f3 != 0.0) {
                            val += f3 * integrate_row(rows_[2], aux3_[side][nd],
                                                      aux3_panels_[side][nd], in);
                        }
                    }
                    out[eq].values()[nd] = val;
                    worst = std::max(worst, std::abs(val - in[eq].values()[nd]));
                }
            }
            if (me < local_max.size()) local_max[me] = std::max(local_max[me], worst);
        });
        double inc = 0.0;
        for (double v : local_max) inc = std::max(inc, v);
        return inc;
    }

private:
    void tabulate_couplings(const GoursatProblem& p) {
        for (int j = 0; j < 4; ++j) {
            for (int i = 0; i < 4; ++i) {
                if (!p.C[j][i]) continue;
                GridFunction2T tab(grid_);
                double sup = 0.0;
                for (int r = 0; r < grid_.n(); ++r) {
                    for (int cidx = 0; cidx <= r; ++cidx) {
                        const double v = p.C[j][i](grid_.coord(r), grid_.coord(cidx));
                        tab.at(r, cidx) = v;
                        sup = std::max(sup, std::abs(v));
                    }
                }
                if (sup == 0.0) continue;  // dead coupling (e.g. FD of a constant speed)
                ctab_[j][i] = std::move(tab);
                auto& row = rows_[j];
                row.idx[row.count] = i;
                row.tab[row.count] = &*ctab_[j][i];
                ++row.count;
            }
        }
    }

    int panel_count(double s_final) const {
        const int by_length = static_cast<int>(std::ceil(s_final / grid_.h())) + 2;
        return std::max(opts_.sub_samples, by_length);
    }

    // Composite left-endpoint rule: the solver is first-order overall and a
    // higher-order s-quadrature would only mask that, so keep the orders
    // matched along the characteristics.
    double integrate_forcing(const SurfaceFn& g, const Curve& c, int panels) const {
        if (!g || c.s_final <= kTinyCurve) return 0.0;
        const double ds = c.s_final / panels;
        int hx = 0, hxi = 0;
        double acc = 0.0;
        for (int k = 0; k < panels; ++k) {
            const double s = ds * k;
            acc += g(c.x_at(s, hx), c.xi_at(s, hxi));
        }
        return acc * ds;
    }

    double integrate_row(const CouplingRow& row, const Curve& c, int panels, const Bank& f) const {
        if (row.count == 0 || c.s_final <= kTinyCurve) return 0.0;
        const double ds = c.s_final / panels;
        int hx = 0, hxi = 0;
        double acc = 0.0;
        for (int k = 0; k < panels; ++k) {
            const double s = ds * k;
            const auto st = GridFunction2T::stencil_for(grid_, c.x_at(s, hx), c.xi_at(s, hxi));
            double v = 0.0;
            for (int r = 0; r < row.count; ++r) {
                v += row.tab[r]->apply(st) * f[row.idx[r]].apply(st);
            }
            acc += v;
        }
        return acc * ds;
    }

    void precompute_nodes(const GoursatProblem& p) {
        const std::size_t count = grid_.node_count();
        for (int eq = 0; eq < 4; ++eq) {
            curves_[eq].resize(count);
            panels_[eq].resize(count);
            base_[eq].assign(count, 0.0);
        }
        has_q01_ = static_cast<bool>(p.qb[0]) || static_cast<bool>(p.qb[1]);
        has_q23_ = static_cast<bool>(p.qb[2]) || static_cast<bool>(p.qb[3]);
        for (int side = 0; side < 2; ++side) {
            const bool used = side == 0 ? has_q01_ : has_q23_;
            if (!used) continue;
            aux2_[side].resize(count);
            aux3_[side].resize(count);
            aux2_panels_[side].resize(count);
            aux3_panels_[side].resize(count);
            qf_[2 * side].assign(count, 0.0);
            qf_[2 * side + 1].assign(count, 0.0);
        }

        for (int i = 0; i < grid_.n(); ++i) {
            for (int j = 0; j <= i; ++j) {
                const std::size_t nd = grid_.index(i, j);
                const double x = grid_.coord(i);
                const double xi = grid_.coord(j);
                for (int eq = 0; eq < 4; ++eq) {
                    Curve c = maps_.curve(eq, x, xi);
                    curves_[eq][nd] = c;
                    panels_[eq][nd] = panel_count(c.s_final);
                    int hint = 0;
                    const double foot_x = c.x_at(0.0, hint);
                    double base = 0.0;
                    if (eq == 1 || eq == 2) {
                        // data on the diagonal
                        if (p.h[eq]) base += p.h[eq](foot_x);
                        base += integrate_forcing(p.g[eq], c, panels_[eq][nd]);
                        base_[eq][nd] = base;
                        continue;
                    }
                    // eqs 0,3: data on xi = 0, coupled through eqs 1,2 there
                    if (p.h[eq]) base += p.h[eq](foot_x);
                    base += integrate_forcing(p.g[eq], c, panels_[eq][nd]);
                    const int side = eq == 0 ? 0 : 1;
                    const int q_lo = eq == 0 ? 0 : 2;
                    const bool used = eq == 0 ? has_q01_ : has_q23_;
                    if (used) {
                        const Curve a2 = maps_.curve(1, foot_x, 0.0);
                        const Curve a3 = maps_.curve(2, foot_x, 0.0);
                        aux2_[side][nd] = a2;
                        aux3_[side][nd] = a3;
                        aux2_panels_[side][nd] = panel_count(a2.s_final);
                        aux3_panels_[side][nd] = panel_count(a3.s_final);
                        int h2 = 0, h3 = 0;
                        const double foot2 = a2.x_at(0.0, h2);
                        const double foot3 = a3.x_at(0.0, h3);
                        if (p.qb[q_lo]) {
                            const double qv = p.qb[q_lo](foot_x);
                            qf_[q_lo][nd] = qv;
                            double inner = p.h[1] ? p.h[1](foot2) : 0.0;
                            inner += integrate_forcing(p.g[1], a2, aux2_panels_[side][nd]);
                            base += qv * inner;
                        }
                        if (p.qb[q_lo + 1]) {
                            const double qv = p.qb[q_lo + 1](foot_x);
                            qf_[q_lo + 1][nd] = qv;
                            double inner = p.h[2] ? p.h[2](foot3) : 0.0;
                            inner += integrate_forcing(p.g[2], a3, aux3_panels_[side][nd]);
                            base += qv * inner;
                        }
                    }
                    base_[eq][nd] = base;
                }
            }
        }

        phi_bar_ = 0.0;
        for (int eq = 0; eq < 4; ++eq) {
            for (double v : base_[eq]) phi_bar_ = std::max(phi_bar_, std::abs(v));
        }
    }

    void compute_constants(const GoursatProblem& p) {
        double q_sum = 0.0;
        for (int k = 0; k < 4; ++k) {
            if (!p.qb[k]) continue;
            double m = 0.0;
            for (int i = 0; i < grid_.n(); ++i) {
                m = std::max(m, std::abs(p.qb[k](grid_.coord(i))));
            }
            q_sum += m;
        }
        double c_sum = 0.0;
        for (int j = 0; j < 4; ++j) {
            for (int i = 0; i < 4; ++i) {
                if (!ctab_[j][i]) continue;
                double m = 0.0;
                for (double v : ctab_[j][i]->values()) m = std::max(m, std::abs(v));
                c_sum += m;
            }
        }
        c_bar_ = (1.0 + q_sum) * c_sum;
    }

    TriangularGrid grid_;
    CharacteristicMaps maps_;
    PicardOptions opts_;

    std::array<std::array<std::optional<GridFunction2T>, 4>, 4> ctab_{};
    std::array<CouplingRow, 4> rows_{};

    std::array<std::vector<Curve>, 4> curves_;
    std::array<std::vector<int>, 4> panels_;
    std::array<std::vector<double>, 4> base_;

    bool has_q01_ = false;
    bool has_q23_ = false;
    std::array<std::vector<Curve>, 2> aux2_, aux3_;
    std::array<std::vector<int>, 2> aux2_panels_, aux3_panels_;
    std::array<std::vector<double>, 4> qf_;

    double phi_bar_ = 0.0;
    double c_bar_ = 0.0;
};

}  // namespace

KernelSet picard_solve(const GoursatProblem& p, const TriangularGrid& grid,
                       const PicardOptions& opts) {
    if (!(opts.tol > 0.0)) throw std::invalid_argument("picard tol must be positive");
    if (opts.max_iter < 1) throw std::invalid_argument("picard max_iter must be >= 1");
    if (opts.sub_samples < 4) throw std::invalid_argument("picard sub_samples must be >= 4");

    SweepEngine engine(p, grid, opts);

    KernelSet result{
        {GridFunction2T(grid), GridFunction2T(grid), GridFunction2T(grid), GridFunction2T(grid)},
        0, 0.0, 0.0, {}};
    result.certificate.phi_bar = engine.phi_bar();
    result.certificate.c_bar = engine.c_bar();
    result.certificate.k_eps = engine.k_eps();
    result.certified_bound = engine.phi_bar() * std::exp(engine.c_bar() * engine.k_eps());
    result.certificate.increments.push_back(engine.phi_bar());

    Bank cur = engine.initial_bank();
    Bank next = cur;
    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        const double inc = engine.sweep(cur, next);
        std::swap(cur, next);
        result.certificate.increments.push_back(inc);
        result.iterations = iter;
        result.final_increment = inc;
        if (inc <= opts.tol) {
            result.F = std::move(cur);
            return result;
        }
    }
    throw NoConvergence(opts.max_iter, result.final_increment);
}

double extra_sweep_change(const GoursatProblem& p, const TriangularGrid& grid,
                          const KernelSet& k, const PicardOptions& opts) {
    SweepEngine engine(p, grid, opts);
    Bank out = k.F;
    return engine.sweep(k.F, out);
}

ResidualReport residual_check(const GoursatProblem& p, const KernelSet& k) {
    const TriangularGrid& grid = k.F[0].grid();
    const int n = grid.n();
    if (n < 5) throw GridTooCoarse("residual_check needs n >= 5");
    const double h = grid.h();

    auto cval = [&p](int j, int i, double x, double xi) {
        return p.C[j][i] ? p.C[j][i](x, xi) : 0.0;
    };
    auto gval = [&p](int j, double x, double xi) { return p.g[j] ? p.g[j](x, xi) : 0.0; };
    auto hval = [&p](int j, double x) { return p.h[j] ? p.h[j](x) : 0.0; };
    auto qval = [&p](int j, double x) { return p.qb[j] ? p.qb[j](x) : 0.0; };

    ResidualReport rep;
    // speed multipliers per equation: (x-direction speed, xi-direction signed speed)
    for (int i = 1; i + 1 < n; ++i) {
        for (int j = 1; j < i; ++j) {
            const double x = grid.coord(i);
            const double xi = grid.coord(j);
            const double e1x = p.eps1(x), e2x = p.eps2(x);
            const double e1xi = p.eps1(xi), e2xi = p.eps2(xi);
            for (int eq = 0; eq < 4; ++eq) {
                const auto& f = k.F[eq];
                const double fx = (f.at(i + 1, j) - f.at(i - 1, j)) / (2.0 * h);
                const double fxi = (f.at(i, j + 1) - f.at(i, j - 1)) / (2.0 * h);
                double lhs = 0.0;
                switch (eq) {
                    case 0: lhs = e1x * fx + e1xi * fxi; break;
                    case 1: lhs = e1x * fx - e2xi * fxi; break;
                    case 2: lhs = e2x * fx - e1xi * fxi; break;
                    default: lhs = e2x * fx + e2xi * fxi; break;
                }
                double rhs = gval(eq, x, xi);
                for (int c = 0; c < 4; ++c) rhs += cval(eq, c, x, xi) * k.F[c].at(i, j);
                rep.interior = std::max(rep.interior, std::abs(lhs - rhs));
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        const double x = grid.coord(i);
        const double r1 = k.F[0].at(i, 0) - hval(0, x) - qval(0, x) * k.F[1].at(i, 0) -
                          qval(1, x) * k.F[2].at(i, 0);
        const double r4 = k.F[3].at(i, 0) - hval(3, x) - qval(2, x) * k.F[1].at(i, 0) -
                          qval(3, x) * k.F[2].at(i, 0);
        const double r2 = k.F[1].at(i, i) - hval(1, x);
        const double r3 = k.F[2].at(i, i) - hval(2, x);
        rep.boundary = std::max({rep.boundary, std::abs(r1), std::abs(r2), std::abs(r3),
                                 std::abs(r4)});
    }
    return rep;
}

bool verify_picard_bound(const std::vector<double>& increments, double phi_bar, double c_bar,
                         double k_eps) {
    double bound = phi_bar;
    const double ratio = c_bar * k_eps;
    for (std::size_t n = 0; n < increments.size(); ++n) {
        if (n > 0) bound *= ratio / static_cast<double>(n);
        if (increments[n] > bound * (1.0 + 1e-9) + 1e-300) return false;
    }
    return true;
}

}  // namespace backstep
