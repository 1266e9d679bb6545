#include "backstep/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "backstep/errors.hpp"

namespace backstep {

void SchemeConfig::validate() const {
    if (m < 8) throw GridTooCoarse("scheme needs m >= 8");
    if (!(cfl > 0.0) || cfl > 1.0) throw ConfigError("cfl must lie in (0, 1]");
    if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");
    if (snapshot_stride < 1) throw ConfigError("snapshot_stride must be >= 1");
}

TargetExact::TargetExact(const LinearSystemSpec& sys, ScalarFn alpha0, ScalarFn beta0,
                         int quad_points)
    : maps_(sys.eps1, sys.eps2, quad_points),
      alpha0_(std::move(alpha0)),
      beta0_(std::move(beta0)),
      q_(sys.q) {}

double TargetExact::beta_at_left(double t) const {
    const double horizon = maps_.phi2(1.0);
    if (t > horizon) return 0.0;
    return beta0_ ? beta0_(maps_.phi2_inv(t)) : 0.0;
}

std::array<double, 2> TargetExact::operator()(double x, double t) const {
    const double p1x = maps_.phi1(x);
    double alpha;
    if (t <= p1x) {
        alpha = alpha0_ ? alpha0_(maps_.phi1_inv(p1x - t)) : 0.0;
    } else {
        alpha = q_ * beta_at_left(t - p1x);
    }
    const double p2x = maps_.phi2(x);
    double beta;
    if (t <= maps_.phi2(1.0) - p2x) {
        beta = beta0_ ? beta0_(maps_.phi2_inv(p2x + t)) : 0.0;
    } else {
        beta = 0.0;
    }
    return {alpha, beta};
}

double finite_time_horizon(const LinearSystemSpec& sys, int quad_points) {
    CharacteristicMaps maps(sys.eps1, sys.eps2, quad_points);
    return maps.t_final();
}

namespace {

void record(SimulationTrace& trace, double t, const StateField& s, double a, double b,
            double control) {
    trace.times.push_back(t);
    trace.snapshots.push_back(s);
    trace.a.push_back(a);
    trace.b.push_back(b);
    trace.control.push_back(control);
    trace.norms.push_back(all_norms(s));
}

}  // namespace

SimulationTrace simulate_linear(const LinearSystemSpec& sys,
                                const std::optional<ControllerGains>& gains,
                                const StateField& w0, const SchemeConfig& cfg) {
    cfg.validate();
    sys.validate();
    const int m = cfg.m;
    if (w0.m() != m) throw std::invalid_argument("w0 grid does not match scheme m");
    const double h = w0.h();

    std::vector<double> e1(m), e2(m), c1v(m), c2v(m);
    double max_speed = 0.0;
    for (int k = 0; k < m; ++k) {
        const double x = w0.x(k);
        e1[k] = sys.eps1(x);
        e2[k] = sys.eps2(x);
        c1v[k] = sys.c1 ? sys.c1(x) : 0.0;
        c2v[k] = sys.c2 ? sys.c2(x) : 0.0;
        max_speed = std::max({max_speed, e1[k], e2[k]});
    }
    const double dt_base = cfg.cfl * h / max_speed;

    StateField w = w0;
    StateField next(m);
    const double guard = 1e6 * (norm_L2(w0) + 1e-30);

    SimulationTrace trace;
    double u_bound = gains ? control_value(*gains, w) : 0.0;
    record(trace, 0.0, w, 0.0, 0.0, u_bound);

    double t = 0.0;
    long step = 0;
    while (t < cfg.t_end - 1e-14) {
        const double dt = std::min(dt_base, cfg.t_end - t);
        // first component transports rightward, second leftward; each is
        // differenced on its own upwind side
        for (int k = 1; k < m; ++k) {
            next.c1[k] = w.c1[k] - dt * e1[k] * (w.c1[k] - w.c1[k - 1]) / h + dt * c1v[k] * w.c2[k];
        }
        for (int k = 0; k + 1 < m; ++k) {
            next.c2[k] = w.c2[k] + dt * e2[k] * (w.c2[k + 1] - w.c2[k]) / h + dt * c2v[k] * w.c1[k];
        }
        next.c1[0] = sys.q * next.c2[0];
        next.c2[m - 1] = gains ? control_value(*gains, next) : 0.0;
        std::swap(w, next);
        t += dt;
        ++step;

        const double l2 = norm_L2(w);
        if (!(l2 <= guard)) throw UnstableStep(t, l2);
        if (step % cfg.snapshot_stride == 0 || t >= cfg.t_end - 1e-14) {
            u_bound = w.c2[m - 1];
            record(trace, t, w, 0.0, 0.0, u_bound);
        }
    }
    return trace;
}

SimulationTrace simulate_quasilinear(const QuasilinearSystemSpec& q,
                                     const ControllerGains& gains, const DynamicExtension& ext0,
                                     const StateField& z0, const SchemeConfig& cfg) {
    cfg.validate();
    const int m = cfg.m;
    if (z0.m() != m) throw std::invalid_argument("z0 grid does not match scheme m");
    if (gains.m() != m) throw std::invalid_argument("gains grid does not match scheme m");
    const double h = z0.h();

    StateField z = z0;
    StateField next(m);
    DynamicExtension ext = ext0;
    const double guard = 1e6 * (norm_L2(z0) + std::abs(ext0.a) + std::abs(ext0.b) + 1e-30);

    SimulationTrace trace;
    record(trace, 0.0, z, ext.a, ext.b, control_value(gains, z, ext));

    std::vector<Mat2> lam(m);
    double t = 0.0;
    long step = 0;
    while (t < cfg.t_end - 1e-14) {
        double max_speed = 0.0;
        for (int k = 0; k < m; ++k) {
            const double x = z.x(k);
            const Mat2 L = q.Lambda({z.c1[k], z.c2[k]}, x);
            if (!(L.a11 > 0.0) || !(L.a22 < 0.0)) {
                throw HyperbolicitySignChange("speed sign changed at x=" + std::to_string(x) +
                                              ", t=" + std::to_string(t));
            }
            lam[k] = L;
            max_speed = std::max(max_speed,
                                 std::max(std::abs(L.a11) + std::abs(L.a12),
                                          std::abs(L.a21) + std::abs(L.a22)));
        }
        const double dt = std::min(cfg.cfl * h / max_speed, cfg.t_end - t);

        // row 1 travels rightward: backward differences; row 2 leftward: forward
        for (int k = 1; k < m; ++k) {
            const double d1 = (z.c1[k] - z.c1[k - 1]) / h;
            const double d2 = (z.c2[k] - z.c2[k - 1]) / h;
            const auto fv = q.f({z.c1[k], z.c2[k]}, z.x(k));
            next.c1[k] = z.c1[k] - dt * (lam[k].a11 * d1 + lam[k].a12 * d2) - dt * fv[0];
        }
        for (int k = 0; k + 1 < m; ++k) {
            const double d1 = (z.c1[k + 1] - z.c1[k]) / h;
            const double d2 = (z.c2[k + 1] - z.c2[k]) / h;
            const auto fv = q.f({z.c1[k], z.c2[k]}, z.x(k));
            next.c2[k] = z.c2[k] - dt * (lam[k].a21 * d1 + lam[k].a22 * d2) - dt * fv[1];
        }
        ext.a *= std::exp(-ext.d1 * dt);
        ext.b *= std::exp(-ext.d2 * dt);
        next.c1[0] = q.G0(next.c2[0]);
        next.c2[m - 1] = control_value(gains, next, ext);
        std::swap(z, next);
        t += dt;
        ++step;

        const double l2 = norm_L2(z);
        if (!(l2 <= guard)) throw UnstableStep(t, l2);
        if (step % cfg.snapshot_stride == 0 || t >= cfg.t_end - 1e-14) {
            record(trace, t, z, ext.a, ext.b, z.c2[m - 1]);
        }
    }
    return trace;
}

std::string step_report(const SimulationTrace& trace) {
    std::ostringstream os;
    os << "t,L2,H1,H2,sup,a,b,U\n";
    os.precision(10);
    for (std::size_t k = 0; k < trace.size(); ++k) {
        os << trace.times[k] << ',' << trace.norms[k].l2 << ',' << trace.norms[k].h1 << ','
           << trace.norms[k].h2 << ',' << trace.norms[k].sup << ',' << trace.a[k] << ','
           << trace.b[k] << ',' << trace.control[k] << '\n';
    }
    return os.str();
}

}  // namespace backstep
