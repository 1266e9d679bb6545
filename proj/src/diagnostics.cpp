#include "backstep/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "backstep/errors.hpp"

namespace backstep {

LyapunovWeights LyapunovWeights::from_rates(const LinearSystemSpec& sys, double lambda1,
                                            double lambda2, int samples) {
    double eps_bar = 0.0;
    for (int k = 0; k < samples; ++k) {
        const double x = static_cast<double>(k) / (samples - 1);
        eps_bar = std::max(eps_bar, std::max(1.0 / sys.eps1(x), 1.0 / sys.eps2(x)));
    }
    LyapunovWeights w;
    w.lambda1 = lambda1;
    w.lambda2 = lambda2;
    w.mu = lambda1 * eps_bar;
    w.A = lambda2 * std::exp(w.mu);
    w.B = sys.q * sys.q * w.A + lambda2;
    return w;
}

Mat2 weight_D(const LyapunovWeights& w, const LinearSystemSpec& sys, double x) {
    return Mat2::diag(w.A * std::exp(-w.mu * x) / sys.eps1(x),
                      w.B * std::exp(w.mu * x) / sys.eps2(x));
}

double lyapunov_V1(const LyapunovWeights& w, const LinearSystemSpec& sys, const StateField& g) {
    const int m = g.m();
    std::vector<double> quad(m);
    for (int k = 0; k < m; ++k) {
        const Mat2 d = weight_D(w, sys, g.x(k));
        quad[k] = d.a11 * g.c1[k] * g.c1[k] + d.a22 * g.c2[k] * g.c2[k];
    }
    return trapezoid(quad, g.h());
}

std::vector<Mat2> build_R(const LinearSystemSpec& sys, const std::vector<Mat2>& f1,
                          const LyapunovWeights& w) {
    const int m = static_cast<int>(f1.size());
    if (m < 2) throw std::invalid_argument("build_R needs >= 2 nodes");
    double k1 = std::numeric_limits<double>::infinity();
    for (int k = 0; k < m; ++k) {
        const double x = static_cast<double>(k) / (m - 1);
        k1 = std::min(k1, sys.eps1(x) + sys.eps2(x));
    }
    std::vector<Mat2> out(m);
    for (int k = 0; k < m; ++k) {
        const double x = static_cast<double>(k) / (m - 1);
        const Mat2 d = weight_D(w, sys, x);
        const double denom = sys.eps1(x) + sys.eps2(x) + f1[k].a11 - f1[k].a22;
        if (denom < 0.5 * k1) {
            throw SmallDenominator("state too large for the weighted form at x=" +
                                   std::to_string(x));
        }
        const double psi = (d.a11 * f1[k].a12 - d.a22 * f1[k].a21) / denom;
        out[k] = Mat2{d.a11, psi, psi, d.a22};
    }
    return out;
}

std::vector<Mat2> sigma_minus_f1(const LinearSystemSpec& sys, const std::vector<Mat2>& f1) {
    const int m = static_cast<int>(f1.size());
    std::vector<Mat2> out(m);
    for (int k = 0; k < m; ++k) {
        const double x = static_cast<double>(k) / (m - 1);
        const Mat2 sigma = Mat2::diag(-sys.eps1(x), sys.eps2(x));
        out[k] = sigma - f1[k];
    }
    return out;
}

double check_symmetry_identity(const std::vector<Mat2>& R,
                               const std::vector<Mat2>& sigma_minus_f1) {
    if (R.size() != sigma_minus_f1.size()) {
        throw std::invalid_argument("node counts differ");
    }
    double sup = 0.0;
    for (std::size_t k = 0; k < R.size(); ++k) {
        const Mat2& m = sigma_minus_f1[k];
        const Mat2 rm = R[k] * m;
        const Mat2 mt{m.a11, m.a21, m.a12, m.a22};
        const Mat2 mtr = mt * R[k];
        sup = std::max(sup, (rm - mtr).max_abs());
    }
    return sup;
}

double r_positivity_radius(const LinearSystemSpec& sys, const LyapunovWeights& w, double k2,
                           int samples) {
    if (!(k2 > 0.0)) throw std::invalid_argument("k2 must be positive");
    double k1 = std::numeric_limits<double>::infinity();
    double d_max = 0.0;
    double d_geo_min = std::numeric_limits<double>::infinity();
    for (int k = 0; k < samples; ++k) {
        const double x = static_cast<double>(k) / (samples - 1);
        k1 = std::min(k1, sys.eps1(x) + sys.eps2(x));
        const Mat2 d = weight_D(w, sys, x);
        d_max = std::max(d_max, std::max(d.a11, d.a22));
        d_geo_min = std::min(d_geo_min, std::sqrt(d.a11 * d.a22));
    }
    // |psi| <= d_max * k2 * delta / (k1/2) must stay below min sqrt(D11 D22),
    // and the denominator perturbation 2 k2 delta must stay below k1/2
    const double delta_denominator = k1 / (4.0 * k2);
    const double delta_positive = d_geo_min * k1 / (2.0 * d_max * k2);
    return std::min(delta_denominator, delta_positive);
}

std::pair<double, double> fit_decay_rate(const std::vector<double>& times,
                                         const std::vector<double>& norms, double t_start,
                                         double t_end) {
    if (times.size() != norms.size()) throw std::invalid_argument("series lengths differ");
    std::vector<double> ts, ys;
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (times[k] < t_start || times[k] > t_end) continue;
        if (!(norms[k] > 0.0)) {
            throw NonPositiveNorm("norm sample not positive at t=" + std::to_string(times[k]));
        }
        ts.push_back(times[k]);
        ys.push_back(std::log(norms[k]));
    }
    if (ts.size() < 5) throw std::invalid_argument("need >= 5 samples in the fit window");

    const double n = static_cast<double>(ts.size());
    double st = 0.0, sy = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        st += ts[k];
        sy += ys[k];
    }
    const double mt = st / n, my = sy / n;
    double stt = 0.0, sty = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const double dt = ts[k] - mt;
        const double dy = ys[k] - my;
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    if (stt == 0.0) throw std::invalid_argument("degenerate time window");
    const double slope = sty / stt;
    const double r2 = syy == 0.0 ? 1.0 : (sty * sty) / (stt * syy);
    return {-slope, r2};
}

}  // namespace backstep
