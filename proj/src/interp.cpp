#include "backstep/interp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace backstep {

MonotoneCubic::MonotoneCubic(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
    const std::size_t n = knots_.size();
    if (n < 2 || values_.size() != n) {
        throw std::invalid_argument("MonotoneCubic needs >= 2 knots and matching values");
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (!(knots_[i + 1] > knots_[i])) {
            throw std::invalid_argument("MonotoneCubic knots must be strictly increasing");
        }
    }

    // Uniform spacing lets evaluation locate segments in O(1).
    h_ = (knots_.back() - knots_.front()) / static_cast<double>(n - 1);
    uniform_ = true;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double d = knots_[i + 1] - knots_[i];
        if (std::abs(d - h_) > 1e-12 * std::max(1.0, std::abs(h_))) {
            uniform_ = false;
            break;
        }
    }

    // Fritsch-Carlson slope selection: harmonic-mean interior slopes,
    // clamped three-point estimates at the ends.
    std::vector<double> dx(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        dx[i] = knots_[i + 1] - knots_[i];
        delta[i] = (values_[i + 1] - values_[i]) / dx[i];
    }
    slopes_.assign(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
            slopes_[i] = 0.0;
        } else {
            const double w1 = 2.0 * dx[i] + dx[i - 1];
            const double w2 = dx[i] + 2.0 * dx[i - 1];
            slopes_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    auto end_slope = [](double h0, double h1, double d0, double d1) {
        double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (m * d0 <= 0.0) {
            m = 0.0;
        } else if (d0 * d1 <= 0.0 && std::abs(m) > 3.0 * std::abs(d0)) {
            m = 3.0 * d0;
        }
        return m;
    };
    if (n == 2) {
        slopes_[0] = slopes_[1] = delta[0];
    } else {
        slopes_[0] = end_slope(dx[0], dx[1], delta[0], delta[1]);
        slopes_[n - 1] = end_slope(dx[n - 2], dx[n - 3], delta[n - 2], delta[n - 3]);
    }
}

int MonotoneCubic::locate(double q, int hint) const {
    const int nseg = static_cast<int>(knots_.size()) - 1;
    if (uniform_) {
        int seg = static_cast<int>((q - knots_.front()) / h_);
        return std::clamp(seg, 0, nseg - 1);
    }
    int seg = std::clamp(hint, 0, nseg - 1);
    // Walk from the hint; query sequences along characteristics are monotone,
    // so this is amortized O(1).
    if (q >= knots_[seg]) {
        while (seg + 1 < nseg && q >= knots_[seg + 1]) ++seg;
    } else {
        while (seg > 0 && q < knots_[seg]) --seg;
    }
    return seg;
}

double MonotoneCubic::eval(double q, int& segment) const {
    // Clamp out-of-range queries (floating fuzz at domain edges).
    if (q <= knots_.front()) {
        segment = 0;
        if (q == knots_.front()) return values_.front();
        q = knots_.front();
    } else if (q >= knots_.back()) {
        segment = static_cast<int>(knots_.size()) - 2;
        if (q == knots_.back()) return values_.back();
        q = knots_.back();
    }
    const int seg = locate(q, segment);
    segment = seg;
    const double h = knots_[seg + 1] - knots_[seg];
    const double t = (q - knots_[seg]) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    const double h10 = t3 - 2.0 * t2 + t;
    const double h01 = -2.0 * t3 + 3.0 * t2;
    const double h11 = t3 - t2;
    return h00 * values_[seg] + h * h10 * slopes_[seg] + h01 * values_[seg + 1] +
           h * h11 * slopes_[seg + 1];
}

double MonotoneCubic::operator()(double q) const {
    int seg = 0;
    return eval(q, seg);
}

}  // namespace backstep
