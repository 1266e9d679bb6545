#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "backstep/diagnostics.hpp"
#include "backstep/errors.hpp"

using namespace backstep;

namespace {

LinearSystemSpec unit_sys() {
    LinearSystemSpec sys;
    sys.eps1 = [](double) { return 1.0; };
    sys.eps2 = [](double) { return 1.0; };
    sys.q = 1.0;
    return sys;
}

LinearSystemSpec smooth_sys() {
    LinearSystemSpec sys;
    sys.eps1 = [](double x) { return 1.0 + 0.4 * x; };
    sys.eps2 = [](double x) { return 2.0 - 0.6 * x; };
    sys.q = 0.7;
    return sys;
}

}  // namespace

TEST_CASE("weight matrix basics") {
    LyapunovWeights w;  // A = B = 1, mu = 0
    const LinearSystemSpec sys = unit_sys();
    const Mat2 d = weight_D(w, sys, 0.4);
    CHECK(d.a11 == doctest::Approx(1.0));
    CHECK(d.a22 == doctest::Approx(1.0));
    CHECK(d.a12 == 0.0);
    CHECK(d.a21 == 0.0);

    const LinearSystemSpec s2 = smooth_sys();
    const LyapunovWeights w2 = LyapunovWeights::from_rates(s2, 1.5, 2.0);
    for (double x : {0.0, 0.5, 1.0}) {
        const Mat2 dd = weight_D(w2, s2, x);
        CHECK(dd.a11 > 0.0);
        CHECK(dd.a22 > 0.0);
    }
    // weights built from rates satisfy their defining relations
    CHECK(w2.A == doctest::Approx(w2.lambda2 * std::exp(w2.mu)).epsilon(1e-12));
    CHECK(w2.B == doctest::Approx(s2.q * s2.q * w2.A + w2.lambda2).epsilon(1e-12));
}

TEST_CASE("weighted transport derivative identity") {
    // (D Sigma)_x = mu diag(A e^{-mu x}, B e^{mu x}) independently of the speeds
    const LinearSystemSpec sys = smooth_sys();
    const LyapunovWeights w = LyapunovWeights::from_rates(sys, 1.0, 1.0);
    const double step = 1e-6;
    for (double x : {0.1, 0.5, 0.9}) {
        auto dsigma = [&](double y) {
            const Mat2 d = weight_D(w, sys, y);
            return Mat2{d.a11 * -sys.eps1(y), 0.0, 0.0, d.a22 * sys.eps2(y)};
        };
        const Mat2 hi = dsigma(x + step);
        const Mat2 lo = dsigma(x - step);
        const double d11 = (hi.a11 - lo.a11) / (2.0 * step);
        const double d22 = (hi.a22 - lo.a22) / (2.0 * step);
        CHECK(d11 == doctest::Approx(-w.mu * w.A * std::exp(-w.mu * x) * -1.0).epsilon(1e-6));
        CHECK(d22 == doctest::Approx(w.mu * w.B * std::exp(w.mu * x)).epsilon(1e-6));
        CHECK(d11 > 0.0);
        CHECK(d22 > 0.0);
    }
}

TEST_CASE("V1 reduces to the squared L2 norm for unit weights") {
    LyapunovWeights w;
    const LinearSystemSpec sys = unit_sys();
    CHECK(lyapunov_V1(w, sys, StateField(64)) == 0.0);

    const StateField g = StateField::sample(
        301, [](double x) { return std::sin(3.0 * x); },
        [](double x) { return x * x - 0.5; });
    const double l2 = norm_L2(g);
    CHECK(lyapunov_V1(w, sys, g) == doctest::Approx(l2 * l2).epsilon(1e-12));
}

TEST_CASE("weighted form commutes with the perturbed transport matrix") {
    const LinearSystemSpec sys = smooth_sys();
    const LyapunovWeights w = LyapunovWeights::from_rates(sys, 1.0, 1.0);
    const int m = 41;

    SUBCASE("zero state gives R = D exactly") {
        const std::vector<Mat2> f1(m, Mat2{});
        const auto R = build_R(sys, f1, w);
        for (int k = 0; k < m; ++k) {
            const double x = static_cast<double>(k) / (m - 1);
            const Mat2 d = weight_D(w, sys, x);
            CHECK(R[k].a11 == d.a11);
            CHECK(R[k].a22 == d.a22);
            CHECK(R[k].a12 == 0.0);
            CHECK(R[k].a21 == 0.0);
        }
        CHECK(check_symmetry_identity(R, sigma_minus_f1(sys, f1)) == 0.0);
    }

    SUBCASE("random small perturbations") {
        std::mt19937 rng(31);
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        double k1 = 1e300;
        for (int k = 0; k < m; ++k) {
            const double x = static_cast<double>(k) / (m - 1);
            k1 = std::min(k1, sys.eps1(x) + sys.eps2(x));
        }
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<Mat2> f1(m);
            for (auto& f : f1) {
                f = Mat2{uni(rng), uni(rng), uni(rng), uni(rng)};
                const double scale = 0.1 * k1 / f.max_abs();
                f = Mat2{f.a11 * scale, f.a12 * scale, f.a21 * scale, f.a22 * scale};
            }
            const auto R = build_R(sys, f1, w);
            CHECK(check_symmetry_identity(R, sigma_minus_f1(sys, f1)) <= 1e-12);
            for (const auto& r : R) CHECK(r.a12 == r.a21);
        }
    }

    SUBCASE("dropping the antidiagonal breaks the identity") {
        std::vector<Mat2> f1(m, Mat2{0.0, 0.2, -0.1, 0.0});
        std::vector<Mat2> d_only(m);
        for (int k = 0; k < m; ++k) {
            const double x = static_cast<double>(k) / (m - 1);
            d_only[k] = weight_D(w, sys, x);
        }
        CHECK(check_symmetry_identity(d_only, sigma_minus_f1(sys, f1)) > 1e-3);
    }

    SUBCASE("large states are rejected") {
        std::vector<Mat2> f1(m, Mat2{-5.0, 0.0, 0.0, 5.0});
        CHECK_THROWS_AS(build_R(sys, f1, w), SmallDenominator);
    }
}

TEST_CASE("R stays positive definite inside the computed radius") {
    const LinearSystemSpec sys = smooth_sys();
    const LyapunovWeights w = LyapunovWeights::from_rates(sys, 1.0, 1.0);
    const double k2 = 1.0;  // Lipschitz scale of the speed perturbation used below
    const double delta = r_positivity_radius(sys, w, k2);
    CHECK(delta > 0.0);

    std::mt19937 rng(77);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const int m = 33;
    for (int trial = 0; trial < 50; ++trial) {
        // states bounded by delta, perturbations Lipschitz with constant k2
        std::vector<Mat2> f1(m);
        for (auto& f : f1) {
            const double g1 = delta * uni(rng);
            const double g2 = delta * uni(rng);
            f = Mat2{k2 * g1, k2 * g2, k2 * g1 * uni(rng), k2 * g2 * uni(rng)};
        }
        const auto R = build_R(sys, f1, w);
        for (const auto& r : R) {
            const double tr = r.a11 + r.a22;
            const double det = r.a11 * r.a22 - r.a12 * r.a21;
            CHECK(tr > 0.0);
            CHECK(det > 0.0);
        }
    }
}

TEST_CASE("decay rate fitting") {
    std::vector<double> ts, ns;
    for (int k = 0; k <= 40; ++k) {
        const double t = 0.1 * k;
        ts.push_back(t);
        ns.push_back(std::exp(-2.0 * t));
    }
    const auto [rate, r2] = fit_decay_rate(ts, ns, 0.0, 4.0);
    CHECK(rate == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(r2 == doctest::Approx(1.0).epsilon(1e-9));

    std::vector<double> flat(ts.size(), 3.5);
    const auto [rate0, r20] = fit_decay_rate(ts, flat, 0.0, 4.0);
    CHECK(rate0 == doctest::Approx(0.0));
    (void)r20;

    std::vector<double> with_zero = ns;
    with_zero[20] = 0.0;
    CHECK_THROWS_AS(fit_decay_rate(ts, with_zero, 0.0, 4.0), NonPositiveNorm);

    CHECK_THROWS_AS(fit_decay_rate(ts, ns, 0.0, 0.2), std::invalid_argument);
}
