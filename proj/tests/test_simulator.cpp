#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "backstep/backstepping.hpp"
#include "backstep/diagnostics.hpp"
#include "backstep/errors.hpp"
#include "backstep/simulator.hpp"

using namespace backstep;

namespace {

constexpr double kPi = 3.14159265358979323846;

LinearSystemSpec benchmark_sys() {
    LinearSystemSpec sys;
    sys.eps1 = [](double) { return 1.0; };
    sys.eps2 = [](double) { return 1.0; };
    sys.c1 = [](double) { return 1.0; };
    sys.c2 = [](double) { return 1.0; };
    sys.q = 1.0;
    return sys;
}

QuasilinearSystemSpec benchmark_plant() {
    QuasilinearSystemSpec q;
    q.Lambda = [](const std::array<double, 2>& z, double) {
        return Mat2::diag(1.0 + z[0], -1.0 + z[1]);
    };
    q.f = [](const std::array<double, 2>& z, double) {
        return std::array<double, 2>{0.5 * z[1], 0.5 * z[0]};
    };
    q.G0 = [](double v) { return v; };
    q.fill_linearization();
    return q;
}

ScalarFn hump() {
    return [](double x) { return std::sin(kPi * x); };
}

}  // namespace

TEST_CASE("exact target solution") {
    LinearSystemSpec sys = benchmark_sys();
    sys.eps2 = [](double) { return 2.0; };
    const ScalarFn a0 = hump();
    const ScalarFn b0 = [](double x) { return std::cos(0.5 * kPi * x); };
    const TargetExact exact(sys, a0, b0);

    CHECK(exact.t_final() == doctest::Approx(1.5).epsilon(1e-14));

    for (double x : {0.0, 0.4, 1.0}) {
        const auto v = exact(x, 0.0);
        CHECK(v[0] == doctest::Approx(a0(x)).epsilon(1e-9));
        CHECK(v[1] == doctest::Approx(b0(x)).epsilon(1e-9));
    }
    for (double x : {0.0, 0.3, 0.8, 1.0}) {
        const auto v = exact(x, exact.t_final() + 1e-9);
        CHECK(v[0] == 0.0);
        CHECK(v[1] == 0.0);
    }
}

TEST_CASE("pure transport empties the domain") {
    LinearSystemSpec sys;
    sys.eps1 = [](double) { return 1.0; };
    sys.eps2 = [](double) { return 1.0; };
    sys.q = 0.0;
    SchemeConfig cfg;
    cfg.m = 400;
    cfg.cfl = 0.9;
    cfg.t_end = finite_time_horizon(sys);
    cfg.snapshot_stride = 64;
    const StateField w0 = StateField::sample(cfg.m, hump(), nullptr);
    const SimulationTrace trace = simulate_linear(sys, std::nullopt, w0, cfg);
    CHECK(trace.norms.back().l2 <= 1e-2 * trace.norms.front().l2);
}

TEST_CASE("closed loop decays like the target") {
    const LinearSystemSpec sys = benchmark_sys();
    const TriangularGrid grid(101);
    const KernelSet k = picard_solve(assemble_direct_kernel_problem(sys), grid);

    SchemeConfig cfg;
    cfg.m = 200;
    cfg.cfl = 0.9;
    const double t_f = finite_time_horizon(sys);
    cfg.t_end = 1.25 * t_f;
    cfg.snapshot_stride = 16;
    const ControllerGains gains = extract_gains(k, cfg.m);
    const StateField w0 = StateField::sample(cfg.m, hump(), hump());
    const SimulationTrace trace = simulate_linear(sys, gains, w0, cfg);
    CHECK(trace.norms.back().l2 <= 3e-2 * trace.norms.front().l2);
}

TEST_CASE("transformed closed-loop state tracks the exact target") {
    const LinearSystemSpec sys = benchmark_sys();
    const TriangularGrid grid(101);
    const KernelSet k = picard_solve(assemble_direct_kernel_problem(sys), grid);
    const KernelSet l = picard_solve(assemble_inverse_kernel_problem(sys), grid);
    const double t_f = finite_time_horizon(sys);

    // smooth compactly supported target data: compatible with the target
    // boundary rows to every order
    auto bump = [](double center, double width) {
        return [center, width](double x) {
            const double r = (x - center) / width;
            if (std::abs(r) >= 1.0) return 0.0;
            return std::exp(-1.0 / (1.0 - r * r) + 1.0);
        };
    };
    const ScalarFn alpha0 = bump(0.35, 0.25);
    const ScalarFn beta0 = bump(0.6, 0.3);
    const TargetExact exact(sys, alpha0, beta0);

    auto run_error = [&](int m) {
        SchemeConfig cfg;
        cfg.m = m;
        cfg.cfl = 0.9;
        cfg.t_end = 0.5 * t_f;
        cfg.snapshot_stride = 1000000;  // keep first and last only
        const ControllerGains gains = extract_gains(k, m);
        const StateField w0 = inverse_transform(l, StateField::sample(m, alpha0, beta0));
        const SimulationTrace trace = simulate_linear(sys, gains, w0, cfg);

        const StateField gamma = direct_transform(k, trace.snapshots.back());
        const double t = trace.times.back();
        double sup = 0.0;
        for (int j = 0; j < m; ++j) {
            const auto ref = exact(gamma.x(j), t);
            sup = std::max(sup, std::abs(gamma.c1[j] - ref[0]));
            sup = std::max(sup, std::abs(gamma.c2[j] - ref[1]));
        }
        return sup;
    };

    const double e200 = run_error(200);
    const double e400 = run_error(400);
    CHECK(e400 <= 10.0 / 399.0);  // 10h at the finer resolution
    const double ratio = e200 / e400;
    CHECK(ratio >= 1.5);
    CHECK(ratio <= 3.0);
}

TEST_CASE("variable-speed transport follows the characteristics") {
    LinearSystemSpec sys;
    sys.eps1 = [](double x) { return 1.0 + 0.5 * x; };
    sys.eps2 = [](double x) { return 2.0 - 0.8 * x; };
    sys.q = 0.0;

    auto bump = [](double center, double width) {
        return ScalarFn([center, width](double x) {
            const double r = (x - center) / width;
            if (std::abs(r) >= 1.0) return 0.0;
            return std::exp(-1.0 / (1.0 - r * r) + 1.0);
        });
    };
    const ScalarFn a0 = bump(0.3, 0.2);
    const ScalarFn b0 = bump(0.7, 0.2);
    const TargetExact exact(sys, a0, b0);

    auto run_error = [&](int m) {
        SchemeConfig cfg;
        cfg.m = m;
        cfg.cfl = 0.9;
        cfg.t_end = 0.25;
        cfg.snapshot_stride = 1 << 30;
        const StateField w0 = StateField::sample(m, a0, b0);
        const SimulationTrace trace = simulate_linear(sys, std::nullopt, w0, cfg);
        const StateField& last = trace.snapshots.back();
        double sup = 0.0;
        for (int k = 0; k < m; ++k) {
            const auto ref = exact(last.x(k), trace.times.back());
            sup = std::max(sup, std::abs(last.c1[k] - ref[0]));
            sup = std::max(sup, std::abs(last.c2[k] - ref[1]));
        }
        return sup;
    };
    const double e400 = run_error(400);
    const double e800 = run_error(800);
    CHECK(e400 <= 0.1);
    CHECK(e400 / e800 >= 1.5);
    CHECK(e400 / e800 <= 3.0);
}

TEST_CASE("quasilinear equilibrium stays put") {
    const QuasilinearSystemSpec plant = benchmark_plant();
    const LinearDesign design = build_linear_spec(plant);
    const TriangularGrid grid(51);
    const KernelSet k = picard_solve(assemble_direct_kernel_problem(design.sys), grid);
    SchemeConfig cfg;
    cfg.m = 64;
    cfg.t_end = 0.5;
    const ControllerGains gains = extract_gains(k, cfg.m, design.phi1, design.phi2);
    const StateField z0(cfg.m);
    DynamicExtension ext;
    const SimulationTrace trace = simulate_quasilinear(plant, gains, ext, z0, cfg);
    for (const auto& row : trace.norms) {
        CHECK(row.l2 == 0.0);
        CHECK(row.sup == 0.0);
    }
}

TEST_CASE("trivial quasilinear run reduces to the linear one") {
    QuasilinearSystemSpec plant;
    plant.Lambda = [](const std::array<double, 2>&, double) { return Mat2::diag(1.0, -1.0); };
    plant.f = [](const std::array<double, 2>&, double) { return std::array<double, 2>{0.0, 0.0}; };
    plant.G0 = [](double v) { return v; };
    plant.fill_linearization();

    LinearSystemSpec lin;
    lin.eps1 = [](double) { return 1.0; };
    lin.eps2 = [](double) { return 1.0; };
    lin.q = 1.0;

    SchemeConfig cfg;
    cfg.m = 128;
    cfg.cfl = 0.9;
    cfg.t_end = 0.7;
    cfg.snapshot_stride = 8;

    ControllerGains zero_gains;
    zero_gains.kvu.assign(cfg.m, 0.0);
    zero_gains.kvv.assign(cfg.m, 0.0);
    zero_gains.phi1_scale.assign(cfg.m, 1.0);
    zero_gains.phi2_scale.assign(cfg.m, 1.0);

    const StateField z0 = StateField::sample(cfg.m, hump(), nullptr);
    DynamicExtension ext;
    const SimulationTrace quasi = simulate_quasilinear(plant, zero_gains, ext, z0, cfg);
    const SimulationTrace linear = simulate_linear(lin, std::nullopt, z0, cfg);

    REQUIRE(quasi.size() == linear.size());
    for (std::size_t s = 0; s < quasi.size(); ++s) {
        for (int l = 0; l < cfg.m; ++l) {
            CHECK(std::abs(quasi.snapshots[s].c1[l] - linear.snapshots[s].c1[l]) <= 1e-12);
            CHECK(std::abs(quasi.snapshots[s].c2[l] - linear.snapshots[s].c2[l]) <= 1e-12);
        }
    }
}

TEST_CASE("benchmark quasilinear loop decays in H2") {
    const QuasilinearSystemSpec plant = benchmark_plant();
    const LinearDesign design = build_linear_spec(plant);
    const TriangularGrid grid(101);
    const KernelSet k = picard_solve(assemble_direct_kernel_problem(design.sys), grid);
    const double t_f = finite_time_horizon(design.sys);

    SchemeConfig cfg;
    cfg.m = 200;
    cfg.cfl = 0.9;
    cfg.t_end = 3.0 * t_f;
    cfg.snapshot_stride = 8;
    const ControllerGains gains = extract_gains(k, cfg.m, design.phi1, design.phi2);
    const StateField z0 = StateField::sample(
        cfg.m, [](double x) { return 0.05 * std::sin(kPi * x); },
        [](double x) { return 0.05 * std::sin(kPi * x); });
    const DynamicExtension ext = init_extension(plant, gains, z0, 1.0, 2.0);
    const SimulationTrace trace = simulate_quasilinear(plant, gains, ext, z0, cfg);

    // controller states decay exactly
    for (std::size_t s = 0; s < trace.size(); ++s) {
        const double expect_a = ext.a * std::exp(-1.0 * trace.times[s]);
        const double expect_b = ext.b * std::exp(-2.0 * trace.times[s]);
        CHECK(std::abs(trace.a[s] - expect_a) <= 1e-12 * (std::abs(ext.a) + 1.0));
        CHECK(std::abs(trace.b[s] - expect_b) <= 1e-12 * (std::abs(ext.b) + 1.0));
    }

    // H2 norm shrinks substantially across the run
    CHECK(trace.norms.back().h2 < 0.05 * trace.norms.front().h2);
}

TEST_CASE("off-diagonal speed dependence still stabilizes") {
    QuasilinearSystemSpec plant;
    plant.Lambda = [](const std::array<double, 2>& z, double) {
        return Mat2{1.0 + z[0], 0.1 * z[1], 0.05 * z[0], -1.0 + z[1]};
    };
    plant.f = [](const std::array<double, 2>& z, double) {
        return std::array<double, 2>{0.5 * z[1], 0.5 * z[0]};
    };
    plant.G0 = [](double v) { return v; };
    plant.fill_linearization();

    const LinearDesign design = build_linear_spec(plant);
    const TriangularGrid grid(51);
    const KernelSet k = picard_solve(assemble_direct_kernel_problem(design.sys), grid);
    const double t_f = finite_time_horizon(design.sys);

    SchemeConfig cfg;
    cfg.m = 150;
    cfg.cfl = 0.9;
    cfg.t_end = 3.0 * t_f;
    cfg.snapshot_stride = 8;
    const ControllerGains gains = extract_gains(k, cfg.m, design.phi1, design.phi2);
    const StateField z0 = StateField::sample(
        cfg.m, [](double x) { return 0.05 * std::sin(kPi * x); },
        [](double x) { return 0.05 * std::sin(kPi * x); });
    const DynamicExtension ext = init_extension(plant, gains, z0, 1.0, 2.0);
    const SimulationTrace trace = simulate_quasilinear(plant, gains, ext, z0, cfg);

    std::vector<double> h2(trace.size());
    for (std::size_t s = 0; s < trace.size(); ++s) h2[s] = trace.norms[s].h2;
    const auto [rate, r2] = fit_decay_rate(trace.times, h2, t_f, 3.0 * t_f);
    CHECK(rate > 0.0);
    CHECK(trace.norms.back().h2 < 0.1 * trace.norms.front().h2);
    (void)r2;
}

TEST_CASE("divergence guard fires on a blowing-up system") {
    LinearSystemSpec sys = benchmark_sys();
    sys.c1 = [](double) { return 60.0; };
    sys.c2 = [](double) { return 60.0; };
    SchemeConfig cfg;
    cfg.m = 100;
    cfg.t_end = 5.0;
    cfg.snapshot_stride = 50;
    const StateField w0 = StateField::sample(cfg.m, hump(), hump());
    CHECK_THROWS_AS(simulate_linear(sys, std::nullopt, w0, cfg), UnstableStep);
}

TEST_CASE("hyperbolicity guard fires when the state leaves the region") {
    QuasilinearSystemSpec plant = benchmark_plant();
    SchemeConfig cfg;
    cfg.m = 64;
    cfg.t_end = 1.0;
    ControllerGains zero_gains;
    zero_gains.kvu.assign(cfg.m, 0.0);
    zero_gains.kvv.assign(cfg.m, 0.0);
    zero_gains.phi1_scale.assign(cfg.m, 1.0);
    zero_gains.phi2_scale.assign(cfg.m, 1.0);
    // second speed -1 + z2 crosses zero for z2 >= 1
    const StateField z0 = StateField::sample(
        cfg.m, nullptr, [](double x) { return 1.5 * std::sin(kPi * x); });
    DynamicExtension ext;
    CHECK_THROWS_AS(simulate_quasilinear(plant, zero_gains, ext, z0, cfg),
                    HyperbolicitySignChange);
}

TEST_CASE("cfl 0.9 is stable across constant-coefficient systems") {
    for (double e1 : {0.5, 2.0}) {
        for (double e2 : {1.0, 2.0}) {
            for (double c : {0.0, 1.0}) {
                for (double q : {0.0, 1.0}) {
                    LinearSystemSpec sys;
                    sys.eps1 = [e1](double) { return e1; };
                    sys.eps2 = [e2](double) { return e2; };
                    sys.c1 = [c](double) { return c; };
                    sys.c2 = [c](double) { return c; };
                    sys.q = q;
                    SchemeConfig cfg;
                    cfg.m = 100;
                    cfg.cfl = 0.9;
                    cfg.t_end = finite_time_horizon(sys);
                    cfg.snapshot_stride = 1000000;
                    const StateField w0 = StateField::sample(cfg.m, hump(), hump());
                    CHECK_NOTHROW(simulate_linear(sys, std::nullopt, w0, cfg));
                }
            }
        }
    }
}

TEST_CASE("step report lists every recorded time") {
    LinearSystemSpec sys = benchmark_sys();
    SchemeConfig cfg;
    cfg.m = 64;
    cfg.t_end = 0.2;
    cfg.snapshot_stride = 4;
    const StateField w0 = StateField::sample(cfg.m, hump(), nullptr);
    const SimulationTrace trace = simulate_linear(sys, std::nullopt, w0, cfg);
    const std::string report = step_report(trace);
    CHECK(report.find("t,L2,H1,H2,sup,a,b,U") == 0);
    std::size_t lines = 0;
    for (char ch : report) lines += ch == '\n';
    CHECK(lines == trace.size() + 1);
    // times strictly increasing
    for (std::size_t s = 1; s < trace.size(); ++s) CHECK(trace.times[s] > trace.times[s - 1]);
}
