#include "backstep/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>

#include "backstep/backstepping.hpp"
#include "backstep/csv.hpp"
#include "backstep/diagnostics.hpp"
#include "backstep/errors.hpp"
#include "backstep/simulator.hpp"

namespace backstep {

namespace {

void fail(const std::string& stage, const Error& e) {
    std::cerr << "ERROR stage=" << stage << " code=" << e.code() << " msg=\"" << e.what()
              << "\"\n";
}

void fail_generic(const std::string& stage, const std::exception& e) {
    std::cerr << "ERROR stage=" << stage << " code=Error msg=\"" << e.what() << "\"\n";
}

LinearSystemSpec linear_spec_from(const ScenarioConfig& cfg) {
    LinearSystemSpec sys;
    auto e1 = std::make_shared<Expression>(cfg.eps1);
    auto e2 = std::make_shared<Expression>(cfg.eps2);
    auto c1 = std::make_shared<Expression>(cfg.c1);
    auto c2 = std::make_shared<Expression>(cfg.c2);
    sys.eps1 = [e1](double x) { return e1->eval(x); };
    sys.eps2 = [e2](double x) { return e2->eval(x); };
    sys.c1 = [c1](double x) { return c1->eval(x); };
    sys.c2 = [c2](double x) { return c2->eval(x); };
    sys.q = cfg.q;
    return sys;
}

QuasilinearSystemSpec quasilinear_spec_from(const ScenarioConfig& cfg) {
    QuasilinearSystemSpec q;
    auto l11 = std::make_shared<Expression>(cfg.lambda11);
    auto l12 = std::make_shared<Expression>(cfg.lambda12);
    auto l21 = std::make_shared<Expression>(cfg.lambda21);
    auto l22 = std::make_shared<Expression>(cfg.lambda22);
    auto f1 = std::make_shared<Expression>(cfg.f1);
    auto f2 = std::make_shared<Expression>(cfg.f2);
    auto g0 = std::make_shared<Expression>(cfg.g0);
    q.Lambda = [l11, l12, l21, l22](const std::array<double, 2>& z, double x) {
        return Mat2{l11->eval(x, z[0], z[1]), l12->eval(x, z[0], z[1]),
                    l21->eval(x, z[0], z[1]), l22->eval(x, z[0], z[1])};
    };
    q.f = [f1, f2](const std::array<double, 2>& z, double x) {
        return std::array<double, 2>{f1->eval(x, z[0], z[1]), f2->eval(x, z[0], z[1])};
    };
    q.G0 = [g0](double v) { return g0->eval(0.0, 0.0, v); };
    q.fill_linearization();
    return q;
}

/// Rolling decay-rate estimates for the diagnostics CSV; NaN where the
/// window has too few positive samples.
std::vector<double> rolling_rates(const std::vector<double>& times,
                                  const std::vector<double>& norms, double window) {
    std::vector<double> rates(times.size(), std::nan(""));
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double t1 = times[k];
        const double t0 = t1 - window;
        try {
            rates[k] = fit_decay_rate(times, norms, t0, t1).first;
        } catch (const std::exception&) {
            // leave NaN
        }
    }
    return rates;
}

double tail_rate(const std::vector<double>& times, const std::vector<double>& norms,
                 double t_start, double t_end) {
    // shrink the window away from exact zeros (finite-time convergence)
    double hi = t_end;
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (times[k] > t_start && !(norms[k] > 0.0)) {
            hi = std::min(hi, times[k]);
        }
    }
    try {
        return fit_decay_rate(times, norms, t_start, hi * (1.0 - 1e-12)).first;
    } catch (const std::exception&) {
        return std::nan("");
    }
}

struct Outputs {
    std::filesystem::path dir;
    std::string kernel_csv() const { return (dir / "kernel.csv").string(); }
    std::string gains_csv() const { return (dir / "gains.csv").string(); }
    std::string trace_csv() const { return (dir / "trace.csv").string(); }
    std::string diagnostics_csv() const { return (dir / "diagnostics.csv").string(); }
    std::string final_state_csv() const { return (dir / "final_state.csv").string(); }
};

std::vector<double> norm_column(const SimulationTrace& trace, double NormRow::* member) {
    std::vector<double> v(trace.size());
    for (std::size_t k = 0; k < trace.size(); ++k) v[k] = trace.norms[k].*member;
    return v;
}

int run_linear(const ScenarioConfig& cfg, const RunOptions& opts, const Outputs& out) {
    std::string stage = "config";
    try {
        LinearSystemSpec sys = linear_spec_from(cfg);

        stage = "kernel-assembly";
        sys.validate();
        const double t_f = finite_time_horizon(sys);
        const int n = opts.grid_n.value_or(cfg.grid_n);
        const TriangularGrid grid(n);
        const bool q0_branch = std::abs(sys.q) < kQMin;
        GoursatProblem problem = q0_branch
                                     ? assemble_q0_kernel_problem(sys, nullptr, grid.h())
                                     : assemble_direct_kernel_problem(sys, grid.h());

        stage = "kernel-solve";
        PicardOptions popts;
        popts.tol = cfg.picard_tol;
        popts.max_iter = cfg.picard_max_iter;
        KernelSet kernels = picard_solve(problem, grid, popts);

        stage = "gains";
        ControllerGains gains = extract_gains(kernels, cfg.m);

        stage = "output";
        write_kernel_csv(out.kernel_csv(), kernels);
        write_gains_csv(out.gains_csv(), gains);
        if (opts.kernels_only) {
            if (!opts.quiet) {
                std::cout << "t_F=" << t_f << " picard_iterations=" << kernels.iterations
                          << " final_increment=" << kernels.final_increment << "\n";
            }
            return kExitOk;
        }

        stage = "simulate";
        SchemeConfig scheme;
        scheme.m = cfg.m;
        scheme.cfl = cfg.cfl;
        scheme.t_end = cfg.t_end > 0.0 ? cfg.t_end : 1.25 * t_f;
        scheme.snapshot_stride = cfg.snapshot_stride;
        auto i1 = std::make_shared<Expression>(cfg.init1);
        auto i2 = std::make_shared<Expression>(cfg.init2);
        const StateField w0 = StateField::sample(
            cfg.m, [i1](double x) { return i1->eval(x); },
            [i2](double x) { return i2->eval(x); });
        std::optional<ControllerGains> loop;
        if (cfg.closed_loop) loop = gains;
        SimulationTrace trace = simulate_linear(sys, loop, w0, scheme);

        stage = "diagnostics";
        const LyapunovWeights weights = LyapunovWeights::from_rates(sys, 1.0, 1.0);
        const CachedVolterra to_target(kernels, cfg.m, -1.0);
        std::vector<double> v1(trace.size());
        for (std::size_t k = 0; k < trace.size(); ++k) {
            v1[k] = lyapunov_V1(weights, sys, to_target.apply(trace.snapshots[k]));
        }
        const auto l2 = norm_column(trace, &NormRow::l2);
        const auto rates = rolling_rates(trace.times, l2, 0.5 * t_f);
        const double rate = tail_rate(trace.times, l2, 0.5 * scheme.t_end, scheme.t_end);

        stage = "output";
        write_trace_csv(out.trace_csv(), trace);
        write_diagnostics_csv(out.diagnostics_csv(), trace.times, v1, rates);
        write_state_csv(out.final_state_csv(), trace.snapshots.back());

        if (!opts.quiet) {
            std::cout << "t_F=" << t_f << " picard_iterations=" << kernels.iterations
                      << " final_L2=" << trace.norms.back().l2
                      << " final_H2=" << trace.norms.back().h2 << " fitted_rate=" << rate
                      << "\n";
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        fail(stage, e);
        return kExitConfig;
    } catch (const Error& e) {
        fail(stage, e);
        return kExitNumerical;
    } catch (const std::exception& e) {
        fail_generic(stage, e);
        return kExitNumerical;
    }
}

int run_quasilinear(const ScenarioConfig& cfg, const RunOptions& opts, const Outputs& out) {
    std::string stage = "config";
    try {
        QuasilinearSystemSpec plant = quasilinear_spec_from(cfg);
        plant.validate();

        stage = "kernel-assembly";
        LinearDesign design = build_linear_spec(plant);
        const double t_f = finite_time_horizon(design.sys);
        const int n = opts.grid_n.value_or(cfg.grid_n);
        const TriangularGrid grid(n);
        const bool q0_branch = std::abs(design.sys.q) < kQMin;
        GoursatProblem problem = q0_branch
                                     ? assemble_q0_kernel_problem(design.sys, nullptr, grid.h())
                                     : assemble_direct_kernel_problem(design.sys, grid.h());

        stage = "kernel-solve";
        PicardOptions popts;
        popts.tol = cfg.picard_tol;
        popts.max_iter = cfg.picard_max_iter;
        KernelSet kernels = picard_solve(problem, grid, popts);

        stage = "gains";
        ControllerGains gains = extract_gains(kernels, cfg.m, design.phi1, design.phi2);

        stage = "output";
        write_kernel_csv(out.kernel_csv(), kernels);
        write_gains_csv(out.gains_csv(), gains);
        if (opts.kernels_only) {
            if (!opts.quiet) {
                std::cout << "t_F=" << t_f << " picard_iterations=" << kernels.iterations
                          << " final_increment=" << kernels.final_increment << "\n";
            }
            return kExitOk;
        }

        stage = "simulate";
        auto i1 = std::make_shared<Expression>(cfg.init1);
        auto i2 = std::make_shared<Expression>(cfg.init2);
        const StateField z0 = StateField::sample(
            cfg.m, [i1](double x) { return i1->eval(x); },
            [i2](double x) { return i2->eval(x); });
        const auto natural = check_natural_compatibility(plant, z0);
        if (!opts.quiet &&
            (std::abs(natural.first) > 1e-9 || std::abs(natural.second) > 1e-6)) {
            std::cout << "warning: natural compatibility residuals " << natural.first << ", "
                      << natural.second << "\n";
        }
        DynamicExtension ext = init_extension(plant, gains, z0, cfg.d1, cfg.d2);
        SchemeConfig scheme;
        scheme.m = cfg.m;
        scheme.cfl = cfg.cfl;
        scheme.t_end = cfg.t_end > 0.0 ? cfg.t_end : 3.0 * t_f;
        scheme.snapshot_stride = cfg.snapshot_stride;
        SimulationTrace trace = simulate_quasilinear(plant, gains, ext, z0, scheme);

        stage = "diagnostics";
        const LyapunovWeights weights = LyapunovWeights::from_rates(design.sys, 1.0, 1.0);
        const CachedVolterra to_target(kernels, cfg.m, -1.0);
        std::vector<double> v1(trace.size());
        for (std::size_t k = 0; k < trace.size(); ++k) {
            // Lyapunov form lives in the transformed coordinates
            StateField w(cfg.m);
            for (int l = 0; l < cfg.m; ++l) {
                const double x = w.x(l);
                w.c1[l] = design.phi1(x) * trace.snapshots[k].c1[l];
                w.c2[l] = design.phi2(x) * trace.snapshots[k].c2[l];
            }
            v1[k] = lyapunov_V1(weights, design.sys, to_target.apply(w));
        }
        const auto h2 = norm_column(trace, &NormRow::h2);
        const auto rates = rolling_rates(trace.times, h2, t_f);
        const double rate = tail_rate(trace.times, h2, t_f, scheme.t_end);

        stage = "output";
        write_trace_csv(out.trace_csv(), trace);
        write_diagnostics_csv(out.diagnostics_csv(), trace.times, v1, rates);
        write_state_csv(out.final_state_csv(), trace.snapshots.back());

        if (!opts.quiet) {
            std::cout << "t_F=" << t_f << " picard_iterations=" << kernels.iterations
                      << " final_L2=" << trace.norms.back().l2
                      << " final_H2=" << trace.norms.back().h2 << " fitted_H2_rate=" << rate
                      << " a_end=" << trace.a.back() << " b_end=" << trace.b.back() << "\n";
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        fail(stage, e);
        return kExitConfig;
    } catch (const Error& e) {
        fail(stage, e);
        return kExitNumerical;
    } catch (const std::exception& e) {
        fail_generic(stage, e);
        return kExitNumerical;
    }
}

int run_target_exact(const ScenarioConfig& cfg, const RunOptions& opts, const Outputs& out) {
    std::string stage = "config";
    try {
        LinearSystemSpec sys = linear_spec_from(cfg);
        sys.validate();
        const double t_f = finite_time_horizon(sys);

        stage = "simulate";
        auto i1 = std::make_shared<Expression>(cfg.init1);
        auto i2 = std::make_shared<Expression>(cfg.init2);
        TargetExact exact(
            sys, [i1](double x) { return i1->eval(x); },
            [i2](double x) { return i2->eval(x); });
        const double t_end = cfg.t_end > 0.0 ? cfg.t_end : t_f;
        const int steps = 200;
        SimulationTrace trace;
        for (int j = 0; j <= steps; ++j) {
            const double t = t_end * static_cast<double>(j) / steps;
            StateField s(cfg.m);
            for (int k = 0; k < cfg.m; ++k) {
                const auto ab = exact(s.x(k), t);
                s.c1[k] = ab[0];
                s.c2[k] = ab[1];
            }
            trace.times.push_back(t);
            trace.snapshots.push_back(s);
            trace.a.push_back(0.0);
            trace.b.push_back(0.0);
            trace.control.push_back(0.0);
            trace.norms.push_back(all_norms(s));
        }

        stage = "diagnostics";
        const LyapunovWeights weights = LyapunovWeights::from_rates(sys, 1.0, 1.0);
        std::vector<double> v1(trace.size());
        for (std::size_t k = 0; k < trace.size(); ++k) {
            v1[k] = lyapunov_V1(weights, sys, trace.snapshots[k]);
        }
        const auto l2 = norm_column(trace, &NormRow::l2);
        const auto rates = rolling_rates(trace.times, l2, 0.5 * t_f);

        stage = "output";
        write_trace_csv(out.trace_csv(), trace);
        write_diagnostics_csv(out.diagnostics_csv(), trace.times, v1, rates);
        write_state_csv(out.final_state_csv(), trace.snapshots.back());

        if (!opts.quiet) {
            std::cout << "t_F=" << t_f << " final_L2=" << trace.norms.back().l2 << "\n";
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        fail(stage, e);
        return kExitConfig;
    } catch (const Error& e) {
        fail(stage, e);
        return kExitNumerical;
    } catch (const std::exception& e) {
        fail_generic(stage, e);
        return kExitNumerical;
    }
}

}  // namespace

int run_scenario(const ScenarioConfig& cfg, const RunOptions& opts) {
    Outputs out;
    out.dir = opts.out_dir.value_or(cfg.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(out.dir, ec);
    if (ec) {
        std::cerr << "ERROR stage=output code=ConfigError msg=\"cannot create output dir "
                  << out.dir.string() << "\"\n";
        return kExitConfig;
    }
    switch (cfg.kind) {
        case ScenarioKind::Linear: return run_linear(cfg, opts, out);
        case ScenarioKind::Quasilinear: return run_quasilinear(cfg, opts, out);
        default: return run_target_exact(cfg, opts, out);
    }
}

int run_scenario_file(const std::string& path, const RunOptions& opts) {
    try {
        const ScenarioConfig cfg = load_config(path);
        return run_scenario(cfg, opts);
    } catch (const Error& e) {
        fail("config", e);
        return kExitConfig;
    }
}

}  // namespace backstep
