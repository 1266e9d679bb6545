#include <cmath>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "backstep/csv.hpp"
#include "backstep/diagnostics.hpp"
#include "backstep/errors.hpp"
#include "backstep/scenario.hpp"
#include "backstep/simulator.hpp"

namespace {

backstep::RunOptions make_options(const std::string& out_dir, int grid_n, bool quiet) {
    backstep::RunOptions opts;
    if (!out_dir.empty()) opts.out_dir = out_dir;
    if (grid_n > 0) opts.grid_n = grid_n;
    opts.quiet = quiet;
    return opts;
}

int report_trace(const std::string& path) {
    try {
        const backstep::SimulationTrace trace = backstep::read_trace_csv(path);
        std::cout << backstep::step_report(trace);
        if (trace.size() >= 5) {
            const double t0 = trace.times.front() + 0.5 * (trace.times.back() - trace.times.front());
            std::vector<double> l2(trace.size());
            for (std::size_t k = 0; k < trace.size(); ++k) l2[k] = trace.norms[k].l2;
            try {
                const auto [rate, r2] = backstep::fit_decay_rate(trace.times, l2, t0,
                                                                 trace.times.back());
                std::cout << "fitted_L2_rate=" << rate << " r2=" << r2 << "\n";
            } catch (const std::exception&) {
                std::cout << "fitted_L2_rate=unavailable\n";
            }
        }
        return backstep::kExitOk;
    } catch (const backstep::Error& e) {
        std::cerr << "ERROR stage=report code=" << e.code() << " msg=\"" << e.what() << "\"\n";
        return backstep::kExitConfig;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Boundary-feedback synthesis and simulation for 2x2 hyperbolic systems"};
    app.require_subcommand(1);

    std::string out_dir;
    int grid_n = 0;
    bool quiet = false;
    app.add_option("--out-dir", out_dir, "Directory for CSV outputs");
    app.add_option("--grid-n", grid_n, "Override the kernel grid resolution");
    app.add_flag("--quiet", quiet, "Suppress the summary line");

    std::string cfg_solve, cfg_sim, cfg_validate, trace_path;
    auto* solve = app.add_subcommand("solve-kernels", "Solve the gain kernels and export them");
    solve->add_option("config", cfg_solve, "Scenario config file")->required();
    auto* sim = app.add_subcommand("simulate", "Run the full closed-loop scenario");
    sim->add_option("config", cfg_sim, "Scenario config file")->required();
    auto* val = app.add_subcommand("validate", "Check a config without running it");
    val->add_option("config", cfg_validate, "Scenario config file")->required();
    auto* rep = app.add_subcommand("report", "Print the norm table of a trace CSV");
    rep->add_option("trace", trace_path, "Trace CSV file")->required();

    for (auto* sub : {solve, sim, val, rep}) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    if (solve->parsed()) {
        backstep::RunOptions opts = make_options(out_dir, grid_n, quiet);
        opts.kernels_only = true;
        return backstep::run_scenario_file(cfg_solve, opts);
    }
    if (sim->parsed()) {
        return backstep::run_scenario_file(cfg_sim, make_options(out_dir, grid_n, quiet));
    }
    if (val->parsed()) {
        const auto report = backstep::validate_config_file(cfg_validate);
        for (const auto& line : report) std::cout << line << "\n";
        return report.empty() ? backstep::kExitOk : backstep::kExitConfig;
    }
    return report_trace(trace_path);
}
