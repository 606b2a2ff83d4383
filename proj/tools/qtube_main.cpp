#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "qtube/errors.hpp"
#include "qtube/experiment.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_dir;
    int trajectories = -1;
    bool export_snapshots = false;
};

void add_common(CLI::App* sub, CliOptions& opt) {
    sub->add_option("--config", opt.config_path, "key-value run configuration file");
    sub->add_option("--out", opt.out_dir, "output directory (default from config)");
    sub->add_option("--trajectories", opt.trajectories, "ensemble size override");
    sub->add_flag("--export-snapshots", opt.export_snapshots, "also write snapshots.csv");
}

qtube::RunConfig build_config(qtube::Scenario scenario, const CliOptions& opt) {
    qtube::RunConfig cfg;
    switch (scenario) {
        case qtube::Scenario::tunnel: cfg = qtube::tunnel_preset(); break;
        case qtube::Scenario::grating: cfg = qtube::grating_preset(); break;
        case qtube::Scenario::custom: cfg.scenario = qtube::Scenario::custom; break;
    }
    if (!opt.config_path.empty()) qtube::apply_config_file(cfg, opt.config_path);
    if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
    if (opt.trajectories >= 0) cfg.ensemble.n_trajectories = opt.trajectories;
    if (opt.export_snapshots) cfg.export_snapshots = true;
    return cfg;
}

void print_summary(const qtube::ExperimentReport& report, const std::string& out_dir) {
    std::printf("run complete: %zu snapshots, t_final = %g\n", report.times.size(),
                report.times.back());
    std::printf("  norm drift %.3e, energy drift %.3e\n", report.max_norm_drift,
                report.max_energy_drift_rel);
    for (const auto& [label, value] : report.final_probabilities)
        std::printf("  %s(t_final) = %.6f\n", label.c_str(), value);
    if (report.separatrix_x_init)
        std::printf("  separatrix x(0) = %.6f\n", *report.separatrix_x_init);
    if (report.tube)
        std::printf("  tube %s: P0 = %.6f, std/mean = %.3e\n", report.tube->label.c_str(),
                    report.tube->p0, report.tube->std_over_mean);
    if (report.grating) {
        std::printf("  tube n0: P0 = %.6f (far-field estimate %.6f, deviation %.2f%%)\n",
                    report.grating->tube_n0.p0, report.grating->fraunhofer_estimate_n0,
                    100.0 * report.grating->deviation_n0);
        std::printf("  tube n+1: P0 = %.6f (far-field estimate %.6f, deviation %.2f%%)\n",
                    report.grating->tube_n1.p0, report.grating->fraunhofer_estimate_n1,
                    100.0 * report.grating->deviation_n1);
    }
    for (const auto& note : report.notes) std::printf("  note: %s\n", note.c_str());
    std::printf("  outputs in %s/\n", out_dir.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"1D wave-packet propagation with Bohmian probability-tube analysis"};
    app.require_subcommand(1);

    CliOptions opt;
    CLI::App* tunnel = app.add_subcommand("tunnel", "barrier-scattering scenario");
    CLI::App* grating = app.add_subcommand("grating", "five-slit diffraction scenario");
    CLI::App* custom = app.add_subcommand("custom", "user-defined scenario (config required)");
    add_common(tunnel, opt);
    add_common(grating, opt);
    add_common(custom, opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        qtube::ExperimentReport report;
        qtube::RunConfig cfg;
        if (tunnel->parsed()) {
            cfg = build_config(qtube::Scenario::tunnel, opt);
            report = qtube::run_tunneling(cfg);
        } else if (grating->parsed()) {
            cfg = build_config(qtube::Scenario::grating, opt);
            report = qtube::run_grating(cfg);
        } else {
            cfg = build_config(qtube::Scenario::custom, opt);
            if (opt.config_path.empty())
                throw qtube::ConfigError("custom scenario requires --config");
            report = qtube::run_custom(cfg);
        }
        print_summary(report, cfg.out_dir);
        return 0;
    } catch (const qtube::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const qtube::NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
