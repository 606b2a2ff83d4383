// Acceptance suite: one pass/fail line per criterion against the two
// published scenarios. Every tolerance is fixed here, in code.
#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "qtube/experiment.hpp"

using namespace qtube;

namespace {

struct Result {
    int id;
    std::string name;
    bool pass;
    std::string detail;
};

std::vector<Result> g_results;

void criterion(int id, const std::string& name, bool pass, const std::string& detail) {
    g_results.push_back({id, name, pass, detail});
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

double lookup_final(const ExperimentReport& r, const std::string& label) {
    for (const auto& [l, v] : r.final_probabilities)
        if (l == label) return v;
    return std::nan("");
}

const FluxStats* lookup_flux(const ExperimentReport& r, const std::string& label) {
    for (const auto& f : r.flux)
        if (f.label == label) return &f;
    return nullptr;
}

// ---------------------------------------------------------------------------
// barrier-scattering scenario
// ---------------------------------------------------------------------------
void run_tunnel_block() {
    std::fprintf(stderr, "running the barrier-scattering scenario...\n");
    const RunConfig cfg = [] {
        RunConfig c = tunnel_preset();
        c.out_dir = "acceptance_out/tunnel";
        return c;
    }();

    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentReport report = run_tunneling(cfg);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    criterion(1, "unitarity and energy conservation",
              report.max_norm_drift <= 1e-8 && report.max_energy_drift_rel <= 1e-6 &&
                  seconds <= 30.0,
              fmt("|norm-1| max %.2e (<=1e-8), energy drift %.2e (<=1e-6), %.1f s (<=30)",
                  report.max_norm_drift, report.max_energy_drift_rel, seconds));

    const bool noncross_tunnel =
        report.noncrossing && report.noncrossing->violations.empty();
    const double min_gap_tunnel = report.noncrossing ? report.noncrossing->min_gap : -1.0;

    criterion(4, "transmission-tube conservation",
              report.tube && report.tube->std_over_mean <= 5e-3,
              report.tube ? fmt("std/mean %.2e (<=5e-3), max |P-P0|/P0 %.2e",
                                report.tube->std_over_mean, report.tube->max_rel_dev)
                          : "tube missing");

    const bool closure_ok = report.closure && report.closure->rel_deviation <= 0.01 &&
                            report.closure->t_asymptotic >= 1.0 &&
                            report.closure->t_asymptotic <= 1.3;
    criterion(5, "initial-region probability equals asymptotic P_T",
              closure_ok,
              report.closure
                  ? fmt("tube P0 %.6f vs P_T %.6f (dev %.3f%% <= 1%%), onset t* %.3f in [1.0,1.3]",
                        report.closure->tube_p0, report.closure->asymptotic_p,
                        100.0 * report.closure->rel_deviation, report.closure->t_asymptotic)
                  : "closure missing");

    // flux balance on the static transmission domain, plus the first-order
    // convergence check with the snapshot stride halved
    const FluxStats* flux_t = lookup_flux(report, "T");
    double ratio_halved = 0.0;
    {
        RunConfig fine = cfg;
        fine.prop.snapshot_stride = cfg.prop.snapshot_stride / 2;
        fine.ensemble.n_trajectories = 0;
        fine.ensemble.born_probe_n = 0;
        fine.tube.enabled = false;
        fine.out_dir = "acceptance_out/tunnel_fine";
        const ExperimentReport fine_report = run_tunneling(fine);
        const FluxStats* fine_t = lookup_flux(fine_report, "T");
        if (flux_t && fine_t && fine_t->rms_residual > 0.0)
            ratio_halved = flux_t->rms_residual / fine_t->rms_residual;
    }
    criterion(6, "static-domain flux balance and convergence",
              flux_t && flux_t->ratio <= 1e-2 && ratio_halved >= 1.8,
              flux_t ? fmt("residual RMS / max|dP/dt| %.2e (<=1e-2), stride halving gain %.2fx (>=1.8)",
                           flux_t->ratio, ratio_halved)
                     : "flux stats missing");

    const bool born_tunnel_ok = report.born && report.born->max_residual <= 2e-2;
    const double born_tunnel = report.born ? report.born->max_residual : -1.0;
    const int born_tunnel_pairs = report.born ? report.born->pairs_considered : 0;

    // time reversal from the same initial state
    {
        Grid1D grid(cfg.grid.x_min, cfg.grid.x_max, cfg.grid.n_points);
        const RealField V = sample_potential(cfg.potential, grid);
        const WaveFunction psi0 = superpose(cfg.packets, grid);
        WaveFunction psi = psi0;
        for (int i = 0; i < 1000; ++i) psi = step(psi, V, cfg.prop.dt);
        for (int i = 0; i < 1000; ++i) psi = step(psi, V, -cfg.prop.dt);
        double sum = 0.0;
        for (int j = 0; j < grid.n_points(); ++j)
            sum += std::norm(psi.amplitudes()[j] - psi0.amplitudes()[j]);
        const double rms = std::sqrt(sum * grid.dx());
        criterion(11, "forward-backward propagation recovers the initial state",
                  rms <= 1e-8, fmt("RMS difference %.2e (<=1e-8) after 1000+1000 steps", rms));
    }

    // stash the pieces consumed by the cross-scenario criteria
    g_results.push_back({-3, "tunnel-noncross", noncross_tunnel,
                         fmt("tunnel: 0 violations required, min gap %.2e", min_gap_tunnel)});
    g_results.push_back({-10, "tunnel-born", born_tunnel_ok,
                         fmt("tunnel max residual %.4f over %d pairs", born_tunnel,
                             born_tunnel_pairs)});
}

// ---------------------------------------------------------------------------
// free-packet trajectory oracle
// ---------------------------------------------------------------------------
void run_free_block() {
    std::fprintf(stderr, "running the free-packet oracle...\n");
    Grid1D grid(-20.0, 20.0, 1024);
    const RealField zero = sample_potential(PotentialSpec{}, grid);
    const WaveFunction psi0 = gaussian_packet({0.0, 0.0, 1.0}, grid);
    const SnapshotStore store = propagate(psi0, zero, {1e-3, 2000, 5, 1.0});
    const auto xs = sample_initial_conditions(psi0, 20, SamplingScheme::even, 1e-4);
    const TrajectoryEnsemble ens = integrate_trajectories(store, xs);

    double max_err = 0.0;
    for (int k = 0; k < ens.size(); ++k) {
        for (size_t m = 0; m < ens.times().size(); ++m) {
            const double t = ens.times()[m];
            const double exact = ens[k].x_init * std::sqrt(1.0 + 0.25 * t * t);
            max_err = std::max(max_err, std::abs(ens[k].positions[m] - exact));
        }
    }
    criterion(2, "free-packet trajectories match the analytic solution", max_err <= 1e-3,
              fmt("max |x - x_exact| %.2e (<=1e-3) over 20 trajectories, t in [0,2]", max_err));
}

// ---------------------------------------------------------------------------
// five-slit diffraction scenario
// ---------------------------------------------------------------------------
void run_grating_block() {
    std::fprintf(stderr, "running the five-slit scenario (this is the long leg)...\n");
    const RunConfig cfg = [] {
        RunConfig c = grating_preset();
        c.out_dir = "acceptance_out/grating";
        return c;
    }();
    const ExperimentReport report = run_grating(cfg);
    const GratingReport& g = *report.grating;

    const bool noncross_grating =
        report.noncrossing && report.noncrossing->violations.empty();

    // criterion 3 combines both scenarios
    bool noncross_tunnel = false;
    std::string tunnel_detail;
    for (const auto& r : g_results)
        if (r.id == -3) {
            noncross_tunnel = r.pass;
            tunnel_detail = r.detail;
        }
    criterion(3, "200-trajectory ensembles never cross",
              noncross_tunnel && noncross_grating,
              fmt("%s; grating: 0 violations required, min gap %.2e", tunnel_detail.c_str(),
                  report.noncrossing ? report.noncrossing->min_gap : -1.0));

    const bool dev0_ok = g.deviation_n0 >= 0.005 && g.deviation_n0 <= 0.035;
    const bool dev1_ok = g.deviation_n1 >= 0.005 && g.deviation_n1 <= 0.035;
    criterion(7, "far-field window estimates undershoot the tube values",
              dev0_ok && dev1_ok,
              fmt("n=0: %.2f%%, n=+1: %.2f%% below the tubes (band [0.5%%, 3.5%%])",
                  100.0 * g.deviation_n0, 100.0 * g.deviation_n1));

    std::set<std::string> branch_labels;
    for (const auto& b : g.branches)
        for (const auto& s : b.segments) branch_labels.insert(s.label);
    criterion(8, "a 0.030-unit swarm branches into the n=0 and n=+1 peaks",
              !g.branches.empty() && branch_labels.count("0") && branch_labels.count("+1"),
              fmt("%zu branch record(s), labels {0: %s, +1: %s}", g.branches.size(),
                  branch_labels.count("0") ? "yes" : "no",
                  branch_labels.count("+1") ? "yes" : "no"));

    // per-slit structure, measured against independently recomputed slit totals
    {
        Grid1D grid(cfg.grid.x_min, cfg.grid.x_max, cfg.grid.n_points);
        const WaveFunction psi0 = superpose(cfg.packets, grid);
        std::vector<double> totals;
        for (const auto& [lo, hi] : g.slit_intervals)
            totals.push_back(restricted_probability(psi0, lo, hi));

        int i0 = -1, i1 = -1;
        for (size_t i = 0; i < g.per_slit.peak_labels.size(); ++i) {
            if (g.per_slit.peak_labels[i] == "0") i0 = static_cast<int>(i);
            if (g.per_slit.peak_labels[i] == "+1") i1 = static_cast<int>(i);
        }
        const double p30 = g.per_slit.P[2][static_cast<size_t>(i0)];
        const double p20 = g.per_slit.P[1][static_cast<size_t>(i0)];
        const double p40 = g.per_slit.P[3][static_cast<size_t>(i0)];
        const double p31 = g.per_slit.P[2][static_cast<size_t>(i1)];
        const double p51 = g.per_slit.P[4][static_cast<size_t>(i1)];

        const bool central_full = std::abs(p30 - totals[2]) <= 0.01 * totals[2];
        const bool adjacent_majority = p20 > 0.5 * totals[1] && p40 > 0.5 * totals[3];
        const bool ordering = p51 > p31 && p31 > 0.0;
        criterion(9, "per-slit feeds of the n=0 and n=+1 peaks",
                  central_full && adjacent_majority && ordering,
                  fmt("P_{3,0}=%.4f vs slit %.4f; P_{2,0}/slit=%.0f%%, P_{4,0}/slit=%.0f%%; "
                      "P_{5,+1}=%.4f, P_{3,+1}=%.4f (needs > 0; slit 3 maps entirely into n=0; "
                      "P_{4,+1}=%.4f)",
                      p30, totals[2], 100.0 * p20 / totals[1], 100.0 * p40 / totals[3], p51, p31,
                      g.per_slit.P[3][static_cast<size_t>(i1)]));
    }

    bool born_tunnel_ok = false;
    std::string born_tunnel_detail;
    for (const auto& r : g_results)
        if (r.id == -10) {
            born_tunnel_ok = r.pass;
            born_tunnel_detail = r.detail;
        }
    const bool born_grating_ok = report.born && report.born->max_residual <= 2e-2;
    criterion(10, "pairwise transport preserves the initial-time weights",
              born_tunnel_ok && born_grating_ok,
              fmt("%s; grating max residual %.4f over %d pairs (<=2e-2 both)",
                  born_tunnel_detail.c_str(), report.born ? report.born->max_residual : -1.0,
                  report.born ? report.born->pairs_considered : 0));
}

}  // namespace

int main() {
    std::filesystem::create_directories("acceptance_out");
    run_tunnel_block();
    run_free_block();
    run_grating_block();

    std::sort(g_results.begin(), g_results.end(),
              [](const Result& a, const Result& b) { return a.id < b.id; });
    int failures = 0;
    std::printf("\n");
    for (const auto& r : g_results) {
        if (r.id < 0) continue;  // internal partials folded into criteria 3 and 10
        std::printf("[%s] criterion %2d: %s\n        %s\n", r.pass ? "PASS" : "FAIL", r.id,
                    r.name.c_str(), r.detail.c_str());
        if (!r.pass) ++failures;
    }
    std::printf("\n%d of 11 criteria passed\n", 11 - failures);
    return failures > 0 ? 1 : 0;
}
