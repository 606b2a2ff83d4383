#include "qtube/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "qtube/errors.hpp"

namespace qtube {

RunConfig tunnel_preset() {
    RunConfig cfg;
    cfg.scenario = Scenario::tunnel;
    // 16384 points: the velocity field develops structure at the scale of
    // the interference-node dips during reflection, and Bohmian transport
    // needs those resolved.
    cfg.grid = {-40.0, 60.0, 16384};
    cfg.potential = {PotentialSpec::Kind::tanh_barrier, 150.0, 10.0, -2.0, 2.0};
    cfg.packets = {
        {-10.0, 10.0, 0.2, 1.0},
        {-12.0, 20.0, 1.6, 0.75},
        {-9.0, 15.0, 0.8, 0.5},
    };
    cfg.prop = {1.25e-4, 12000, 10, 1.0};  // t_final = 1.5, snapshots every 1.25e-3
    cfg.ensemble = {200, SamplingScheme::even, 1e-4, 4};
    cfg.tube.enabled = true;
    cfg.tube.target_label = "T";
    cfg.tube.bracket_lo = -12.5;
    cfg.tube.bracket_hi = -8.5;
    cfg.tube.tol = 1e-4;
    cfg.tube.require_forward_velocity = true;
    cfg.tube.upper_support_cut = 1e-4;
    cfg.tube.asymptotic_label = "I";
    cfg.tube.asymptotic_threshold = 5e-3;
    const double inf = std::numeric_limits<double>::infinity();
    // series.csv column order: t,P_T,P_R,P_I
    cfg.domains = {{"T", 2.0, inf}, {"R", -inf, -2.0}, {"I", -2.0, 2.0}};
    return cfg;
}

RunConfig grating_preset() {
    RunConfig cfg;
    cfg.scenario = Scenario::grating;
    // Extent sized so that 200-trajectory ensembles stay inside the grid up
    // to t = 30 (the far tails reach |x| ~ 330).
    cfg.grid = {-360.0, 360.0, 32768};
    cfg.potential.kind = PotentialSpec::Kind::free;
    cfg.packets.clear();
    for (int i = 1; i <= 5; ++i)
        cfg.packets.push_back({-4.0 + 2.0 * (i - 1), 0.0, 0.2, 1.0});
    // The run continues past the far-field comparison time (t = 20) so that
    // the peak tubes are anchored where the pattern minima have settled; the
    // finite-time deficit of the minima-bounded areas decays as 1/t^2.
    cfg.prop = {1e-3, 30000, 20, 1.0};  // t_final = 30
    cfg.ensemble = {200, SamplingScheme::even, 1e-4, 4};
    cfg.grating.enabled = true;
    cfg.grating.n_slits = 5;
    cfg.grating.spacing = 2.0;
    cfg.grating.t_segment = 10.0;
    cfg.grating.t_fraunhofer = 20.0;
    cfg.grating.branch_swarm_width = 0.030;
    cfg.grating.branch_swarm_size = 31;
    return cfg;
}

namespace {

LabeledDomain clamp_domain(const StaticDomainSpec& d, const Grid1D& g) {
    double lo = std::isfinite(d.lo) ? d.lo : g.x_min();
    double hi = std::isfinite(d.hi) ? d.hi : g.x_max();
    lo = std::clamp(lo, g.x_min(), g.x_max());
    hi = std::clamp(hi, g.x_min(), g.x_max());
    if (!(lo <= hi)) throw ConfigError("domain '" + d.label + "' has lo > hi after clamping");
    return {d.label, lo, hi};
}

void fill_tube_stats(TubeStats& s, const std::vector<double>& series) {
    s.series = series;
    s.p0 = series.front();
    double sum = 0.0;
    for (double p : series) sum += p;
    s.mean = sum / static_cast<double>(series.size());
    double var = 0.0;
    double max_dev = 0.0;
    for (double p : series) {
        var += (p - s.mean) * (p - s.mean);
        max_dev = std::max(max_dev, std::abs(p - s.p0));
    }
    s.stddev = std::sqrt(var / static_cast<double>(series.size()));
    s.std_over_mean = s.stddev / s.mean;
    s.max_rel_dev = max_dev / s.p0;
}

int nearest_time_index(const std::vector<double>& times, double t) {
    int best = 0;
    double err = std::abs(times[0] - t);
    for (size_t i = 1; i < times.size(); ++i) {
        const double e = std::abs(times[i] - t);
        if (e < err) { err = e; best = static_cast<int>(i); }
    }
    return best;
}

std::string order_label(int n) {
    return (n > 0 ? "+" : "") + std::to_string(n);
}

// Bracket the initial condition whose trajectory sits at `threshold` at
// snapshot time_index, using the ensemble positions, then bisect.
double boundary_initial_condition(const VelocityProvider& vel, const TrajectoryEnsemble& ens,
                                  double threshold, int time_index, double tol, int substeps) {
    const int n = ens.size();
    int k = -1;
    for (int i = 0; i + 1 < n; ++i) {
        if (ens[i].x_at(time_index) <= threshold && threshold < ens[i + 1].x_at(time_index)) {
            k = i;
            break;
        }
    }
    if (k < 0)
        throw NumericalError("grating analysis: threshold " + std::to_string(threshold) +
                             " outside the ensemble range at snapshot " +
                             std::to_string(time_index));
    return find_separatrix(
        [&](double x0) {
            return integrate_trajectory(vel, x0, substeps).x_at(time_index) > threshold;
        },
        ens[k].x_init, ens[k + 1].x_init, tol);
}

// Contiguous order bands at the snapshot time: band n spans
// [(n-1/2) dx_order, (n+1/2) dx_order] with dx_order the principal-maximum
// spacing, so every initial condition is attributed to its nearest peak.
std::vector<LabeledDomain> order_bands(const SnapshotStore& store, int time_index,
                                       const GratingGeometry& geom, int n_max) {
    const double t = store.times()[static_cast<size_t>(time_index)];
    const double spacing_x = 2.0 * std::numbers::pi * t / (geom.spacing * store.config().mass);
    std::vector<LabeledDomain> bands;
    for (int n = -n_max; n <= n_max; ++n)
        bands.push_back({order_label(n), (n - 0.5) * spacing_x, (n + 0.5) * spacing_x});
    return covering_domains(std::move(bands), store.grid().x_min(), store.grid().x_max());
}

void run_grating_block(const RunConfig& cfg, const WaveFunction& psi0, const SnapshotStore& store,
                       const VelocityProvider& vel, const TrajectoryEnsemble& ens,
                       ExperimentReport& report) {
    const GratingAnalysisParams& gp = cfg.grating;
    const GratingGeometry geom{gp.n_slits, gp.spacing};
    const int substeps = cfg.ensemble.substeps;
    const double tol = 1e-4;
    const double t_final = store.t_final();
    const int i_fin = store.size() - 1;
    const int i_seg = nearest_time_index(store.times(), gp.t_segment);
    const int i_far = nearest_time_index(store.times(), gp.t_fraunhofer);

    GratingReport g;
    g.t_segment = store.times()[static_cast<size_t>(i_seg)];
    g.t_fraunhofer = store.times()[static_cast<size_t>(i_far)];
    g.t_final = t_final;

    // Far-field domain series (the per-order restricted probabilities).
    const Grid1D& grid = store.grid();
    report.series_labels = {"P_n0", "P_n1"};
    report.series.assign(2, std::vector<double>(static_cast<size_t>(store.size()), 0.0));
    for (int i = 0; i < store.size(); ++i) {
        const double t = store.times()[static_cast<size_t>(i)];
        for (int n = 0; n <= 1; ++n) {
            auto [lo, hi] = fraunhofer_domain(n, t, gp.n_slits, gp.spacing, store.config().mass);
            lo = std::clamp(lo, grid.x_min(), grid.x_max());
            hi = std::clamp(hi, grid.x_min(), grid.x_max());
            report.series[static_cast<size_t>(n)][static_cast<size_t>(i)] =
                restricted_probability(store.state(i), lo, hi);
        }
    }
    for (int n = 0; n <= 1; ++n)
        report.final_probabilities.emplace_back(report.series_labels[static_cast<size_t>(n)],
                                                report.series[static_cast<size_t>(n)].back());

    // Peak tubes for n = 0 and n = +1, anchored on the adjacent minima of the
    // settled pattern at t_final. Without principal-maxima structure (single
    // slit) the whole support is one peak and the tube analyses are skipped.
    std::pair<double, double> d0f, d1f;
    try {
        d0f = peak_domain_at(store, t_final, 0, geom);
        d1f = peak_domain_at(store, t_final, 1, geom);
    } catch (const NumericalError&) {
        report.notes.push_back(
            "grating analysis: no principal-maxima structure resolved; "
            "pattern treated as a single peak");
        g.peak_areas_t_segment.emplace_back(
            0, restricted_probability(store.state(i_seg), grid.x_min(), grid.x_max()));
        g.peak_area_sum_t_segment = g.peak_areas_t_segment.front().second;
        report.grating = std::move(g);
        return;
    }
    const auto [L0, R0] = d0f;
    const auto [L1, R1] = d1f;
    g.sep_n0_left = boundary_initial_condition(vel, ens, L0, i_fin, tol, substeps);
    g.sep_n0_right = boundary_initial_condition(vel, ens, R0, i_fin, tol, substeps);
    g.sep_n1_left = boundary_initial_condition(vel, ens, L1, i_fin, tol, substeps);
    g.sep_n1_right = boundary_initial_condition(vel, ens, R1, i_fin, tol, substeps);

    ProbabilityTube tube0{integrate_trajectory(vel, g.sep_n0_left, substeps),
                          integrate_trajectory(vel, g.sep_n0_right, substeps)};
    ProbabilityTube tube1{integrate_trajectory(vel, g.sep_n1_left, substeps),
                          integrate_trajectory(vel, g.sep_n1_right, substeps)};
    g.tube_n0.label = "n0";
    g.tube_n1.label = "n+1";
    g.tube_n0.x_init_lower = g.sep_n0_left;
    g.tube_n0.x_init_upper = g.sep_n0_right;
    g.tube_n1.x_init_lower = g.sep_n1_left;
    g.tube_n1.x_init_upper = g.sep_n1_right;
    fill_tube_stats(g.tube_n0, tube_probability(tube0, store));
    fill_tube_stats(g.tube_n1, tube_probability(tube1, store));

    // Far-field window estimates at t_fraunhofer against the tube values.
    g.fraunhofer_estimate_n0 = report.series[0][static_cast<size_t>(i_far)];
    g.fraunhofer_estimate_n1 = report.series[1][static_cast<size_t>(i_far)];
    g.deviation_n0 = (g.tube_n0.p0 - g.fraunhofer_estimate_n0) / g.tube_n0.p0;
    g.deviation_n1 = (g.tube_n1.p0 - g.fraunhofer_estimate_n1) / g.tube_n1.p0;

    // Near-field peak segmentation.
    double area_sum = 0.0;
    for (int n = -gp.n_slits / 2; n <= gp.n_slits / 2; ++n) {
        try {
            const double area = peak_intensity_area(store, g.t_segment, n, geom);
            g.peak_areas_t_segment.emplace_back(n, area);
            area_sum += area;
        } catch (const NumericalError&) {
            // unresolved order at this time; skip
        }
    }
    g.peak_area_sum_t_segment = area_sum;

    // Boundaries against the t_segment minima, and the initial-state
    // probabilities they enclose (the early-separatrix deficit).
    const auto [L0s, R0s] = peak_domain_at(store, g.t_segment, 0, geom);
    const auto [L1s, R1s] = peak_domain_at(store, g.t_segment, 1, geom);
    g.sep_n0_left_seg = boundary_initial_condition(vel, ens, L0s, i_seg, tol, substeps);
    g.sep_n0_right_seg = boundary_initial_condition(vel, ens, R0s, i_seg, tol, substeps);
    g.sep_n1_left_seg = boundary_initial_condition(vel, ens, L1s, i_seg, tol, substeps);
    g.sep_n1_right_seg = boundary_initial_condition(vel, ens, R1s, i_seg, tol, substeps);
    g.early_p_n0 = restricted_probability(psi0, g.sep_n0_left_seg, g.sep_n0_right_seg);
    g.early_p_n1 = restricted_probability(psi0, g.sep_n1_left_seg, g.sep_n1_right_seg);
    g.early_deficit_n0 = (g.tube_n0.p0 - g.early_p_n0) / g.tube_n0.p0;
    g.early_deficit_n1 = (g.tube_n1.p0 - g.early_p_n1) / g.tube_n1.p0;

    // Peak attribution at t_segment uses the contiguous order bands, so the
    // per-slit contributions partition each slit.
    const auto bands = order_bands(store, i_seg, geom, gp.n_slits / 2);

    // Branching swarm across the n0/n+1 watershed.
    {
        const double spacing_x = 2.0 * std::numbers::pi * g.t_segment /
                                 (geom.spacing * store.config().mass);
        const double watershed =
            boundary_initial_condition(vel, ens, 0.5 * spacing_x, i_seg, tol, substeps);
        const double half = 0.5 * gp.branch_swarm_width;
        const double lo = watershed - half;
        const double hi = watershed + half;
        std::vector<double> xs(static_cast<size_t>(gp.branch_swarm_size));
        for (int i = 0; i < gp.branch_swarm_size; ++i)
            xs[static_cast<size_t>(i)] =
                lo + (hi - lo) * static_cast<double>(i) / (gp.branch_swarm_size - 1);
        const TrajectoryEnsemble swarm = integrate_trajectories(vel, xs, substeps);
        const auto segments = label_segments(vel, swarm, bands, 1e-3, substeps, i_seg);
        g.branches = detect_branching(segments, {{lo, hi}});
    }

    // Per-slit contributions at t_segment.
    {
        const auto support = effective_support(psi0, cfg.ensemble.support_cut);
        std::vector<double> centers;
        for (const auto& p : cfg.packets) centers.push_back(p.x0);
        std::sort(centers.begin(), centers.end());
        std::vector<double> edges{support.first};
        for (size_t i = 0; i + 1 < centers.size(); ++i)
            edges.push_back(0.5 * (centers[i] + centers[i + 1]));
        edges.push_back(support.second);
        for (size_t i = 0; i + 1 < edges.size(); ++i)
            g.slit_intervals.emplace_back(edges[i], edges[i + 1]);

        const auto segments = label_segments(vel, ens, bands, 1e-3, substeps, i_seg);
        std::vector<std::string> peak_labels;
        for (int n = -gp.n_slits / 2; n <= gp.n_slits / 2; ++n)
            peak_labels.push_back(order_label(n));
        g.per_slit = per_slit_contribution(psi0, g.slit_intervals, peak_labels, segments);
    }

    report.grating = std::move(g);
}

ExperimentReport run_core(const RunConfig& cfg) {
    if (cfg.packets.empty()) throw ConfigError("run: at least one packet is required");
    if (cfg.ensemble.n_trajectories >= 2 && cfg.ensemble.substeps < 1)
        throw ConfigError("run: ensemble substeps must be >= 1");

    Grid1D grid(cfg.grid.x_min, cfg.grid.x_max, cfg.grid.n_points);
    const RealField V = sample_potential(cfg.potential, grid);
    const WaveFunction psi0 = superpose(cfg.packets, grid);
    const SnapshotStore store = propagate(psi0, V, cfg.prop);

    ExperimentReport report;
    report.config = cfg;
    report.times = store.times();

    const PropagationDiagnostics diag = diagnose(store, V);
    report.max_norm_drift = diag.max_norm_drift;
    report.max_energy_drift_rel = diag.max_energy_drift_rel;

    // Static-domain probability series and flux balance.
    std::vector<LabeledDomain> static_domains;
    for (const auto& d : cfg.domains) static_domains.push_back(clamp_domain(d, grid));
    for (const auto& d : static_domains) {
        std::vector<double> series(static_cast<size_t>(store.size()));
        for (int i = 0; i < store.size(); ++i)
            series[static_cast<size_t>(i)] = restricted_probability(store.state(i), d.lo, d.hi);
        report.series_labels.push_back("P_" + d.label);
        report.final_probabilities.emplace_back("P_" + d.label, series.back());
        report.series.push_back(std::move(series));

        const DomainSeries ds = DomainSeries::fixed(store.times(), d.lo, d.hi);
        const auto residuals = flux_balance(ds, store);
        const auto dpdt = [&] {
            std::vector<double> v(static_cast<size_t>(store.size()), 0.0);
            const auto& p = report.series.back();
            const auto& t = store.times();
            v[0] = (p[1] - p[0]) / (t[1] - t[0]);
            v[p.size() - 1] = (p[p.size() - 1] - p[p.size() - 2]) / (t[t.size() - 1] - t[t.size() - 2]);
            for (size_t i = 1; i + 1 < p.size(); ++i)
                v[i] = (p[i + 1] - p[i - 1]) / (t[i + 1] - t[i - 1]);
            return v;
        }();
        FluxStats fs;
        fs.label = d.label;
        double ss = 0.0;
        for (double r : residuals) ss += r * r;
        fs.rms_residual = std::sqrt(ss / static_cast<double>(residuals.size()));
        for (double v0 : dpdt) fs.max_abs_dpdt = std::max(fs.max_abs_dpdt, std::abs(v0));
        fs.ratio = fs.max_abs_dpdt > 0.0 ? fs.rms_residual / fs.max_abs_dpdt : 0.0;
        report.flux.push_back(fs);
    }

    // Trajectory ensemble.
    VelocityProvider vel(store);
    std::optional<TrajectoryEnsemble> ens;
    if (cfg.ensemble.n_trajectories >= 2) {
        const auto x_inits = sample_initial_conditions(psi0, cfg.ensemble.n_trajectories,
                                                       cfg.ensemble.scheme,
                                                       cfg.ensemble.support_cut);
        ens = integrate_trajectories(vel, x_inits, cfg.ensemble.substeps);
        report.noncrossing = check_noncrossing(*ens);
    }

    // Born-rule transport audit on a dedicated equal-weight pair ensemble.
    if (cfg.ensemble.born_probe_n >= 2) {
        const auto probe_inits = sample_initial_conditions(psi0, cfg.ensemble.born_probe_n,
                                                           SamplingScheme::quantile,
                                                           cfg.ensemble.support_cut);
        const TrajectoryEnsemble probe =
            integrate_trajectories(vel, probe_inits, cfg.ensemble.substeps);
        BornRuleFilter filter{grid.dx(), 10.0 * grid.dx()};
        report.born = born_rule_max_filtered(probe, store, filter);
    }

    // Separatrix and probability tube toward the target domain.
    if (cfg.tube.enabled) {
        auto it = std::find_if(static_domains.begin(), static_domains.end(),
                               [&](const LabeledDomain& d) { return d.label == cfg.tube.target_label; });
        if (it == static_domains.end())
            throw ConfigError("tube analysis: target label '" + cfg.tube.target_label +
                              "' is not a configured domain");
        const LabeledDomain target = *it;
        const int last = store.size() - 1;
        auto predicate = [&](double x0) {
            const Trajectory tr = integrate_trajectory(vel, x0, cfg.ensemble.substeps);
            const double xf = tr.x_final();
            if (!(xf >= target.lo && xf <= target.hi)) return false;
            if (cfg.tube.require_forward_velocity &&
                interp_linear(vel.at_snapshot(last), xf) < 0.0)
                return false;
            return true;
        };
        const bool at_lo = predicate(cfg.tube.bracket_lo);
        const bool at_hi = predicate(cfg.tube.bracket_hi);
        if (at_lo == at_hi) {
            report.notes.push_back("tube analysis skipped: predicate '" + cfg.tube.target_label +
                                   "' uniform across the separatrix bracket");
        } else {
            const double sep = find_separatrix(predicate, cfg.tube.bracket_lo,
                                               cfg.tube.bracket_hi, cfg.tube.tol);
            report.separatrix_x_init = sep;
            const double upper = effective_support(psi0, cfg.tube.upper_support_cut).second;
            ProbabilityTube tube{integrate_trajectory(vel, sep, cfg.ensemble.substeps),
                                 integrate_trajectory(vel, upper, cfg.ensemble.substeps)};
            TubeStats stats;
            stats.label = cfg.tube.target_label;
            stats.x_init_lower = sep;
            stats.x_init_upper = upper;
            fill_tube_stats(stats, tube_probability(tube, store));
            report.tube = stats;

            // Eq-of-continuity closure: initial tube probability against the
            // asymptotic restricted probability of the target domain.
            ClosureStats closure;
            closure.tube_p0 = stats.p0;
            int i_asym = store.size() - 1;
            if (!cfg.tube.asymptotic_label.empty()) {
                auto lit = std::find(report.series_labels.begin(), report.series_labels.end(),
                                     "P_" + cfg.tube.asymptotic_label);
                if (lit == report.series_labels.end())
                    throw ConfigError("tube analysis: asymptotic label '" +
                                      cfg.tube.asymptotic_label + "' is not a configured domain");
                const auto& watch = report.series[static_cast<size_t>(
                    std::distance(report.series_labels.begin(), lit))];
                // first snapshot after which the watched probability stays
                // below threshold for the rest of the run
                int last_above = -1;
                for (size_t i = 0; i < watch.size(); ++i)
                    if (watch[i] > cfg.tube.asymptotic_threshold) last_above = static_cast<int>(i);
                if (last_above >= store.size() - 1) {
                    report.notes.push_back("asymptotic regime not reached: P_" +
                                           cfg.tube.asymptotic_label + " stayed above threshold");
                    i_asym = store.size() - 1;
                } else {
                    i_asym = last_above + 1;
                }
            }
            auto tit = std::find(report.series_labels.begin(), report.series_labels.end(),
                                 "P_" + cfg.tube.target_label);
            const auto& target_series = report.series[static_cast<size_t>(
                std::distance(report.series_labels.begin(), tit))];
            // t_asymptotic records the regime onset; the asymptotic value is
            // the settled plateau at the end of the run.
            closure.t_asymptotic = store.times()[static_cast<size_t>(i_asym)];
            closure.asymptotic_p = target_series.back();
            closure.rel_deviation = std::abs(closure.tube_p0 - closure.asymptotic_p) /
                                    closure.asymptotic_p;
            report.closure = closure;
        }
    }

    if (cfg.grating.enabled) {
        if (!ens)
            throw ConfigError("grating analysis requires an ensemble (n_trajectories >= 2)");
        run_grating_block(cfg, psi0, store, vel, *ens, report);
    }

    // File outputs.
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    write_report_json(report, cfg.out_dir + "/report.json");
    write_series_csv(report, cfg.out_dir + "/series.csv");
    if (report.tube || report.grating) write_tubes_csv(report, cfg.out_dir + "/tubes.csv");
    if (ens) export_trajectories_csv(*ens, cfg.out_dir + "/trajectories.csv");
    if (cfg.export_snapshots) export_snapshots_csv(store, cfg.out_dir + "/snapshots.csv");
    return report;
}

}  // namespace

ExperimentReport run_tunneling(const RunConfig& cfg) {
    if (cfg.scenario != Scenario::tunnel)
        throw ConfigError("run_tunneling: config scenario is not 'tunnel'");
    return run_core(cfg);
}

ExperimentReport run_grating(const RunConfig& cfg) {
    if (cfg.scenario != Scenario::grating)
        throw ConfigError("run_grating: config scenario is not 'grating'");
    if (!cfg.grating.enabled)
        throw ConfigError("run_grating: grating analysis block is disabled");
    return run_core(cfg);
}

ExperimentReport run_custom(const RunConfig& cfg) {
    if (cfg.scenario != Scenario::custom)
        throw ConfigError("run_custom: config scenario is not 'custom'");
    return run_core(cfg);
}

}  // namespace qtube
