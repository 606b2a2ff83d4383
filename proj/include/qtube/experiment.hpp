#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qtube/potential.hpp"
#include "qtube/propagator.hpp"
#include "qtube/trajectories.hpp"
#include "qtube/tubes.hpp"

namespace qtube {

enum class Scenario { tunnel, grating, custom };

struct GridParams {
    double x_min = -40.0;
    double x_max = 60.0;
    int n_points = 8192;
};

struct EnsembleParams {
    int n_trajectories = 200;  // < 2 disables trajectory analyses
    SamplingScheme scheme = SamplingScheme::even;
    double support_cut = 1e-4;
    int substeps = 4;
    // Size of the dedicated equal-weight (quantile) pair ensemble used for
    // the Born-rule transport audit; < 2 disables the audit.
    int born_probe_n = 100;
};

/// Separatrix search and probability-tube construction toward one final
/// domain (the tunneling transmission tube and its custom-scenario analogs).
struct TubeAnalysisParams {
    bool enabled = false;
    std::string target_label;  // static domain receiving the tube
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    double tol = 1e-4;
    bool require_forward_velocity = true;  // transmitted means v(x(t_f), t_f) >= 0 too
    double upper_support_cut = 1e-4;       // upper boundary from the initial support edge
    std::string asymptotic_label;          // domain whose probability must drain ...
    double asymptotic_threshold = 5e-3;    // ... below this to call the run asymptotic
};

struct StaticDomainSpec {
    std::string label;
    double lo;  // +-infinity clamped to the grid edges
    double hi;
};

struct GratingAnalysisParams {
    bool enabled = false;
    int n_slits = 5;
    double spacing = 2.0;
    double t_segment = 10.0;     // near-field analysis time
    double t_fraunhofer = 20.0;  // far-field domain-estimate comparison time
    double branch_swarm_width = 0.030;
    int branch_swarm_size = 31;
};

struct RunConfig {
    Scenario scenario = Scenario::custom;
    GridParams grid;
    PotentialSpec potential;
    std::vector<GaussianSpec> packets;
    PropagationConfig prop;
    EnsembleParams ensemble;
    TubeAnalysisParams tube;
    std::vector<StaticDomainSpec> domains;
    GratingAnalysisParams grating;
    std::string out_dir = "out";
    bool export_snapshots = false;
};

/// The two paper scenarios with every physical parameter prefilled.
RunConfig tunnel_preset();
RunConfig grating_preset();

/// Applies a key-value config file on top of cfg. Unknown sections or keys
/// are ConfigErrors, not warnings.
void apply_config_file(RunConfig& cfg, const std::string& path);

struct TubeStats {
    std::string label;
    double x_init_lower = 0.0;
    double x_init_upper = 0.0;
    double p0 = 0.0;
    double mean = 0.0;
    double stddev = 0.0;
    double std_over_mean = 0.0;
    double max_rel_dev = 0.0;
    std::vector<double> series;
};

struct ClosureStats {
    double tube_p0 = 0.0;
    double asymptotic_p = 0.0;
    double rel_deviation = 0.0;
    double t_asymptotic = 0.0;
};

struct FluxStats {
    std::string label;
    double rms_residual = 0.0;
    double max_abs_dpdt = 0.0;
    double ratio = 0.0;  // rms_residual / max_abs_dpdt
};

struct GratingReport {
    double t_segment = 0.0;
    double t_fraunhofer = 0.0;
    double t_final = 0.0;
    // initial positions of the boundary trajectories (t_final domains)
    double sep_n0_left = 0.0;
    double sep_n0_right = 0.0;
    double sep_n1_left = 0.0;
    double sep_n1_right = 0.0;
    // same boundaries against the t_segment domains
    double sep_n0_left_seg = 0.0;
    double sep_n0_right_seg = 0.0;
    double sep_n1_left_seg = 0.0;
    double sep_n1_right_seg = 0.0;
    TubeStats tube_n0;
    TubeStats tube_n1;
    double fraunhofer_estimate_n0 = 0.0;  // domain-based P at t_fraunhofer
    double fraunhofer_estimate_n1 = 0.0;
    double deviation_n0 = 0.0;  // (tube_p0 - estimate) / tube_p0
    double deviation_n1 = 0.0;
    std::vector<std::pair<int, double>> peak_areas_t_segment;  // resolved orders only
    double peak_area_sum_t_segment = 0.0;
    // initial-state probabilities bounded by the t_segment separatrices and
    // their deficit against the tube values (informational)
    double early_p_n0 = 0.0;
    double early_p_n1 = 0.0;
    double early_deficit_n0 = 0.0;
    double early_deficit_n1 = 0.0;
    std::vector<BranchRecord> branches;
    std::vector<std::pair<double, double>> slit_intervals;
    PerSlitMatrix per_slit;
};

struct ExperimentReport {
    RunConfig config;  // scenario/out_dir excluded from serialization
    double max_norm_drift = 0.0;
    double max_energy_drift_rel = 0.0;
    std::vector<double> times;
    std::vector<std::string> series_labels;
    std::vector<std::vector<double>> series;  // [label][time]
    std::vector<std::pair<std::string, double>> final_probabilities;
    std::optional<NonCrossingReport> noncrossing;
    std::optional<BornRuleSummary> born;
    std::optional<double> separatrix_x_init;
    std::optional<TubeStats> tube;
    std::optional<ClosureStats> closure;
    std::vector<FluxStats> flux;
    std::optional<GratingReport> grating;
    std::vector<std::string> notes;
};

ExperimentReport run_tunneling(const RunConfig& cfg);
ExperimentReport run_grating(const RunConfig& cfg);
ExperimentReport run_custom(const RunConfig& cfg);

/// Serialization (report.json, series.csv, trajectories.csv, tubes.csv,
/// snapshots.csv). Exposed for tests; run_* call this internally.
void write_report_json(const ExperimentReport& report, const std::string& path);
void write_series_csv(const ExperimentReport& report, const std::string& path);
void write_tubes_csv(const ExperimentReport& report, const std::string& path);

}  // namespace qtube
