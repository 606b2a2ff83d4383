#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "qtube/errors.hpp"
#include "qtube/experiment.hpp"

namespace qtube {

namespace {

using json = nlohmann::ordered_json;

json number_or_inf(double v) {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : "-inf";
}

json config_json(const RunConfig& cfg) {
    json j;
    j["grid"] = {{"x_min", cfg.grid.x_min}, {"x_max", cfg.grid.x_max},
                 {"n_points", cfg.grid.n_points}};
    json pot;
    pot["kind"] = cfg.potential.kind == PotentialSpec::Kind::free ? "free" : "tanh_barrier";
    if (cfg.potential.kind == PotentialSpec::Kind::tanh_barrier) {
        pot["v0"] = cfg.potential.V0;
        pot["alpha"] = cfg.potential.alpha;
        pot["x_minus"] = cfg.potential.x_minus;
        pot["x_plus"] = cfg.potential.x_plus;
    }
    j["potential"] = pot;
    j["packets"] = json::array();
    for (const auto& p : cfg.packets)
        j["packets"].push_back({{"x0", p.x0}, {"p0", p.p0}, {"sigma0", p.sigma0},
                                {"c", p.c.real()}});
    j["propagation"] = {{"dt", cfg.prop.dt}, {"n_steps", cfg.prop.n_steps},
                        {"snapshot_stride", cfg.prop.snapshot_stride}, {"mass", cfg.prop.mass}};
    j["ensemble"] = {{"n_trajectories", cfg.ensemble.n_trajectories},
                     {"scheme", cfg.ensemble.scheme == SamplingScheme::even ? "even" : "quantile"},
                     {"support_cut", cfg.ensemble.support_cut},
                     {"substeps", cfg.ensemble.substeps},
                     {"born_probe_n", cfg.ensemble.born_probe_n}};
    if (cfg.tube.enabled)
        j["tube_analysis"] = {{"target", cfg.tube.target_label},
                              {"bracket_lo", cfg.tube.bracket_lo},
                              {"bracket_hi", cfg.tube.bracket_hi},
                              {"tol", cfg.tube.tol},
                              {"require_forward_velocity", cfg.tube.require_forward_velocity},
                              {"upper_support_cut", cfg.tube.upper_support_cut},
                              {"asymptotic_label", cfg.tube.asymptotic_label},
                              {"asymptotic_threshold", cfg.tube.asymptotic_threshold}};
    if (!cfg.domains.empty()) {
        j["domains"] = json::array();
        for (const auto& d : cfg.domains)
            j["domains"].push_back({{"label", d.label}, {"lo", number_or_inf(d.lo)},
                                    {"hi", number_or_inf(d.hi)}});
    }
    if (cfg.grating.enabled)
        j["grating"] = {{"n_slits", cfg.grating.n_slits},
                        {"spacing", cfg.grating.spacing},
                        {"t_segment", cfg.grating.t_segment},
                        {"t_fraunhofer", cfg.grating.t_fraunhofer},
                        {"branch_swarm_width", cfg.grating.branch_swarm_width},
                        {"branch_swarm_size", cfg.grating.branch_swarm_size}};
    return j;
}

json tube_json(const TubeStats& t) {
    return {{"label", t.label},
            {"x_init_lower", t.x_init_lower},
            {"x_init_upper", t.x_init_upper},
            {"p0", t.p0},
            {"mean", t.mean},
            {"std", t.stddev},
            {"std_over_mean", t.std_over_mean},
            {"max_rel_dev", t.max_rel_dev}};
}

json segments_json(const std::vector<LabeledSegment>& segments) {
    json arr = json::array();
    for (const auto& s : segments)
        arr.push_back({{"label", s.label}, {"lo", s.lo}, {"hi", s.hi}});
    return arr;
}

}  // namespace

void write_report_json(const ExperimentReport& report, const std::string& path) {
    json j;
    j["config"] = config_json(report.config);
    j["diagnostics"] = {{"max_norm_drift", report.max_norm_drift},
                        {"max_energy_drift_rel", report.max_energy_drift_rel}};
    j["t_final"] = report.times.back();
    j["series_labels"] = report.series_labels;
    json finals;
    for (const auto& [label, value] : report.final_probabilities) finals[label] = value;
    j["final_probabilities"] = finals;

    if (report.noncrossing)
        j["noncrossing"] = {{"violations", static_cast<int>(report.noncrossing->violations.size())},
                            {"min_gap", report.noncrossing->min_gap}};
    if (report.born)
        j["born_rule"] = {{"max_residual", report.born->max_residual},
                          {"pairs", report.born->pairs_considered},
                          {"samples", report.born->samples_considered}};
    if (report.separatrix_x_init) j["separatrix_x_init"] = *report.separatrix_x_init;
    if (report.tube) j["tube"] = tube_json(*report.tube);
    if (report.closure)
        j["closure"] = {{"tube_p0", report.closure->tube_p0},
                        {"asymptotic_p", report.closure->asymptotic_p},
                        {"rel_deviation", report.closure->rel_deviation},
                        {"t_asymptotic", report.closure->t_asymptotic}};
    if (!report.flux.empty()) {
        j["flux"] = json::array();
        for (const auto& f : report.flux)
            j["flux"].push_back({{"label", f.label},
                                 {"rms_residual", f.rms_residual},
                                 {"max_abs_dpdt", f.max_abs_dpdt},
                                 {"ratio", f.ratio}});
    }
    if (report.grating) {
        const GratingReport& g = *report.grating;
        json gj;
        gj["t_segment"] = g.t_segment;
        gj["t_fraunhofer"] = g.t_fraunhofer;
        gj["t_final"] = g.t_final;
        gj["separatrices"] = {{"n0_left", g.sep_n0_left},
                              {"n0_right", g.sep_n0_right},
                              {"n1_left", g.sep_n1_left},
                              {"n1_right", g.sep_n1_right}};
        gj["separatrices_t_segment"] = {{"n0_left", g.sep_n0_left_seg},
                                        {"n0_right", g.sep_n0_right_seg},
                                        {"n1_left", g.sep_n1_left_seg},
                                        {"n1_right", g.sep_n1_right_seg}};
        gj["tubes"] = json::array({tube_json(g.tube_n0), tube_json(g.tube_n1)});
        gj["fraunhofer_estimates"] = {{"n0", g.fraunhofer_estimate_n0},
                                      {"n1", g.fraunhofer_estimate_n1}};
        gj["deviations"] = {{"n0", g.deviation_n0}, {"n1", g.deviation_n1}};
        json areas;
        for (const auto& [n, area] : g.peak_areas_t_segment)
            areas[(n > 0 ? "+" : "") + std::to_string(n)] = area;
        gj["peak_areas_t_segment"] = areas;
        gj["peak_area_sum_t_segment"] = g.peak_area_sum_t_segment;
        gj["early_separatrix"] = {{"p_n0", g.early_p_n0},
                                  {"p_n1", g.early_p_n1},
                                  {"deficit_n0", g.early_deficit_n0},
                                  {"deficit_n1", g.early_deficit_n1}};
        gj["branches"] = json::array();
        for (const auto& b : g.branches)
            gj["branches"].push_back({{"initial_lo", b.initial_lo},
                                      {"initial_hi", b.initial_hi},
                                      {"segments", segments_json(b.segments)}});
        gj["slit_intervals"] = json::array();
        for (const auto& [lo, hi] : g.slit_intervals)
            gj["slit_intervals"].push_back({lo, hi});
        gj["per_slit"] = {{"peak_labels", g.per_slit.peak_labels}, {"P", g.per_slit.P}};
        j["grating"] = gj;
    }
    if (!report.notes.empty()) j["notes"] = report.notes;

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << j.dump(2) << "\n";
}

void write_series_csv(const ExperimentReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "t";
    for (const auto& label : report.series_labels) out << "," << label;
    out << "\n";
    char buf[64];
    for (size_t i = 0; i < report.times.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", report.times[i]);
        out << buf;
        for (const auto& s : report.series) {
            std::snprintf(buf, sizeof(buf), ",%.17g", s[i]);
            out << buf;
        }
        out << "\n";
    }
}

void write_tubes_csv(const ExperimentReport& report, const std::string& path) {
    std::vector<const TubeStats*> tubes;
    if (report.tube) tubes.push_back(&*report.tube);
    if (report.grating && !report.grating->tube_n0.series.empty()) {
        tubes.push_back(&report.grating->tube_n0);
        tubes.push_back(&report.grating->tube_n1);
    }
    if (tubes.empty()) return;

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "t";
    for (const auto* t : tubes) out << ",tube_" << t->label;
    out << "\n";
    char buf[64];
    for (size_t i = 0; i < report.times.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", report.times[i]);
        out << buf;
        for (const auto* t : tubes) {
            std::snprintf(buf, sizeof(buf), ",%.17g", t->series[i]);
            out << buf;
        }
        out << "\n";
    }
}

}  // namespace qtube
