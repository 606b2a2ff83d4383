#include "qtube/trajectories.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "qtube/errors.hpp"

namespace qtube {

TrajectoryEnsemble::TrajectoryEnsemble(std::vector<Trajectory> trajectories)
    : trajectories_(std::move(trajectories)) {
    if (trajectories_.empty())
        throw std::invalid_argument("TrajectoryEnsemble: empty trajectory set");
    const auto& t0 = trajectories_.front().times;
    for (const auto& tr : trajectories_) {
        if (tr.times != t0)
            throw std::invalid_argument("TrajectoryEnsemble: trajectories sample different times");
        if (tr.positions.size() != tr.times.size())
            throw std::invalid_argument("TrajectoryEnsemble: positions/times size mismatch");
    }
    for (size_t i = 1; i < trajectories_.size(); ++i)
        if (!(trajectories_[i].x_init > trajectories_[i - 1].x_init))
            throw std::invalid_argument("TrajectoryEnsemble: x_init must be strictly increasing");
}

VelocityProvider::VelocityProvider(const SnapshotStore& store, double rho_floor)
    : store_(&store), rho_floor_(rho_floor),
      cache_(static_cast<size_t>(store.size())) {}

const RealField& VelocityProvider::at_snapshot(int i) const {
    auto& slot = cache_[static_cast<size_t>(i)];
    if (!slot)
        slot = std::make_unique<RealField>(
            velocity_field(store_->state(i), rho_floor_, store_->config().mass));
    return *slot;
}

double VelocityProvider::velocity(double x, int interval, double t_frac) const {
    const double va = interp_linear(at_snapshot(interval), x);
    const double vb = interp_linear(at_snapshot(interval + 1), x);
    return va + t_frac * (vb - va);
}

std::vector<double> sample_initial_conditions(const WaveFunction& psi0, int n,
                                              SamplingScheme scheme, double support_cut) {
    if (n < 2) throw std::invalid_argument("sample_initial_conditions: n must be >= 2");
    if (!(support_cut > 0.0 && support_cut < 1.0))
        throw std::invalid_argument("sample_initial_conditions: support_cut must be in (0,1)");

    const RealField rho = density(psi0);
    const Grid1D& g = rho.grid();
    double rho_max = 0.0;
    for (int j = 0; j < rho.size(); ++j) rho_max = std::max(rho_max, rho[j]);
    const double cut = support_cut * rho_max;

    if (scheme == SamplingScheme::even) {
        // maximal runs of grid points at or above the cut
        struct Island { double lo, hi; };
        std::vector<Island> islands;
        int j = 0;
        while (j < rho.size()) {
            if (rho[j] < cut) { ++j; continue; }
            int start = j;
            while (j < rho.size() && rho[j] >= cut) ++j;
            islands.push_back({g.x(start), g.x(j - 1)});
        }
        double total = 0.0;
        for (const auto& isl : islands) total += isl.hi - isl.lo;
        if (islands.empty() || total <= 0.0)
            throw NumericalError("sample_initial_conditions: empty effective support");

        std::vector<double> xs(static_cast<size_t>(n));
        for (int k = 0; k < n; ++k) {
            double s = total * static_cast<double>(k) / static_cast<double>(n - 1);
            double x = islands.back().hi;
            for (const auto& isl : islands) {
                const double len = isl.hi - isl.lo;
                if (s <= len) { x = isl.lo + s; break; }
                s -= len;
            }
            xs[static_cast<size_t>(k)] = x;
        }
        return xs;
    }

    // quantile: invert the cumulative distribution at levels (k-1/2)/n
    const int m = rho.size();
    std::vector<double> cdf(static_cast<size_t>(m), 0.0);
    for (int i = 1; i < m; ++i)
        cdf[static_cast<size_t>(i)] = cdf[static_cast<size_t>(i - 1)] +
            0.5 * (rho[i - 1] + rho[i]) * g.dx();
    const double total = cdf.back();
    if (!(total > 0.0))
        throw NumericalError("sample_initial_conditions: degenerate density");

    std::vector<double> xs(static_cast<size_t>(n));
    int cell = 0;
    for (int k = 0; k < n; ++k) {
        const double level = total * (static_cast<double>(k) + 0.5) / static_cast<double>(n);
        while (cell + 1 < m - 1 && cdf[static_cast<size_t>(cell + 1)] < level) ++cell;
        const double c0 = cdf[static_cast<size_t>(cell)];
        const double c1 = cdf[static_cast<size_t>(cell + 1)];
        const double w = (c1 > c0) ? (level - c0) / (c1 - c0) : 0.0;
        xs[static_cast<size_t>(k)] = g.x(cell) + w * g.dx();
    }
    return xs;
}

std::pair<double, double> effective_support(const WaveFunction& psi0, double cut) {
    if (!(cut > 0.0 && cut < 1.0))
        throw std::invalid_argument("effective_support: cut must be in (0,1)");
    const RealField rho = density(psi0);
    const Grid1D& g = rho.grid();
    double rho_max = 0.0;
    for (int j = 0; j < rho.size(); ++j) rho_max = std::max(rho_max, rho[j]);
    const double threshold = cut * rho_max;
    int lo = -1, hi = -1;
    for (int j = 0; j < rho.size(); ++j) {
        if (rho[j] >= threshold) {
            if (lo < 0) lo = j;
            hi = j;
        }
    }
    if (lo < 0) throw NumericalError("effective_support: empty support");
    return {g.x(lo), g.x(hi)};
}

double velocity_at(const WaveFunction& psi, double x, double mass) {
    if (!psi.grid().contains(x)) throw std::out_of_range("velocity_at: x outside grid");
    return interp_linear(velocity_field(psi, 0.0, mass), x);
}

namespace {

// RK4 march of one trajectory across snapshot interval `interval`; throws on
// grid escape.
double advance_interval(const VelocityProvider& v, double x, int interval, int substeps,
                        int traj_id, double x_init) {
    const auto& times = v.store().times();
    const Grid1D& g = v.store().grid();
    const double dt_snap = times[static_cast<size_t>(interval + 1)] -
                           times[static_cast<size_t>(interval)];
    const double h = dt_snap / substeps;

    auto eval = [&](double xx, double t_local) {
        if (!g.contains(xx))
            throw NumericalError("trajectory " + std::to_string(traj_id) + " (x_init=" +
                                 std::to_string(x_init) + ") escaped the grid near t=" +
                                 std::to_string(times[static_cast<size_t>(interval)] + t_local));
        return v.velocity(xx, interval, t_local / dt_snap);
    };

    for (int s = 0; s < substeps; ++s) {
        const double t0 = s * h;
        const double k1 = eval(x, t0);
        const double k2 = eval(x + 0.5 * h * k1, t0 + 0.5 * h);
        const double k3 = eval(x + 0.5 * h * k2, t0 + 0.5 * h);
        const double k4 = eval(x + h * k3, t0 + h);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!g.contains(x))
        throw NumericalError("trajectory " + std::to_string(traj_id) + " (x_init=" +
                             std::to_string(x_init) + ") escaped the grid at t=" +
                             std::to_string(times[static_cast<size_t>(interval + 1)]));
    return x;
}

}  // namespace

Trajectory integrate_trajectory(const VelocityProvider& v, double x_init, int substeps) {
    if (substeps < 1) throw std::invalid_argument("integrate_trajectory: substeps must be >= 1");
    if (!v.store().grid().contains(x_init))
        throw std::invalid_argument("integrate_trajectory: x_init outside grid");
    Trajectory tr;
    tr.x_init = x_init;
    tr.times = v.store().times();
    tr.positions.resize(tr.times.size());
    tr.positions[0] = x_init;
    double x = x_init;
    for (int i = 0; i + 1 < static_cast<int>(tr.times.size()); ++i) {
        x = advance_interval(v, x, i, substeps, /*traj_id=*/0, x_init);
        tr.positions[static_cast<size_t>(i + 1)] = x;
    }
    return tr;
}

TrajectoryEnsemble integrate_trajectories(const VelocityProvider& v,
                                          const std::vector<double>& x_inits, int substeps) {
    if (x_inits.size() < 1)
        throw std::invalid_argument("integrate_trajectories: empty initial-condition set");
    if (substeps < 1) throw std::invalid_argument("integrate_trajectories: substeps must be >= 1");
    for (size_t i = 0; i < x_inits.size(); ++i) {
        if (!v.store().grid().contains(x_inits[i]))
            throw std::invalid_argument("integrate_trajectories: x_init outside grid");
        if (i > 0 && !(x_inits[i] > x_inits[i - 1]))
            throw std::invalid_argument("integrate_trajectories: x_inits must be strictly increasing");
    }

    const auto& times = v.store().times();
    const int n_times = static_cast<int>(times.size());
    const int n_traj = static_cast<int>(x_inits.size());

    std::vector<Trajectory> trajs(static_cast<size_t>(n_traj));
    for (int k = 0; k < n_traj; ++k) {
        trajs[static_cast<size_t>(k)].x_init = x_inits[static_cast<size_t>(k)];
        trajs[static_cast<size_t>(k)].times = times;
        trajs[static_cast<size_t>(k)].positions.assign(static_cast<size_t>(n_times), 0.0);
        trajs[static_cast<size_t>(k)].positions[0] = x_inits[static_cast<size_t>(k)];
    }

    std::vector<double> xs(x_inits);
    for (int i = 0; i + 1 < n_times; ++i) {
        for (int k = 0; k < n_traj; ++k)
            xs[static_cast<size_t>(k)] =
                advance_interval(v, xs[static_cast<size_t>(k)], i, substeps, k,
                                 x_inits[static_cast<size_t>(k)]);
        for (int k = 1; k < n_traj; ++k) {
            if (!(xs[static_cast<size_t>(k)] > xs[static_cast<size_t>(k - 1)]))
                throw NumericalError(
                    "ordering violation between trajectories " + std::to_string(k - 1) + " and " +
                    std::to_string(k) + " at t=" + std::to_string(times[static_cast<size_t>(i + 1)]) +
                    " (integration tolerances too loose)");
        }
        for (int k = 0; k < n_traj; ++k)
            trajs[static_cast<size_t>(k)].positions[static_cast<size_t>(i + 1)] =
                xs[static_cast<size_t>(k)];
    }
    return TrajectoryEnsemble(std::move(trajs));
}

TrajectoryEnsemble integrate_trajectories(const SnapshotStore& store,
                                          const std::vector<double>& x_inits, int substeps) {
    VelocityProvider v(store);
    return integrate_trajectories(v, x_inits, substeps);
}

NonCrossingReport check_noncrossing(const TrajectoryEnsemble& ens) {
    NonCrossingReport report;
    report.min_gap = std::numeric_limits<double>::infinity();
    const int n_times = static_cast<int>(ens.times().size());
    for (int i = 0; i < n_times; ++i) {
        for (int k = 0; k + 1 < ens.size(); ++k) {
            const double gap = ens[k + 1].x_at(i) - ens[k].x_at(i);
            report.min_gap = std::min(report.min_gap, gap);
            if (!(gap > 0.0)) report.violations.push_back({i, k});
        }
    }
    if (ens.size() < 2) report.min_gap = 0.0;
    return report;
}

std::vector<JacobianRecord> pairwise_jacobian(const TrajectoryEnsemble& ens, int i) {
    if (i < 0 || i + 1 >= ens.size())
        throw std::invalid_argument("pairwise_jacobian: adjacent pair does not exist");
    const double gap0 = ens[i + 1].x_at(0) - ens[i].x_at(0);
    if (gap0 == 0.0) throw std::invalid_argument("pairwise_jacobian: zero initial gap");
    std::vector<JacobianRecord> records;
    records.reserve(ens.times().size());
    for (size_t m = 0; m < ens.times().size(); ++m) {
        const int mi = static_cast<int>(m);
        records.push_back({i, ens.times()[m], (ens[i + 1].x_at(mi) - ens[i].x_at(mi)) / gap0});
    }
    return records;
}

BornRuleResult born_rule_residual(const TrajectoryEnsemble& ens, const SnapshotStore& store) {
    const int n_pairs = ens.size() - 1;
    if (n_pairs < 1) throw std::invalid_argument("born_rule_residual: need at least two trajectories");
    if (ens.times() != store.times())
        throw std::invalid_argument("born_rule_residual: ensemble/store time mismatch");

    BornRuleResult result;
    result.times = ens.times();
    result.residuals.assign(static_cast<size_t>(n_pairs),
                            std::vector<double>(result.times.size(), 0.0));

    const double dx = store.grid().dx();
    const RealField rho0 = density(store.state(0));
    std::vector<double> d0(static_cast<size_t>(n_pairs));
    for (int p = 0; p < n_pairs; ++p) {
        const double gap0 = ens[p + 1].x_at(0) - ens[p].x_at(0);
        if (gap0 < dx / 10.0) result.resolution_warnings.push_back(p);
        const double mid0 = 0.5 * (ens[p].x_at(0) + ens[p + 1].x_at(0));
        d0[static_cast<size_t>(p)] = interp_linear(rho0, mid0) * gap0;
    }

    for (size_t m = 1; m < result.times.size(); ++m) {
        const RealField rho_t = density(store.state(static_cast<int>(m)));
        for (int p = 0; p < n_pairs; ++p) {
            const int mi = static_cast<int>(m);
            const double gap = ens[p + 1].x_at(mi) - ens[p].x_at(mi);
            const double mid = 0.5 * (ens[p].x_at(mi) + ens[p + 1].x_at(mi));
            const double dt_mass = interp_linear(rho_t, mid) * gap;
            result.residuals[static_cast<size_t>(p)][m] =
                std::abs(dt_mass - d0[static_cast<size_t>(p)]) / d0[static_cast<size_t>(p)];
        }
    }
    return result;
}

namespace {

// True when rho has a dip below depth * (local max) inside [lo, hi].
bool window_has_node(const RealField& rho, double lo, double hi, double depth) {
    const Grid1D& g = rho.grid();
    lo = std::max(lo, g.x_min());
    hi = std::min(hi, g.x(g.n_points() - 1));
    const int j_lo = std::max(0, static_cast<int>(std::ceil((lo - g.x_min()) / g.dx())));
    const int j_hi = std::min(g.n_points() - 1,
                              static_cast<int>(std::floor((hi - g.x_min()) / g.dx())));
    double w_min = std::numeric_limits<double>::infinity();
    double w_max = 0.0;
    for (int j = j_lo; j <= j_hi; ++j) {
        w_min = std::min(w_min, rho[j]);
        w_max = std::max(w_max, rho[j]);
    }
    return j_hi >= j_lo && w_min < depth * w_max;
}

}  // namespace

BornRuleSummary born_rule_max_filtered(const TrajectoryEnsemble& ens, const SnapshotStore& store,
                                       const BornRuleFilter& filter) {
    const int n_pairs = ens.size() - 1;
    if (n_pairs < 1) throw std::invalid_argument("born_rule_max_filtered: need at least two trajectories");

    const RealField rho0 = density(store.state(0));
    double rho0_max = 0.0;
    for (int j = 0; j < rho0.size(); ++j) rho0_max = std::max(rho0_max, rho0[j]);

    // pairs qualifying on initial gap and initial midpoint density; pairs
    // whose reference mass rho0(xbar) dx0 is already curvature-corrupted
    // (sitting in an interference dip of rho0) are node pairs and excluded
    std::vector<int> pairs;
    std::vector<double> d0;
    for (int p = 0; p < n_pairs; ++p) {
        const double gap0 = ens[p + 1].x_at(0) - ens[p].x_at(0);
        if (gap0 < filter.gap_min || gap0 > filter.gap_max) continue;
        const double mid0 = 0.5 * (ens[p].x_at(0) + ens[p + 1].x_at(0));
        const double r0 = interp_linear(rho0, mid0);
        if (r0 < filter.rho0_rel_floor * rho0_max) continue;
        const double second_diff0 = std::abs(interp_linear(rho0, ens[p].x_at(0)) - 2.0 * r0 +
                                             interp_linear(rho0, ens[p + 1].x_at(0)));
        if (second_diff0 > filter.curvature_max * r0) continue;
        const double w0 = filter.node_window_gaps * gap0;
        if (window_has_node(rho0, mid0 - w0, mid0 + w0, filter.node_depth)) continue;
        pairs.push_back(p);
        d0.push_back(r0 * gap0);
    }

    BornRuleSummary summary;
    summary.pairs_considered = static_cast<int>(pairs.size());
    const double gap_cap = filter.current_gap_max > 0.0 ? filter.current_gap_max : filter.gap_max;
    const double gap_floor = filter.current_gap_min > 0.0 ? filter.current_gap_min
                                                          : filter.gap_min / 10.0;
    for (size_t m = 1; m < store.times().size(); ++m) {
        const RealField rho_t = density(store.state(static_cast<int>(m)));
        double rho_t_max = 0.0;
        for (int j = 0; j < rho_t.size(); ++j) rho_t_max = std::max(rho_t_max, rho_t[j]);
        for (size_t q = 0; q < pairs.size(); ++q) {
            const int p = pairs[q];
            const int mi = static_cast<int>(m);
            const double gap = ens[p + 1].x_at(mi) - ens[p].x_at(mi);
            if (gap > gap_cap) continue;  // midpoint approximation no longer meaningful
            if (gap < gap_floor) continue;  // below finite-difference resolution
            const double mid = 0.5 * (ens[p].x_at(mi) + ens[p + 1].x_at(mi));
            const double rt = interp_linear(rho_t, mid);
            if (rt < filter.node_rel_floor * rho_t_max) continue;  // near a density node
            const double second_diff = std::abs(interp_linear(rho_t, ens[p].x_at(mi)) -
                                                2.0 * rt +
                                                interp_linear(rho_t, ens[p + 1].x_at(mi)));
            if (second_diff > filter.curvature_max * rt) continue;  // node inside the pair
            const double w = filter.node_window_gaps * gap;
            if (window_has_node(rho_t, mid - w, mid + w, filter.node_depth)) continue;
            const double residual = std::abs(rt * gap - d0[q]) / d0[q];
            summary.max_residual = std::max(summary.max_residual, residual);
            ++summary.samples_considered;
        }
    }
    return summary;
}

void export_trajectories_csv(const TrajectoryEnsemble& ens, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "traj_id,t,x\n";
    char buf[96];
    for (int k = 0; k < ens.size(); ++k) {
        for (size_t m = 0; m < ens.times().size(); ++m) {
            std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", k, ens.times()[m],
                          ens[k].positions[m]);
            out << buf;
        }
    }
}

}  // namespace qtube
