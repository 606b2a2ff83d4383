#pragma once

#include <memory>
#include <string>
#include <vector>

#include "qtube/propagator.hpp"

namespace qtube {

/// One Bohmian trajectory sampled at the snapshot times of the store it was
/// integrated against.
struct Trajectory {
    double x_init = 0.0;
    std::vector<double> times;
    std::vector<double> positions;

    double x_at(int i) const { return positions[static_cast<size_t>(i)]; }
    double x_final() const { return positions.back(); }
};

/// Ordered set of trajectories; x_init strictly increasing. The non-crossing
/// property is enforced by the integrator and re-checkable via
/// check_noncrossing.
class TrajectoryEnsemble {
public:
    explicit TrajectoryEnsemble(std::vector<Trajectory> trajectories);

    const std::vector<Trajectory>& trajectories() const { return trajectories_; }
    const Trajectory& operator[](int i) const { return trajectories_[static_cast<size_t>(i)]; }
    int size() const { return static_cast<int>(trajectories_.size()); }
    const std::vector<double>& times() const { return trajectories_.front().times; }

private:
    std::vector<Trajectory> trajectories_;
};

/// Lazily computed per-snapshot velocity fields over a frozen store.
/// Single-threaded cache; the store must outlive the provider.
class VelocityProvider {
public:
    explicit VelocityProvider(const SnapshotStore& store, double rho_floor = 0.0);

    const SnapshotStore& store() const { return *store_; }
    const RealField& at_snapshot(int i) const;

    /// Linear interpolation in x and t between the bracketing snapshots.
    double velocity(double x, int interval, double t_frac) const;

private:
    const SnapshotStore* store_;
    double rho_floor_;
    mutable std::vector<std::unique_ptr<RealField>> cache_;
};

enum class SamplingScheme { even, quantile };

/// Hull [first, last] of the effective support {x : rho0(x) >= cut * max rho0}.
std::pair<double, double> effective_support(const WaveFunction& psi0, double cut);

/// Initial positions for a trajectory ensemble. `even`: n positions uniformly
/// spaced over the effective support {x : rho0(x) >= support_cut * max rho0}
/// (disjoint support islands are covered proportionally to their length, the
/// first and last positions being the support endpoints). `quantile`:
/// positions at cumulative-probability levels (k-1/2)/n.
std::vector<double> sample_initial_conditions(const WaveFunction& psi0, int n,
                                              SamplingScheme scheme,
                                              double support_cut = 1e-4);

/// Velocity at an off-grid point by linear interpolation of the velocity
/// field. Throws std::out_of_range when x is outside the grid.
double velocity_at(const WaveFunction& psi, double x, double mass = 1.0);

/// RK4 on dx/dt = v(x,t) with `substeps` sub-steps per snapshot interval and
/// linear interpolation of v between bracketing snapshots.
Trajectory integrate_trajectory(const VelocityProvider& v, double x_init, int substeps = 4);

/// Integrates the whole set (x_inits sorted strictly increasing, inside the
/// grid) and verifies strict ordering at every snapshot time. Throws
/// NumericalError on grid escape (naming the trajectory) or on a detected
/// crossing.
TrajectoryEnsemble integrate_trajectories(const VelocityProvider& v,
                                          const std::vector<double>& x_inits,
                                          int substeps = 4);
TrajectoryEnsemble integrate_trajectories(const SnapshotStore& store,
                                          const std::vector<double>& x_inits,
                                          int substeps = 4);

struct NonCrossingReport {
    struct Violation {
        int time_index;
        int pair_index;  // between trajectories pair_index and pair_index+1
    };
    std::vector<Violation> violations;
    double min_gap = 0.0;

    bool clean() const { return violations.empty(); }
};

/// Empty report iff ordering is strict at every sampled time; violations are
/// data, not exceptions.
NonCrossingReport check_noncrossing(const TrajectoryEnsemble& ens);

struct JacobianRecord {
    int pair_index;
    double t;
    double jacobian;  // dx(t) / dx(0), positive for a valid ensemble
};

/// Finite-difference Jacobian of the configuration-space map for the adjacent
/// pair (i, i+1). Throws std::invalid_argument on zero initial gap.
std::vector<JacobianRecord> pairwise_jacobian(const TrajectoryEnsemble& ens, int i);

struct BornRuleResult {
    std::vector<double> times;
    /// residuals[pair][time_index] =
    ///   |rho(xbar(t),t) dx(t) - rho(xbar(0),0) dx(0)| / (rho(xbar(0),0) dx(0))
    std::vector<std::vector<double>> residuals;
    /// pairs whose initial gap is below dx/10 (finite-difference Jacobian
    /// unreliable there)
    std::vector<int> resolution_warnings;
};

/// Pairwise transport residual of the time-dependent Born rule, midpoint
/// density approximation with linear interpolation.
BornRuleResult born_rule_residual(const TrajectoryEnsemble& ens, const SnapshotStore& store);

struct BornRuleFilter {
    double gap_min;             // initial pair gap window, absolute units
    double gap_max;
    double rho0_rel_floor = 1e-3;  // initial midpoint density, relative to max rho0
    double node_rel_floor = 1e-3;  // per-time midpoint density, relative to max rho(.,t)
    // The midpoint-density approximation needs the gap to stay small; samples
    // whose current gap exceeds this are not meaningful. Defaults to gap_max.
    double current_gap_max = 0.0;
    // Finite-difference transport is unresolved once the gap compresses below
    // the dx/10 resolution limit; such samples are skipped. Defaults to
    // gap_min / 10.
    double current_gap_min = 0.0;
    // Node exclusion: the density must be locally smooth across the pair,
    // |rho(x_i) - 2 rho(xbar) + rho(x_{i+1})| <= curvature_max * rho(xbar).
    // 0.02 keeps the midpoint-estimator error below a sixth of the 2e-2
    // transport tolerance.
    double curvature_max = 0.02;
    // Node exclusion: no density dip below node_depth * (local max) within
    // node_window_gaps pair-widths of the midpoint. Catches interference
    // fringes whose wavelength is comparable to the pair width, which the
    // 3-point curvature test aliases.
    double node_depth = 0.3;
    double node_window_gaps = 2.0;
};

struct BornRuleSummary {
    double max_residual = 0.0;
    int pairs_considered = 0;
    long samples_considered = 0;
};

/// Maximum residual over pairs inside the gap window whose midpoints stay
/// away from density nodes per the filter.
BornRuleSummary born_rule_max_filtered(const TrajectoryEnsemble& ens,
                                       const SnapshotStore& store,
                                       const BornRuleFilter& filter);

/// CSV export, header "traj_id,t,x", rows sorted by (traj_id, t).
void export_trajectories_csv(const TrajectoryEnsemble& ens, const std::string& path);

}  // namespace qtube
