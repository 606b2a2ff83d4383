#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "qtube/trajectories.hpp"

namespace qtube {

/// Spacetime region swept between two boundary trajectories; encloses
/// constant probability because trajectories never cross.
struct ProbabilityTube {
    Trajectory lower;
    Trajectory upper;
};

/// Per-time interval boundaries (a(t), b(t)), aligned with store snapshots.
struct DomainSeries {
    std::vector<double> times;
    std::vector<double> a;
    std::vector<double> b;

    static DomainSeries fixed(const std::vector<double>& times, double a, double b);
};

/// Final-domain label plus spatial interval at t_final.
struct LabeledDomain {
    std::string label;
    double lo;
    double hi;
};

/// Maximal run of equal final labels along x_init.
struct LabeledSegment {
    std::string label;
    double lo;
    double hi;
};

/// Splitting record: an initial interval whose trajectories end in two or
/// more final domains.
struct BranchRecord {
    double initial_lo;
    double initial_hi;
    std::vector<LabeledSegment> segments;  // partition of [initial_lo, initial_hi]
};

/// Label of the domain containing x. Domains must be disjoint; an uncovered
/// position raises NumericalError.
std::string classify_position(double x, const std::vector<LabeledDomain>& domains);

/// Label of the domain containing the trajectory's final position.
std::string classify_final(const Trajectory& traj, const std::vector<LabeledDomain>& domains);

/// Bisection on a monotone boolean predicate of x_init; the predicate must
/// differ at the bracket endpoints (false at lo, true at hi). Returns the
/// bracket midpoint once |hi - lo| <= tol.
double find_separatrix(const std::function<bool(double)>& predicate, double bracket_lo,
                       double bracket_hi, double tol);

/// Label-based search against a frozen store: seeks the lower boundary of
/// {x_init : domain index of final label >= index of target_label}. Each
/// probe integrates one trajectory. Raises NumericalError when both bracket
/// endpoints classify equally (bracket error) or when refinement meets labels
/// outside the endpoint range (branching suspected).
double find_separatrix(const VelocityProvider& v, const std::vector<LabeledDomain>& domains,
                       const std::string& target_label, double bracket_lo, double bracket_hi,
                       double tol, int substeps = 4);

/// P(t) = restricted probability between the tube boundaries at each
/// snapshot.
std::vector<double> tube_probability(const ProbabilityTube& tube, const SnapshotStore& store);

/// Per-time residual of the flux-balance relation
///   dP/dt + J(b,t) - J(a,t) - [bdot rho(b) - adot rho(a)] = 0,
/// with dP/dt and the boundary velocities taken as centered differences over
/// snapshots (one-sided at the ends). For static domains the advection term
/// vanishes.
std::vector<double> flux_balance(const DomainSeries& domain, const SnapshotStore& store);

/// Fraunhofer boundary pair x_n^(-/+)(t) = 2 pi (N -/+ 1) (n/N) (hbar/(m d)) t
/// for the n-th diffraction order of an N-slit grating with spacing d.
std::pair<double, double> fraunhofer_boundary(int n, double t, int n_slits, double spacing,
                                              double mass = 1.0);

/// Ordered far-field domain for order n. For n = 0 the boundary-pair formula
/// degenerates to (0, 0); the domain is instead bounded by the first minima
/// at +/- 2 pi t / (N d m). For n != 0 this is the ordered boundary pair.
std::pair<double, double> fraunhofer_domain(int n, double t, int n_slits, double spacing,
                                            double mass = 1.0);

/// Positions of strict local minima of rho inside [a, b] (3-point test,
/// plateau centers reported once), refined by parabolic interpolation.
std::vector<double> find_minima(const RealField& rho, double a, double b);

struct GratingGeometry {
    int n_slits = 5;
    double spacing = 2.0;
};

/// Probability between the two minima adjacent to principal maximum n at the
/// snapshot nearest to t. Raises NumericalError when the peak is not
/// bracketed by minima (unresolved pattern).
double peak_intensity_area(const SnapshotStore& store, double t, int n,
                           const GratingGeometry& geom);

/// The adjacent-minima interval around principal maximum n at the snapshot
/// nearest to t (helper shared with peak_intensity_area).
std::pair<double, double> peak_domain_at(const SnapshotStore& store, double t, int n,
                                         const GratingGeometry& geom);

/// Adds filler domains ("between:A:B", "tail:left", "tail:right") so that the
/// labeled set tiles [grid_lo, grid_hi]; classification of arbitrary finals
/// then never fails.
std::vector<LabeledDomain> covering_domains(std::vector<LabeledDomain> domains, double grid_lo,
                                            double grid_hi);

/// Maximal runs of equal labels along x_init, with run boundaries refined by
/// local bisection (probe trajectories) to refine_tol. Labels are assigned at
/// snapshot time_index (-1 means the final snapshot).
std::vector<LabeledSegment> label_segments(const VelocityProvider& v,
                                           const TrajectoryEnsemble& ens,
                                           const std::vector<LabeledDomain>& domains,
                                           double refine_tol = 1e-3, int substeps = 4,
                                           int time_index = -1);

/// Emits one BranchRecord per requested initial interval that maps to two or
/// more final labels.
std::vector<BranchRecord> detect_branching(const std::vector<LabeledSegment>& segments,
                                           const std::vector<std::pair<double, double>>& intervals);

struct PerSlitMatrix {
    std::vector<std::string> peak_labels;
    /// P[slit][peak]: restricted probability of psi0 over
    /// (slit interval) intersect (initial segments classified to the peak)
    std::vector<std::vector<double>> P;
};

PerSlitMatrix per_slit_contribution(const WaveFunction& psi0,
                                    const std::vector<std::pair<double, double>>& slit_intervals,
                                    const std::vector<std::string>& peak_labels,
                                    const std::vector<LabeledSegment>& segments);

}  // namespace qtube
