#include "qtube/tubes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "qtube/errors.hpp"

namespace qtube {

DomainSeries DomainSeries::fixed(const std::vector<double>& times, double a, double b) {
    if (a > b) throw std::invalid_argument("DomainSeries: a > b");
    DomainSeries d;
    d.times = times;
    d.a.assign(times.size(), a);
    d.b.assign(times.size(), b);
    return d;
}

namespace {

std::vector<LabeledDomain> sorted_disjoint(std::vector<LabeledDomain> domains) {
    if (domains.empty()) throw std::invalid_argument("domain list is empty");
    std::sort(domains.begin(), domains.end(),
              [](const LabeledDomain& u, const LabeledDomain& w) { return u.lo < w.lo; });
    for (size_t i = 0; i < domains.size(); ++i) {
        if (domains[i].lo > domains[i].hi)
            throw std::invalid_argument("domain '" + domains[i].label + "' has lo > hi");
        if (i > 0 && domains[i].lo < domains[i - 1].hi)
            throw std::invalid_argument("domains '" + domains[i - 1].label + "' and '" +
                                        domains[i].label + "' overlap");
    }
    return domains;
}

}  // namespace

std::string classify_position(double x, const std::vector<LabeledDomain>& domains) {
    for (const auto& d : sorted_disjoint(domains))
        if (x >= d.lo && x <= d.hi) return d.label;
    throw NumericalError("classify_position: position " + std::to_string(x) +
                         " not covered by any domain");
}

std::string classify_final(const Trajectory& traj, const std::vector<LabeledDomain>& domains) {
    return classify_position(traj.x_final(), domains);
}

double find_separatrix(const std::function<bool(double)>& predicate, double bracket_lo,
                       double bracket_hi, double tol) {
    if (!(bracket_lo < bracket_hi)) throw std::invalid_argument("find_separatrix: bad bracket");
    if (!(tol > 0.0)) throw std::invalid_argument("find_separatrix: tol must be > 0");
    if (predicate(bracket_lo) || !predicate(bracket_hi))
        throw NumericalError(
            "find_separatrix: predicate does not flip across the bracket (bracket error)");
    double lo = bracket_lo;
    double hi = bracket_hi;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (predicate(mid)) hi = mid;
        else lo = mid;
    }
    return 0.5 * (lo + hi);
}

double find_separatrix(const VelocityProvider& v, const std::vector<LabeledDomain>& domains,
                       const std::string& target_label, double bracket_lo, double bracket_hi,
                       double tol, int substeps) {
    const auto sorted = sorted_disjoint(domains);
    auto index_of = [&](const std::string& label) {
        for (size_t i = 0; i < sorted.size(); ++i)
            if (sorted[i].label == label) return static_cast<int>(i);
        throw std::invalid_argument("find_separatrix: unknown label '" + label + "'");
    };
    const int target = index_of(target_label);
    auto probe = [&](double x_init) {
        return index_of(classify_final(integrate_trajectory(v, x_init, substeps), sorted));
    };

    if (!(bracket_lo < bracket_hi)) throw std::invalid_argument("find_separatrix: bad bracket");
    const int idx_lo = probe(bracket_lo);
    const int idx_hi = probe(bracket_hi);
    if (idx_lo == idx_hi)
        throw NumericalError("find_separatrix: same label '" + sorted[static_cast<size_t>(idx_lo)].label +
                             "' at both bracket endpoints (bracket error)");
    if (!(idx_lo < target && target <= idx_hi))
        throw NumericalError("find_separatrix: target label '" + target_label +
                             "' not between the endpoint labels (bracket error)");

    double lo = bracket_lo;
    double hi = bracket_hi;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const int idx = probe(mid);
        if (idx < idx_lo || idx > idx_hi)
            throw NumericalError(
                "find_separatrix: label ordering not monotone across the bracket "
                "(branching suspected; run detect_branching)");
        if (idx >= target) hi = mid;
        else lo = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<double> tube_probability(const ProbabilityTube& tube, const SnapshotStore& store) {
    if (tube.lower.times != store.times() || tube.upper.times != store.times())
        throw std::invalid_argument("tube_probability: tube boundaries not sampled at store times");
    std::vector<double> p(static_cast<size_t>(store.size()));
    for (int i = 0; i < store.size(); ++i) {
        const double lo = tube.lower.x_at(i);
        const double hi = tube.upper.x_at(i);
        if (!(lo < hi))
            throw std::invalid_argument("tube_probability: boundaries cross at t=" +
                                        std::to_string(store.times()[static_cast<size_t>(i)]));
        p[static_cast<size_t>(i)] = restricted_probability(store.state(i), lo, hi);
    }
    return p;
}

namespace {

// centered differences over possibly nonuniform snapshot times, one-sided at
// the ends
std::vector<double> time_derivative(const std::vector<double>& t, const std::vector<double>& f) {
    const size_t n = t.size();
    std::vector<double> d(n, 0.0);
    if (n < 2) return d;
    d[0] = (f[1] - f[0]) / (t[1] - t[0]);
    d[n - 1] = (f[n - 1] - f[n - 2]) / (t[n - 1] - t[n - 2]);
    for (size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (t[i + 1] - t[i - 1]);
    return d;
}

}  // namespace

std::vector<double> flux_balance(const DomainSeries& domain, const SnapshotStore& store) {
    if (domain.times != store.times())
        throw std::invalid_argument("flux_balance: domain series not aligned with store times");
    const size_t n = domain.times.size();

    std::vector<double> p(n), j_a(n), j_b(n), rho_a(n), rho_b(n);
    for (size_t i = 0; i < n; ++i) {
        const WaveFunction& psi = store.state(static_cast<int>(i));
        p[i] = restricted_probability(psi, domain.a[i], domain.b[i]);
        const RealField j = current_density(psi, store.config().mass);
        const RealField rho = density(psi);
        j_a[i] = interp_linear(j, domain.a[i]);
        j_b[i] = interp_linear(j, domain.b[i]);
        rho_a[i] = interp_linear(rho, domain.a[i]);
        rho_b[i] = interp_linear(rho, domain.b[i]);
    }

    const auto dpdt = time_derivative(domain.times, p);
    const auto adot = time_derivative(domain.times, domain.a);
    const auto bdot = time_derivative(domain.times, domain.b);

    std::vector<double> residual(n);
    for (size_t i = 0; i < n; ++i)
        residual[i] = dpdt[i] + j_b[i] - j_a[i] - (bdot[i] * rho_b[i] - adot[i] * rho_a[i]);
    return residual;
}

std::pair<double, double> fraunhofer_boundary(int n, double t, int n_slits, double spacing,
                                              double mass) {
    if (n_slits < 2) throw std::invalid_argument("fraunhofer_boundary: need n_slits >= 2");
    if (!(spacing > 0.0)) throw std::invalid_argument("fraunhofer_boundary: spacing must be > 0");
    if (t < 0.0) throw std::invalid_argument("fraunhofer_boundary: t must be >= 0");
    const double base = 2.0 * std::numbers::pi * (static_cast<double>(n) / n_slits) /
                        (mass * spacing) * t;
    return {base * (n_slits - 1), base * (n_slits + 1)};
}

std::pair<double, double> fraunhofer_domain(int n, double t, int n_slits, double spacing,
                                            double mass) {
    if (n == 0) {
        const double b = 2.0 * std::numbers::pi * t / (n_slits * spacing * mass);
        return {-b, b};
    }
    auto [u, w] = fraunhofer_boundary(n, t, n_slits, spacing, mass);
    return {std::min(u, w), std::max(u, w)};
}

std::vector<double> find_minima(const RealField& rho, double a, double b) {
    const Grid1D& g = rho.grid();
    a = std::max(a, g.x_min());
    b = std::min(b, g.x(g.n_points() - 1));
    std::vector<double> minima;
    if (!(a < b)) return minima;

    const int j_lo = std::max(1, static_cast<int>(std::ceil((a - g.x_min()) / g.dx())));
    const int j_hi = std::min(g.n_points() - 2, static_cast<int>(std::floor((b - g.x_min()) / g.dx())));

    int j = j_lo;
    while (j <= j_hi) {
        if (!(rho[j] < rho[j - 1])) { ++j; continue; }
        int e = j;
        while (e + 1 <= j_hi && rho[e + 1] == rho[j]) ++e;  // plateau
        if (e + 1 >= g.n_points() || !(rho[e + 1] > rho[j])) { j = e + 1; continue; }
        if (e == j) {
            const double denom = rho[j - 1] - 2.0 * rho[j] + rho[j + 1];
            double delta = 0.0;
            if (denom > 0.0) delta = 0.5 * (rho[j - 1] - rho[j + 1]) / denom;
            delta = std::clamp(delta, -0.5, 0.5);
            minima.push_back(g.x(j) + delta * g.dx());
        } else {
            minima.push_back(0.5 * (g.x(j) + g.x(e)));  // plateau center, reported once
        }
        j = e + 1;
    }
    return minima;
}

namespace {

int nearest_snapshot(const SnapshotStore& store, double t) {
    const auto& times = store.times();
    int best = 0;
    double best_err = std::abs(times[0] - t);
    for (size_t i = 1; i < times.size(); ++i) {
        const double err = std::abs(times[i] - t);
        if (err < best_err) { best = static_cast<int>(i); best_err = err; }
    }
    return best;
}

}  // namespace

std::pair<double, double> peak_domain_at(const SnapshotStore& store, double t, int n,
                                         const GratingGeometry& geom) {
    const int i = nearest_snapshot(store, t);
    const double t_snap = store.times()[static_cast<size_t>(i)];
    const double mass = store.config().mass;
    const double order_spacing = 2.0 * std::numbers::pi * t_snap / (geom.spacing * mass);
    const double center = n * order_spacing;

    const RealField rho = density(store.state(i));
    const auto minima = find_minima(rho, center - order_spacing, center + order_spacing);
    double left = -std::numeric_limits<double>::infinity();
    double right = std::numeric_limits<double>::infinity();
    for (double m : minima) {
        if (m < center) left = std::max(left, m);
        else right = std::min(right, m);
    }
    if (!std::isfinite(left) || !std::isfinite(right))
        throw NumericalError("peak_intensity_area: principal maximum n=" + std::to_string(n) +
                             " not bracketed by minima at t=" + std::to_string(t_snap) +
                             " (unresolved pattern)");
    return {left, right};
}

double peak_intensity_area(const SnapshotStore& store, double t, int n,
                           const GratingGeometry& geom) {
    const int i = nearest_snapshot(store, t);
    auto [lo, hi] = peak_domain_at(store, t, n, geom);
    return restricted_probability(store.state(i), lo, hi);
}

std::vector<LabeledDomain> covering_domains(std::vector<LabeledDomain> domains, double grid_lo,
                                            double grid_hi) {
    auto sorted = sorted_disjoint(std::move(domains));
    std::vector<LabeledDomain> out;
    if (sorted.front().lo > grid_lo)
        out.push_back({"tail:left", grid_lo, sorted.front().lo});
    for (size_t i = 0; i < sorted.size(); ++i) {
        out.push_back(sorted[i]);
        if (i + 1 < sorted.size() && sorted[i].hi < sorted[i + 1].lo)
            out.push_back({"between:" + sorted[i].label + ":" + sorted[i + 1].label,
                           sorted[i].hi, sorted[i + 1].lo});
    }
    if (sorted.back().hi < grid_hi)
        out.push_back({"tail:right", sorted.back().hi, grid_hi});
    return out;
}

std::vector<LabeledSegment> label_segments(const VelocityProvider& v,
                                           const TrajectoryEnsemble& ens,
                                           const std::vector<LabeledDomain>& domains,
                                           double refine_tol, int substeps, int time_index) {
    const int n = ens.size();
    const int n_times = static_cast<int>(ens.times().size());
    if (time_index < 0) time_index = n_times - 1;
    if (time_index >= n_times)
        throw std::invalid_argument("label_segments: time_index out of range");

    std::vector<std::string> labels(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k)
        labels[static_cast<size_t>(k)] = classify_position(ens[k].x_at(time_index), domains);

    std::vector<LabeledSegment> segments;
    double seg_lo = ens[0].x_init;
    for (int k = 0; k + 1 < n; ++k) {
        if (labels[static_cast<size_t>(k)] == labels[static_cast<size_t>(k + 1)]) continue;
        // refine the label change inside (x_k, x_{k+1})
        const std::string& left_label = labels[static_cast<size_t>(k)];
        const double boundary = find_separatrix(
            [&](double x0) {
                const Trajectory probe = integrate_trajectory(v, x0, substeps);
                return classify_position(probe.x_at(time_index), domains) != left_label;
            },
            ens[k].x_init, ens[k + 1].x_init, refine_tol);
        segments.push_back({left_label, seg_lo, boundary});
        seg_lo = boundary;
    }
    segments.push_back({labels.back(), seg_lo, ens[n - 1].x_init});
    return segments;
}

std::vector<BranchRecord> detect_branching(const std::vector<LabeledSegment>& segments,
                                           const std::vector<std::pair<double, double>>& intervals) {
    std::vector<BranchRecord> records;
    for (const auto& [lo, hi] : intervals) {
        if (!(lo < hi)) throw std::invalid_argument("detect_branching: bad interval");
        BranchRecord rec{lo, hi, {}};
        for (const auto& seg : segments) {
            const double s_lo = std::max(seg.lo, lo);
            const double s_hi = std::min(seg.hi, hi);
            if (s_lo < s_hi) rec.segments.push_back({seg.label, s_lo, s_hi});
        }
        std::vector<std::string> distinct;
        for (const auto& seg : rec.segments)
            if (std::find(distinct.begin(), distinct.end(), seg.label) == distinct.end())
                distinct.push_back(seg.label);
        if (distinct.size() >= 2) records.push_back(std::move(rec));
    }
    return records;
}

PerSlitMatrix per_slit_contribution(const WaveFunction& psi0,
                                    const std::vector<std::pair<double, double>>& slit_intervals,
                                    const std::vector<std::string>& peak_labels,
                                    const std::vector<LabeledSegment>& segments) {
    const RealField rho0 = density(psi0);
    PerSlitMatrix m;
    m.peak_labels = peak_labels;
    m.P.assign(slit_intervals.size(), std::vector<double>(peak_labels.size(), 0.0));
    for (size_t s = 0; s < slit_intervals.size(); ++s) {
        for (size_t p = 0; p < peak_labels.size(); ++p) {
            double total = 0.0;
            for (const auto& seg : segments) {
                if (seg.label != peak_labels[p]) continue;
                const double lo = std::max(seg.lo, slit_intervals[s].first);
                const double hi = std::min(seg.hi, slit_intervals[s].second);
                if (lo < hi) total += integrate(rho0, lo, hi);
            }
            m.P[s][p] = total;
        }
    }
    return m;
}

}  // namespace qtube
