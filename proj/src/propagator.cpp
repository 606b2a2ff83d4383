#include "qtube/propagator.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "qtube/errors.hpp"
#include "qtube/fft.hpp"

namespace qtube {

SnapshotStore::SnapshotStore(std::vector<double> times, std::vector<WaveFunction> states,
                             PropagationConfig config)
    : times_(std::move(times)), states_(std::move(states)), config_(config) {
    if (times_.empty() || times_.size() != states_.size())
        throw std::invalid_argument("SnapshotStore: times/states size mismatch");
    if (times_.front() != 0.0)
        throw std::invalid_argument("SnapshotStore: times must start at 0");
    for (size_t i = 1; i < times_.size(); ++i)
        if (!(times_[i] > times_[i - 1]))
            throw std::invalid_argument("SnapshotStore: times must be strictly increasing");
    const Grid1D& g = states_.front().grid();
    for (const auto& s : states_) {
        if (!(s.grid() == g))
            throw std::invalid_argument("SnapshotStore: states must share one grid");
        if (std::abs(norm(s) - 1.0) > 1e-8)
            throw std::invalid_argument("SnapshotStore: state norm drifted beyond 1e-8");
    }
}

namespace {

struct SplitPhases {
    std::vector<std::complex<double>> half_kinetic;  // exp(-i k^2 dt / 4m)
    std::vector<std::complex<double>> potential;     // exp(-i V dt)
};

SplitPhases make_phases(const Grid1D& g, const RealField& V, double dt, double mass) {
    SplitPhases ph;
    const size_t n = static_cast<size_t>(g.n_points());
    ph.half_kinetic.resize(n);
    ph.potential.resize(n);
    for (int j = 0; j < g.n_points(); ++j) {
        const double k = g.k(j);
        ph.half_kinetic[static_cast<size_t>(j)] =
            std::exp(std::complex<double>(0.0, -k * k * dt / (4.0 * mass)));
        ph.potential[static_cast<size_t>(j)] =
            std::exp(std::complex<double>(0.0, -V[j] * dt));
    }
    return ph;
}

void strang_step(std::vector<std::complex<double>>& amps, const SplitPhases& ph) {
    fft::forward_inplace(amps);
    for (size_t j = 0; j < amps.size(); ++j) amps[j] *= ph.half_kinetic[j];
    fft::inverse_inplace(amps);
    for (size_t j = 0; j < amps.size(); ++j) amps[j] *= ph.potential[j];
    fft::forward_inplace(amps);
    for (size_t j = 0; j < amps.size(); ++j) amps[j] *= ph.half_kinetic[j];
    fft::inverse_inplace(amps);
}

void check_finite(const std::vector<std::complex<double>>& amps) {
    for (const auto& z : amps)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw NumericalError("propagation unstable: non-finite amplitudes (dt too large)");
}

double clamp_time(double t) {
    if (t < 0.0 && t > -1e-12) return 0.0;
    if (t < 0.0) throw std::invalid_argument("step: time would become negative");
    return t;
}

}  // namespace

WaveFunction step(const WaveFunction& psi, const RealField& V, double dt, double mass) {
    if (!(psi.grid() == V.grid()))
        throw std::invalid_argument("step: psi and V grids differ");
    if (!(mass > 0.0)) throw std::invalid_argument("step: mass must be > 0");
    const SplitPhases ph = make_phases(psi.grid(), V, dt, mass);
    auto amps = psi.amplitudes().values();
    strang_step(amps, ph);
    check_finite(amps);
    return WaveFunction(ComplexField(psi.grid(), std::move(amps)), clamp_time(psi.t() + dt));
}

SnapshotStore propagate(const WaveFunction& psi0, const RealField& V,
                        const PropagationConfig& cfg) {
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("propagate: dt must be > 0");
    if (cfg.n_steps < 1) throw std::invalid_argument("propagate: n_steps must be >= 1");
    if (cfg.snapshot_stride < 1 || cfg.snapshot_stride > cfg.n_steps)
        throw std::invalid_argument("propagate: snapshot_stride must be in [1, n_steps]");
    if (cfg.n_steps % cfg.snapshot_stride != 0)
        throw std::invalid_argument("propagate: n_steps must be divisible by snapshot_stride");
    if (!(psi0.grid() == V.grid()))
        throw std::invalid_argument("propagate: psi0 and V grids differ");
    if (psi0.t() != 0.0)
        throw std::invalid_argument("propagate: initial state must have t = 0");

    const SplitPhases ph = make_phases(psi0.grid(), V, cfg.dt, cfg.mass);
    const int n_snapshots = cfg.n_steps / cfg.snapshot_stride + 1;

    std::vector<double> times;
    std::vector<WaveFunction> states;
    times.reserve(static_cast<size_t>(n_snapshots));
    states.reserve(static_cast<size_t>(n_snapshots));
    times.push_back(0.0);
    states.push_back(psi0);

    auto amps = psi0.amplitudes().values();
    for (int i = 1; i <= cfg.n_steps; ++i) {
        strang_step(amps, ph);
        if (i % cfg.snapshot_stride == 0) {
            check_finite(amps);
            const double t = static_cast<double>(i) * cfg.dt;
            times.push_back(t);
            states.emplace_back(ComplexField(psi0.grid(), amps), t);
        }
    }
    return SnapshotStore(std::move(times), std::move(states), cfg);
}

PropagationDiagnostics diagnose(const SnapshotStore& store, const RealField& V) {
    PropagationDiagnostics d;
    d.norms.reserve(static_cast<size_t>(store.size()));
    d.energies.reserve(static_cast<size_t>(store.size()));
    for (int i = 0; i < store.size(); ++i) {
        d.norms.push_back(norm(store.state(i)));
        d.energies.push_back(mean_energy(store.state(i), V, store.config().mass));
    }
    const double e0 = d.energies.front();
    for (int i = 0; i < store.size(); ++i) {
        d.max_norm_drift = std::max(d.max_norm_drift, std::abs(d.norms[static_cast<size_t>(i)] - 1.0));
        d.max_energy_drift_rel = std::max(
            d.max_energy_drift_rel, std::abs(d.energies[static_cast<size_t>(i)] - e0) / std::abs(e0));
    }
    return d;
}

void export_snapshots_csv(const SnapshotStore& store, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "t,x,re,im\n";
    char buf[128];
    for (int i = 0; i < store.size(); ++i) {
        const auto& amps = store.state(i).amplitudes();
        const Grid1D& g = store.grid();
        for (int j = 0; j < g.n_points(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", store.times()[static_cast<size_t>(i)],
                          g.x(j), amps[j].real(), amps[j].imag());
            out << buf;
        }
    }
}

}  // namespace qtube
