#pragma once

#include <string>
#include <vector>

#include "qtube/potential.hpp"
#include "qtube/state.hpp"

namespace qtube {

struct PropagationConfig {
    double dt = 1e-3;
    int n_steps = 1;
    int snapshot_stride = 1;  // store every k-th step
    double mass = 1.0;
};

/// Time-ordered record of the propagated wave function. Immutable once built;
/// the trajectory engine reads it concurrently.
class SnapshotStore {
public:
    SnapshotStore(std::vector<double> times, std::vector<WaveFunction> states,
                  PropagationConfig config);

    const std::vector<double>& times() const { return times_; }
    const WaveFunction& state(int i) const { return states_[static_cast<size_t>(i)]; }
    int size() const { return static_cast<int>(times_.size()); }
    const Grid1D& grid() const { return states_.front().grid(); }
    const PropagationConfig& config() const { return config_; }
    double t_final() const { return times_.back(); }

private:
    std::vector<double> times_;
    std::vector<WaveFunction> states_;
    PropagationConfig config_;
};

/// One Strang-split step: half kinetic (spectral), full potential phase, half
/// kinetic. dt may be negative (time reversal) as long as t stays >= 0.
/// Throws NumericalError on non-finite amplitudes (dt too large).
WaveFunction step(const WaveFunction& psi, const RealField& V, double dt, double mass = 1.0);

/// Runs cfg.n_steps steps and stores every snapshot_stride-th state, t = 0
/// included. n_steps must be divisible by snapshot_stride.
SnapshotStore propagate(const WaveFunction& psi0, const RealField& V,
                        const PropagationConfig& cfg);

struct PropagationDiagnostics {
    double max_norm_drift = 0.0;        // max |norm - 1| over snapshots
    double max_energy_drift_rel = 0.0;  // max |E(t) - E(0)| / |E(0)|
    std::vector<double> norms;
    std::vector<double> energies;
};

/// Post-hoc unitarity and energy-conservation audit of a store.
PropagationDiagnostics diagnose(const SnapshotStore& store, const RealField& V);

/// CSV export, header "t,x,re,im", one row per (snapshot, grid point).
void export_snapshots_csv(const SnapshotStore& store, const std::string& path);

}  // namespace qtube
