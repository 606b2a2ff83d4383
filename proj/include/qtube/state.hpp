#pragma once

#include <complex>
#include <vector>

#include "qtube/grid.hpp"

namespace qtube {

/// Parameters of one Gaussian wave packet: centered at x0 with centroid
/// momentum p0 and initial spreading sigma0, optionally weighted by c.
struct GaussianSpec {
    double x0 = 0.0;
    double p0 = 0.0;
    double sigma0 = 1.0;
    std::complex<double> c = 1.0;
};

/// Complex amplitudes on a grid at a time stamp. Unit norm is enforced on
/// construction (tolerance 1e-6 guards against accidentally denormalized
/// states; the factories below normalize exactly).
class WaveFunction {
public:
    WaveFunction(ComplexField amplitudes, double t);

    const Grid1D& grid() const { return amplitudes_.grid(); }
    const ComplexField& amplitudes() const { return amplitudes_; }
    double t() const { return t_; }

private:
    ComplexField amplitudes_;
    double t_;
};

/// Norm sqrt(integral of |psi|^2).
double norm(const WaveFunction& psi);

/// Samples exp(-(x-x0)^2/4sigma0^2 + i p0 (x-x0)) and normalizes numerically;
/// t = 0. Throws ConfigError when the packet is not effectively supported
/// inside the grid (|x0 - edge| < 6 sigma0).
WaveFunction gaussian_packet(const GaussianSpec& spec, const Grid1D& grid);

/// Coherent superposition A0 * sum_i c_i psi_i of individually normalized
/// packets, renormalized to unit norm. If a0_out is non-null it receives the
/// renormalization constant A0. Throws std::invalid_argument on empty input.
WaveFunction superpose(const std::vector<GaussianSpec>& specs, const Grid1D& grid,
                       double* a0_out = nullptr);

/// rho = |psi|^2.
RealField density(const WaveFunction& psi);

/// J = (hbar/2mi) [psi* grad psi - psi grad psi*]. The bracket is verified to
/// be purely imaginary (residue <= 1e-10) before the real field is returned.
RealField current_density(const WaveFunction& psi, double mass = 1.0);

/// v = J/rho where rho >= rho_floor; points below the floor are filled by
/// linear interpolation between the nearest valid neighbors (constant
/// extension at the ends). Pass rho_floor <= 0 for the default
/// 1e-12 * max(rho). Throws NumericalError when every point is below floor.
RealField velocity_field(const WaveFunction& psi, double rho_floor = 0.0, double mass = 1.0);

/// Integral of |psi|^2 over [a, b].
double restricted_probability(const WaveFunction& psi, double a, double b);

/// <p^2/2m> (spectral) + <V>.
double mean_energy(const WaveFunction& psi, const RealField& V, double mass = 1.0);

}  // namespace qtube
