#include "qtube/state.hpp"

#include <cmath>
#include <stdexcept>

#include "qtube/errors.hpp"
#include "qtube/fft.hpp"

namespace qtube {

WaveFunction::WaveFunction(ComplexField amplitudes, double t)
    : amplitudes_(std::move(amplitudes)), t_(t) {
    if (t < 0.0) throw std::invalid_argument("WaveFunction: t must be >= 0");
    double n2 = 0.0;
    for (const auto& z : amplitudes_.values()) n2 += std::norm(z);
    n2 *= amplitudes_.grid().dx();
    if (std::abs(n2 - 1.0) > 1e-6)
        throw std::invalid_argument("WaveFunction: state is not unit-norm");
}

double norm(const WaveFunction& psi) { return std::sqrt(integrate(density(psi))); }

namespace {

std::vector<std::complex<double>> sample_packet(const GaussianSpec& spec, const Grid1D& grid) {
    if (!(spec.sigma0 > 0.0)) throw std::invalid_argument("GaussianSpec: sigma0 must be > 0");
    if (spec.x0 - 6.0 * spec.sigma0 < grid.x_min() || spec.x0 + 6.0 * spec.sigma0 > grid.x_max())
        throw ConfigError("gaussian_packet: packet support (x0 +/- 6 sigma0) exceeds grid");
    std::vector<std::complex<double>> vals(static_cast<size_t>(grid.n_points()));
    const double inv4s2 = 1.0 / (4.0 * spec.sigma0 * spec.sigma0);
    for (int j = 0; j < grid.n_points(); ++j) {
        const double u = grid.x(j) - spec.x0;
        vals[static_cast<size_t>(j)] =
            std::exp(std::complex<double>(-u * u * inv4s2, spec.p0 * u));
    }
    return vals;
}

void normalize(std::vector<std::complex<double>>& vals, double dx, double* factor = nullptr) {
    double n2 = 0.0;
    for (const auto& z : vals) n2 += std::norm(z);
    n2 *= dx;
    if (!(n2 > 0.0)) throw NumericalError("normalize: zero-norm state");
    const double s = 1.0 / std::sqrt(n2);
    for (auto& z : vals) z *= s;
    if (factor) *factor = s;
}

}  // namespace

WaveFunction gaussian_packet(const GaussianSpec& spec, const Grid1D& grid) {
    auto vals = sample_packet(spec, grid);
    normalize(vals, grid.dx());
    return WaveFunction(ComplexField(grid, std::move(vals)), 0.0);
}

WaveFunction superpose(const std::vector<GaussianSpec>& specs, const Grid1D& grid,
                       double* a0_out) {
    if (specs.empty()) throw std::invalid_argument("superpose: need at least one packet");
    std::vector<std::complex<double>> sum(static_cast<size_t>(grid.n_points()), 0.0);
    for (const auto& spec : specs) {
        auto vals = sample_packet(spec, grid);
        normalize(vals, grid.dx());
        for (size_t j = 0; j < sum.size(); ++j) sum[j] += spec.c * vals[j];
    }
    double a0 = 1.0;
    normalize(sum, grid.dx(), &a0);
    if (a0_out) *a0_out = a0;
    return WaveFunction(ComplexField(grid, std::move(sum)), 0.0);
}

RealField density(const WaveFunction& psi) {
    const auto& amps = psi.amplitudes().values();
    std::vector<double> rho(amps.size());
    for (size_t j = 0; j < amps.size(); ++j) rho[j] = std::norm(amps[j]);
    return RealField(psi.grid(), std::move(rho));
}

RealField current_density(const WaveFunction& psi, double mass) {
    if (!(mass > 0.0)) throw std::invalid_argument("current_density: mass must be > 0");
    const ComplexField dpsi = spectral_derivative(psi.amplitudes());
    const auto& a = psi.amplitudes().values();
    const auto& d = dpsi.values();
    const std::complex<double> two_i_m(0.0, 2.0 * mass);
    std::vector<double> j(a.size());
    double residue = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const std::complex<double> bracket = std::conj(a[i]) * d[i] - a[i] * std::conj(d[i]);
        const std::complex<double> w = bracket / two_i_m;
        residue = std::max(residue, std::abs(w.imag()));
        j[i] = w.real();
    }
    if (residue > 1e-10)
        throw NumericalError("current_density: imaginary residue above 1e-10");
    return RealField(psi.grid(), std::move(j));
}

RealField velocity_field(const WaveFunction& psi, double rho_floor, double mass) {
    const RealField rho = density(psi);
    const RealField j = current_density(psi, mass);
    const int n = rho.size();

    if (rho_floor <= 0.0) {
        double rho_max = 0.0;
        for (int i = 0; i < n; ++i) rho_max = std::max(rho_max, rho[i]);
        rho_floor = 1e-12 * rho_max;
    }

    std::vector<double> v(static_cast<size_t>(n), 0.0);
    std::vector<char> valid(static_cast<size_t>(n), 0);
    int n_valid = 0;
    for (int i = 0; i < n; ++i) {
        if (rho[i] >= rho_floor && rho[i] > 0.0) {
            v[static_cast<size_t>(i)] = j[i] / rho[i];
            valid[static_cast<size_t>(i)] = 1;
            ++n_valid;
        }
    }
    if (n_valid == 0)
        throw NumericalError("velocity_field: every grid point below rho_floor");

    // Fill invalid runs: linear interpolation between bracketing valid points,
    // constant extension for leading/trailing runs.
    int i = 0;
    while (i < n) {
        if (valid[static_cast<size_t>(i)]) { ++i; continue; }
        int lo = i - 1;  // last valid before the run, or -1
        int hi = i;
        while (hi < n && !valid[static_cast<size_t>(hi)]) ++hi;  // first valid after, or n
        for (int m = i; m < hi; ++m) {
            if (lo < 0) {
                v[static_cast<size_t>(m)] = v[static_cast<size_t>(hi)];
            } else if (hi >= n) {
                v[static_cast<size_t>(m)] = v[static_cast<size_t>(lo)];
            } else {
                const double w = static_cast<double>(m - lo) / static_cast<double>(hi - lo);
                v[static_cast<size_t>(m)] =
                    v[static_cast<size_t>(lo)] * (1.0 - w) + v[static_cast<size_t>(hi)] * w;
            }
        }
        i = hi;
    }
    return RealField(psi.grid(), std::move(v));
}

double restricted_probability(const WaveFunction& psi, double a, double b) {
    return integrate(density(psi), a, b);
}

double mean_energy(const WaveFunction& psi, const RealField& V, double mass) {
    if (!(psi.grid() == V.grid()))
        throw std::invalid_argument("mean_energy: psi and V grids differ");
    const Grid1D& g = psi.grid();
    auto spec = fft::forward(psi.amplitudes().values());
    double kinetic = 0.0;
    double weight = 0.0;
    for (int j = 0; j < g.n_points(); ++j) {
        const double w = std::norm(spec[static_cast<size_t>(j)]);
        const double k = g.k(j);
        kinetic += w * k * k;
        weight += w;
    }
    kinetic /= 2.0 * mass * weight;

    const RealField rho = density(psi);
    std::vector<double> vrho(static_cast<size_t>(g.n_points()));
    for (int j = 0; j < g.n_points(); ++j) vrho[static_cast<size_t>(j)] = V[j] * rho[j];
    const double potential = integrate(RealField(g, std::move(vrho)));
    return kinetic + potential;
}

}  // namespace qtube
