#pragma once

#include <complex>
#include <vector>

namespace qtube {

/// Uniform 1D spatial grid in natural units (hbar = m = 1).
///
/// Points are x_j = x_min + j*dx for j in [0, n_points); x_max itself is not
/// a grid point. Fields sampled on the grid are treated as periodic over
/// [x_min, x_max] for quadrature and interpolation, which matches the
/// spectral representation. n_points must be a power of two (>= 8).
class Grid1D {
public:
    Grid1D(double x_min, double x_max, int n_points);

    double x_min() const { return x_min_; }
    double x_max() const { return x_max_; }
    int n_points() const { return n_; }
    double dx() const { return dx_; }
    double dk() const { return dk_; }

    double x(int j) const { return x_min_ + j * dx_; }

    /// Momentum of transform bin j: j*dk for j < n/2, (j-n)*dk otherwise.
    double k(int j) const { return (j < n_ / 2 ? j : j - n_) * dk_; }

    bool contains(double x) const { return x >= x_min_ && x <= x_max_; }

    friend bool operator==(const Grid1D& a, const Grid1D& b) {
        return a.x_min_ == b.x_min_ && a.x_max_ == b.x_max_ && a.n_ == b.n_;
    }

private:
    double x_min_;
    double x_max_;
    int n_;
    double dx_;
    double dk_;
};

/// Real-valued field sampled on a Grid1D (rho, J, v, V).
class RealField {
public:
    RealField(const Grid1D& grid, std::vector<double> values);

    const Grid1D& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    double operator[](int j) const { return values_[static_cast<size_t>(j)]; }
    int size() const { return grid_.n_points(); }

private:
    Grid1D grid_;
    std::vector<double> values_;
};

/// Complex-valued field sampled on a Grid1D (psi and derived quantities).
class ComplexField {
public:
    ComplexField(const Grid1D& grid, std::vector<std::complex<double>> values);

    const Grid1D& grid() const { return grid_; }
    const std::vector<std::complex<double>>& values() const { return values_; }
    std::complex<double> operator[](int j) const { return values_[static_cast<size_t>(j)]; }
    int size() const { return grid_.n_points(); }

private:
    Grid1D grid_;
    std::vector<std::complex<double>> values_;
};

/// Trapezoidal quadrature of f over [a, b] with fractional end cells handled
/// by linear interpolation of f at a and b. The trailing cell
/// [x_{n-1}, x_max] uses the periodic continuation f(x_max) = f(x_min), so
/// integrating a constant over the full grid gives exactly (x_max - x_min).
///
/// Throws std::invalid_argument if a > b, std::out_of_range if [a, b] is not
/// contained in [x_min, x_max].
double integrate(const RealField& f, double a, double b);

/// Full-grid integral.
double integrate(const RealField& f);

/// Linear interpolation of f at x (periodic trailing cell).
/// Throws std::out_of_range when x is outside [x_min, x_max].
double interp_linear(const RealField& f, double x);

/// d/dx via forward transform, multiplication by i*k, inverse transform.
ComplexField spectral_derivative(const ComplexField& f);

}  // namespace qtube
