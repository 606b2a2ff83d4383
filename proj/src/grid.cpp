#include "qtube/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qtube/fft.hpp"

namespace qtube {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

void require_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) throw std::invalid_argument("RealField: non-finite entry");
}

void require_finite(const std::vector<std::complex<double>>& v) {
    for (const auto& z : v)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw std::invalid_argument("ComplexField: non-finite entry");
}

}  // namespace

Grid1D::Grid1D(double x_min, double x_max, int n_points)
    : x_min_(x_min), x_max_(x_max), n_(n_points) {
    if (!(x_max > x_min)) throw std::invalid_argument("Grid1D: x_max must exceed x_min");
    if (n_points < 8 || !is_pow2(n_points))
        throw std::invalid_argument("Grid1D: n_points must be a power of two >= 8");
    dx_ = (x_max - x_min) / n_points;
    dk_ = 2.0 * std::numbers::pi / (n_points * dx_);
}

RealField::RealField(const Grid1D& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (static_cast<int>(values_.size()) != grid_.n_points())
        throw std::invalid_argument("RealField: values length must equal n_points");
    require_finite(values_);
}

ComplexField::ComplexField(const Grid1D& grid, std::vector<std::complex<double>> values)
    : grid_(grid), values_(std::move(values)) {
    if (static_cast<int>(values_.size()) != grid_.n_points())
        throw std::invalid_argument("ComplexField: values length must equal n_points");
    require_finite(values_);
}

namespace {

// Value at position x with the periodic trailing cell; cell index and local
// fraction are shared by integrate() and interp_linear().
struct CellPos {
    int j;       // left grid index, in [0, n)
    double frac; // in [0, 1]
};

CellPos locate(const Grid1D& g, double x) {
    double s = (x - g.x_min()) / g.dx();
    int j = static_cast<int>(std::floor(s));
    j = std::clamp(j, 0, g.n_points() - 1);
    double frac = s - j;
    frac = std::clamp(frac, 0.0, 1.0);
    return {j, frac};
}

double value_at(const RealField& f, const CellPos& c) {
    const int n = f.size();
    double left = f[c.j];
    double right = (c.j + 1 < n) ? f[c.j + 1] : f[0];  // periodic continuation
    return left + c.frac * (right - left);
}

}  // namespace

double interp_linear(const RealField& f, double x) {
    if (!f.grid().contains(x)) throw std::out_of_range("interp_linear: x outside grid");
    return value_at(f, locate(f.grid(), x));
}

double integrate(const RealField& f, double a, double b) {
    const Grid1D& g = f.grid();
    if (a > b) throw std::invalid_argument("integrate: a > b");
    if (!g.contains(a) || !g.contains(b))
        throw std::out_of_range("integrate: [a,b] outside grid");
    if (a == b) return 0.0;

    const CellPos ca = locate(g, a);
    const CellPos cb = locate(g, b);
    const double fa = value_at(f, ca);
    const double fb = value_at(f, cb);

    if (ca.j == cb.j) return 0.5 * (fa + fb) * (b - a);

    const int n = f.size();
    auto right_of = [&](int j) { return (j + 1 < n) ? f[j + 1] : f[0]; };

    // partial left cell [a, x_{ca.j+1}]
    double sum = 0.5 * (fa + right_of(ca.j)) * (g.x(ca.j + 1) - a);
    // full interior cells
    for (int j = ca.j + 1; j < cb.j; ++j) sum += 0.5 * (f[j] + right_of(j)) * g.dx();
    // partial right cell [x_{cb.j}, b]
    sum += 0.5 * (f[cb.j] + fb) * (b - g.x(cb.j));
    return sum;
}

double integrate(const RealField& f) {
    return integrate(f, f.grid().x_min(), f.grid().x_max());
}

ComplexField spectral_derivative(const ComplexField& f) {
    const Grid1D& g = f.grid();
    auto spec = fft::forward(f.values());
    const std::complex<double> I(0.0, 1.0);
    for (int j = 0; j < g.n_points(); ++j) spec[static_cast<size_t>(j)] *= I * g.k(j);
    fft::inverse_inplace(spec);
    return ComplexField(g, std::move(spec));
}

}  // namespace qtube
