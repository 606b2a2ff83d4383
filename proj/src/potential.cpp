#include "qtube/potential.hpp"

#include <cmath>
#include <stdexcept>

namespace qtube {

RealField sample_potential(const PotentialSpec& spec, const Grid1D& grid) {
    std::vector<double> v(static_cast<size_t>(grid.n_points()), 0.0);
    if (spec.kind == PotentialSpec::Kind::tanh_barrier) {
        if (!(spec.V0 > 0.0)) throw std::invalid_argument("tanh_barrier: V0 must be > 0");
        if (!(spec.alpha > 0.0)) throw std::invalid_argument("tanh_barrier: alpha must be > 0");
        if (!(spec.x_minus < spec.x_plus))
            throw std::invalid_argument("tanh_barrier: x_minus must be < x_plus");
        for (int j = 0; j < grid.n_points(); ++j) {
            const double x = grid.x(j);
            v[static_cast<size_t>(j)] = 0.5 * spec.V0 *
                (std::tanh(spec.alpha * (x - spec.x_minus)) -
                 std::tanh(spec.alpha * (x - spec.x_plus)));
        }
    }
    return RealField(grid, std::move(v));
}

}  // namespace qtube
