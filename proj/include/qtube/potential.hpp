#pragma once

#include "qtube/grid.hpp"

namespace qtube {

/// Analytic external potential. tanh_barrier is the nearly square barrier
/// V(x) = (V0/2) [tanh(alpha (x - x_minus)) - tanh(alpha (x - x_plus))].
struct PotentialSpec {
    enum class Kind { free, tanh_barrier };

    Kind kind = Kind::free;
    double V0 = 0.0;
    double alpha = 0.0;
    double x_minus = 0.0;
    double x_plus = 0.0;
};

/// Samples the potential onto the grid; validates the tanh_barrier invariants
/// (V0 > 0, alpha > 0, x_minus < x_plus).
RealField sample_potential(const PotentialSpec& spec, const Grid1D& grid);

}  // namespace qtube
