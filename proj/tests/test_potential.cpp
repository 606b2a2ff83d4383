#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qtube/potential.hpp"

using namespace qtube;

namespace {

PotentialSpec paper_barrier() {
    return {PotentialSpec::Kind::tanh_barrier, 150.0, 10.0, -2.0, 2.0};
}

// direct evaluation, independent of the sampling code path
double barrier_at(double x) {
    return 0.5 * 150.0 * (std::tanh(10.0 * (x + 2.0)) - std::tanh(10.0 * (x - 2.0)));
}

}  // namespace

TEST_CASE("barrier height at the center") {
    Grid1D g(-40.0, 60.0, 8192);
    RealField V = sample_potential(paper_barrier(), g);
    const double v0 = interp_linear(V, 0.0);
    CHECK(std::abs(v0 - barrier_at(0.0)) <= 1e-12);
    CHECK(std::abs(v0 - 150.0 * std::tanh(20.0)) <= 1e-8);
}

TEST_CASE("barrier tails vanish") {
    Grid1D g(-40.0, 60.0, 8192);
    RealField V = sample_potential(paper_barrier(), g);
    CHECK(std::abs(interp_linear(V, 10.0)) <= 1e-10);
    CHECK(std::abs(interp_linear(V, -10.0)) <= 1e-10);
}

TEST_CASE("free potential is identically zero") {
    Grid1D g(-10.0, 10.0, 64);
    RealField V = sample_potential(PotentialSpec{}, g);
    for (int j = 0; j < V.size(); ++j) CHECK(V[j] == 0.0);
}

TEST_CASE("barrier symmetry and bounds") {
    // symmetric grid around the barrier center
    Grid1D g(-32.0, 32.0, 4096);
    RealField V = sample_potential(paper_barrier(), g);
    const int n = g.n_points();
    for (int j = 1; j < n; ++j) {
        // V(c + delta) = V(c - delta) with c = 0 on this grid
        CHECK(std::abs(V[j] - V[n - j]) <= 1e-12 * 150.0);
        CHECK(V[j] >= 0.0);
        CHECK(V[j] <= 150.0 * (1.0 + 1e-12));
    }
}

TEST_CASE("tanh_barrier invariant validation") {
    Grid1D g(-10.0, 10.0, 64);
    PotentialSpec bad = paper_barrier();
    bad.V0 = -1.0;
    CHECK_THROWS_AS(sample_potential(bad, g), std::invalid_argument);
    bad = paper_barrier();
    bad.alpha = 0.0;
    CHECK_THROWS_AS(sample_potential(bad, g), std::invalid_argument);
    bad = paper_barrier();
    bad.x_minus = 3.0;
    CHECK_THROWS_AS(sample_potential(bad, g), std::invalid_argument);
}
