#pragma once

#include <complex>
#include <vector>

namespace qtube::fft {

/// Forward DFT, X_k = sum_j x_j exp(-2*pi*i*j*k/n). Size must be a power of two.
std::vector<std::complex<double>> forward(const std::vector<std::complex<double>>& x);

/// Inverse DFT including the 1/n factor, so inverse(forward(x)) == x up to round-off.
std::vector<std::complex<double>> inverse(const std::vector<std::complex<double>>& x);

/// In-place variants used by hot loops.
void forward_inplace(std::vector<std::complex<double>>& x);
void inverse_inplace(std::vector<std::complex<double>>& x);

}  // namespace qtube::fft
