#include "qtube/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>

namespace qtube::fft {

namespace {

// FFTW plan creation is not thread-safe; execution via fftw_execute_dft is.
// Plans are created once per (size, direction) with FFTW_UNALIGNED so they
// can be executed on any caller-provided buffer.
std::mutex plan_mutex;

fftw_plan get_plan(int n, int sign) {
    static std::map<std::pair<int, int>, fftw_plan> cache;
    std::lock_guard<std::mutex> lock(plan_mutex);
    auto key = std::make_pair(n, sign);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::vector<std::complex<double>> dummy(static_cast<size_t>(n));
    auto* p = reinterpret_cast<fftw_complex*>(dummy.data());
    fftw_plan plan = fftw_plan_dft_1d(n, p, p, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan) throw std::runtime_error("fftw plan creation failed for n=" + std::to_string(n));
    cache.emplace(key, plan);
    return plan;
}

void execute(std::vector<std::complex<double>>& x, int sign) {
    const int n = static_cast<int>(x.size());
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("fft: size must be a nonzero power of two");
    fftw_plan plan = get_plan(n, sign);
    auto* p = reinterpret_cast<fftw_complex*>(x.data());
    fftw_execute_dft(plan, p, p);
}

}  // namespace

void forward_inplace(std::vector<std::complex<double>>& x) { execute(x, FFTW_FORWARD); }

void inverse_inplace(std::vector<std::complex<double>>& x) {
    execute(x, FFTW_BACKWARD);
    const double scale = 1.0 / static_cast<double>(x.size());
    for (auto& v : x) v *= scale;
}

std::vector<std::complex<double>> forward(const std::vector<std::complex<double>>& x) {
    auto out = x;
    forward_inplace(out);
    return out;
}

std::vector<std::complex<double>> inverse(const std::vector<std::complex<double>>& x) {
    auto out = x;
    inverse_inplace(out);
    return out;
}

}  // namespace qtube::fft
