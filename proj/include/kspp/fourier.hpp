#pragma once

#include <complex>
#include <memory>
#include <vector>

#include <fftw3.h>

namespace kspp::fourier {

enum class Direction { forward = FFTW_FORWARD, backward = FFTW_BACKWARD };

namespace detail {
struct PlanDeleter {
    void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;
} // namespace detail

/// Unnormalized DFT: X_k = sum_n x_n exp(-+ 2 pi i k n / N).
/// The backward transform is not divided by N.
inline std::vector<std::complex<double>> dft(std::vector<std::complex<double>> data, Direction dir) {
    if (data.empty()) return data;
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    detail::Plan plan(fftw_plan_dft_1d(static_cast<int>(data.size()), buf, buf, static_cast<int>(dir), FFTW_ESTIMATE));
    fftw_execute(plan.get());
    return data;
}

/// Signed frequency index of DFT bin k for length n, in (-n/2, n/2].
inline long signed_index(std::size_t k, std::size_t n) {
    const long kk = static_cast<long>(k);
    const long nn = static_cast<long>(n);
    return (2 * kk > nn) ? kk - nn : kk;
}

} // namespace kspp::fourier
