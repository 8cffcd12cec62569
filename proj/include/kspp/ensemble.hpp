#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "kspp/fourier.hpp"
#include "kspp/spin_algebra.hpp"

namespace kspp {

/// Uniform periodic grid of M slices over a sample of normalized length 1,
/// z_m = (m + 1/2)/M - 1/2.
class SpatialGrid {
public:
    static constexpr std::size_t default_slices = 64;

    explicit SpatialGrid(std::size_t slices = default_slices) : slices_(slices) {
        detail::require(slices >= 1, "grid needs at least one slice");
    }

    std::size_t slices() const { return slices_; }
    double position(std::size_t m) const {
        return (static_cast<double>(m) + 0.5) / static_cast<double>(slices_) - 0.5;
    }

    /// Anti-aliasing: a winding w puts 2w cycles on the ancilla coherence, so
    /// M >= 4 w keeps it below the grid's Nyquist limit.
    bool supports(double max_winding) const { return static_cast<double>(slices_) >= 4.0 * std::abs(max_winding); }

    void require_supports(double max_winding) const {
        if (!supports(max_winding))
            throw ValidationError("grid of " + std::to_string(slices_) + " slices is too coarse for winding " +
                                  std::to_string(max_winding) + " (need M >= 4*w_max)");
    }

    friend bool operator==(const SpatialGrid&, const SpatialGrid&) = default;

private:
    std::size_t slices_;
};

/// Ideal gradient pulse acting on one spin: slice z is conjugated by
/// exp(-i 2 pi w z sigma_z^spin). Duration and strength are bookkeeping only.
struct GradientPulse {
    std::size_t spin = 0;
    double windings = 0.0;
    double duration_s = 0.0;
    double strength_g_per_cm = 0.0;
};

/// One deviation density matrix per z slice.
class EnsembleState {
public:
    EnsembleState(SpatialGrid grid, std::vector<Matrix> slices) : grid_(grid), slices_(std::move(slices)) {
        detail::require(slices_.size() == grid_.slices(), "slice count does not match grid");
        for (const auto& s : slices_)
            detail::require(s.rows() == slices_.front().rows() && s.cols() == s.rows(), "all slices must share a square dimension");
    }

    const SpatialGrid& grid() const { return grid_; }
    std::size_t size() const { return slices_.size(); }
    Eigen::Index dim() const { return slices_.front().rows(); }
    std::size_t n_spins() const {
        std::size_t n = 0;
        while ((Eigen::Index{1} << n) < dim()) ++n;
        return n;
    }

    const Matrix& slice(std::size_t m) const { return slices_.at(m); }
    const std::vector<Matrix>& slices() const { return slices_; }

private:
    SpatialGrid grid_;
    std::vector<Matrix> slices_;
};

inline EnsembleState broadcast(const DeviationState& state, const SpatialGrid& grid) {
    return EnsembleState(grid, std::vector<Matrix>(grid.slices(), state.op()));
}

/// Arithmetic mean over slices, summed in slice order.
inline DeviationState spatial_average(const EnsembleState& e) {
    Matrix acc = Matrix::Zero(e.dim(), e.dim());
    for (const auto& s : e.slices()) acc += s;
    acc /= static_cast<double>(e.size());
    return DeviationState(std::move(acc));
}

/// Applies exp(-i 2 pi z sum_s w_s sigma_z^s) slice by slice. `windings` has
/// one entry per spin.
inline EnsembleState apply_z_winding(const EnsembleState& e, const std::vector<double>& windings) {
    const std::size_t n = e.n_spins();
    detail::require(windings.size() == n, "winding vector must have one entry per spin");
    const auto d = static_cast<std::size_t>(e.dim());
    std::vector<double> h(d, 0.0);
    for (std::size_t idx = 0; idx < d; ++idx)
        for (std::size_t s = 0; s < n; ++s)
            h[idx] += windings[s] * (((idx >> detail::shift(s, n)) & 1U) ? -1.0 : 1.0);

    std::vector<Matrix> out;
    out.reserve(e.size());
    for (std::size_t m = 0; m < e.size(); ++m) {
        const double z = e.grid().position(m);
        Matrix r = e.slice(m);
        for (std::size_t j = 0; j < d; ++j)
            for (std::size_t k = 0; k < d; ++k) {
                const double dh = h[j] - h[k];
                if (dh != 0.0)
                    r(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) *= std::polar(1.0, -2.0 * std::numbers::pi * z * dh);
            }
        out.push_back(std::move(r));
    }
    return EnsembleState(e.grid(), std::move(out));
}

inline EnsembleState apply_gradient(const EnsembleState& e, const GradientPulse& g) {
    detail::require(g.spin < e.n_spins(), "apply_gradient: spin index out of range");
    std::vector<double> w(e.n_spins(), 0.0);
    w[g.spin] = g.windings;
    return apply_z_winding(e, w);
}

/// Non-selective gradient: each spin winds in proportion to its gyromagnetic ratio.
inline EnsembleState apply_nonselective_gradient(const EnsembleState& e, double windings, const SpinSystem& system) {
    detail::require(e.n_spins() == system.n_total(), "system does not match ensemble");
    std::vector<double> w(system.n_total());
    for (std::size_t s = 0; s < w.size(); ++s) w[s] = windings * system.spin(s).gamma_ratio;
    return apply_z_winding(e, w);
}

inline EnsembleState apply_uniform(const EnsembleState& e, const Operator& u) {
    detail::require(u.dim() == e.dim(), "apply_uniform: dimension mismatch");
    std::vector<Matrix> out;
    out.reserve(e.size());
    const Matrix ud = u.matrix.adjoint();
    for (const auto& s : e.slices()) out.push_back(u.matrix * s * ud);
    return EnsembleState(e.grid(), std::move(out));
}

/// Position-dependent unitary U(z_m) applied to slice m.
template <typename UnitaryAt>
EnsembleState apply_per_slice(const EnsembleState& e, UnitaryAt&& unitary_at) {
    std::vector<Matrix> out;
    out.reserve(e.size());
    for (std::size_t m = 0; m < e.size(); ++m) {
        const Matrix u = unitary_at(e.grid().position(m));
        detail::require(u.rows() == e.dim(), "apply_per_slice: dimension mismatch");
        out.push_back(u * e.slice(m) * u.adjoint());
    }
    return EnsembleState(e.grid(), std::move(out));
}

/// Ideal crusher: removes every component transverse to `spin`.
inline EnsembleState crusher(const EnsembleState& e, std::size_t spin) {
    const std::size_t n = e.n_spins();
    detail::require(spin < n, "crusher: spin index out of range");
    const std::size_t bit = std::size_t{1} << detail::shift(spin, n);
    std::vector<Matrix> out;
    out.reserve(e.size());
    for (const auto& s : e.slices()) {
        Matrix r = s;
        for (Eigen::Index j = 0; j < r.rows(); ++j)
            for (Eigen::Index k = 0; k < r.cols(); ++k)
                if ((static_cast<std::size_t>(j) ^ static_cast<std::size_t>(k)) & bit) r(j, k) = 0.0;
        out.push_back(std::move(r));
    }
    return EnsembleState(e.grid(), std::move(out));
}

/// Isotropic diffusion along z for time dt: circular Gaussian convolution of
/// variance 2 D dt, i.e. the spatial Fourier component with f cycles per
/// sample length is multiplied by exp(-(2 pi f)^2 D dt).
inline EnsembleState diffuse(const EnsembleState& e, double diffusion, double dt) {
    detail::require(diffusion >= 0.0 && dt >= 0.0, "diffuse: D and dt must be non-negative");
    if (diffusion == 0.0 || dt == 0.0) return e;
    const std::size_t m_count = e.size();
    std::vector<double> atten(m_count);
    for (std::size_t k = 0; k < m_count; ++k) {
        const double f = static_cast<double>(fourier::signed_index(k, m_count));
        atten[k] = std::exp(-std::pow(2.0 * std::numbers::pi * f, 2) * diffusion * dt);
    }
    std::vector<Matrix> out(m_count, Matrix::Zero(e.dim(), e.dim()));
    std::vector<cplx> line(m_count);
    for (Eigen::Index j = 0; j < e.dim(); ++j)
        for (Eigen::Index k = 0; k < e.dim(); ++k) {
            for (std::size_t m = 0; m < m_count; ++m) line[m] = e.slice(m)(j, k);
            auto spec = fourier::dft(line, fourier::Direction::forward);
            for (std::size_t q = 0; q < m_count; ++q) spec[q] *= atten[q];
            const auto back = fourier::dft(std::move(spec), fourier::Direction::backward);
            for (std::size_t m = 0; m < m_count; ++m) out[m](j, k) = back[m] / static_cast<double>(m_count);
        }
    // Restore exact Hermiticity lost to round-off in the transforms.
    for (auto& s : out) s = 0.5 * (s + s.adjoint()).eval();
    return EnsembleState(e.grid(), std::move(out));
}

/// Infinite-diffusion limit: only the uniform (w = 0) component survives.
inline EnsembleState decohere_wound(const EnsembleState& e) {
    return broadcast(spatial_average(e), e.grid());
}

} // namespace kspp
