#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "kspp/encoder.hpp"
#include "kspp/fourier.hpp"
#include "kspp/ledger.hpp"

namespace kspp {

/// Sampled complex signal; sample j is taken at t0 + j*dwell (seconds).
struct TimeTrace {
    std::vector<cplx> samples;
    double dwell = 0.0;
    double t0 = 0.0;

    double time(std::size_t j) const { return t0 + static_cast<double>(j) * dwell; }
    void validate() const {
        detail::require(samples.size() >= 2, "time trace needs at least two samples");
        detail::require(dwell > 0.0, "dwell time must be positive");
    }
};

/// Centered spectrum; freq_hz ascending from -1/(2 dwell).
struct SpectrumTrace {
    std::vector<cplx> amplitudes;
    std::vector<double> freq_hz;
};

struct FidOptions {
    std::optional<std::size_t> observe; // defaults to the ancilla
    std::size_t samples = 1024;
    double dwell = 1e-3;
    std::optional<double> readout_rate; // windings per second on the observed spin
    double lb = 1.0;                    // line broadening, Hz
    double t0 = 0.0;                    // time origin of free evolution, s
    double extra_winding = 0.0;         // windings already applied by blips
};

/// s(t) = < tr(rho(z, t) sigma_+^obs) >_z under the weak-coupling Hamiltonian,
/// a selective readout winding r t on the observed spin and exp(-pi lb t) decay.
inline TimeTrace simulate_fid(const EnsembleState& e, const SpinSystem& sys, const FidOptions& opt = {}) {
    detail::require(opt.samples >= 2, "simulate_fid: need at least two samples");
    detail::require(opt.dwell > 0.0 && std::isfinite(opt.dwell), "simulate_fid: dwell must be positive");
    detail::require(opt.lb >= 0.0, "simulate_fid: line broadening must be non-negative");
    detail::require(e.dim() == static_cast<Eigen::Index>(sys.dim()), "simulate_fid: system does not match ensemble");
    const std::size_t obs = opt.observe.value_or(sys.ancilla());
    detail::require(obs < sys.n_total(), "simulate_fid: observed spin out of range");

    const std::size_t n = sys.n_total();
    const std::size_t bit = std::size_t{1} << detail::shift(obs, n);
    const Eigen::VectorXd energy = internal_energies(sys);
    const double rate = opt.readout_rate.value_or(0.0);

    struct Line {
        double omega;             // E_j - E_k, rad/s
        std::vector<cplx> slices; // rho_jk per slice
    };
    std::vector<Line> lines;
    for (std::size_t j = 0; j < sys.dim(); ++j) {
        if (!(j & bit)) continue;
        const std::size_t k = j & ~bit;
        Line l{energy(static_cast<Eigen::Index>(j)) - energy(static_cast<Eigen::Index>(k)), {}};
        bool any = false;
        for (const auto& m : e.slices()) {
            l.slices.push_back(m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)));
            any = any || m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) != cplx{0.0};
        }
        if (any) lines.push_back(std::move(l));
    }

    TimeTrace out{std::vector<cplx>(opt.samples, cplx{0.0}), opt.dwell, opt.t0};
    const double inv_m = 1.0 / static_cast<double>(e.size());
    for (std::size_t s = 0; s < opt.samples; ++s) {
        const double t = out.time(s);
        const double w = rate * t + opt.extra_winding;
        cplx acc = 0.0;
        for (const auto& l : lines) {
            cplx spatial = 0.0;
            if (w == 0.0) {
                for (const auto& v : l.slices) spatial += v;
            } else {
                for (std::size_t m = 0; m < l.slices.size(); ++m)
                    spatial += l.slices[m] * std::polar(1.0, 4.0 * std::numbers::pi * w * e.grid().position(m));
            }
            acc += spatial * std::polar(1.0, -l.omega * t);
        }
        out.samples[s] = acc * inv_m * std::exp(-std::numbers::pi * opt.lb * t);
    }
    return out;
}

/// DFT of the trace, shifted so that zero frequency sits in the middle.
inline SpectrumTrace spectrum(const TimeTrace& t) {
    t.validate();
    const std::size_t n = t.samples.size();
    const auto raw = fourier::dft(t.samples, fourier::Direction::forward);
    SpectrumTrace s;
    s.amplitudes.resize(n);
    s.freq_hz.resize(n);
    const std::size_t half = n / 2;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t src = (i + n - half) % n;
        s.amplitudes[i] = raw[src];
        s.freq_hz[i] = (static_cast<double>(i) - static_cast<double>(half)) / (static_cast<double>(n) * t.dwell);
    }
    return s;
}

/// Inverse of `spectrum`: undoes the shift and the transform.
inline TimeTrace inverse_spectrum(const SpectrumTrace& s, double dwell, double t0 = 0.0) {
    const std::size_t n = s.amplitudes.size();
    detail::require(n >= 2, "inverse_spectrum: need at least two bins");
    std::vector<cplx> raw(n);
    const std::size_t half = n / 2;
    for (std::size_t i = 0; i < n; ++i) raw[(i + n - half) % n] = s.amplitudes[i];
    auto back = fourier::dft(std::move(raw), fourier::Direction::backward);
    for (auto& v : back) v /= static_cast<double>(n);
    return TimeTrace{std::move(back), dwell, t0};
}

struct Peak {
    double freq_hz = 0.0;
    double amplitude = 0.0;
};

/// Local maxima of |S| above threshold_rel * max|S|, refined by a parabola
/// through the three top bins; peaks closer than merge_hz keep the larger.
inline std::vector<Peak> detect_peaks(const SpectrumTrace& s, double threshold_rel, double merge_hz = 2.0) {
    detail::require(threshold_rel > 0.0 && threshold_rel < 1.0, "detect_peaks: threshold must be in (0, 1)");
    detail::require(merge_hz >= 0.0, "detect_peaks: merge radius must be non-negative");
    const std::size_t n = s.amplitudes.size();
    std::vector<double> mag(n);
    for (std::size_t i = 0; i < n; ++i) mag[i] = std::abs(s.amplitudes[i]);
    const double top = n ? *std::max_element(mag.begin(), mag.end()) : 0.0;
    if (n < 3 || top == 0.0) return {};

    std::vector<Peak> raw;
    const double bin = n > 1 ? s.freq_hz[1] - s.freq_hz[0] : 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (mag[i] < threshold_rel * top || mag[i] < mag[i - 1] || mag[i] <= mag[i + 1]) continue;
        const double a = mag[i - 1], b = mag[i], c = mag[i + 1];
        const double den = a - 2.0 * b + c;
        const double off = den != 0.0 ? 0.5 * (a - c) / den : 0.0;
        raw.push_back({s.freq_hz[i] + off * bin, b - 0.25 * (a - c) * off});
    }
    std::vector<Peak> merged;
    for (const auto& p : raw) {
        if (!merged.empty() && p.freq_hz - merged.back().freq_hz < merge_hz) {
            if (p.amplitude > merged.back().amplitude) merged.back() = p;
            continue;
        }
        merged.push_back(p);
    }
    return merged;
}

struct Echo {
    double time_s = 0.0;
    double amplitude = 0.0;
};

/// Local maxima of |s(t)| above threshold_rel of the largest one, refined by
/// a parabola through the neighbouring samples. Maxima closer than
/// min_separation_s keep the larger.
inline std::vector<Echo> detect_echoes(const TimeTrace& t, double threshold_rel = 0.5, double min_separation_s = 0.0) {
    t.validate();
    detail::require(threshold_rel > 0.0 && threshold_rel < 1.0, "detect_echoes: threshold must be in (0, 1)");
    detail::require(min_separation_s >= 0.0, "detect_echoes: separation must be non-negative");
    const std::size_t n = t.samples.size();
    std::vector<double> mag(n);
    for (std::size_t i = 0; i < n; ++i) mag[i] = std::abs(t.samples[i]);
    const double top = *std::max_element(mag.begin(), mag.end());
    std::vector<Echo> out;
    if (top == 0.0) return out;
    for (std::size_t i = 0; i < n; ++i) {
        const bool left = i == 0 || mag[i] >= mag[i - 1];
        const bool right = i + 1 == n || mag[i] > mag[i + 1];
        if (!(left && right && mag[i] >= threshold_rel * top)) continue;
        Echo e{t.time(i), mag[i]};
        if (i > 0 && i + 1 < n) {
            const double a = mag[i - 1], b = mag[i], c = mag[i + 1];
            const double den = a - 2.0 * b + c;
            if (den < 0.0) {
                const double off = 0.5 * (a - c) / den;
                e.time_s += off * t.dwell;
                e.amplitude = b - 0.25 * (a - c) * off;
            }
        }
        if (!out.empty() && e.time_s - out.back().time_s < min_separation_s) {
            if (e.amplitude > out.back().amplitude) out.back() = e;
            continue;
        }
        out.push_back(e);
    }
    return out;
}

/// Echo time for a label of `winding` k_0 under a constant readout gradient:
/// t = winding * G_enc * delta_enc / G_read (the gyromagnetic ratio cancels).
inline double echo_time_prediction(double winding, double g_enc, double delta_enc, double g_read) {
    if (!(g_read > 0.0)) throw ValidationError("echo_time_prediction: read gradient must be positive");
    detail::require(g_enc > 0.0 && delta_enc > 0.0, "echo_time_prediction: encoding gradient area must be positive");
    return winding * g_enc * delta_enc / g_read;
}

/// Readout winding rate on the dense grid, windings per second, when one k_0
/// (k0_windings grid windings) is produced by g_enc over delta_enc.
inline double readout_rate_for(std::int64_t k0_windings, double g_enc, double delta_enc, double g_read) {
    return static_cast<double>(k0_windings) / echo_time_prediction(1.0, g_enc, delta_enc, g_read);
}

/// Selective (pi/2)_y monitoring pulse on the ancilla.
inline EnsembleState monitor(const EnsembleState& e, const SpinSystem& sys) {
    return apply_uniform(e, pseudo_hadamard(sys.ancilla(), Sign::plus, sys));
}

/// Keeps only the rows and columns of `e` whose data spins are in `alpha`.
inline EnsembleState restrict_to_subspace(const EnsembleState& e, const SpinSystem& sys, const Subspace& alpha) {
    const std::size_t anc = std::size_t{1} << detail::shift(sys.ancilla(), sys.n_total());
    const std::size_t ref = sys.basis_index(0, alpha);
    auto inside = [&](Eigen::Index i) { return (static_cast<std::size_t>(i) & ~anc) == ref; };
    std::vector<Matrix> out;
    for (const auto& s : e.slices()) {
        Matrix r = Matrix::Zero(s.rows(), s.cols());
        for (Eigen::Index j = 0; j < s.rows(); ++j)
            for (Eigen::Index k = 0; k < s.cols(); ++k)
                if (inside(j) && inside(k)) r(j, k) = s(j, k);
        out.push_back(std::move(r));
    }
    return EnsembleState(e.grid(), std::move(out));
}

struct ScanOptions {
    double dwell = 1e-3;
    std::size_t samples_per_window = 256;
    double lb = 1.0;
    KUnits blip = 2;        // label step between windows, k_0 units
    KUnits first_label = 1; // label aligned by the first blip
};

struct ScanResult {
    std::vector<TimeTrace> windows;
    std::vector<SpectrumTrace> spectra;
    std::vector<KUnits> window_labels;                // first_label + 2j, k_0 units
    std::vector<std::optional<Subspace>> expected;   // subspace carrying that label
    std::vector<std::vector<double>> energy; // [window][alpha] fraction of window signal energy
};

/// Discrete k-space scan of a multi-encoded state: monitoring pulse, then
/// acquisition windows separated by instantaneous blips of 2 k_0, the first
/// aligning label k_0. The grid must satisfy M > 4 (2^{N+1} - 1) k0.
inline ScanResult kspace_scan_decode(const EnsembleState& e, const SpinSystem& sys, std::int64_t k0_windings,
                                     const ScanOptions& opt = {}) {
    if (opt.blip != 2)
        throw ValidationError("kspace_scan_decode: blip spacing must be 2k_0 to match the label spacing of the encoding");
    detail::require(k0_windings >= 1, "kspace_scan_decode: k0 must be a positive number of windings");
    detail::require(opt.samples_per_window >= 2 && opt.dwell > 0.0, "kspace_scan_decode: bad sampling parameters");
    detail::require(opt.first_label >= 0, "kspace_scan_decode: first label must be non-negative");
    const std::size_t n = sys.n_data();
    const std::size_t count = Subspace::count(n);
    // Worst residual helix: label -(2^{N+1}-1) seen through the last blip.
    const auto top_label = static_cast<double>(opt.first_label + 2 * static_cast<KUnits>(count - 1));
    const auto worst = 2.0 * (static_cast<double>(2 * count - 1) + top_label) * static_cast<double>(k0_windings);
    if (!(static_cast<double>(e.grid().slices()) > worst))
        throw ValidationError("kspace_scan_decode: grid too coarse, need M > 4 (2^{N+1} - 1) k0");

    const Ledger led = ledger_run(multi_schedule(n, 1, true));
    const EnsembleState mon = monitor(e, sys);

    ScanResult r;
    for (std::size_t j = 0; j < count; ++j) {
        const KUnits label = opt.first_label + static_cast<KUnits>(2 * j);
        FidOptions f;
        f.samples = opt.samples_per_window;
        f.dwell = opt.dwell;
        f.lb = opt.lb;
        f.t0 = static_cast<double>(j * opt.samples_per_window) * opt.dwell;
        f.extra_winding = static_cast<double>(label * k0_windings);
        r.windows.push_back(simulate_fid(mon, sys, f));
        r.spectra.push_back(spectrum(r.windows.back()));
        r.window_labels.push_back(label);
        r.expected.emplace_back();
        for (const auto& t : led.terms)
            if (t.winding == label) r.expected.back() = t.alpha;

        std::vector<double> energy(count, 0.0);
        double total = 0.0;
        for (std::size_t a = 0; a < count; ++a) {
            const auto part = simulate_fid(restrict_to_subspace(mon, sys, Subspace(a, n)), sys, f);
            for (const auto& v : part.samples) energy[a] += std::norm(v);
            total += energy[a];
        }
        if (total > 0.0)
            for (auto& v : energy) v /= total;
        r.energy.push_back(std::move(energy));
    }
    return r;
}

} // namespace kspp
