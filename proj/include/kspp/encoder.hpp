#pragma once

#include <iostream>
#include <numbers>
#include <vector>

#include "kspp/ensemble.hpp"
#include "kspp/ledger.hpp"
#include "kspp/pulse.hpp"

namespace kspp {

/// Gate-level applies ideal unitaries and gradient phases directly; pulse-level
/// runs every gate through the compiled RF/delay/gradient sequences.
enum class Fidelity { gate, pulse };

/// Time order of the fundamental conditional phase block.
enum class PhaseOrder {
    cnot_first,     // c-NOT, G_{k1}, c-NOT, G_{k2}  (operator G_{k2} C G_{k1} C)
    gradient_first, // G_{k1}, c-NOT, G_{k2}, c-NOT
};

struct PipelineOptions {
    /// Start from sigma_z^a alone, the data magnetization having been crushed.
    bool ancilla_only = false;
    Fidelity fidelity = Fidelity::gate;
    double grad_duration_s = 1.5e-3;
};

namespace detail {

inline EnsembleState apply_gate(const EnsembleState& e, const Operator& ideal, const PulseSequence* compiled) {
    if (!compiled) return apply_uniform(e, ideal);
    return apply_uniform(e, sequence_unitary(*compiled, 0.0));
}

inline EnsembleState cnot_step(const EnsembleState& e, std::size_t control, std::size_t target, const SpinSystem& sys,
                               Fidelity f) {
    if (f == Fidelity::gate) return apply_uniform(e, cnot(control, target, sys));
    const auto seq = compile_cnot(target, control, sys);
    return apply_uniform(e, sequence_unitary(seq, 0.0));
}

inline EnsembleState ancilla_gradient(const EnsembleState& e, double windings, const SpinSystem& sys, Fidelity f,
                                      double duration) {
    if (windings == 0.0) return e;
    if (f == Fidelity::gate) return apply_gradient(e, GradientPulse{sys.ancilla(), windings, duration, 0.0});
    const auto seq = compile_selective_gradient(sys.ancilla(), windings, duration, sys);
    return apply_per_slice(e, [&](double z) { return sequence_unitary(seq, z).matrix; });
}

inline EnsembleState ancilla_rotation(const EnsembleState& e, Sign sign, const SpinSystem& sys, Fidelity f) {
    if (f == Fidelity::gate) return apply_uniform(e, pseudo_hadamard(sys.ancilla(), sign, sys));
    PulseSequence seq{sys, {RfEvent{sys.ancilla(), sign == Sign::plus ? RfAxis::plus_y : RfAxis::minus_y, std::numbers::pi / 2}}};
    return apply_uniform(e, sequence_unitary(seq, 0.0));
}

/// Multi-controlled X on `target`, active when the `spins` carry `bits`.
inline Operator pattern_cnot(const std::vector<std::size_t>& spins, const std::vector<int>& bits, std::size_t target,
                             const SpinSystem& sys) {
    const std::size_t n = sys.n_total();
    const auto d = sys.dim();
    Matrix u = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t col = 0; col < d; ++col) {
        bool match = true;
        for (std::size_t c = 0; c < spins.size(); ++c)
            match = match && static_cast<int>((col >> shift(spins[c], n)) & 1U) == bits[c];
        const std::size_t row = match ? col ^ (std::size_t{1} << shift(target, n)) : col;
        u(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = 1.0;
    }
    return {std::move(u), OperatorKind::unitary};
}

} // namespace detail

inline bool data_part_diagonal(const EnsembleState& e, const SpinSystem& sys, double tol = 1e-12) {
    const std::size_t n = sys.n_total();
    std::size_t mask = 0;
    for (std::size_t s : sys.data_spins()) mask |= std::size_t{1} << detail::shift(s, n);
    for (const auto& m : e.slices())
        for (Eigen::Index j = 0; j < m.rows(); ++j)
            for (Eigen::Index k = 0; k < m.cols(); ++k)
                if (((static_cast<std::size_t>(j) ^ static_cast<std::size_t>(k)) & mask) && std::abs(m(j, k)) > tol) return false;
    return true;
}

/// N c-NOTs with the ancilla as control, one onto each data spin.
inline EnsembleState correlate_ancilla(const EnsembleState& e, const SpinSystem& sys, Fidelity f = Fidelity::gate) {
    EnsembleState out = e;
    for (std::size_t s : sys.data_spins()) out = detail::cnot_step(out, sys.ancilla(), s, sys, f);
    return out;
}

/// G_{w2} c-NOT_{ia} G_{w1} c-NOT_{ia}: ancilla winds w2 - w1 where data
/// qubit `data` is |1> and w2 + w1 where it is |0>.
inline EnsembleState conditional_phase_full(const EnsembleState& e, const SpinSystem& sys, std::size_t data, double w1,
                                            double w2, PhaseOrder order = PhaseOrder::cnot_first,
                                            Fidelity f = Fidelity::gate, double grad_duration = 1.5e-3) {
    const std::size_t i = sys.data_spin(data);
    const std::size_t a = sys.ancilla();
    EnsembleState out = e;
    if (order == PhaseOrder::cnot_first) {
        out = detail::cnot_step(out, i, a, sys, f);
        out = detail::ancilla_gradient(out, w1, sys, f, grad_duration);
        out = detail::cnot_step(out, i, a, sys, f);
        out = detail::ancilla_gradient(out, w2, sys, f, grad_duration);
    } else {
        out = detail::ancilla_gradient(out, w1, sys, f, grad_duration);
        out = detail::cnot_step(out, i, a, sys, f);
        out = detail::ancilla_gradient(out, w2, sys, f, grad_duration);
        out = detail::cnot_step(out, i, a, sys, f);
    }
    return out;
}

/// Gradient on the ancilla followed by c-NOT_{na}; valid as a conditional
/// phase only while the data part is diagonal.
inline EnsembleState conditional_phase_reduced(const EnsembleState& e, const SpinSystem& sys, std::size_t data, double w,
                                               Fidelity f = Fidelity::gate, double grad_duration = 1.5e-3) {
    if (!data_part_diagonal(e, sys, 1e-10))
        std::clog << "kspp: warning: reduced conditional phase applied to a state with off-diagonal data part\n";
    EnsembleState out = detail::ancilla_gradient(e, w, sys, f, grad_duration);
    return detail::cnot_step(out, sys.data_spin(data), sys.ancilla(), sys, f);
}

/// Condition |w> over a set of non-ancilla spins.
struct SpinPattern {
    std::vector<std::size_t> spins;
    std::vector<int> bits;
};

/// Winds the ancilla by `w` only inside the subspace where the pattern holds,
/// built as G_{w/2} X_pattern G_{-w/2} X_pattern with a multi-controlled NOT.
inline EnsembleState conditional_phase_generalized(const EnsembleState& e, const SpinSystem& sys, const SpinPattern& cond,
                                                   double w) {
    detail::require(!cond.spins.empty(), "conditional_phase_generalized: empty condition");
    detail::require(cond.spins.size() == cond.bits.size(), "conditional_phase_generalized: pattern size mismatch");
    for (std::size_t c = 0; c < cond.spins.size(); ++c) {
        detail::require(cond.spins[c] < sys.n_total() && cond.spins[c] != sys.ancilla(),
                        "conditional_phase_generalized: condition spins must be valid non-ancilla spins");
        detail::require(cond.bits[c] == 0 || cond.bits[c] == 1, "conditional_phase_generalized: bits must be 0 or 1");
    }
    const Operator mcx = detail::pattern_cnot(cond.spins, cond.bits, sys.ancilla(), sys);
    EnsembleState out = apply_uniform(e, mcx);
    out = apply_gradient(out, GradientPulse{sys.ancilla(), -w / 2, 0.0, 0.0});
    out = apply_uniform(out, mcx);
    return apply_gradient(out, GradientPulse{sys.ancilla(), w / 2, 0.0, 0.0});
}

/// Keeps the pattern subspace and dephases its complement: a global ancilla
/// winding w combined with a conditional -w inside the pattern, then averaging.
inline EnsembleState project_pattern(const EnsembleState& e, const SpinSystem& sys, const SpinPattern& cond, double w) {
    EnsembleState out = apply_gradient(e, GradientPulse{sys.ancilla(), w, 0.0, 0.0});
    out = conditional_phase_generalized(out, sys, cond, -w);
    return decohere_wound(out);
}

/// Conditional phase with k1 = -+k2 = k followed by loss of all wound
/// components. sign = + keeps the E_+^i subspace, sign = - keeps E_-^i; in the
/// other one only ancilla-longitudinal parts survive.
inline EnsembleState project(const EnsembleState& e, const SpinSystem& sys, std::size_t data, Sign sign, double k) {
    const double w1 = k;
    const double w2 = sign == Sign::plus ? -k : k;
    return decohere_wound(conditional_phase_full(e, sys, data, w1, w2));
}

// Pipelines ------------------------------------------------------------------

/// Transverse starting point sigma_x^a (ancilla-only) or sigma_x^a sum (1+eps)|a><a|.
inline EnsembleState transverse_start(const SpinSystem& sys, const SpatialGrid& grid, const PipelineOptions& opt) {
    EnsembleState e = opt.ancilla_only
                          ? broadcast(DeviationState(pauli(Axis::z, sys.ancilla(), sys).matrix), grid)
                          : correlate_ancilla(broadcast(equilibrium_state(sys), grid), sys, opt.fidelity);
    return detail::ancilla_rotation(e, Sign::plus, sys, opt.fidelity);
}

/// Runs the N reduced conditional phases of `s` and its selection gradient.
inline EnsembleState run_encoding(const EnsembleState& start, const SpinSystem& sys, const EncodingSchedule& s,
                                  const PipelineOptions& opt) {
    s.validate();
    detail::require(s.n_data == sys.n_data(), "schedule does not match the spin system");
    const double w0 = static_cast<double>(s.k0_windings);
    EnsembleState e = start;
    for (const auto& step : s.steps)
        e = conditional_phase_reduced(e, sys, step.target, static_cast<double>(step.k) * w0, opt.fidelity, opt.grad_duration_s);
    if (s.selection) e = detail::ancilla_gradient(e, static_cast<double>(*s.selection) * w0, sys, opt.fidelity, opt.grad_duration_s);
    return e;
}

/// sigma_{axis}^a (x) |alpha><alpha| on the data spins.
inline Matrix ancilla_pattern(const SpinSystem& sys, Axis axis, const Subspace& alpha) {
    Matrix p = pauli(axis, sys.ancilla(), sys).matrix;
    for (std::size_t n = 1; n <= sys.n_data(); ++n)
        p = p * idempotent(alpha.bit(n) ? Sign::minus : Sign::plus, sys.data_spin(n), sys).matrix;
    return p;
}

struct PreparationReport {
    Subspace requested_target;
    DeviationState averaged_state;   // after the closing (pi/2)_{-y}
    DeviationState transverse_state; // after averaging, before the closing rotation
    double target_weight = 0.0;      // exact weight: 1 + eps (or 1 when ancilla-only)
    double quoted_weight = 0.0;      // eps of the target, the weight quoted in the literature
    double residual_norm = 0.0;      // ||averaged - weight sigma_z^a |t><t|||_F
    double transverse_residual_norm = 0.0;
    EncodingSchedule schedule;
};

inline std::int64_t required_windings_single(std::size_t n_data, std::int64_t k0) {
    return 2 * static_cast<std::int64_t>(n_data) * k0;
}

inline PreparationReport prepare_single_pps(const SpinSystem& sys, const Subspace& target, const SpatialGrid& grid,
                                            std::int64_t k0_windings = 1, const PipelineOptions& opt = {}) {
    detail::require(target.width() == sys.n_data(), "target length does not match the number of data spins");
    const EncodingSchedule s = single_pps_schedule(target, k0_windings);
    grid.require_supports(static_cast<double>(max_abs_winding(ledger_run(s)) * k0_windings));

    EnsembleState e = run_encoding(transverse_start(sys, grid, opt), sys, s, opt);
    e = decohere_wound(e);
    PreparationReport r;
    r.requested_target = target;
    r.schedule = s;
    r.transverse_state = spatial_average(e);
    r.averaged_state = spatial_average(detail::ancilla_rotation(e, Sign::minus, sys, opt.fidelity));
    r.target_weight = opt.ancilla_only ? 1.0 : 1.0 + epsilon(target, sys);
    r.quoted_weight = epsilon(target, sys);
    r.residual_norm = (r.averaged_state.op() - r.target_weight * ancilla_pattern(sys, Axis::z, target)).norm();
    r.transverse_residual_norm = (r.transverse_state.op() - r.target_weight * ancilla_pattern(sys, Axis::x, target)).norm();
    return r;
}

/// Transverse ensembles after 0..N encoding steps, each rephased so that the
/// subspaces agreeing with `target` on the steps done so far are observable.
inline std::vector<EnsembleState> encoding_progress(const SpinSystem& sys, const Subspace& target, const SpatialGrid& grid,
                                                    std::int64_t k0_windings = 1, const PipelineOptions& opt = {}) {
    const EncodingSchedule s = single_pps_schedule(target, k0_windings);
    grid.require_supports(static_cast<double>(max_abs_winding(ledger_run(s)) * k0_windings));
    const double w0 = static_cast<double>(k0_windings);
    std::vector<EnsembleState> out;
    EnsembleState e = transverse_start(sys, grid, opt);
    out.push_back(e);
    // Winding of the target subspace after each step, from the ledger recursion.
    KUnits target_w = 0;
    for (std::size_t n = 1; n <= s.n_data; ++n) {
        e = conditional_phase_reduced(e, sys, n, static_cast<double>(s.steps[n - 1].k) * w0, opt.fidelity, opt.grad_duration_s);
        target_w += s.steps[n - 1].k;
        if (target.bit(n)) target_w = -target_w;
        out.push_back(detail::ancilla_gradient(e, -static_cast<double>(target_w) * w0, sys, opt.fidelity, opt.grad_duration_s));
    }
    return out;
}

/// Encodes all 2^N subspaces with k_n = (-2)^{n-1} k_0 and k_s = 2^N k_0,
/// returns the ancilla to z and crushes the leftover transverse part.
inline EnsembleState encode_multi(const SpinSystem& sys, const SpatialGrid& grid, std::int64_t k0_windings = 1,
                                  const PipelineOptions& opt = {}) {
    const std::size_t n = sys.n_data();
    detail::require(n >= 1, "encode_multi needs at least one data spin");
    const EncodingSchedule s = multi_schedule(n, k0_windings, true);
    grid.require_supports(static_cast<double>(max_abs_winding(ledger_run(s)) * k0_windings));
    EnsembleState e = run_encoding(transverse_start(sys, grid, opt), sys, s, opt);
    e = detail::ancilla_rotation(e, Sign::minus, sys, opt.fidelity);
    return crusher(e, sys.ancilla());
}

// Cross-backend extraction -----------------------------------------------------

struct DenseTerm {
    Subspace alpha;
    double winding = 0.0; // in k_0 units
    cplx coeff;           // amplitude of the helix
    double residual = 0.0;
};

/// Reads the ancilla coherence <a=0|rho(z)|a=1> of every data subspace and
/// finds the single helix c exp(-i 4 pi W w0 z) it carries. A vanishing line
/// reports winding 0.
inline std::vector<DenseTerm> extract_terms(const EnsembleState& e, const SpinSystem& sys, std::int64_t k0_windings,
                                            std::int64_t max_winding) {
    std::vector<DenseTerm> out;
    const double w0 = static_cast<double>(k0_windings);
    for (std::size_t a = 0; a < Subspace::count(sys.n_data()); ++a) {
        const Subspace alpha(a, sys.n_data());
        const auto r = static_cast<Eigen::Index>(sys.basis_index(0, alpha));
        const auto c = static_cast<Eigen::Index>(sys.basis_index(1, alpha));
        std::vector<cplx> line(e.size());
        for (std::size_t m = 0; m < e.size(); ++m) line[m] = e.slice(m)(r, c);

        DenseTerm best{alpha, 0.0, 0.0, 0.0};
        double best_mag = -1.0;
        for (std::int64_t w = -max_winding; w <= max_winding; ++w) {
            cplx acc = 0.0;
            for (std::size_t m = 0; m < e.size(); ++m)
                acc += line[m] * std::polar(1.0, 4.0 * std::numbers::pi * static_cast<double>(w) * w0 * e.grid().position(m));
            acc /= static_cast<double>(e.size());
            if (std::abs(acc) > best_mag + 1e-12) {
                best_mag = std::abs(acc);
                best.winding = static_cast<double>(w);
                best.coeff = acc;
            }
        }
        if (best_mag < 1e-12) best.winding = 0.0;
        double res = 0.0;
        for (std::size_t m = 0; m < e.size(); ++m) {
            const cplx model = best.coeff * std::polar(1.0, -4.0 * std::numbers::pi * best.winding * w0 * e.grid().position(m));
            res = std::max(res, std::abs(line[m] - model));
        }
        best.residual = res;
        out.push_back(best);
    }
    return out;
}

} // namespace kspp
