#pragma once

#include <complex>
#include <numbers>

#include <Eigen/Dense>

#include "kspp/error.hpp"
#include "kspp/spin_system.hpp"

namespace kspp {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

enum class OperatorKind { unitary, hermitian, general };

/// Dense operator on the 2^(N+1) dimensional spin Hilbert space.
struct Operator {
    Matrix matrix;
    OperatorKind kind = OperatorKind::general;

    Eigen::Index dim() const { return matrix.rows(); }
};

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline bool is_unitary(const Matrix& u, double tol = 1e-12) {
    if (u.rows() != u.cols()) return false;
    return max_abs(u * u.adjoint() - Matrix::Identity(u.rows(), u.cols())) < tol;
}

inline bool is_hermitian(const Matrix& h, double tol = 1e-12) {
    return h.rows() == h.cols() && max_abs(h - h.adjoint()) < tol;
}

/// Traceless Hermitian deviation density matrix (identity part and
/// Boltzmann prefactor dropped).
class DeviationState {
public:
    DeviationState() = default;
    explicit DeviationState(Matrix op, double tol = 1e-10) : op_(std::move(op)) {
        detail::require(op_.rows() == op_.cols(), "deviation state must be square");
        detail::require(op_.rows() >= 2 && (op_.rows() & (op_.rows() - 1)) == 0, "dimension must be a power of two");
        const double scale = std::max(1.0, max_abs(op_));
        if (!is_hermitian(op_, tol * scale)) throw NumericalError("deviation state is not Hermitian");
        if (std::abs(op_.trace()) > tol * scale * static_cast<double>(op_.rows()))
            throw NumericalError("deviation state is not traceless");
    }

    const Matrix& op() const { return op_; }
    Eigen::Index basis_dim() const { return op_.rows(); }

private:
    Matrix op_;
};

namespace detail {

inline Matrix embed(const Eigen::Matrix2cd& single, std::size_t spin, std::size_t n_total) {
    require(spin < n_total, "spin index out of range");
    Matrix out = Matrix::Identity(1, 1);
    for (std::size_t s = 0; s < n_total; ++s) {
        const Matrix factor = (s == spin) ? Matrix(single) : Matrix(Matrix::Identity(2, 2));
        Matrix next(out.rows() * 2, out.cols() * 2);
        for (Eigen::Index r = 0; r < out.rows(); ++r)
            for (Eigen::Index c = 0; c < out.cols(); ++c)
                next.block(2 * r, 2 * c, 2, 2) = out(r, c) * factor;
        out = std::move(next);
    }
    return out;
}

inline std::size_t shift(std::size_t spin, std::size_t n_total) { return n_total - 1 - spin; }

} // namespace detail

enum class Axis { x, y, z };

inline Eigen::Matrix2cd pauli_2x2(Axis axis) {
    Eigen::Matrix2cd m;
    switch (axis) {
    case Axis::x: m << 0, 1, 1, 0; break;
    case Axis::y: m << 0, cplx(0, -1), cplx(0, 1), 0; break;
    case Axis::z: m << 1, 0, 0, -1; break;
    }
    return m;
}

inline Operator pauli(Axis axis, std::size_t spin, const SpinSystem& system) {
    detail::require(spin < system.n_total(), "pauli: spin index out of range");
    return {detail::embed(pauli_2x2(axis), spin, system.n_total()), OperatorKind::unitary};
}

inline Operator identity(const SpinSystem& system) {
    const auto d = static_cast<Eigen::Index>(system.dim());
    return {Matrix::Identity(d, d), OperatorKind::unitary};
}

enum class Sign { plus, minus };

inline double sign_value(Sign s) { return s == Sign::plus ? 1.0 : -1.0; }

/// E_+ = (1 + sigma_z)/2 projects onto |0>, E_- onto |1>.
inline Operator idempotent(Sign sign, std::size_t spin, const SpinSystem& system) {
    detail::require(spin < system.n_total(), "idempotent: spin index out of range");
    Eigen::Matrix2cd e = Eigen::Matrix2cd::Zero();
    if (sign == Sign::plus) e(0, 0) = 1.0;
    else e(1, 1) = 1.0;
    return {detail::embed(e, spin, system.n_total()), OperatorKind::hermitian};
}

/// Flips `target` when `control` is |1>. Conjugation maps
/// sigma_z^target to sigma_z^control sigma_z^target.
inline Operator cnot(std::size_t control, std::size_t target, const SpinSystem& system) {
    detail::require(control < system.n_total() && target < system.n_total(), "cnot: spin index out of range");
    detail::require(control != target, "cnot: control and target must differ");
    const auto d = system.dim();
    const auto cs = detail::shift(control, system.n_total());
    const auto ts = detail::shift(target, system.n_total());
    Matrix u = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t col = 0; col < d; ++col) {
        const std::size_t row = ((col >> cs) & 1U) ? (col ^ (std::size_t{1} << ts)) : col;
        u(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = 1.0;
    }
    return {std::move(u), OperatorKind::unitary};
}

/// exp(-i theta/2 (cos(phi) sigma_x + sin(phi) sigma_y)) on one spin.
inline Operator rotation(std::size_t spin, double phase, double angle, const SpinSystem& system) {
    const Eigen::Matrix2cd n = std::cos(phase) * pauli_2x2(Axis::x) + std::sin(phase) * pauli_2x2(Axis::y);
    const Eigen::Matrix2cd r = std::cos(angle / 2) * Eigen::Matrix2cd::Identity() - cplx(0, 1) * std::sin(angle / 2) * n;
    return {detail::embed(r, spin, system.n_total()), OperatorKind::unitary};
}

/// (pi/2) rotation about +y (sign +) or -y (sign -). Sign + takes sigma_z to
/// sigma_x, sign - takes sigma_x back to sigma_z.
inline Operator pseudo_hadamard(std::size_t spin, Sign sign, const SpinSystem& system) {
    detail::require(spin < system.n_total(), "pseudo_hadamard: spin index out of range");
    return rotation(spin, sign == Sign::plus ? std::numbers::pi / 2 : -std::numbers::pi / 2, std::numbers::pi / 2, system);
}

/// True Hadamard (sigma_x + sigma_z)/sqrt 2.
inline Operator hadamard(std::size_t spin, const SpinSystem& system) {
    Eigen::Matrix2cd h;
    h << 1, 1, 1, -1;
    h /= std::sqrt(2.0);
    return {detail::embed(h, spin, system.n_total()), OperatorKind::unitary};
}

/// sigma_z^a + sum_i (gamma_i/gamma_a) sigma_z^i.
inline DeviationState equilibrium_state(const SpinSystem& system) {
    Matrix rho = pauli(Axis::z, system.ancilla(), system).matrix;
    for (std::size_t s : system.data_spins())
        rho += system.spin(s).gamma_ratio * pauli(Axis::z, s, system).matrix;
    return DeviationState(std::move(rho));
}

/// Diagonal of the weak-coupling Hamiltonian in rad/s:
/// sum_i pi nu_i sigma_z^i + sum_{i<j} (pi/2) J_ij sigma_z^i sigma_z^j.
inline Eigen::VectorXd internal_energies(const SpinSystem& system) {
    const std::size_t n = system.n_total();
    Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(system.dim()));
    for (std::size_t idx = 0; idx < system.dim(); ++idx) {
        auto z = [&](std::size_t s) { return ((idx >> detail::shift(s, n)) & 1U) ? -1.0 : 1.0; };
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            v += std::numbers::pi * system.spin(i).offset_hz * z(i);
            for (std::size_t j = i + 1; j < n; ++j) v += 0.5 * std::numbers::pi * system.j(i, j) * z(i) * z(j);
        }
        e(static_cast<Eigen::Index>(idx)) = v;
    }
    return e;
}

inline Operator internal_hamiltonian(const SpinSystem& system) {
    return {internal_energies(system).cast<cplx>().asDiagonal(), OperatorKind::hermitian};
}

/// rho -> U rho U^dagger.
inline DeviationState evolve(const DeviationState& state, const Operator& u) {
    detail::require(u.dim() == state.basis_dim(), "evolve: dimension mismatch");
    if (!is_unitary(u.matrix, 1e-10)) throw ValidationError("evolve: operator is not unitary");
    return DeviationState(u.matrix * state.op() * u.matrix.adjoint());
}

} // namespace kspp
