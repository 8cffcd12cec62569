#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "support.hpp"

using namespace kspp;
using namespace testing_support;

namespace {

SpinSystem two_spin(double ratio = 1.0, double j = 0.0) {
    Eigen::MatrixXd jm = Eigen::MatrixXd::Zero(2, 2);
    jm(0, 1) = jm(1, 0) = j;
    return SpinSystem({{"a", 1.0, 0.0}, {"d", ratio, 0.0}}, 0, jm);
}

} // namespace

TEST(Subspace, ParsesBitsMostSignificantFirst) {
    const auto s = Subspace::parse("010");
    EXPECT_EQ(s.index(), 2u);
    EXPECT_EQ(s.width(), 3u);
    EXPECT_EQ(s.bit(1), 0);
    EXPECT_EQ(s.bit(2), 1);
    EXPECT_EQ(s.bit(3), 0);
    EXPECT_EQ(s.str(), "010");
    EXPECT_EQ(s.ket(), "|010>");
}

TEST(Subspace, RejectsBadStrings) {
    EXPECT_THROW(Subspace::parse(""), ValidationError);
    EXPECT_THROW(Subspace::parse("012"), ValidationError);
    EXPECT_THROW(Subspace::parse("0a"), ValidationError);
    EXPECT_THROW(Subspace(4, 2), ValidationError);
}

TEST(SpinSystem, Validation) {
    EXPECT_THROW(SpinSystem({{"a", 2.0, 0.0}, {"d", 1.0, 0.0}}, 0, Eigen::MatrixXd::Zero(2, 2)), ValidationError);
    Eigen::MatrixXd asym = Eigen::MatrixXd::Zero(2, 2);
    asym(0, 1) = 5.0;
    EXPECT_THROW(SpinSystem({{"a", 1.0, 0.0}, {"d", 1.0, 0.0}}, 0, asym), ValidationError);
    EXPECT_THROW(SpinSystem({{"a", 1.0, 0.0}}, 0, Eigen::MatrixXd::Zero(1, 1)), ValidationError);
    EXPECT_THROW(SpinSystem({{"a", 1.0, 0.0}, {"a", 1.0, 0.0}}, 0, Eigen::MatrixXd::Zero(2, 2)), ValidationError);
    EXPECT_THROW(SpinSystem({{"a", 1.0, 0.0}, {"d", 1.0, 0.0}}, 2, Eigen::MatrixXd::Zero(2, 2)), ValidationError);
}

TEST(SpinSystem, DataQubitsSkipTheAncilla) {
    SpinSystem s({{"d1", 1.0, 0.0}, {"a", 1.0, 0.0}, {"d2", 1.0, 0.0}}, 1, Eigen::MatrixXd::Zero(3, 3));
    EXPECT_EQ(s.data_spin(1), 0u);
    EXPECT_EQ(s.data_spin(2), 2u);
    // |a=1, b=01>: spin order d1 a d2 -> bits 0 1 1.
    EXPECT_EQ(s.basis_index(1, Subspace::parse("01")), 0b011u);
}

TEST(SpinAlgebra, PauliProductsOnEverySpin) {
    const auto sys = SpinSystem::homonuclear(2);
    const cplx i(0, 1);
    for (std::size_t s = 0; s < 3; ++s) {
        const Matrix x = pauli(Axis::x, s, sys).matrix;
        const Matrix y = pauli(Axis::y, s, sys).matrix;
        const Matrix z = pauli(Axis::z, s, sys).matrix;
        EXPECT_LT(max_abs(x * y - i * z), 1e-15);
        EXPECT_LT(max_abs(x * x - Matrix::Identity(8, 8)), 1e-15);
    }
    // Spin 0 is the leftmost tensor factor.
    EXPECT_LT(max_abs(pauli(Axis::x, 0, sys).matrix - tensor({sx(), id2(), id2()})), 1e-15);
    EXPECT_LT(max_abs(pauli(Axis::y, 2, sys).matrix - tensor({id2(), id2(), sy()})), 1e-15);
}

TEST(SpinAlgebra, IdempotentsProjectOnBasisStates) {
    const auto sys = SpinSystem::homonuclear(1);
    EXPECT_LT(max_abs(idempotent(Sign::plus, 1, sys).matrix - tensor({id2(), ep()})), 1e-15);
    EXPECT_LT(max_abs(idempotent(Sign::minus, 0, sys).matrix - tensor({em(), id2()})), 1e-15);
}

TEST(SpinAlgebra, CnotTruthTable) {
    const auto sys = SpinSystem::homonuclear(2);
    const Matrix u = cnot(2, 0, sys).matrix; // control spin 2, target spin 0
    for (std::size_t in = 0; in < 8; ++in) {
        const std::size_t c = in & 1U;
        const std::size_t expected = c ? in ^ 0b100U : in;
        for (std::size_t out = 0; out < 8; ++out)
            EXPECT_EQ(u(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in)), cplx(out == expected ? 1.0 : 0.0));
    }
}

TEST(SpinAlgebra, CnotEqualsProjectorForm) {
    // sigma_x^a E_-^i + E_+^i, ancilla spin 0, data spin 1.
    const auto sys = SpinSystem::homonuclear(1);
    const Matrix oracle = tensor({sx(), em()}) + tensor({id2(), ep()});
    EXPECT_LT(max_abs(cnot(1, 0, sys).matrix - oracle), 1e-15);
}

TEST(SpinAlgebra, CnotConjugationMapsSigmaZ) {
    const auto sys = SpinSystem::homonuclear(1);
    const Matrix u = cnot(0, 1, sys).matrix;
    EXPECT_LT(max_abs(u * tensor({id2(), sz()}) * u.adjoint() - tensor({sz(), sz()})), 1e-15);
}

TEST(SpinAlgebra, PseudoHadamardMapsZToX) {
    const auto sys = SpinSystem::homonuclear(1);
    const Matrix up = pseudo_hadamard(0, Sign::plus, sys).matrix;
    const Matrix dn = pseudo_hadamard(0, Sign::minus, sys).matrix;
    const Matrix za = tensor({sz(), id2()}), xa = tensor({sx(), id2()});
    EXPECT_LT(max_abs(up * za * up.adjoint() - xa), 1e-15);
    EXPECT_LT(max_abs(up * xa * up.adjoint() + za), 1e-15);
    EXPECT_LT(max_abs(dn * xa * dn.adjoint() - za), 1e-15);
    EXPECT_LT(max_abs(dn * up - Matrix::Identity(4, 4)), 1e-15);
}

TEST(SpinAlgebra, RotationMatchesClosedForm) {
    const auto sys = SpinSystem::homonuclear(1);
    const double phi = 0.3, theta = 1.1;
    const Matrix n = std::cos(phi) * sx() + std::sin(phi) * sy();
    const Matrix r2 = std::cos(theta / 2) * id2() - cplx(0, 1) * std::sin(theta / 2) * n;
    EXPECT_LT(max_abs(rotation(1, phi, theta, sys).matrix - tensor({id2(), r2})), 1e-15);
}

TEST(SpinAlgebra, HadamardIsInvolution) {
    const auto sys = SpinSystem::homonuclear(1);
    const Matrix h = hadamard(1, sys).matrix;
    EXPECT_LT(max_abs(h * h - Matrix::Identity(4, 4)), 1e-15);
}

TEST(SpinAlgebra, EquilibriumWeightsByGyromagneticRatio) {
    const double ratio = 400.13 / 100.61;
    const auto sys = two_spin(ratio);
    const Matrix oracle = tensor({sz(), id2()}) + 3.977040055660471 * tensor({id2(), sz()});
    EXPECT_LT(max_abs(equilibrium_state(sys).op() - oracle), 1e-12);
}

TEST(SpinAlgebra, InternalEnergiesOfCoupledPair) {
    const auto sys = two_spin(1.0, 143.0);
    const Eigen::VectorXd e = internal_energies(sys);
    const double q = std::numbers::pi / 2 * 143.0;
    EXPECT_NEAR(e(0), q, 1e-12);
    EXPECT_NEAR(e(1), -q, 1e-12);
    EXPECT_NEAR(e(2), -q, 1e-12);
    EXPECT_NEAR(e(3), q, 1e-12);
    EXPECT_EQ(max_abs(internal_hamiltonian(SpinSystem::homonuclear(2)).matrix), 0.0);
}

TEST(SpinAlgebra, OffsetsGiveZeemanSplitting) {
    SpinSystem sys({{"a", 1.0, 10.0}, {"d", 1.0, 0.0}}, 0, Eigen::MatrixXd::Zero(2, 2));
    const Eigen::VectorXd e = internal_energies(sys);
    EXPECT_NEAR(e(0) - e(2), 2 * std::numbers::pi * 10.0, 1e-12);
}

TEST(DeviationState, RejectsNonHermitianOrTraced) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 1) = 1.0;
    EXPECT_THROW(DeviationState{m}, NumericalError);
    EXPECT_THROW(DeviationState{Matrix::Identity(2, 2)}, NumericalError);
    EXPECT_THROW(DeviationState{Matrix::Zero(3, 3)}, ValidationError);
}

TEST(SpinAlgebra, EvolveRejectsNonUnitary) {
    const auto sys = SpinSystem::homonuclear(1);
    const auto rho = equilibrium_state(sys);
    EXPECT_THROW(evolve(rho, Operator{2.0 * Matrix::Identity(4, 4), OperatorKind::general}), ValidationError);
    EXPECT_THROW(evolve(rho, Operator{Matrix::Identity(2, 2), OperatorKind::unitary}), ValidationError);
}

TEST(SpinAlgebra, RandomGateProductsPreserveHermiticityAndTrace) {
    std::mt19937_64 rng(20241016);
    std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
    std::uniform_int_distribution<std::size_t> spin(0, 2);
    const auto sys = SpinSystem::homonuclear(2);
    for (int trial = 0; trial < 50; ++trial) {
        DeviationState rho(random_deviation(rng, 8));
        const double norm0 = rho.op().norm();
        for (int g = 0; g < 6; ++g) {
            const std::size_t s = spin(rng);
            const std::size_t t = (s + 1 + spin(rng) % 2) % 3;
            rho = evolve(rho, rotation(s, ang(rng), ang(rng), sys));
            rho = evolve(rho, cnot(s, t, sys));
        }
        EXPECT_NEAR(rho.op().norm(), norm0, 1e-10 * norm0);
        EXPECT_LT(std::abs(rho.op().trace()), 1e-10);
    }
}
