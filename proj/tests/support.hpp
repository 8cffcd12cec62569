#pragma once

#include <complex>
#include <initializer_list>
#include <random>

#include <Eigen/Dense>

#include "kspp/kspp.hpp"

namespace testing_support {

using kspp::cplx;
using kspp::Matrix;
using kspp::max_abs;

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// Tensor product of single-spin 2x2 factors, spin 0 leftmost.
inline Matrix tensor(std::initializer_list<Matrix> factors) {
    Matrix out = Matrix::Identity(1, 1);
    for (const auto& f : factors) out = kron(out, f);
    return out;
}

inline Matrix sx() { Matrix m(2, 2); m << 0, 1, 1, 0; return m; }
inline Matrix sy() { Matrix m(2, 2); m << 0, cplx(0, -1), cplx(0, 1), 0; return m; }
inline Matrix sz() { Matrix m(2, 2); m << 1, 0, 0, -1; return m; }
inline Matrix id2() { return Matrix::Identity(2, 2); }
inline Matrix ep() { Matrix m = Matrix::Zero(2, 2); m(0, 0) = 1; return m; }
inline Matrix em() { Matrix m = Matrix::Zero(2, 2); m(1, 1) = 1; return m; }

/// Random traceless Hermitian matrix with entries of order one.
inline Matrix random_deviation(std::mt19937_64& rng, Eigen::Index dim) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix a(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) a(i, j) = cplx(g(rng), g(rng));
    Matrix h = 0.5 * (a + a.adjoint());
    h -= (h.trace() / static_cast<double>(dim)) * Matrix::Identity(dim, dim);
    return h;
}


} // namespace testing_support
