#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "kspp/error.hpp"

namespace kspp {

/// Computational-basis label |b_1 b_2 ... b_N> of the data spins.
/// b_1 is the most significant bit of `index`, so |010> has index 2.
class Subspace {
public:
    Subspace() = default;
    Subspace(std::uint64_t index, std::size_t width) : index_(index), width_(width) {
        detail::require(width >= 1 && width <= 62, "subspace width must be in [1, 62]");
        detail::require(index < (std::uint64_t{1} << width), "subspace index out of range");
    }

    static Subspace parse(std::string_view bits) {
        detail::require(!bits.empty(), "empty bit string");
        std::uint64_t v = 0;
        for (char c : bits) {
            detail::require(c == '0' || c == '1', "bit string may only contain 0 and 1: '" + std::string(bits) + "'");
            v = (v << 1) | static_cast<std::uint64_t>(c - '0');
        }
        return Subspace(v, bits.size());
    }

    std::uint64_t index() const { return index_; }
    std::size_t width() const { return width_; }

    /// Bit b_n for n = 1..N.
    int bit(std::size_t n) const {
        detail::require(n >= 1 && n <= width_, "bit position out of range");
        return static_cast<int>((index_ >> (width_ - n)) & 1U);
    }

    std::string str() const {
        std::string s(width_, '0');
        for (std::size_t n = 1; n <= width_; ++n) s[n - 1] = bit(n) ? '1' : '0';
        return s;
    }

    std::string ket() const { return "|" + str() + ">"; }

    static std::size_t count(std::size_t width) { return std::size_t{1} << width; }

    friend bool operator==(const Subspace&, const Subspace&) = default;

private:
    std::uint64_t index_ = 0;
    std::size_t width_ = 1;
};

struct Spin {
    std::string name;
    double gamma_ratio = 1.0; // gamma_i / gamma_ancilla
    double offset_hz = 0.0;
};

/// Static description of an N+1 spin-1/2 system with one designated ancilla.
class SpinSystem {
public:
    SpinSystem(std::vector<Spin> spins, std::size_t ancilla, Eigen::MatrixXd j_hz)
        : spins_(std::move(spins)), ancilla_(ancilla), j_(std::move(j_hz)) {
        validate();
        for (std::size_t s = 0; s < spins_.size(); ++s)
            if (s != ancilla_) data_.push_back(s);
    }

    /// Uncoupled system with all ratios 1 and zero offsets; ancilla is spin 0.
    static SpinSystem homonuclear(std::size_t n_data) {
        std::vector<Spin> spins;
        spins.push_back({"a", 1.0, 0.0});
        for (std::size_t i = 1; i <= n_data; ++i) spins.push_back({"d" + std::to_string(i), 1.0, 0.0});
        return SpinSystem(std::move(spins), 0, Eigen::MatrixXd::Zero(n_data + 1, n_data + 1));
    }

    std::size_t n_total() const { return spins_.size(); }
    std::size_t n_data() const { return data_.size(); }
    std::size_t dim() const { return std::size_t{1} << spins_.size(); }
    std::size_t ancilla() const { return ancilla_; }

    const std::vector<Spin>& spins() const { return spins_; }
    const Spin& spin(std::size_t s) const {
        detail::require(s < spins_.size(), "spin index out of range");
        return spins_[s];
    }

    /// Spin index of data qubit n (1-based, n = 1..N).
    std::size_t data_spin(std::size_t n) const {
        detail::require(n >= 1 && n <= data_.size(), "data qubit index out of range");
        return data_[n - 1];
    }

    const std::vector<std::size_t>& data_spins() const { return data_; }

    double j(std::size_t a, std::size_t b) const {
        detail::require(a < spins_.size() && b < spins_.size(), "spin index out of range");
        return j_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    }
    const Eigen::MatrixXd& j_matrix() const { return j_; }

    std::size_t index_of(std::string_view name) const {
        for (std::size_t s = 0; s < spins_.size(); ++s)
            if (spins_[s].name == name) return s;
        throw ValidationError("unknown spin '" + std::string(name) + "'");
    }

    /// Bit of spin `s` inside a basis index; spin 0 is the most significant factor.
    std::size_t bit_shift(std::size_t s) const { return spins_.size() - 1 - s; }

    /// Basis index of ancilla bit `a` combined with data subspace `alpha`
    /// (any spins outside ancilla+data would be set to 0; there are none).
    std::size_t basis_index(int ancilla_bit, const Subspace& alpha) const {
        detail::require(alpha.width() == n_data(), "subspace width does not match data-spin count");
        std::size_t idx = static_cast<std::size_t>(ancilla_bit) << bit_shift(ancilla_);
        for (std::size_t n = 1; n <= n_data(); ++n)
            idx |= static_cast<std::size_t>(alpha.bit(n)) << bit_shift(data_[n - 1]);
        return idx;
    }

    /// Keeps the ancilla and the first `n` data spins.
    SpinSystem truncated(std::size_t n) const {
        detail::require(n >= 1 && n <= n_data(), "cannot truncate to that many data spins");
        std::vector<std::size_t> keep{ancilla_};
        for (std::size_t i = 0; i < n; ++i) keep.push_back(data_[i]);
        std::sort(keep.begin(), keep.end());
        std::vector<Spin> spins;
        std::size_t anc = 0;
        Eigen::MatrixXd j = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(keep.size()));
        for (std::size_t r = 0; r < keep.size(); ++r) {
            spins.push_back(spins_[keep[r]]);
            if (keep[r] == ancilla_) anc = r;
            for (std::size_t c = 0; c < keep.size(); ++c)
                j(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = this->j(keep[r], keep[c]);
        }
        return SpinSystem(std::move(spins), anc, std::move(j));
    }

private:
    void validate() const {
        detail::require(spins_.size() >= 2, "need an ancilla and at least one data spin");
        detail::require(spins_.size() <= 12, "at most 12 spins are supported by the dense backend");
        detail::require(ancilla_ < spins_.size(), "ancilla index out of range");
        detail::require(spins_[ancilla_].gamma_ratio == 1.0, "ancilla gamma_ratio must be exactly 1");
        const auto n = static_cast<Eigen::Index>(spins_.size());
        detail::require(j_.rows() == n && j_.cols() == n, "J matrix must be n_total x n_total");
        for (Eigen::Index r = 0; r < n; ++r) {
            detail::require(j_(r, r) == 0.0, "J matrix must have a zero diagonal");
            for (Eigen::Index c = 0; c < n; ++c)
                detail::require(j_(r, c) == j_(c, r), "J matrix must be symmetric");
        }
        for (std::size_t a = 0; a < spins_.size(); ++a)
            for (std::size_t b = a + 1; b < spins_.size(); ++b)
                detail::require(spins_[a].name != spins_[b].name, "duplicate spin name '" + spins_[a].name + "'");
    }

    std::vector<Spin> spins_;
    std::size_t ancilla_;
    Eigen::MatrixXd j_;
    std::vector<std::size_t> data_;
};

/// Relative energy of data eigenstate alpha: sum_i (gamma_i/gamma_a) (-1)^{b_i}.
inline double epsilon(const Subspace& alpha, const SpinSystem& system) {
    detail::require(alpha.width() == system.n_data(), "subspace width does not match data-spin count");
    double e = 0.0;
    for (std::size_t n = 1; n <= system.n_data(); ++n)
        e += system.spin(system.data_spin(n)).gamma_ratio * (alpha.bit(n) ? -1.0 : 1.0);
    return e;
}

} // namespace kspp
