#pragma once

#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kspp/spin_algebra.hpp"

namespace kspp {

enum class RfAxis { plus_x, plus_y, minus_x, minus_y };

inline double axis_phase(RfAxis a) {
    switch (a) {
    case RfAxis::plus_x: return 0.0;
    case RfAxis::plus_y: return std::numbers::pi / 2;
    case RfAxis::minus_x: return std::numbers::pi;
    case RfAxis::minus_y: return -std::numbers::pi / 2;
    }
    return 0.0;
}

inline std::string_view axis_name(RfAxis a) {
    switch (a) {
    case RfAxis::plus_x: return "+x";
    case RfAxis::plus_y: return "+y";
    case RfAxis::minus_x: return "-x";
    case RfAxis::minus_y: return "-y";
    }
    return "+x";
}

/// Instantaneous selective rotation exp(-i angle/2 sigma_axis).
struct RfEvent {
    std::size_t spin = 0;
    RfAxis axis = RfAxis::plus_x;
    double angle = 0.0;
    friend bool operator==(const RfEvent&, const RfEvent&) = default;
};

/// Free evolution that keeps only the (pi/2) J_ab sigma_z^a sigma_z^b term.
struct DelayEvent {
    double seconds = 0.0;
    std::size_t spin_a = 0;
    std::size_t spin_b = 0;
    friend bool operator==(const DelayEvent&, const DelayEvent&) = default;
};

/// Gradient of `windings` (ancilla-referenced; spin j winds gamma_j/gamma_a times
/// as much) on every spin, or only on `selective_spin` when set.
struct GradientEvent {
    double windings = 0.0;
    double duration_s = 0.0;
    std::optional<std::size_t> selective_spin;

    int polarity() const { return (windings > 0) - (windings < 0); }
    friend bool operator==(const GradientEvent&, const GradientEvent&) = default;
};

using PulseEvent = std::variant<RfEvent, DelayEvent, GradientEvent>;

struct PulseSequence {
    SpinSystem system;
    std::vector<PulseEvent> events;

    PulseSequence& append(const PulseSequence& other) {
        events.insert(events.end(), other.events.begin(), other.events.end());
        return *this;
    }
};

namespace detail {

inline void check_event(const PulseEvent& ev, const SpinSystem& sys) {
    std::visit(
        [&](const auto& e) {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, RfEvent>) {
                require(e.spin < sys.n_total(), "RF event references an unknown spin");
            } else if constexpr (std::is_same_v<T, DelayEvent>) {
                require(e.seconds >= 0.0, "delays must be non-negative");
                require(e.spin_a < sys.n_total() && e.spin_b < sys.n_total() && e.spin_a != e.spin_b,
                        "delay must name two distinct spins");
            } else {
                require(e.duration_s >= 0.0, "gradient duration must be non-negative");
                require(!e.selective_spin || *e.selective_spin < sys.n_total(), "gradient references an unknown spin");
            }
        },
        ev);
}

inline Eigen::VectorXcd event_diagonal(const DelayEvent& d, const SpinSystem& sys) {
    const std::size_t n = sys.n_total();
    const double jab = sys.j(d.spin_a, d.spin_b);
    Eigen::VectorXcd v(static_cast<Eigen::Index>(sys.dim()));
    for (std::size_t idx = 0; idx < sys.dim(); ++idx) {
        const double za = ((idx >> shift(d.spin_a, n)) & 1U) ? -1.0 : 1.0;
        const double zb = ((idx >> shift(d.spin_b, n)) & 1U) ? -1.0 : 1.0;
        v(static_cast<Eigen::Index>(idx)) = std::polar(1.0, -0.5 * std::numbers::pi * jab * d.seconds * za * zb);
    }
    return v;
}

inline Eigen::VectorXcd event_diagonal(const GradientEvent& g, const SpinSystem& sys, double z) {
    const std::size_t n = sys.n_total();
    Eigen::VectorXcd v(static_cast<Eigen::Index>(sys.dim()));
    for (std::size_t idx = 0; idx < sys.dim(); ++idx) {
        double h = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            if (g.selective_spin && *g.selective_spin != s) continue;
            const double w = g.selective_spin ? g.windings : g.windings * sys.spin(s).gamma_ratio;
            h += w * (((idx >> shift(s, n)) & 1U) ? -1.0 : 1.0);
        }
        v(static_cast<Eigen::Index>(idx)) = std::polar(1.0, -2.0 * std::numbers::pi * z * h);
    }
    return v;
}

} // namespace detail

/// Ideal-pulse interpreter: product of event propagators, later events on the
/// left. Gradients contribute exp(-i 2 pi w z sigma_z).
inline Operator sequence_unitary(const PulseSequence& seq, double z) {
    const auto& sys = seq.system;
    Matrix u = Matrix::Identity(static_cast<Eigen::Index>(sys.dim()), static_cast<Eigen::Index>(sys.dim()));
    for (const auto& ev : seq.events) {
        detail::check_event(ev, sys);
        if (const auto* rf = std::get_if<RfEvent>(&ev)) {
            u = rotation(rf->spin, axis_phase(rf->axis), rf->angle, sys).matrix * u;
        } else if (const auto* d = std::get_if<DelayEvent>(&ev)) {
            u = detail::event_diagonal(*d, sys).asDiagonal() * u;
        } else {
            u = detail::event_diagonal(std::get<GradientEvent>(ev), sys, z).asDiagonal() * u;
        }
    }
    return {std::move(u), OperatorKind::unitary};
}

/// c-NOT flipping `target` when `control` is |1>, as
/// (pi/2)_{-x} - (pi/2)_{-y} - 1/(2J) - (pi/2)_{+y} on the target. The result
/// equals the ideal gate times a diagonal phase on the control. For J < 0 the
/// first pulse is taken about +x so the same control state is selected.
inline PulseSequence compile_cnot(std::size_t target, std::size_t control, const SpinSystem& system) {
    detail::require(target < system.n_total() && control < system.n_total() && target != control,
                    "compile_cnot: invalid spin pair");
    const double j = system.j(target, control);
    if (j == 0.0)
        throw ValidationError("compile_cnot: spins " + system.spin(target).name + " and " + system.spin(control).name +
                              " are not coupled");
    PulseSequence seq{system, {}};
    const double half = std::numbers::pi / 2;
    seq.events.push_back(RfEvent{target, j > 0 ? RfAxis::minus_x : RfAxis::plus_x, half});
    seq.events.push_back(RfEvent{target, RfAxis::minus_y, half});
    seq.events.push_back(DelayEvent{1.0 / (2.0 * std::abs(j)), target, control});
    seq.events.push_back(RfEvent{target, RfAxis::plus_y, half});
    return seq;
}

/// Net winding `windings` on `spin` only: two non-selective lobes of opposite
/// polarity (+w/2, -w/2, scaled to the spin's gyromagnetic ratio) each followed by a
/// selective pi pulse. Every other spin sees zero net winding.
inline PulseSequence compile_selective_gradient(std::size_t spin, double windings, double duration_s, const SpinSystem& system) {
    detail::require(spin < system.n_total(), "compile_selective_gradient: spin index out of range");
    const double lobe = windings / (2.0 * system.spin(spin).gamma_ratio);
    PulseSequence seq{system, {}};
    seq.events.push_back(GradientEvent{lobe, duration_s / 2, std::nullopt});
    seq.events.push_back(RfEvent{spin, RfAxis::plus_x, std::numbers::pi});
    seq.events.push_back(GradientEvent{-lobe, duration_s / 2, std::nullopt});
    seq.events.push_back(RfEvent{spin, RfAxis::plus_x, std::numbers::pi});
    return seq;
}

/// Fundamental conditional phase block: c-NOT_{ia}, G_{w1}, c-NOT_{ia}, G_{w2}
/// with selective gradients on the ancilla; `data` is the 1-based data qubit.
inline PulseSequence compile_conditional_phase(std::size_t data, double w1, double w2, double grad_duration_s,
                                               const SpinSystem& system) {
    const std::size_t a = system.ancilla();
    const std::size_t i = system.data_spin(data);
    PulseSequence seq{system, {}};
    seq.append(compile_cnot(a, i, system));
    seq.append(compile_selective_gradient(a, w1, grad_duration_s, system));
    seq.append(compile_cnot(a, i, system));
    seq.append(compile_selective_gradient(a, w2, grad_duration_s, system));
    return seq;
}

struct PhaseEquivalence {
    double overlap = 0.0;        // |tr(U_ideal^dag U_compiled Phi)| / dim
    Eigen::VectorXcd correction; // diagonal of Phi
};

/// Best diagonal phase correction Phi for U_compiled ~ U_ideal Phi^dagger.
inline PhaseEquivalence diagonal_phase_equivalence(const Operator& ideal, const Operator& compiled) {
    detail::require(ideal.dim() == compiled.dim(), "phase equivalence: dimension mismatch");
    const Matrix m = ideal.matrix.adjoint() * compiled.matrix;
    PhaseEquivalence out;
    out.correction.resize(m.rows());
    cplx tr = 0.0;
    for (Eigen::Index j = 0; j < m.rows(); ++j) {
        const double mag = std::abs(m(j, j));
        out.correction(j) = mag > 0 ? std::conj(m(j, j)) / mag : cplx(1.0);
        tr += m(j, j) * out.correction(j);
    }
    out.overlap = std::abs(tr) / static_cast<double>(m.rows());
    return out;
}

struct AhtReport {
    double winding_minus = 0.0; // ancilla winding in the E_-^i subspace
    double winding_plus = 0.0;  // ... and in E_+^i
    double expected_minus = 0.0;
    double expected_plus = 0.0;
    double max_deviation = 0.0; // worst |U(z) - predicted| entry over the probe points
    bool passed = false;
};

/// Extracts the ancilla winding in each E_+-^i subspace from U(z) and compares
/// it with (w2 - w1) on E_- and (w2 + w1) on E_+.
inline AhtReport aht_check(const PulseSequence& seq, double w1, double w2, std::size_t data, double tol = 1e-9) {
    const auto& sys = seq.system;
    const std::size_t a = sys.ancilla();
    const std::size_t i = sys.data_spin(data);
    const std::size_t n = sys.n_total();
    const std::size_t abit = std::size_t{1} << detail::shift(a, n);
    const std::size_t ibit = std::size_t{1} << detail::shift(i, n);

    auto ratio_at = [&](double z, int s, Matrix* u_out) {
        const Matrix u = sequence_unitary(seq, z).matrix;
        if (u_out) *u_out = u;
        const auto base = static_cast<Eigen::Index>(s ? ibit : 0);
        const auto up = base;
        const auto dn = static_cast<Eigen::Index>(static_cast<std::size_t>(base) | abit);
        return u(up, up) / u(dn, dn);
    };

    AhtReport r;
    r.expected_minus = w2 - w1;
    r.expected_plus = w2 + w1;
    double winding[2];
    const double probe = 1e-4;
    for (int s = 0; s < 2; ++s) winding[s] = -std::arg(ratio_at(probe, s, nullptr)) / (4.0 * std::numbers::pi * probe);
    r.winding_plus = winding[0];
    r.winding_minus = winding[1];

    // Conformance: at each probe z, U must be block-diagonal in sigma_z^a and
    // sigma_z^i with ancilla blocks exp(-i 2 pi W_s z sigma_z^a) up to a phase.
    for (double z : {-0.5, -0.31, -0.07, 0.0, 0.13, 0.29, 0.47}) {
        Matrix u;
        (void)ratio_at(z, 0, &u);
        for (Eigen::Index row = 0; row < u.rows(); ++row)
            for (Eigen::Index col = 0; col < u.cols(); ++col) {
                const auto diff = static_cast<std::size_t>(row ^ col);
                if (diff & (abit | ibit)) r.max_deviation = std::max(r.max_deviation, std::abs(u(row, col)));
            }
        for (int s = 0; s < 2; ++s) {
            const cplx predicted = std::polar(1.0, -4.0 * std::numbers::pi * winding[s] * z);
            r.max_deviation = std::max(r.max_deviation, std::abs(ratio_at(z, s, nullptr) - predicted));
        }
    }
    r.passed = r.max_deviation < tol && std::abs(r.winding_minus - r.expected_minus) < tol &&
               std::abs(r.winding_plus - r.expected_plus) < tol;
    return r;
}

// Text export ----------------------------------------------------------------

namespace detail {

inline std::string fmt_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, std::string_view what) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ConfigError("bad number for " + std::string(what) + ": '" + std::string(s) + "'");
    return v;
}

} // namespace detail

/// One event per line:
///   RF spin=<name> axis=<+-x|+-y> angle=<rad>
///   DELAY t=<s> J=<name,name>
///   GRAD w=<real> d=<s> sel=<name|all>
inline std::string to_text(const PulseSequence& seq) {
    std::ostringstream os;
    const auto& sys = seq.system;
    for (const auto& ev : seq.events) {
        if (const auto* rf = std::get_if<RfEvent>(&ev)) {
            os << "RF spin=" << sys.spin(rf->spin).name << " axis=" << axis_name(rf->axis)
               << " angle=" << detail::fmt_double(rf->angle) << '\n';
        } else if (const auto* d = std::get_if<DelayEvent>(&ev)) {
            os << "DELAY t=" << detail::fmt_double(d->seconds) << " J=" << sys.spin(d->spin_a).name << ','
               << sys.spin(d->spin_b).name << '\n';
        } else {
            const auto& g = std::get<GradientEvent>(ev);
            os << "GRAD w=" << detail::fmt_double(g.windings) << " d=" << detail::fmt_double(g.duration_s)
               << " sel=" << (g.selective_spin ? sys.spin(*g.selective_spin).name : std::string("all")) << '\n';
        }
    }
    return os.str();
}

inline PulseSequence parse_sequence(std::string_view text, const SpinSystem& system) {
    PulseSequence seq{system, {}};
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string kind;
        if (!(ls >> kind)) continue;
        std::vector<std::pair<std::string, std::string>> kv;
        std::string tok;
        while (ls >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos)
                throw ConfigError("line " + std::to_string(lineno) + ": expected key=value, got '" + tok + "'");
            kv.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
        }
        auto get = [&](const std::string& key) -> const std::string& {
            for (const auto& [k, v] : kv)
                if (k == key) return v;
            throw ConfigError("line " + std::to_string(lineno) + ": missing '" + key + "'");
        };
        auto spin = [&](const std::string& name) {
            try {
                return system.index_of(name);
            } catch (const ValidationError& e) {
                throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
            }
        };
        const std::size_t expected_keys = kind == "RF" || kind == "GRAD" ? 3 : 2;
        if (kv.size() != expected_keys)
            throw ConfigError("line " + std::to_string(lineno) + ": wrong number of fields for " + kind);

        if (kind == "RF") {
            const auto& ax = get("axis");
            RfAxis axis;
            if (ax == "+x" || ax == "x") axis = RfAxis::plus_x;
            else if (ax == "+y" || ax == "y") axis = RfAxis::plus_y;
            else if (ax == "-x") axis = RfAxis::minus_x;
            else if (ax == "-y") axis = RfAxis::minus_y;
            else throw ConfigError("line " + std::to_string(lineno) + ": bad axis '" + ax + "'");
            seq.events.push_back(RfEvent{spin(get("spin")), axis, detail::parse_double(get("angle"), "angle")});
        } else if (kind == "DELAY") {
            const auto& pair = get("J");
            const auto comma = pair.find(',');
            if (comma == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": J needs two spin names");
            seq.events.push_back(DelayEvent{detail::parse_double(get("t"), "t"), spin(pair.substr(0, comma)),
                                            spin(pair.substr(comma + 1))});
        } else if (kind == "GRAD") {
            const auto& sel = get("sel");
            GradientEvent g{detail::parse_double(get("w"), "w"), detail::parse_double(get("d"), "d"), std::nullopt};
            if (sel != "all") g.selective_spin = spin(sel);
            seq.events.push_back(g);
        } else {
            throw ConfigError("line " + std::to_string(lineno) + ": unknown event '" + kind + "'");
        }
        try {
            detail::check_event(seq.events.back(), system);
        } catch (const ValidationError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return seq;
}

} // namespace kspp
