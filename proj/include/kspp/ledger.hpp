#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kspp/spin_system.hpp"

namespace kspp {

/// Windings in the ledger are exact integer multiples of the unit wave number k_0.
using KUnits = std::int64_t;

/// P_n(alpha) = prod_{i=n}^{N} (-1)^{b_i}.
inline int parity(std::size_t n, const Subspace& alpha) {
    detail::require(n >= 1 && n <= alpha.width(), "parity: step index out of range");
    int p = 1;
    for (std::size_t i = n; i <= alpha.width(); ++i) p *= alpha.bit(i) ? -1 : 1;
    return p;
}

struct EncodingStep {
    KUnits k = 1;       // gradient in units of k_0
    std::size_t target; // data qubit n (1-based)
};

/// N gradient / c-NOT steps followed by an optional selection gradient.
struct EncodingSchedule {
    std::size_t n_data = 0;
    std::vector<EncodingStep> steps;
    std::optional<KUnits> selection;
    std::int64_t k0_windings = 1; // dense-grid windings per k_0

    void validate() const {
        detail::require(n_data >= 1, "schedule needs at least one data spin");
        detail::require(steps.size() == n_data, "schedule must have exactly one step per data spin");
        for (std::size_t i = 0; i < steps.size(); ++i)
            detail::require(steps[i].target == i + 1, "schedule steps must address data spins 1..N in order");
        detail::require(k0_windings >= 1, "k0 must be a positive number of windings");
    }

    std::vector<KUnits> ks() const {
        std::vector<KUnits> v;
        for (const auto& s : steps) v.push_back(s.k);
        return v;
    }
};

/// k_alpha = sum_n k_n P_n(alpha).
inline KUnits k_label(const Subspace& alpha, const EncodingSchedule& s) {
    detail::require(alpha.width() == s.n_data, "k_label: subspace width does not match schedule");
    KUnits k = 0;
    for (std::size_t n = 1; n <= s.n_data; ++n) k += s.steps[n - 1].k * parity(n, alpha);
    return k;
}

struct LabeledTerm {
    Subspace alpha;
    KUnits winding = 0;         // final, in k_0 units
    double coeff = 1.0;         // weight of sigma_x^a |alpha><alpha|
    double diff_integral = 0.0; // accumulated integral of k^2 dt, units k_0^2 s
};

struct LedgerColumn {
    std::string header;
    std::vector<KUnits> windings; // one per subspace, indexed by alpha
};

struct Ledger {
    EncodingSchedule schedule;
    std::vector<LabeledTerm> terms;
    std::vector<LedgerColumn> history;
};

inline std::string format_k(KUnits v) {
    if (v == 0) return "0";
    if (v == 1) return "k_0";
    if (v == -1) return "-k_0";
    return std::to_string(v) + "k_0";
}

/// Winding recursion: a gradient adds k_n to every subspace; c-NOT_{na}
/// negates the winding of every subspace with b_n = 1.
inline Ledger ledger_run(const EncodingSchedule& s, const std::vector<double>& coeffs = {}) {
    s.validate();
    const std::size_t count = Subspace::count(s.n_data);
    detail::require(coeffs.empty() || coeffs.size() == count, "ledger_run: need one coefficient per subspace");

    Ledger l;
    l.schedule = s;
    std::vector<KUnits> w(count, 0);
    for (std::size_t n = 1; n <= s.n_data; ++n) {
        const KUnits k = s.steps[n - 1].k;
        for (auto& x : w) x += k;
        l.history.push_back({"k_" + std::to_string(n) + " = " + format_k(k), w});
        for (std::size_t a = 0; a < count; ++a)
            if (Subspace(a, s.n_data).bit(n)) w[a] = -w[a];
        l.history.push_back({"CNOT_{" + std::to_string(n) + "a}", w});
    }
    if (s.selection) {
        for (auto& x : w) x += *s.selection;
        l.history.push_back({"k_s = " + format_k(*s.selection), w});
    }
    for (std::size_t a = 0; a < count; ++a)
        l.terms.push_back({Subspace(a, s.n_data), w[a], coeffs.empty() ? 1.0 : coeffs[a], 0.0});
    return l;
}

/// Per-subspace weights of sigma_x^a after the correlation step: 1 + eps_alpha,
/// or 1 when the data spins were crushed beforehand (ancilla-only start).
inline std::vector<double> initial_coefficients(const SpinSystem& system, bool ancilla_only) {
    std::vector<double> c;
    for (std::size_t a = 0; a < Subspace::count(system.n_data()); ++a)
        c.push_back(ancilla_only ? 1.0 : 1.0 + epsilon(Subspace(a, system.n_data()), system));
    return c;
}

/// k_n = k_0 P_n(target), k_s = -N k_0: only `target` ends with winding 0.
inline EncodingSchedule single_pps_schedule(const Subspace& target, std::int64_t k0_windings = 1) {
    EncodingSchedule s;
    s.n_data = target.width();
    for (std::size_t n = 1; n <= s.n_data; ++n) s.steps.push_back({parity(n, target), n});
    s.selection = -static_cast<KUnits>(s.n_data);
    s.k0_windings = k0_windings;
    s.validate();
    return s;
}

/// k_n = (-2)^{n-1} k_0. With `shifted`, a final k_s = 2^N k_0 makes every
/// label a distinct positive odd multiple of k_0.
inline EncodingSchedule multi_schedule(std::size_t n_data, std::int64_t k0_windings = 1, bool shifted = true) {
    detail::require(n_data >= 1 && n_data <= 30, "multi_schedule: N out of range");
    EncodingSchedule s;
    s.n_data = n_data;
    KUnits k = 1;
    for (std::size_t n = 1; n <= n_data; ++n, k *= -2) s.steps.push_back({k, n});
    if (shifted) s.selection = KUnits{1} << n_data;
    s.k0_windings = k0_windings;
    s.validate();
    return s;
}

/// Uniform k_n = k_0 with optional selection, the layout of the single-state table.
inline EncodingSchedule uniform_schedule(std::size_t n_data, std::optional<KUnits> selection, std::int64_t k0_windings = 1) {
    EncodingSchedule s;
    s.n_data = n_data;
    for (std::size_t n = 1; n <= n_data; ++n) s.steps.push_back({1, n});
    s.selection = selection;
    s.k0_windings = k0_windings;
    s.validate();
    return s;
}

inline std::map<KUnits, std::vector<Subspace>> degeneracy_map(const Ledger& l) {
    std::map<KUnits, std::vector<Subspace>> groups;
    for (const auto& t : l.terms) groups[t.winding].push_back(t.alpha);
    return groups;
}

/// Largest |winding| reached anywhere in the history, in k_0 units.
inline KUnits max_abs_winding(const Ledger& l) {
    KUnits m = 0;
    for (const auto& c : l.history)
        for (auto w : c.windings) m = std::max(m, w < 0 ? -w : w);
    return m;
}

// Diffusion bookkeeping -----------------------------------------------------

/// How a gradient pulse contributes to the integral of k^2 dt.
enum class RampModel {
    /// Each encoding step n contributes W_n^2 (Delta_n + delta/3), W_n being
    /// the winding reached by that step: the gradient is integrated as a ramp
    /// from zero. Selection gradient excluded. This is the accounting behind
    /// the closed form N(N+1)(2N+1) k_0^2 (Delta + delta/3) D / 6.
    step_from_zero,
    /// Piecewise-exact: the winding ramps linearly from its value before the
    /// pulse to its value after it, so a pulse contributes
    /// delta (w0^2 + w0 k + k^2/3); gates contribute W^2 Delta_n. The
    /// selection gradient is included.
    exact,
};

/// Integral of k^2(t) dt for every subspace, in k_0^2 s.
inline std::vector<double> prep_k2_integral(const EncodingSchedule& s, const std::vector<double>& gate_durations,
                                            double grad_duration, RampModel model = RampModel::step_from_zero) {
    s.validate();
    detail::require(gate_durations.size() == s.n_data, "prep_attenuation: need one gate duration per step");
    detail::require(grad_duration >= 0.0, "prep_attenuation: gradient duration must be non-negative");
    for (double d : gate_durations) detail::require(d >= 0.0, "prep_attenuation: gate durations must be non-negative");

    const std::size_t count = Subspace::count(s.n_data);
    std::vector<double> out(count, 0.0);
    for (std::size_t a = 0; a < count; ++a) {
        const Subspace alpha(a, s.n_data);
        double w = 0.0;
        double acc = 0.0;
        for (std::size_t n = 1; n <= s.n_data; ++n) {
            const double k = static_cast<double>(s.steps[n - 1].k);
            const double start = w;
            w += k;
            if (model == RampModel::exact)
                acc += grad_duration * (start * start + start * k + k * k / 3.0) + w * w * gate_durations[n - 1];
            else
                acc += w * w * (gate_durations[n - 1] + grad_duration / 3.0);
            if (alpha.bit(n)) w = -w;
        }
        if (model == RampModel::exact && s.selection) {
            const double k = static_cast<double>(*s.selection);
            acc += grad_duration * (w * w + w * k + k * k / 3.0);
        }
        out[a] = acc;
    }
    return out;
}

/// Attenuation factors exp(-D * integral k^2 dt); D is expressed per k_0^2,
/// i.e. the caller passes k_0^2 D_phys in 1/s.
inline std::vector<double> prep_attenuation(const EncodingSchedule& s, double diffusion, const std::vector<double>& gate_durations,
                                            double grad_duration, RampModel model = RampModel::step_from_zero) {
    detail::require(diffusion >= 0.0, "prep_attenuation: D must be non-negative");
    auto integ = prep_k2_integral(s, gate_durations, grad_duration, model);
    for (auto& v : integ) v = std::exp(-diffusion * v);
    return integ;
}

/// Post-encoding decay rate (k_alpha + k_s)^2 D, same units as prep_attenuation.
inline double post_decay_rate(const LabeledTerm& term, double diffusion) {
    detail::require(diffusion >= 0.0, "post_decay_rate: D must be non-negative");
    const double w = static_cast<double>(term.winding);
    return w * w * diffusion;
}

/// Default c-NOT durations 1/(2 J_{a,n}).
inline std::vector<double> default_gate_durations(const SpinSystem& system) {
    std::vector<double> d;
    for (std::size_t n = 1; n <= system.n_data(); ++n) {
        const double j = system.j(system.ancilla(), system.data_spin(n));
        detail::require(j != 0.0, "data spin " + system.spin(system.data_spin(n)).name + " is not coupled to the ancilla");
        d.push_back(1.0 / (2.0 * std::abs(j)));
    }
    return d;
}

// Export --------------------------------------------------------------------

inline nlohmann::json ledger_to_json(const Ledger& l) {
    nlohmann::json j;
    j["units"] = "windings in multiples of k_0";
    j["n_data"] = l.schedule.n_data;
    j["k"] = l.schedule.ks();
    j["selection"] = l.schedule.selection ? nlohmann::json(*l.schedule.selection) : nlohmann::json(nullptr);
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : l.history) cols.push_back(c.header);
    j["columns"] = cols;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t a = 0; a < l.terms.size(); ++a) {
        nlohmann::json r;
        r["subspace"] = l.terms[a].alpha.str();
        std::vector<KUnits> w;
        for (const auto& c : l.history) w.push_back(c.windings[a]);
        r["windings"] = w;
        r["final"] = l.terms[a].winding;
        r["coeff"] = l.terms[a].coeff;
        rows.push_back(r);
    }
    j["rows"] = rows;
    return j;
}

inline std::string ledger_to_text(const Ledger& l) {
    std::vector<std::vector<std::string>> cells;
    std::vector<std::string> header{"Subspace |b_1...b_N>"};
    for (const auto& c : l.history) header.push_back(c.header);
    cells.push_back(header);
    for (std::size_t a = 0; a < l.terms.size(); ++a) {
        std::vector<std::string> row{l.terms[a].alpha.ket()};
        for (const auto& c : l.history) row.push_back(format_k(c.windings[a]));
        cells.push_back(row);
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& r : cells)
        for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    std::ostringstream os;
    os << "# spatial phase of the ancilla, windings in units of k_0\n";
    for (const auto& r : cells) {
        for (std::size_t c = 0; c < r.size(); ++c) {
            os << std::left << std::setw(static_cast<int>(width[c])) << r[c];
            if (c + 1 < r.size()) os << "  ";
        }
        os << '\n';
    }
    return os.str();
}

} // namespace kspp
