#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kspp/readout.hpp"
#include "kspp/spin_system.hpp"

namespace kspp {

/// On-disk description of a spin system. JSON with // comments allowed.
struct MoleculeConfig {
    struct SpinEntry {
        std::string name;
        double gamma_ratio = 1.0;
        double offset_hz = 0.0;
        friend bool operator==(const SpinEntry&, const SpinEntry&) = default;
    };
    struct Coupling {
        std::string a, b;
        double hz = 0.0;
        friend bool operator==(const Coupling&, const Coupling&) = default;
    };

    std::string name;
    std::vector<SpinEntry> spins;
    std::string ancilla;
    std::vector<Coupling> j_hz;

    friend bool operator==(const MoleculeConfig&, const MoleculeConfig&) = default;

    SpinSystem to_system() const {
        std::vector<Spin> s;
        for (const auto& e : spins) s.push_back({e.name, e.gamma_ratio, e.offset_hz});
        auto index = [&](const std::string& n) -> std::size_t {
            for (std::size_t i = 0; i < spins.size(); ++i)
                if (spins[i].name == n) return i;
            throw ConfigError("molecule '" + name + "': unknown spin '" + n + "'");
        };
        const std::size_t anc = index(ancilla);
        Eigen::MatrixXd j = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(spins.size()), static_cast<Eigen::Index>(spins.size()));
        for (const auto& c : j_hz) {
            const auto a = static_cast<Eigen::Index>(index(c.a));
            const auto b = static_cast<Eigen::Index>(index(c.b));
            if (a == b) throw ConfigError("molecule '" + name + "': self-coupling of '" + c.a + "'");
            if (j(a, b) != 0.0) throw ConfigError("molecule '" + name + "': coupling " + c.a + "-" + c.b + " given twice");
            j(a, b) = j(b, a) = c.hz;
        }
        try {
            return SpinSystem(std::move(s), anc, std::move(j));
        } catch (const ValidationError& e) {
            throw ConfigError("molecule '" + name + "': " + e.what());
        }
    }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [k, v] : obj.items())
        if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

template <typename T>
T get_field(const nlohmann::json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(where + ": key '" + key + "' has the wrong type");
    }
}

} // namespace detail

inline MoleculeConfig parse_molecule(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("molecule config is not valid JSON: ") + e.what());
    }
    detail::reject_unknown(doc, {"name", "spins", "ancilla", "j_hz"}, "molecule");
    MoleculeConfig m;
    m.name = doc.contains("name") ? detail::get_field<std::string>(doc, "name", "molecule") : std::string("unnamed");
    const auto spins = detail::get_field<nlohmann::json>(doc, "spins", "molecule");
    if (!spins.is_array()) throw ConfigError("molecule: 'spins' must be a list");
    for (const auto& s : spins) {
        detail::reject_unknown(s, {"name", "gamma_ratio", "offset_hz"}, "spin entry");
        MoleculeConfig::SpinEntry e;
        e.name = detail::get_field<std::string>(s, "name", "spin entry");
        if (s.contains("gamma_ratio")) e.gamma_ratio = detail::get_field<double>(s, "gamma_ratio", "spin '" + e.name + "'");
        if (s.contains("offset_hz")) e.offset_hz = detail::get_field<double>(s, "offset_hz", "spin '" + e.name + "'");
        m.spins.push_back(e);
    }
    m.ancilla = detail::get_field<std::string>(doc, "ancilla", "molecule");
    if (doc.contains("j_hz")) {
        const auto& j = doc.at("j_hz");
        if (!j.is_array()) throw ConfigError("molecule: 'j_hz' must be a list of [name, name, value]");
        for (const auto& c : j) {
            if (!c.is_array() || c.size() != 3 || !c[0].is_string() || !c[1].is_string() || !c[2].is_number())
                throw ConfigError("molecule: every coupling must be [name, name, value]");
            m.j_hz.push_back({c[0].get<std::string>(), c[1].get<std::string>(), c[2].get<double>()});
        }
    }
    m.to_system();
    return m;
}

inline MoleculeConfig load_molecule(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open molecule config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_molecule(ss.str());
}

inline std::string emit_molecule(const MoleculeConfig& m) {
    nlohmann::ordered_json doc;
    doc["name"] = m.name;
    doc["spins"] = nlohmann::ordered_json::array();
    for (const auto& s : m.spins) {
        nlohmann::ordered_json e;
        e["name"] = s.name;
        e["gamma_ratio"] = s.gamma_ratio;
        e["offset_hz"] = s.offset_hz;
        doc["spins"].push_back(e);
    }
    doc["ancilla"] = m.ancilla;
    doc["j_hz"] = nlohmann::ordered_json::array();
    for (const auto& c : m.j_hz) doc["j_hz"].push_back({c.a, c.b, c.hz});
    return doc.dump(2) + "\n";
}

// Output helpers --------------------------------------------------------------

inline std::string fmt_num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline std::string trace_csv(const TimeTrace& t) {
    std::string s = "t,re,im\n";
    for (std::size_t j = 0; j < t.samples.size(); ++j)
        s += fmt_num(t.time(j)) + "," + fmt_num(t.samples[j].real()) + "," + fmt_num(t.samples[j].imag()) + "\n";
    return s;
}

inline std::string spectrum_csv(const SpectrumTrace& sp) {
    std::string s = "f_hz,re,im,abs\n";
    for (std::size_t j = 0; j < sp.amplitudes.size(); ++j)
        s += fmt_num(sp.freq_hz[j]) + "," + fmt_num(sp.amplitudes[j].real()) + "," + fmt_num(sp.amplitudes[j].imag()) +
             "," + fmt_num(std::abs(sp.amplitudes[j])) + "\n";
    return s;
}

/// 64-bit FNV-1a, used to fingerprint emitted files.
inline std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

struct RunManifest {
    std::string command;
    std::string molecule;
    nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
    std::vector<std::pair<std::string, std::string>> files; // name, contents

    std::string output_hash() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (const auto& [name, body] : files) {
            h = fnv1a(name, h);
            h = fnv1a(std::string_view("\0", 1), h);
            h = fnv1a(body, h);
        }
        return hex64(h);
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["command"] = command;
        j["molecule"] = molecule;
        j["parameters"] = parameters;
        nlohmann::ordered_json f = nlohmann::ordered_json::array();
        for (const auto& [name, body] : files) f.push_back({{"file", name}, {"fnv1a64", hex64(fnv1a(body))}});
        j["files"] = f;
        j["output_hash"] = output_hash();
        return j;
    }
};

} // namespace kspp
