// kspp: spatially encoded pseudo-pure states from the command line.
//
//   kspp ledger  --n 3 --schedule uniform --check-paper
//   kspp prepare --molecule alanine --target 000 --demo-sigma-za --out run/
//   kspp encode  --molecule alanine --n 2 --mode echo --out run/

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "kspp/kspp.hpp"

#ifndef KSPP_DATA_DIR
#define KSPP_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

enum Exit { ok = 0, config = 1, validation = 2, numerical = 3 };

struct Common {
    std::string data_dir;
    std::string out;
    std::string format = "text";
};

/// Collects emitted files; writes them with a manifest under --out, or
/// prints the primary one to stdout.
class Output {
public:
    Output(const Common& c, std::string command) : dir_(c.out) { manifest_.command = std::move(command); }

    kspp::RunManifest& manifest() { return manifest_; }

    void add(const std::string& name, std::string body, bool primary = false) {
        if (primary) primary_ = manifest_.files.size();
        manifest_.files.emplace_back(name, std::move(body));
    }

    void flush() {
        if (dir_.empty()) {
            if (primary_) std::cout << manifest_.files[*primary_].second;
            return;
        }
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw kspp::ConfigError("cannot create output directory '" + dir_ + "': " + ec.message());
        for (const auto& [name, body] : manifest_.files) write(name, body);
        write("manifest.json", manifest_.to_json().dump(2) + "\n");
        std::cout << "wrote " << manifest_.files.size() + 1 << " files to " << dir_ << " (hash "
                  << manifest_.output_hash() << ")\n";
    }

private:
    void write(const std::string& name, const std::string& body) const {
        std::ofstream f(fs::path(dir_) / name, std::ios::binary);
        if (!f) throw kspp::ConfigError("cannot write '" + (fs::path(dir_) / name).string() + "'");
        f << body;
    }

    std::string dir_;
    kspp::RunManifest manifest_;
    std::optional<std::size_t> primary_;
};

kspp::MoleculeConfig resolve_molecule(const std::string& arg, const std::string& data_dir) {
    if (fs::exists(arg)) return kspp::load_molecule(arg);
    const fs::path p = fs::path(data_dir) / "molecules" / (arg + ".json");
    if (fs::exists(p)) return kspp::load_molecule(p.string());
    throw kspp::ConfigError("molecule '" + arg + "' not found (looked for a file and " + p.string() + ")");
}

json load_fixture(const std::string& data_dir, const std::string& name) {
    const fs::path p = fs::path(data_dir) / "fixtures" / name;
    std::ifstream in(p);
    if (!in) throw kspp::ConfigError("cannot open fixture " + p.string());
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw kspp::ConfigError("fixture " + p.string() + ": " + e.what());
    }
}

json matrix_json(const kspp::Matrix& m) {
    json re = json::array(), im = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json rr = json::array(), ii = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            rr.push_back(m(r, c).real());
            ii.push_back(m(r, c).imag());
        }
        re.push_back(rr);
        im.push_back(ii);
    }
    return json{{"re", re}, {"im", im}};
}

struct Diffusion {
    std::optional<double> d; // k_0^2 D, 1/s
    double delta = 1.5e-3;
    std::optional<double> big_delta;
    std::string ramp = "step";

    kspp::RampModel model() const {
        if (ramp == "step") return kspp::RampModel::step_from_zero;
        if (ramp == "exact") return kspp::RampModel::exact;
        throw kspp::ValidationError("unknown ramp model '" + ramp + "' (step|exact)");
    }

    json report(const kspp::Ledger& led, const std::vector<double>& gates) const {
        const auto integ = kspp::prep_k2_integral(led.schedule, gates, delta, model());
        json r;
        r["units"] = "D in units of k_0^2 D (1/s); log_attenuation dimensionless; decay rates 1/s";
        r["D"] = *d;
        r["delta_s"] = delta;
        r["gate_durations_s"] = gates;
        r["ramp_model"] = ramp;
        json rows = json::array();
        for (std::size_t a = 0; a < led.terms.size(); ++a) {
            const auto& t = led.terms[a];
            rows.push_back({{"subspace", t.alpha.str()},
                            {"final_winding", t.winding},
                            {"k2_integral", integ[a]},
                            {"log_attenuation", -*d * integ[a]},
                            {"attenuation", std::exp(-*d * integ[a])},
                            {"post_decay_rate", kspp::post_decay_rate(t, *d)}});
        }
        r["subspaces"] = rows;
        return r;
    }
};

void add_diffusion_flags(CLI::App* cmd, Diffusion& d) {
    cmd->add_option("--diffusion-D", d.d, "diffusion constant times k_0^2, 1/s")->check(CLI::NonNegativeNumber);
    cmd->add_option("--delta", d.delta, "gradient pulse duration, s")->check(CLI::NonNegativeNumber);
    cmd->add_option("--Delta", d.big_delta, "delay between gradients, s (default 1/(2J) per gate)")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--ramp", d.ramp, "diffusion integral model: step|exact");
}

// ledger ---------------------------------------------------------------------

struct LedgerArgs {
    std::size_t n = 3;
    std::string schedule = "uniform";
    std::int64_t k0 = 1;
    bool check_paper = false;
    Diffusion diff;
};

kspp::EncodingSchedule schedule_from(const std::string& s, std::size_t n, std::int64_t k0) {
    if (s == "uniform") return kspp::uniform_schedule(n, -static_cast<kspp::KUnits>(n), k0);
    if (s == "alternating") return kspp::multi_schedule(n, k0, false);
    if (s == "multi") return kspp::multi_schedule(n, k0, true);
    if (s.rfind("target=", 0) == 0) {
        const auto t = kspp::Subspace::parse(s.substr(7));
        if (t.width() != n) throw kspp::ValidationError("target '" + t.str() + "' does not have " + std::to_string(n) + " bits");
        return kspp::single_pps_schedule(t, k0);
    }
    throw kspp::ValidationError("unknown schedule '" + s + "' (uniform|alternating|multi|target=<bits>)");
}

/// Compares the ledger with a fixture; returns the list of mismatches.
std::vector<std::string> compare_fixture(const kspp::Ledger& led, const json& fx) {
    std::vector<std::string> bad;
    const auto& cols = fx.at("columns");
    if (cols.size() != led.history.size())
        bad.push_back("column count " + std::to_string(led.history.size()) + " != " + std::to_string(cols.size()));
    for (std::size_t c = 0; c < std::min<std::size_t>(cols.size(), led.history.size()); ++c)
        if (cols[c].get<std::string>() != led.history[c].header)
            bad.push_back("column " + std::to_string(c) + " header '" + led.history[c].header + "' != '" +
                          cols[c].get<std::string>() + "'");
    for (const auto& t : led.terms) {
        const auto key = t.alpha.str();
        if (!fx.at("rows").contains(key)) {
            bad.push_back("row " + key + " missing from fixture");
            continue;
        }
        const auto& row = fx.at("rows").at(key);
        for (std::size_t c = 0; c < led.history.size(); ++c) {
            const auto got = led.history[c].windings[t.alpha.index()];
            if (c >= row.size() || row[c].get<kspp::KUnits>() != got)
                bad.push_back("row " + key + " column " + std::to_string(c) + ": " + kspp::format_k(got));
        }
    }
    return bad;
}

int run_ledger(const Common& c, const LedgerArgs& a) {
    if (a.n < 1 || a.n > 10) throw kspp::ValidationError("--n must be in [1, 10]");
    const auto s = schedule_from(a.schedule, a.n, a.k0);
    const auto led = kspp::ledger_run(s);

    Output out(c, "ledger");
    out.manifest().molecule = "";
    out.manifest().parameters = {{"n", a.n}, {"schedule", a.schedule}, {"k0", a.k0}};

    if (c.format == "json") {
        auto j = kspp::ledger_to_json(led);
        out.add("ledger.json", j.dump(2) + "\n", true);
    } else if (c.format == "csv") {
        std::string csv = "subspace";
        for (const auto& h : led.history) csv += ",\"" + h.header + "\"";
        csv += "\n";
        for (const auto& t : led.terms) {
            csv += t.alpha.str();
            for (const auto& h : led.history) csv += "," + std::to_string(h.windings[t.alpha.index()]);
            csv += "\n";
        }
        out.add("ledger.csv", csv, true);
    } else if (c.format == "text") {
        out.add("ledger.txt", kspp::ledger_to_text(led), true);
    } else {
        throw kspp::ValidationError("unknown format '" + c.format + "' (text|json|csv)");
    }

    if (a.diff.d) {
        const std::vector<double> gates(a.n, a.diff.big_delta.value_or(0.0));
        out.manifest().parameters["diffusion"] = {{"D", *a.diff.d}, {"delta", a.diff.delta}, {"Delta", gates.front()}};
        out.add("attenuation.json", a.diff.report(led, gates).dump(2) + "\n");
    }

    int rc = Exit::ok;
    std::string check;
    if (a.check_paper) {
        std::string fixture;
        if (a.n == 3 && a.schedule == "uniform") fixture = "table1.json";
        else if (a.n == 3 && a.schedule == "alternating") fixture = "table2.json";
        else throw kspp::ValidationError("--check-paper needs --n 3 with --schedule uniform or alternating");
        const auto bad = compare_fixture(led, load_fixture(c.data_dir, fixture));
        for (const auto& b : bad) std::cerr << "mismatch: " << b << '\n';
        check = bad.empty() ? "fixture " + fixture + ": match\n" : "fixture " + fixture + ": MISMATCH\n";
        if (!bad.empty()) rc = Exit::validation;
    }
    out.flush();
    if (c.out.empty() && a.diff.d) std::cout << out.manifest().files.back().second;
    if (!check.empty()) std::cerr << check;
    return rc;
}

// prepare --------------------------------------------------------------------

struct PrepareArgs {
    std::string molecule = "alanine";
    std::string target;
    bool demo = false;
    std::size_t slices = 64;
    std::int64_t k0 = 1;
    bool pulse_level = false;
    bool spectra = true;
    double dwell = 1e-3;
    std::size_t samples = 4096;
    double lb = 1.0;
    double threshold = 0.2;
};

int run_prepare(const Common& c, const PrepareArgs& a) {
    const auto mol = resolve_molecule(a.molecule, c.data_dir);
    const auto sys = mol.to_system();
    const auto target = kspp::Subspace::parse(a.target);
    const kspp::SpatialGrid grid(a.slices);
    kspp::PipelineOptions opt;
    opt.ancilla_only = a.demo;
    opt.fidelity = a.pulse_level ? kspp::Fidelity::pulse : kspp::Fidelity::gate;

    const auto rep = kspp::prepare_single_pps(sys, target, grid, a.k0, opt);

    Output out(c, "prepare");
    out.manifest().molecule = mol.name;
    out.manifest().parameters = {{"target", target.str()}, {"demo_sigma_za", a.demo}, {"slices", a.slices},
                                 {"k0", a.k0},           {"pulse_level", a.pulse_level}};

    json r;
    r["molecule"] = mol.name;
    r["target"] = target.str();
    r["mode"] = a.demo ? "ancilla-only" : "correlated";
    r["fidelity"] = a.pulse_level ? "pulse" : "gate";
    r["slices"] = a.slices;
    r["k0_windings"] = a.k0;
    r["schedule"] = kspp::ledger_to_json(kspp::ledger_run(rep.schedule));
    r["target_weight"] = rep.target_weight;
    r["epsilon"] = rep.quoted_weight;
    r["residual_norm"] = rep.residual_norm;
    r["transverse_residual_norm"] = rep.transverse_residual_norm;
    r["averaged_state"] = matrix_json(rep.averaged_state.op());

    if (a.spectra) {
        const auto steps = kspp::encoding_progress(sys, target, grid, a.k0, opt);
        json counts = json::array();
        for (std::size_t m = 0; m < steps.size(); ++m) {
            kspp::FidOptions f;
            f.samples = a.samples;
            f.dwell = a.dwell;
            f.lb = a.lb;
            const auto sp = kspp::spectrum(kspp::simulate_fid(steps[m], sys, f));
            const auto peaks = kspp::detect_peaks(sp, a.threshold, 2.0 * a.lb);
            json pk = json::array();
            for (const auto& p : peaks) pk.push_back({{"f_hz", p.freq_hz}, {"amplitude", p.amplitude}});
            counts.push_back({{"step", m}, {"peak_count", peaks.size()}, {"peaks", pk}});
            out.add("spectrum_step" + std::to_string(m) + ".csv", kspp::spectrum_csv(sp));
        }
        r["step_spectra"] = counts;
    }
    out.add("report.json", r.dump(2) + "\n", true);
    out.flush();
    return Exit::ok;
}

// encode ---------------------------------------------------------------------

struct EncodeArgs {
    std::string molecule = "alanine";
    std::size_t n = 2;
    std::string mode = "echo";
    bool demo = false;
    std::size_t slices = 64;
    std::int64_t k0 = 1;
    double g_enc = 2.5;
    double g_read = 0.15;
    std::optional<double> dwell;
    std::optional<std::size_t> samples;
    double lb = 1.0;
    Diffusion diff;
};

int run_encode(const Common& c, const EncodeArgs& a) {
    const auto mol = resolve_molecule(a.molecule, c.data_dir);
    const auto full = mol.to_system();
    if (a.n < 1 || a.n > full.n_data())
        throw kspp::ValidationError("--n must be between 1 and " + std::to_string(full.n_data()) + " for " + mol.name);
    const auto sys = full.truncated(a.n);
    const kspp::SpatialGrid grid(a.slices);
    kspp::PipelineOptions opt;
    opt.ancilla_only = a.demo;
    opt.grad_duration_s = a.diff.delta;

    const auto enc = kspp::encode_multi(sys, grid, a.k0, opt);
    const auto led = kspp::ledger_run(kspp::multi_schedule(a.n, a.k0, true));

    Output out(c, "encode");
    out.manifest().molecule = mol.name;
    out.manifest().parameters = {{"n", a.n},       {"mode", a.mode},   {"demo_sigma_za", a.demo}, {"slices", a.slices},
                                 {"k0", a.k0},     {"g_enc", a.g_enc}, {"g_read", a.g_read},      {"delta", a.diff.delta},
                                 {"lb", a.lb}};

    json summary;
    summary["molecule"] = mol.name;
    summary["n_data"] = a.n;
    summary["mode"] = a.mode;
    if (a.mode == "echo") {
        kspp::FidOptions f;
        f.dwell = a.dwell.value_or(1.0 / 600.0);
        f.samples = a.samples.value_or(120);
        f.lb = a.lb;
        f.readout_rate = kspp::readout_rate_for(a.k0, a.g_enc, a.diff.delta, a.g_read);
        const auto trace = kspp::simulate_fid(kspp::monitor(enc, sys), sys, f);
        const double spacing = kspp::echo_time_prediction(2.0, a.g_enc, a.diff.delta, a.g_read);
        const auto echoes = kspp::detect_echoes(trace, 0.5, 0.5 * spacing);
        std::string table = "# echo n, label (k_0), subspace, predicted time (s)\nn,label,subspace,t_pred_s\n";
        json pred = json::array();
        for (std::size_t k = 0; k < kspp::Subspace::count(a.n); ++k) {
            const auto label = static_cast<kspp::KUnits>(2 * k + 1);
            std::string sub;
            for (const auto& t : led.terms)
                if (t.winding == label) sub = t.alpha.str();
            const double tp = kspp::echo_time_prediction(static_cast<double>(label), a.g_enc, a.diff.delta, a.g_read);
            table += std::to_string(k) + "," + std::to_string(label) + "," + sub + "," + kspp::fmt_num(tp) + "\n";
            pred.push_back({{"n", k}, {"label", label}, {"subspace", sub}, {"t_pred_s", tp}});
        }
        json det = json::array();
        for (const auto& e : echoes) det.push_back({{"t_s", e.time_s}, {"amplitude", e.amplitude}});
        summary["predicted_echoes"] = pred;
        summary["detected_echoes"] = det;
        out.add("trace.csv", kspp::trace_csv(trace));
        out.add("echoes.csv", table, true);
    } else if (a.mode == "scan") {
        kspp::ScanOptions so;
        so.dwell = a.dwell.value_or(1.0 / 600.0);
        so.samples_per_window = a.samples.value_or(256);
        so.lb = a.lb;
        const auto scan = kspp::kspace_scan_decode(enc, sys, a.k0, so);
        json windows = json::array();
        for (std::size_t j = 0; j < scan.spectra.size(); ++j) {
            out.add("spectrum_window" + std::to_string(j) + ".csv", kspp::spectrum_csv(scan.spectra[j]));
            windows.push_back({{"window", j},
                               {"label", scan.window_labels[j]},
                               {"subspace", scan.expected[j] ? scan.expected[j]->str() : std::string()},
                               {"energy_fraction", scan.energy[j]}});
        }
        summary["windows"] = windows;
    } else {
        throw kspp::ValidationError("unknown mode '" + a.mode + "' (echo|scan)");
    }

    if (a.diff.d) {
        std::vector<double> gates = a.diff.big_delta ? std::vector<double>(a.n, *a.diff.big_delta)
                                                     : kspp::default_gate_durations(sys);
        summary["diffusion"] = a.diff.report(led, gates);
    }
    out.add("summary.json", summary.dump(2) + "\n", a.mode == "scan");
    out.flush();
    return Exit::ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spatially encoded pseudo-pure states: ledger tables, preparation and encode/decode runs"};
    app.require_subcommand(1);

    Common common;
    if (const char* env = std::getenv("KSPP_DATA_DIR")) common.data_dir = env;
    else common.data_dir = KSPP_DATA_DIR;
    app.add_option("--data-dir", common.data_dir, "directory with molecules/ and fixtures/");

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out", common.out, "write files and manifest.json into this directory");
        cmd->add_option("--format", common.format, "text|json|csv (ledger only)");
    };

    LedgerArgs la;
    auto* led = app.add_subcommand("ledger", "symbolic winding table of an encoding schedule");
    led->add_option("--n", la.n, "number of data spins");
    led->add_option("--schedule", la.schedule, "uniform|alternating|multi|target=<bits>");
    led->add_option("--k0", la.k0, "grid windings per k_0")->check(CLI::PositiveNumber);
    led->add_flag("--check-paper", la.check_paper, "compare with the shipped reference tables (N = 3)");
    add_diffusion_flags(led, la.diff);
    add_common(led);

    PrepareArgs pa;
    auto* prep = app.add_subcommand("prepare", "single pseudo-pure state preparation on the dense ensemble");
    prep->add_option("--molecule", pa.molecule, "config file or shipped molecule name");
    prep->add_option("--target", pa.target, "target state bits b_1..b_N")->required();
    prep->add_flag("--demo-sigma-za", pa.demo, "start from sigma_z of the ancilla alone");
    prep->add_option("--slices", pa.slices, "number of z slices")->check(CLI::PositiveNumber);
    prep->add_option("--k0", pa.k0, "grid windings per k_0")->check(CLI::PositiveNumber);
    prep->add_flag("--pulse-level", pa.pulse_level, "run gates through compiled pulse sequences");
    prep->add_option("--dwell", pa.dwell, "spectrum dwell time, s")->check(CLI::PositiveNumber);
    prep->add_option("--samples", pa.samples, "spectrum samples")->check(CLI::PositiveNumber);
    prep->add_option("--lb", pa.lb, "line broadening, Hz")->check(CLI::NonNegativeNumber);
    prep->add_option("--threshold", pa.threshold, "relative peak threshold");
    add_common(prep);

    EncodeArgs ea;
    auto* enc = app.add_subcommand("encode", "multi-state encoding with echo or k-space scan readout");
    enc->add_option("--molecule", ea.molecule, "config file or shipped molecule name");
    enc->add_option("--n", ea.n, "number of data spins (first N of the molecule)");
    enc->add_option("--mode", ea.mode, "echo|scan");
    enc->add_flag("--demo-sigma-za", ea.demo, "start from sigma_z of the ancilla alone");
    enc->add_option("--slices", ea.slices, "number of z slices")->check(CLI::PositiveNumber);
    enc->add_option("--k0", ea.k0, "grid windings per k_0")->check(CLI::PositiveNumber);
    enc->add_option("--g-enc", ea.g_enc, "encoding gradient, G/cm")->check(CLI::PositiveNumber);
    enc->add_option("--g-read", ea.g_read, "readout gradient, G/cm");
    enc->add_option("--dwell", ea.dwell, "dwell time, s")->check(CLI::PositiveNumber);
    enc->add_option("--samples", ea.samples, "samples (per window in scan mode)")->check(CLI::PositiveNumber);
    enc->add_option("--lb", ea.lb, "line broadening, Hz")->check(CLI::NonNegativeNumber);
    add_diffusion_flags(enc, ea.diff);
    add_common(enc);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? Exit::ok : Exit::config;
    }

    try {
        if (led->parsed()) return run_ledger(common, la);
        if (prep->parsed()) return run_prepare(common, pa);
        if (enc->parsed()) return run_encode(common, ea);
    } catch (const kspp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return Exit::config;
    } catch (const kspp::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return Exit::validation;
    } catch (const kspp::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return Exit::numerical;
    }
    return Exit::ok;
}
