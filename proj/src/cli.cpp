#include "sshchain/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include "sshchain/error.hpp"
#include "sshchain/io.hpp"

namespace sshchain::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ------------------------------------------------------------ config model

struct Grid {
    std::vector<double> values;
};

Grid grid_from_json(const json& j, const std::string& path) {
    Grid g;
    if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) {
            g.values.push_back(io::number_from_json(j[i], path + "." + std::to_string(i)));
        }
    } else {
        const std::vector<const char*> keys{"start", "stop", "step", "points"};
        io::reject_unknown_keys(j, keys, path);
        if (!j.contains("start") || !j.contains("stop")) {
            throw ValidationError(path + ": needs start and stop");
        }
        const double start = io::number_from_json(j["start"], path + ".start");
        const double stop = io::number_from_json(j["stop"], path + ".stop");
        const bool has_step = j.contains("step") && !j["step"].is_null();
        const bool has_points = j.contains("points") && !j["points"].is_null();
        if (has_step == has_points) throw ValidationError(path + ": give exactly one of step, points");
        if (has_points) {
            const auto points = j["points"].get<long long>();
            if (points < 1) throw ValidationError(path + ".points: must be >= 1");
            g.values = linspace(start, stop, static_cast<std::size_t>(points));
        } else {
            const double step = io::number_from_json(j["step"], path + ".step");
            if (!(step != 0.0) || !std::isfinite(step) || (stop - start) / step < 0.0) {
                throw ValidationError(path + ".step: must move from start toward stop");
            }
            const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
            for (std::size_t i = 0; i < count; ++i) g.values.push_back(start + step * static_cast<double>(i));
        }
    }
    if (g.values.empty()) throw ValidationError(path + ": empty grid");
    return g;
}

json grid_json(double start, double stop, const char* kind, double n) {
    json g = {{"start", start}, {"stop", stop}};
    if (std::string_view(kind) == "points") {
        g[kind] = static_cast<long long>(n);
    } else {
        g[kind] = n;
    }
    return g;
}

struct SpectrumSettings {
    std::string model;
    std::optional<double> eps_ref;
};

struct SweepSettings {
    Grid lv;
    std::vector<std::size_t> cells;
};

struct WindingSettings {
    std::string method;
    std::optional<double> v;
    std::optional<double> w;
};

struct S21Settings {
    Grid freqs;
    double z0 = 50.0;
    std::vector<FrequencyWindow> windows;
    double prominence = 0.02;
    std::size_t max_peaks = 10;
};

struct GateSweepSettings {
    std::string kind;
    std::size_t steps = 0;
    std::size_t junction = 0;
    std::optional<Grid> voltages;
    double i_s = 0.0;
    Grid freqs;
};

struct PowerSweepSettings {
    std::optional<std::vector<double>> setting;
    Grid i_s;
};

struct Resolved {
    CircuitSpec circuit;
    ChainSpec chain;
    GateModel gate;
    std::optional<BoxMode> box;
    SpectrumSettings spectrum;
    SweepSettings sweep;
    WindingSettings winding;
    std::string ipr_model;
    DisorderConfig disorder;
    S21Settings s21;
    GateSweepSettings gatesweep;
    PowerSweepSettings powersweep;
    std::optional<FitProblem> fit;
};

void keys(const json& j, std::initializer_list<const char*> allowed, const std::string& path) {
    const std::vector<const char*> k(allowed);
    io::reject_unknown_keys(j, k, path);
}

std::optional<double> optional_number(const json& j, const char* key, const std::string& path) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return io::number_from_json(j[key], path + "." + key);
}

std::string string_field(const json& j, const char* key, const std::string& path,
                         std::initializer_list<const char*> choices) {
    if (!j.contains(key) || !j[key].is_string()) throw ValidationError(path + "." + key + ": expected a string");
    const auto s = j[key].get<std::string>();
    for (const char* c : choices) {
        if (s == c) return s;
    }
    std::string list;
    for (const char* c : choices) list += (list.empty() ? "" : ", ") + std::string(c);
    throw ValidationError(path + "." + key + ": expected one of " + list);
}

std::size_t count_field(const json& j, const char* key, const std::string& path) {
    if (!j.contains(key) || !(j[key].is_number_integer() || j[key].is_number_unsigned()) ||
        j[key].get<long long>() < 0) {
        throw ValidationError(path + "." + key + ": expected a non-negative integer");
    }
    return static_cast<std::size_t>(j[key].get<long long>());
}

Resolved parse_document(const json& doc) {
    keys(doc, {"circuit", "chain", "gate", "box", "spectrum", "sweep", "winding", "ipr", "disorder",
               "s21", "gatesweep", "powersweep", "fit"},
         "config");
    Resolved r;
    r.circuit = io::circuit_from_json(doc.at("circuit"));
    r.chain = io::chain_from_json(doc.at("chain"));
    r.gate = io::gate_model_from_json(doc.at("gate"), r.circuit.n_cells);

    {
        json box = doc.at("box");
        keys(box, {"enabled", "f_box_GHz", "q_box", "coupling"}, "box");
        const bool enabled = box.value("enabled", false);
        box.erase("enabled");
        const BoxMode parsed = io::box_from_json(box);
        if (enabled) r.box = parsed;
    }
    {
        const auto& s = doc.at("spectrum");
        keys(s, {"model", "eps_ref_GHz"}, "spectrum");
        r.spectrum.model = string_field(s, "model", "spectrum", {"chain", "circuit"});
        r.spectrum.eps_ref = optional_number(s, "eps_ref_GHz", "spectrum");
    }
    {
        const auto& s = doc.at("sweep");
        keys(s, {"lv_nH", "cells"}, "sweep");
        r.sweep.lv = grid_from_json(s.at("lv_nH"), "sweep.lv_nH");
        if (s.contains("cells") && !s["cells"].is_null()) {
            for (const auto& c : s["cells"]) {
                if (!c.is_number_integer() || c.get<long long>() < 0) {
                    throw ValidationError("sweep.cells: expected non-negative integers");
                }
                r.sweep.cells.push_back(static_cast<std::size_t>(c.get<long long>()));
            }
        }
    }
    {
        const auto& s = doc.at("winding");
        keys(s, {"method", "v_GHz", "w_GHz"}, "winding");
        r.winding.method = string_field(s, "method", "winding", {"real-space", "k-space", "both"});
        r.winding.v = optional_number(s, "v_GHz", "winding");
        r.winding.w = optional_number(s, "w_GHz", "winding");
    }
    {
        const auto& s = doc.at("ipr");
        keys(s, {"model"}, "ipr");
        r.ipr_model = string_field(s, "model", "ipr", {"chain", "circuit"});
    }
    {
        const auto& s = doc.at("disorder");
        keys(s, {"strength", "targets", "samples", "seed"}, "disorder");
        r.disorder.strength = io::number_from_json(s.at("strength"), "disorder.strength");
        r.disorder.samples = count_field(s, "samples", "disorder");
        if (!s.contains("seed") || !(s["seed"].is_number_unsigned() || s["seed"].is_number_integer()) ||
            (s["seed"].is_number_integer() && s["seed"].get<long long>() < 0)) {
            throw ValidationError("disorder.seed: expected a non-negative integer");
        }
        r.disorder.seed = s["seed"].get<std::uint64_t>();
        r.disorder.targets = {false, false, false};
        for (const auto& t : s.at("targets")) {
            const auto name = t.is_string() ? t.get<std::string>() : std::string();
            if (name == "v") r.disorder.targets.v = true;
            else if (name == "w") r.disorder.targets.w = true;
            else if (name == "eps") r.disorder.targets.eps = true;
            else throw ValidationError("disorder.targets: expected entries from v, w, eps");
        }
        r.disorder.validate();
    }
    {
        const auto& s = doc.at("s21");
        keys(s, {"freqs_GHz", "z0_ohm", "background_windows_GHz", "prominence", "max_peaks"}, "s21");
        r.s21.freqs = grid_from_json(s.at("freqs_GHz"), "s21.freqs_GHz");
        r.s21.z0 = io::number_from_json(s.at("z0_ohm"), "s21.z0_ohm");
        if (s.contains("background_windows_GHz") && !s["background_windows_GHz"].is_null()) {
            for (const auto& w : s["background_windows_GHz"]) {
                if (!w.is_array() || w.size() != 2) {
                    throw ValidationError("s21.background_windows_GHz: expected [lo, hi] pairs");
                }
                r.s21.windows.emplace_back(io::number_from_json(w[0], "s21.background_windows_GHz"),
                                           io::number_from_json(w[1], "s21.background_windows_GHz"));
            }
        }
        r.s21.prominence = io::number_from_json(s.at("prominence"), "s21.prominence");
        r.s21.max_peaks = count_field(s, "max_peaks", "s21");
    }
    {
        const auto& s = doc.at("gatesweep");
        keys(s, {"kind", "steps", "junction", "voltages_V", "i_s_uA", "freqs_GHz"}, "gatesweep");
        r.gatesweep.kind = string_field(s, "kind", "gatesweep", {"joint", "single"});
        r.gatesweep.steps = count_field(s, "steps", "gatesweep");
        r.gatesweep.junction = count_field(s, "junction", "gatesweep");
        if (s.contains("voltages_V") && !s["voltages_V"].is_null()) {
            r.gatesweep.voltages = grid_from_json(s["voltages_V"], "gatesweep.voltages_V");
        }
        r.gatesweep.i_s = io::number_from_json(s.at("i_s_uA"), "gatesweep.i_s_uA");
        r.gatesweep.freqs = grid_from_json(s.at("freqs_GHz"), "gatesweep.freqs_GHz");
    }
    {
        const auto& s = doc.at("powersweep");
        keys(s, {"setting_V", "i_s_uA"}, "powersweep");
        if (s.contains("setting_V") && !s["setting_V"].is_null()) {
            r.powersweep.setting = grid_from_json(s["setting_V"], "powersweep.setting_V").values;
        }
        r.powersweep.i_s = grid_from_json(s.at("i_s_uA"), "powersweep.i_s_uA");
    }
    if (!doc.at("fit").is_null()) r.fit = io::fit_problem_from_json(doc.at("fit"));
    return r;
}

void deep_merge(json& base, const json& patch) {
    if (base.is_object() && patch.is_object()) {
        for (const auto& [key, value] : patch.items()) {
            if (base.contains(key)) {
                deep_merge(base[key], value);
            } else {
                base[key] = value;
            }
        }
        return;
    }
    base = patch;
}

// ---------------------------------------------------------------- outputs

std::string utc_stamp(const char* format) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, format, &tm);
    return buf;
}

class Outputs {
public:
    Outputs(fs::path dir, std::string stem) : dir_(std::move(dir)), stem_(std::move(stem)) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec || !fs::is_directory(dir_)) {
            throw ValidationError("output directory " + dir_.string() + " is not writable");
        }
    }

    template <class Writer>
    void csv(const std::string& suffix, Writer&& writer) {
        const fs::path p = dir_ / (stem_ + suffix + ".csv");
        std::ofstream f(p, std::ios::binary);
        if (!f) throw ValidationError("cannot write " + p.string());
        writer(f);
        if (!f) throw ValidationError("failed writing " + p.string());
        files_.push_back(p);
    }

    void sidecar(const json& meta) {
        const fs::path p = dir_ / (stem_ + ".json");
        std::ofstream f(p, std::ios::binary);
        if (!f) throw ValidationError("cannot write " + p.string());
        f << meta.dump(2) << '\n';
        files_.push_back(p);
    }

    [[nodiscard]] const std::vector<fs::path>& files() const { return files_; }

private:
    fs::path dir_;
    std::string stem_;
    std::vector<fs::path> files_;
};

unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

ChainSpec chain_for(const Resolved& r, const std::string& model) {
    return model == "circuit" ? map_circuit_to_tb(r.circuit) : r.chain;
}

json classification_json(const ModeClassification& m) {
    return {{"edge_indices", {m.edge_indices[0], m.edge_indices[1]}},
            {"fsr_edge_bulk_GHz", m.fsr_edge_bulk},
            {"fsr_edge_bulk_lower_GHz", m.fsr_edge_bulk_lower},
            {"fsr_edge_bulk_upper_GHz", m.fsr_edge_bulk_upper},
            {"fsr_edge_edge_GHz", m.fsr_edge_edge},
            {"phase_tag", std::string(to_string(m.phase))}};
}

// ---------------------------------------------------------------- commands

std::string cmd_spectrum(const Resolved& r, Outputs& o, json& meta, unsigned) {
    const ChainSpec chain = chain_for(r, r.spectrum.model);
    const double eps_ref = r.spectrum.eps_ref.value_or(chain.mean_eps());
    const Eigen::MatrixXd h = build_tb_hamiltonian(chain);
    const Spectrum s = eigendecompose(h);
    ModeClassification m;
    if (s.size() >= 4) m = classify_modes(s, eps_ref);
    o.csv("", [&](std::ostream& f) { io::write_spectrum_csv(f, s, m, eps_ref); });
    meta["result"] = {{"chain", io::to_json(chain)},
                      {"eps_ref_GHz", eps_ref},
                      {"chiral_defect_GHz", chiral_defect(h, eps_ref)}};
    if (s.size() >= 4) meta["result"]["classification"] = classification_json(m);
    std::ostringstream line;
    line << "modes=" << s.size();
    if (s.size() >= 4) {
        line << " phase=" << to_string(m.phase) << " fsr_edge_bulk_GHz=" << io::format_double(m.fsr_edge_bulk)
             << " fsr_edge_edge_GHz=" << io::format_double(m.fsr_edge_edge);
    }
    return line.str();
}

std::string cmd_sweep(const Resolved& r, Outputs& o, json& meta, unsigned threads) {
    const auto sweep = sweep_coupling(r.circuit, r.sweep.lv.values, r.sweep.cells, threads);
    o.csv("", [&](std::ostream& f) { io::write_sweep_modes_csv(f, sweep); });
    o.csv("_summary", [&](std::ostream& f) { io::write_sweep_summary_csv(f, sweep); });
    const auto crossing = fsr_crossing(sweep);
    meta["result"] = {{"points", sweep.size()},
                      {"fsr_crossing_lv_nH", crossing ? json(*crossing) : json(nullptr)}};
    return "points=" + std::to_string(sweep.size()) + " fsr_crossing_lv_nH=" +
           (crossing ? io::format_double(*crossing) : std::string("none"));
}

std::string cmd_winding(const Resolved& r, Outputs& o, json& meta, unsigned) {
    std::vector<WindingResult> results;
    if (r.winding.method != "k-space") {
        results.push_back(winding_number_real_space(build_tb_hamiltonian(r.chain), r.chain.mean_eps()));
    }
    if (r.winding.method != "real-space") {
        auto uniform_value = [](const std::vector<double>& xs, const char* name) {
            if (xs.empty()) throw ValidationError(std::string("winding: chain has no ") + name + " hops");
            for (double x : xs) {
                if (x != xs.front()) {
                    throw ValidationError(std::string("winding: k-space needs uniform ") + name +
                                          "; set winding." + name + "_GHz");
                }
            }
            return xs.front();
        };
        const double v = r.winding.v ? *r.winding.v : uniform_value(r.chain.v_ghz, "v");
        const double w = r.winding.w ? *r.winding.w : uniform_value(r.chain.w_ghz, "w");
        results.push_back(winding_number_k_space(v, w));
        meta["k_space_hops_GHz"] = {{"v", v}, {"w", w}};
    }
    o.csv("", [&](std::ostream& f) {
        f << "method,n_cells,nu,raw\n";
        for (const auto& w : results) {
            f << to_string(w.method) << ',' << w.chain_length << ',' << io::format_double(w.nu) << ','
              << io::format_double(w.raw) << '\n';
        }
    });
    std::string line;
    json rj = json::array();
    for (const auto& w : results) {
        line += (line.empty() ? "" : " ") + std::string("nu=") + io::format_double(w.nu) + " (" +
                std::string(to_string(w.method)) + ")";
        rj.push_back({{"method", std::string(to_string(w.method))}, {"nu", w.nu}, {"raw", w.raw},
                      {"n_cells", w.chain_length}});
    }
    meta["result"] = rj;
    return line;
}

std::string cmd_ipr(const Resolved& r, Outputs& o, json& meta, unsigned) {
    const ChainSpec chain = chain_for(r, r.ipr_model);
    const double eps_ref = chain.mean_eps();
    const Eigen::MatrixXd h = build_tb_hamiltonian(chain);
    const Spectrum s = eigendecompose(h);
    ModeClassification m;
    if (s.size() >= 4) m = classify_modes(s, eps_ref);
    std::vector<double> iprs;
    for (Eigen::Index k = 0; k < s.size(); ++k) iprs.push_back(ipr(s.eigenvectors.col(k)));
    o.csv("", [&](std::ostream& f) {
        f << "mode_index,freq_GHz,label,ipr\n";
        for (Eigen::Index k = 0; k < s.size(); ++k) {
            const auto label = m.labels.empty() ? std::string("bulk")
                                                : std::string(to_string(m.labels[static_cast<std::size_t>(k)]));
            f << k << ',' << io::format_double(s.eigenvalues(k)) << ',' << label << ','
              << io::format_double(iprs[static_cast<std::size_t>(k)]) << '\n';
        }
    });

    json loc = json::object();
    std::string line = "ipr_min=" + io::format_double(*std::min_element(iprs.begin(), iprs.end())) +
                       " ipr_max=" + io::format_double(*std::max_element(iprs.begin(), iprs.end()));
    const auto edges = resolve_edge_states(h, eps_ref);
    loc["edge_ipr"] = {ipr(edges.a_polarized), ipr(edges.b_polarized)};
    for (const auto& [name, state, sub] :
         {std::tuple{"xi_left_cells", &edges.a_polarized, Sublattice::A},
          std::tuple{"xi_right_cells", &edges.b_polarized, Sublattice::B}}) {
        try {
            loc[name] = localization_length_fit(*state, sub);
        } catch (const FitUnsupportedError& e) {
            loc[name] = nullptr;
            loc[std::string(name) + "_note"] = e.what();
        }
    }
    const double v = std::accumulate(chain.v_ghz.begin(), chain.v_ghz.end(), 0.0) /
                     static_cast<double>(chain.v_ghz.size());
    if (!chain.w_ghz.empty()) {
        const double w = std::accumulate(chain.w_ghz.begin(), chain.w_ghz.end(), 0.0) /
                         static_cast<double>(chain.w_ghz.size());
        if (v > 0.0 && v < w) loc["xi_limit_cells"] = 1.0 / std::log(w / v);
    }
    meta["result"] = loc;
    if (loc["xi_left_cells"].is_number()) {
        line += " xi_left_cells=" + io::format_double(loc["xi_left_cells"].get<double>());
    }
    return line;
}

std::string cmd_disorder(const Resolved& r, Outputs& o, json& meta, unsigned threads) {
    const auto e = disorder_ensemble(r.chain, r.disorder, threads);
    o.csv("", [&](std::ostream& f) { io::write_ensemble_csv(f, e); });
    meta["result"] = io::to_json(e);
    return "mean_nu=" + io::format_double(e.mean_nu) + " std_nu=" + io::format_double(e.std_nu) +
           " rejections=" + std::to_string(e.rejections);
}

std::string cmd_s21(const Resolved& r, Outputs& o, json& meta, unsigned threads) {
    S21Trace trace = s21_trace(r.circuit, r.s21.freqs.values, r.s21.z0, r.box, threads);
    if (!r.s21.windows.empty()) trace = background_normalize(trace, r.s21.windows);
    const auto peaks = extract_peaks(trace, r.s21.prominence, r.s21.max_peaks);
    o.csv("", [&](std::ostream& f) { io::write_trace_csv(f, trace); });
    o.csv("_peaks", [&](std::ostream& f) { io::write_peaks_csv(f, peaks); });
    meta["result"] = {{"z0_ohm", trace.z0_ohm},
                      {"box", r.box ? io::to_json(*r.box) : json(nullptr)},
                      {"box_defaults_flagged", r.box.has_value()},
                      {"normalized", !r.s21.windows.empty()},
                      {"power_dBm", nullptr},
                      {"peaks", peaks.size()}};
    return "peaks=" + std::to_string(peaks.size());
}

std::string cmd_gatesweep(const Resolved& r, Outputs& o, json& meta, unsigned threads) {
    std::vector<std::vector<double>> settings;
    if (r.gatesweep.kind == "joint") {
        settings = joint_gate_settings(r.gate, r.gatesweep.steps);
    } else {
        if (!r.gatesweep.voltages) throw ValidationError("gatesweep.voltages_V: required for kind=single");
        settings = single_gate_settings(r.gate, r.gatesweep.junction, r.gatesweep.voltages->values);
    }
    const auto traces = gate_sweep_spectrum(r.circuit, r.gate, settings, r.gatesweep.i_s,
                                            r.gatesweep.freqs.values, r.box, r.s21.z0, threads);
    o.csv("", [&](std::ostream& f) {
        f << "setting_index,freq_GHz,re_s21,im_s21,abs_s21\n";
        for (std::size_t k = 0; k < traces.size(); ++k) {
            const auto& t = traces[k];
            for (std::size_t i = 0; i < t.size(); ++i) {
                f << k << ',' << io::format_double(t.freqs_ghz[i]) << ',' << io::format_double(t.s21[i].real())
                  << ',' << io::format_double(t.s21[i].imag()) << ',' << io::format_double(std::abs(t.s21[i]))
                  << '\n';
            }
        }
    });
    o.csv("_settings", [&](std::ostream& f) {
        const std::size_t n = r.circuit.n_cells;
        f << "setting_index";
        for (std::size_t c = 0; c < n; ++c) f << ",v_gate_" << c << "_V";
        for (std::size_t c = 0; c < n; ++c) f << ",lv_" << c << "_nH";
        f << ",fsr_edge_bulk_GHz,fsr_edge_edge_GHz,phase_tag\n";
        for (std::size_t k = 0; k < settings.size(); ++k) {
            const CircuitSpec gated = apply_gate_setting(r.circuit, r.gate, settings[k], r.gatesweep.i_s);
            const ChainSpec chain = map_circuit_to_tb(gated);
            const Spectrum s = eigendecompose(build_tb_hamiltonian(chain));
            ModeClassification m;
            if (s.size() >= 4) m = classify_modes(s, chain.mean_eps());
            f << k;
            for (double v : settings[k]) f << ',' << io::format_double(v);
            for (double l : gated.lv_nh) f << ',' << io::format_double(l);
            f << ',' << io::format_double(m.fsr_edge_bulk) << ',' << io::format_double(m.fsr_edge_edge) << ','
              << to_string(m.phase) << '\n';
        }
    });
    meta["result"] = {{"settings", settings},
                      {"i_s_uA", r.gatesweep.i_s},
                      {"box", r.box ? io::to_json(*r.box) : json(nullptr)},
                      {"z0_ohm", r.s21.z0}};
    return "settings=" + std::to_string(settings.size());
}

std::string cmd_powersweep(const Resolved& r, Outputs& o, json& meta, unsigned threads) {
    std::vector<double> setting;
    if (r.powersweep.setting) {
        setting = *r.powersweep.setting;
    } else {
        for (const auto& jn : r.gate.junctions) setting.push_back(jn.v_o);
    }
    const auto points = power_sweep(r.circuit, r.gate, setting, r.powersweep.i_s.values, threads);
    o.csv("", [&](std::ostream& f) {
        f << "i_s_uA,mode_index,freq_GHz,label\n";
        for (const auto& p : points) {
            for (Eigen::Index k = 0; k < p.point.spectrum.size(); ++k) {
                const auto label = p.point.modes.labels.empty()
                                       ? std::string("bulk")
                                       : std::string(to_string(p.point.modes.labels[static_cast<std::size_t>(k)]));
                f << io::format_double(p.i_s_ua) << ',' << k << ','
                  << io::format_double(p.point.spectrum.eigenvalues(k)) << ',' << label << '\n';
            }
        }
    });
    o.csv("_summary", [&](std::ostream& f) {
        f << "i_s_uA";
        for (std::size_t c = 0; c < r.circuit.n_cells; ++c) f << ",lv_" << c << "_nH";
        f << ",fsr_edge_bulk_GHz,fsr_edge_edge_GHz,phase_tag\n";
        for (const auto& p : points) {
            f << io::format_double(p.i_s_ua);
            for (double l : p.lv_nh) f << ',' << io::format_double(l);
            f << ',' << io::format_double(p.point.modes.fsr_edge_bulk) << ','
              << io::format_double(p.point.modes.fsr_edge_edge) << ',' << to_string(p.point.modes.phase) << '\n';
        }
    });
    meta["result"] = {{"setting_V", setting}, {"points", points.size()}};
    return "points=" + std::to_string(points.size()) + " phase_first=" +
           std::string(to_string(points.front().point.modes.phase)) + " phase_last=" +
           std::string(to_string(points.back().point.modes.phase));
}

std::string cmd_fit(const Resolved& r, Outputs& o, json& meta, unsigned) {
    if (!r.fit) throw ValidationError("fit: no problem given; set the fit section in --config");
    const FitResult result = fit_circuit_params(*r.fit);
    o.csv("_params", [&](std::ostream& f) { io::write_fit_params_csv(f, result.best); });
    meta["result"] = io::to_json(result);
    return "residual_rms_kHz=" + io::format_double(result.residual_rms_khz) +
           " converged=" + (result.converged ? "true" : "false") +
           " iterations=" + std::to_string(result.iterations);
}

}  // namespace

json default_document() {
    const std::size_t n = 5;
    json circuit = {{"n_cells", n},
                    {"c0_fF", std::vector<double>(2 * n, 212.6)},
                    {"l0_nH", std::vector<double>(2 * n, 2.887)},
                    {"lv_nH", std::vector<std::string>(n, "inf")},
                    {"cw_fF", std::vector<double>(n + 1, 27.9)}};
    json chain = {{"n_cells", n},
                  {"eps_GHz", std::vector<double>(2 * n, 6.04)},
                  {"v_GHz", std::vector<double>(n, 0.01)},
                  {"w_GHz", std::vector<double>(n - 1, 0.35)}};
    json junction = {{"v_p_V", 0.0}, {"v_o_V", 1.0}, {"l_min_nH", 8.0}, {"i_star_uA", 1.0},
                     {"table", nullptr}, {"table_csv", nullptr}};
    return {
        {"circuit", circuit},
        {"chain", chain},
        {"gate", {{"mode", "parametric"}, {"junctions", junction}}},
        {"box", {{"enabled", false}, {"f_box_GHz", 6.0}, {"q_box", 4.0}, {"coupling", 0.2}}},
        {"spectrum", {{"model", "chain"}, {"eps_ref_GHz", nullptr}}},
        {"sweep", {{"lv_nH", grid_json(5.0, 100.0, "step", 0.5)}, {"cells", json::array()}}},
        {"winding", {{"method", "real-space"}, {"v_GHz", nullptr}, {"w_GHz", nullptr}}},
        {"ipr", {{"model", "chain"}}},
        {"disorder", {{"strength", 0.1}, {"targets", {"v", "w"}}, {"samples", 200}, {"seed", 1}}},
        {"s21",
         {{"freqs_GHz", grid_json(5.0, 8.5, "points", 350001)},
          {"z0_ohm", 50.0},
          {"background_windows_GHz", nullptr},
          {"prominence", 0.02},
          {"max_peaks", 10}}},
        {"gatesweep",
         {{"kind", "joint"},
          {"steps", 11},
          {"junction", 0},
          {"voltages_V", nullptr},
          {"i_s_uA", 0.0},
          {"freqs_GHz", grid_json(5.0, 8.5, "points", 35001)}}},
        {"powersweep", {{"setting_V", nullptr}, {"i_s_uA", grid_json(0.0, 2.0, "points", 21)}}},
        {"fit", nullptr},
    };
}

void apply_override(json& doc, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw ValidationError("override '" + std::string(assignment) + "' must look like path=value");
    }
    const std::string path(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    json* node = &doc;
    std::size_t pos = 0;
    while (true) {
        const auto dot = path.find('.', pos);
        const std::string part = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        if (part.empty()) throw ValidationError("override path '" + path + "' has an empty component");
        if (node->is_array()) {
            std::size_t used = 0;
            unsigned long idx = 0;
            try {
                idx = std::stoul(part, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != part.size() || idx >= node->size()) {
                throw ValidationError("override path '" + path + "': bad array index '" + part + "'");
            }
            node = &(*node)[idx];
        } else if (node->is_object()) {
            node = &(*node)[part];
        } else if (node->is_null()) {
            *node = json::object();
            node = &(*node)[part];
        } else {
            throw ValidationError("override path '" + path + "': '" + part + "' is inside a scalar");
        }
        if (dot == std::string::npos) break;
        pos = dot + 1;
    }
    *node = std::move(value);
}

json resolve_document(const RunConfig& config) {
    json doc = default_document();
    if (config.config_path) {
        std::ifstream in(*config.config_path);
        if (!in) throw ValidationError("cannot open config " + config.config_path->string());
        json file = json::parse(in, nullptr, false);
        if (file.is_discarded()) throw ValidationError("config " + config.config_path->string() + " is not valid JSON");
        if (!file.is_object()) throw ValidationError("config must be a JSON object");
        deep_merge(doc, file);
    }
    for (const auto& o : config.overrides) apply_override(doc, o);
    if (config.seed) doc["disorder"]["seed"] = *config.seed;
    (void)parse_document(doc);
    return doc;
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        if (std::find(std::begin(kCommands), std::end(kCommands), config.command) == std::end(kCommands)) {
            throw ValidationError("unknown command '" + config.command + "'");
        }
        const json doc = resolve_document(config);
        const Resolved r = parse_document(doc);
        if (config.dry_run) {
            out << doc.dump(2) << '\n';
            return kOk;
        }

        fs::path dir = ".";
        if (config.output_dir) {
            dir = *config.output_dir;
        } else if (const char* env = std::getenv(std::string(kOutputDirEnv).c_str()); env && *env) {
            dir = env;
        }
        const std::string label = config.label ? *config.label : utc_stamp("%Y%m%dT%H%M%SZ");
        if (label.empty() || label.find_first_of("/\\") != std::string::npos) {
            throw ValidationError("label must be non-empty and contain no path separators");
        }
        Outputs outputs(dir, config.command + "_" + label);
        const unsigned threads = resolve_threads(config.threads);

        json meta = {{"command", config.command},
                     {"label", label},
                     {"created_utc", utc_stamp("%Y-%m-%dT%H:%M:%SZ")},
                     {"threads", threads},
                     {"config", doc}};
        std::string summary;
        const auto& c = config.command;
        if (c == "spectrum") summary = cmd_spectrum(r, outputs, meta, threads);
        else if (c == "sweep") summary = cmd_sweep(r, outputs, meta, threads);
        else if (c == "winding") summary = cmd_winding(r, outputs, meta, threads);
        else if (c == "ipr") summary = cmd_ipr(r, outputs, meta, threads);
        else if (c == "disorder") summary = cmd_disorder(r, outputs, meta, threads);
        else if (c == "s21") summary = cmd_s21(r, outputs, meta, threads);
        else if (c == "gatesweep") summary = cmd_gatesweep(r, outputs, meta, threads);
        else if (c == "powersweep") summary = cmd_powersweep(r, outputs, meta, threads);
        else summary = cmd_fit(r, outputs, meta, threads);

        outputs.sidecar(meta);
        out << c << ": " << summary << '\n';
        return kOk;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kValidationFailure;
    } catch (const json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kValidationFailure;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kValidationFailure;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    }
}

}  // namespace sshchain::cli
