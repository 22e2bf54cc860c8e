#include "sshchain/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "sshchain/error.hpp"

namespace sshchain::io {

namespace {

using Keys = std::initializer_list<const char*>;

void check_keys(const json& j, Keys allowed, const std::string& path) {
    const std::vector<const char*> keys(allowed);
    reject_unknown_keys(j, keys, path);
}

void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ValidationError(path + ": expected an object");
}

const json& field(const json& j, const char* key, const std::string& path) {
    if (!j.contains(key) || j.at(key).is_null()) {
        throw ValidationError(path + "." + key + ": missing");
    }
    return j.at(key);
}

std::vector<double> number_array(const json& j, std::size_t expected, const std::string& path) {
    if (j.is_array()) {
        std::vector<double> out;
        for (std::size_t i = 0; i < j.size(); ++i) {
            out.push_back(number_from_json(j[i], path + "." + std::to_string(i)));
        }
        return out;
    }
    return std::vector<double>(expected, number_from_json(j, path));
}

std::size_t count_from_json(const json& j, const std::string& path) {
    if (!j.is_number_integer() && !j.is_number_unsigned()) {
        throw ValidationError(path + ": expected a non-negative integer");
    }
    const auto v = j.get<long long>();
    if (v < 0) throw ValidationError(path + ": expected a non-negative integer");
    return static_cast<std::size_t>(v);
}

json array_json(const std::vector<double>& values) {
    json a = json::array();
    for (double v : values) a.push_back(number_to_json(v));
    return a;
}

void write_row(std::ostream& out, std::initializer_list<std::string> cells) {
    bool first = true;
    for (const auto& c : cells) {
        if (!first) out << ',';
        out << c;
        first = false;
    }
    out << '\n';
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    std::ostringstream s;
    s.imbue(std::locale::classic());
    s << std::setprecision(12) << value;
    return s.str();
}

double number_from_json(const json& j, const std::string& path) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "+inf" || s == "Infinity") return kInfinity;
        if (s == "-inf" || s == "-Infinity") return -kInfinity;
    }
    throw ValidationError(path + ": expected a number or \"inf\"");
}

json number_to_json(double value) {
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    if (std::isnan(value)) return nullptr;
    return value;
}

void reject_unknown_keys(const json& j, std::span<const char* const> allowed,
                         const std::string& path) {
    require_object(j, path);
    std::string unknown;
    for (const auto& [key, value] : j.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&key = key](const char* a) { return key == a; });
        if (!known) unknown += (unknown.empty() ? "" : ", ") + path + "." + key;
    }
    if (!unknown.empty()) throw ValidationError("unknown config keys: " + unknown);
}

ChainSpec chain_from_json(const json& j, const std::string& path) {
    check_keys(j, {"n_cells", "eps_GHz", "v_GHz", "w_GHz"}, path);
    ChainSpec spec;
    spec.n_cells = count_from_json(field(j, "n_cells", path), path + ".n_cells");
    if (spec.n_cells == 0) throw ValidationError(path + ".n_cells: must be >= 1");
    spec.eps_ghz = number_array(field(j, "eps_GHz", path), 2 * spec.n_cells, path + ".eps_GHz");
    spec.v_ghz = number_array(field(j, "v_GHz", path), spec.n_cells, path + ".v_GHz");
    spec.w_ghz = number_array(field(j, "w_GHz", path), spec.n_cells - 1, path + ".w_GHz");
    spec.validate();
    return spec;
}

json to_json(const ChainSpec& spec) {
    return {{"n_cells", spec.n_cells},
            {"eps_GHz", array_json(spec.eps_ghz)},
            {"v_GHz", array_json(spec.v_ghz)},
            {"w_GHz", array_json(spec.w_ghz)}};
}

CircuitSpec circuit_from_json(const json& j, const std::string& path) {
    check_keys(j, {"n_cells", "c0_fF", "l0_nH", "lv_nH", "cw_fF"}, path);
    CircuitSpec spec;
    spec.n_cells = count_from_json(field(j, "n_cells", path), path + ".n_cells");
    if (spec.n_cells == 0) throw ValidationError(path + ".n_cells: must be >= 1");
    spec.c0_ff = number_array(field(j, "c0_fF", path), 2 * spec.n_cells, path + ".c0_fF");
    spec.l0_nh = number_array(field(j, "l0_nH", path), 2 * spec.n_cells, path + ".l0_nH");
    spec.lv_nh = number_array(field(j, "lv_nH", path), spec.n_cells, path + ".lv_nH");
    spec.cw_ff = number_array(field(j, "cw_fF", path), spec.n_cells + 1, path + ".cw_fF");
    spec.validate();
    return spec;
}

json to_json(const CircuitSpec& spec) {
    return {{"n_cells", spec.n_cells},
            {"c0_fF", array_json(spec.c0_ff)},
            {"l0_nH", array_json(spec.l0_nh)},
            {"lv_nH", array_json(spec.lv_nh)},
            {"cw_fF", array_json(spec.cw_ff)}};
}

GateModel gate_model_from_json(const json& j, std::size_t broadcast_count, const std::string& path) {
    check_keys(j, {"mode", "junctions"}, path);
    GateModel model;
    const auto mode = field(j, "mode", path).get<std::string>();
    if (mode == "parametric") {
        model.mode = GateMode::Parametric;
    } else if (mode == "table") {
        model.mode = GateMode::Table;
    } else {
        throw ValidationError(path + ".mode: expected \"parametric\" or \"table\"");
    }

    auto parse_junction = [&](const json& jj, const std::string& jp) {
        check_keys(jj, {"v_p_V", "v_o_V", "l_min_nH", "i_star_uA", "table", "table_csv"}, jp);
        Junction jn;
        if (jj.contains("v_p_V")) jn.v_p = number_from_json(jj["v_p_V"], jp + ".v_p_V");
        if (jj.contains("v_o_V")) jn.v_o = number_from_json(jj["v_o_V"], jp + ".v_o_V");
        if (jj.contains("l_min_nH")) jn.l_min_nh = number_from_json(jj["l_min_nH"], jp + ".l_min_nH");
        if (jj.contains("i_star_uA")) jn.i_star_ua = number_from_json(jj["i_star_uA"], jp + ".i_star_uA");
        if (jj.contains("table") && !jj["table"].is_null()) {
            const auto& t = jj["table"];
            if (!t.is_array()) throw ValidationError(jp + ".table: expected [[v, l], ...]");
            for (std::size_t k = 0; k < t.size(); ++k) {
                const std::string tp = jp + ".table." + std::to_string(k);
                if (!t[k].is_array() || t[k].size() != 2) throw ValidationError(tp + ": expected [v, l]");
                jn.table.push_back({number_from_json(t[k][0], tp), number_from_json(t[k][1], tp)});
            }
        }
        if (jj.contains("table_csv") && !jj["table_csv"].is_null()) {
            const auto file = jj["table_csv"].get<std::string>();
            std::ifstream in(file);
            if (!in) throw ValidationError(jp + ".table_csv: cannot open " + file);
            jn.table = read_gate_table_csv(in);
        }
        return jn;
    };

    const auto& js = field(j, "junctions", path);
    if (js.is_object()) {
        if (broadcast_count == 0) throw ValidationError(path + ".junctions: expected an array");
        const Junction jn = parse_junction(js, path + ".junctions");
        model.junctions.assign(broadcast_count, jn);
    } else if (js.is_array()) {
        for (std::size_t k = 0; k < js.size(); ++k) {
            model.junctions.push_back(parse_junction(js[k], path + ".junctions." + std::to_string(k)));
        }
    } else {
        throw ValidationError(path + ".junctions: expected an array or object");
    }
    model.validate();
    return model;
}

json to_json(const GateModel& model) {
    json js = json::array();
    for (const auto& jn : model.junctions) {
        json t = json::array();
        for (const auto& s : jn.table) t.push_back({s.v_gate_v, number_to_json(s.l_nh)});
        js.push_back({{"v_p_V", jn.v_p},
                      {"v_o_V", jn.v_o},
                      {"l_min_nH", jn.l_min_nh},
                      {"i_star_uA", jn.i_star_ua},
                      {"table", t}});
    }
    return {{"mode", std::string(to_string(model.mode))}, {"junctions", js}};
}

BoxMode box_from_json(const json& j, const std::string& path) {
    check_keys(j, {"f_box_GHz", "q_box", "coupling"}, path);
    BoxMode box;
    if (j.contains("f_box_GHz")) box.f_box_ghz = number_from_json(j["f_box_GHz"], path + ".f_box_GHz");
    if (j.contains("q_box")) box.q_box = number_from_json(j["q_box"], path + ".q_box");
    if (j.contains("coupling")) box.coupling = number_from_json(j["coupling"], path + ".coupling");
    box.validate();
    return box;
}

json to_json(const BoxMode& box) {
    return {{"f_box_GHz", box.f_box_ghz}, {"q_box", box.q_box}, {"coupling", box.coupling}};
}

FitProblem fit_problem_from_json(const json& j, const std::string& path) {
    check_keys(j, {"targets_GHz", "start", "mask", "bounds", "tie", "restarts", "tol_f", "tol_x",
                   "max_iter", "initial_step"},
               path);
    FitProblem p;
    p.start = circuit_from_json(field(j, "start", path), path + ".start");
    const auto& t = field(j, "targets_GHz", path);
    if (!t.is_array()) throw ValidationError(path + ".targets_GHz: expected an array");
    p.target_freqs_ghz = number_array(t, 0, path + ".targets_GHz");

    const std::vector<const char*> family_keys{"c0_fF", "l0_nH", "cw_fF", "lv_nH"};
    if (j.contains("mask") && !j["mask"].is_null()) {
        const auto& m = j["mask"];
        reject_unknown_keys(m, family_keys, path + ".mask");
        for (ParamFamily fam : kParamFamilies) {
            const std::string key(to_string(fam));
            if (!m.contains(key)) continue;
            const auto& mj = m[key];
            const std::size_t n = family_values(p.start, fam).size();
            auto& flags = p.free_mask.of(fam);
            if (mj.is_boolean()) {
                if (!mj.get<bool>()) flags.assign(n, false);
            } else if (mj.is_array()) {
                for (const auto& b : mj) {
                    if (!b.is_boolean()) throw ValidationError(path + ".mask." + key + ": expected booleans");
                    flags.push_back(b.get<bool>());
                }
            } else {
                throw ValidationError(path + ".mask." + key + ": expected a boolean or array");
            }
        }
    }
    if (j.contains("bounds") && !j["bounds"].is_null()) {
        const auto& b = j["bounds"];
        reject_unknown_keys(b, family_keys, path + ".bounds");
        for (ParamFamily fam : kParamFamilies) {
            const std::string key(to_string(fam));
            if (!b.contains(key)) continue;
            const std::string bp = path + ".bounds." + key;
            for (const auto& pair : b[key]) {
                if (!pair.is_array() || pair.size() != 2) throw ValidationError(bp + ": expected [lo, hi] pairs");
                p.bounds.of(fam).emplace_back(number_from_json(pair[0], bp), number_from_json(pair[1], bp));
            }
        }
    }
    if (j.contains("tie") && !j["tie"].is_null()) {
        for (const auto& name : j["tie"]) {
            bool found = false;
            for (ParamFamily fam : kParamFamilies) {
                if (name.is_string() && name.get<std::string>() == to_string(fam)) {
                    p.tied[static_cast<std::size_t>(fam)] = true;
                    found = true;
                }
            }
            if (!found) throw ValidationError(path + ".tie: unknown family " + name.dump());
        }
    }
    if (j.contains("restarts")) p.restarts = count_from_json(j["restarts"], path + ".restarts");
    if (j.contains("tol_f")) p.options.tol_f = number_from_json(j["tol_f"], path + ".tol_f");
    if (j.contains("tol_x")) p.options.tol_x = number_from_json(j["tol_x"], path + ".tol_x");
    if (j.contains("max_iter")) p.options.max_iter = count_from_json(j["max_iter"], path + ".max_iter");
    if (j.contains("initial_step")) {
        p.options.initial_step = number_from_json(j["initial_step"], path + ".initial_step");
    }
    p.validate();
    return p;
}

json to_json(const FitResult& r) {
    json spreads = json::object();
    for (const auto& s : r.disorder_report.spreads) spreads[std::string(to_string(s.family))] = s.percent;
    return {{"best", to_json(r.best)},
            {"residual_rms_kHz", r.residual_rms_khz},
            {"iterations", r.iterations},
            {"evaluations", r.evaluations},
            {"converged", r.converged},
            {"clamped", r.clamped},
            {"clamped_evaluations", r.clamped_evaluations},
            {"parameters", r.parameters},
            {"model_freqs_GHz", r.model_freqs_ghz},
            {"disorder_report_percent", spreads},
            {"disorder_report_notes", r.disorder_report.notes},
            {"diagnostics", r.diagnostics}};
}

json to_json(const EnsembleResult& r) {
    return {{"mean_nu", r.mean_nu},
            {"std_nu", r.std_nu},
            {"samples", r.samples.size()},
            {"rejections", r.rejections},
            {"seed", r.seed},
            {"generator", r.generator}};
}

std::vector<GateSample> read_gate_table_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("gate table: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "v_gate_V,l_nH") throw ValidationError("gate table: header must be v_gate_V,l_nH");
    std::vector<GateSample> out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw ValidationError("gate table: row " + std::to_string(row) + " needs two columns");
        }
        auto parse = [&](const std::string& cell) {
            if (cell == "inf" || cell == "+inf") return kInfinity;
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != cell.size()) {
                throw ValidationError("gate table: row " + std::to_string(row) + ": bad number '" +
                                      cell + "'");
            }
            return v;
        };
        out.push_back({parse(line.substr(0, comma)), parse(line.substr(comma + 1))});
    }
    return out;
}

void write_spectrum_csv(std::ostream& out, const Spectrum& spectrum, const ModeClassification& modes,
                        double eps_ref_ghz) {
    out << "mode_index,freq_GHz,norm_freq,label\n";
    for (Eigen::Index k = 0; k < spectrum.size(); ++k) {
        const auto label = modes.labels.empty() ? std::string("bulk")
                                                : std::string(to_string(modes.labels[static_cast<std::size_t>(k)]));
        write_row(out, {std::to_string(k), fmt(spectrum.eigenvalues(k)),
                        fmt(spectrum.eigenvalues(k) / eps_ref_ghz), label});
    }
}

void write_sweep_modes_csv(std::ostream& out, std::span<const SweepPoint> sweep) {
    out << "lv_nH,mode_index,freq_GHz,norm_freq,label\n";
    for (const auto& p : sweep) {
        for (Eigen::Index k = 0; k < p.spectrum.size(); ++k) {
            const auto label = p.modes.labels.empty()
                                   ? std::string("bulk")
                                   : std::string(to_string(p.modes.labels[static_cast<std::size_t>(k)]));
            write_row(out, {fmt(p.lv_nh), std::to_string(k), fmt(p.spectrum.eigenvalues(k)),
                            fmt(p.spectrum.eigenvalues(k) / p.eps_ref_ghz), label});
        }
    }
}

void write_sweep_summary_csv(std::ostream& out, std::span<const SweepPoint> sweep) {
    out << "lv_nH,eps_ref_GHz,v_GHz,w_GHz,fsr_edge_bulk_GHz,fsr_edge_bulk_lower_GHz,"
           "fsr_edge_bulk_upper_GHz,fsr_edge_edge_GHz,phase_tag\n";
    for (const auto& p : sweep) {
        const double v = p.chain.v_ghz.empty() ? 0.0 : p.chain.v_ghz.front();
        const double w = p.chain.w_ghz.empty() ? 0.0 : p.chain.w_ghz.front();
        write_row(out, {fmt(p.lv_nh), fmt(p.eps_ref_ghz), fmt(v), fmt(w), fmt(p.modes.fsr_edge_bulk),
                        fmt(p.modes.fsr_edge_bulk_lower), fmt(p.modes.fsr_edge_bulk_upper),
                        fmt(p.modes.fsr_edge_edge), std::string(to_string(p.modes.phase))});
    }
}

void write_ensemble_csv(std::ostream& out, const EnsembleResult& result) {
    out << "sample_index,nu,min_gap_GHz,rejections\n";
    for (const auto& s : result.samples) {
        write_row(out, {std::to_string(s.index), fmt(s.nu), fmt(s.min_gap_ghz), std::to_string(s.rejections)});
    }
}

void write_trace_csv(std::ostream& out, const S21Trace& trace) {
    out << "freq_GHz,re_s21,im_s21,abs_s21\n";
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto s = trace.s21[i];
        write_row(out, {fmt(trace.freqs_ghz[i]), fmt(s.real()), fmt(s.imag()), fmt(std::abs(s))});
    }
}

void write_peaks_csv(std::ostream& out, std::span<const Peak> peaks) {
    out << "f0_GHz,linewidth_GHz,amplitude,prominence,fitted\n";
    for (const auto& p : peaks) {
        write_row(out, {fmt(p.f0_ghz), fmt(p.linewidth_ghz), fmt(p.amplitude), fmt(p.prominence),
                        p.fitted ? "1" : "0"});
    }
}

void write_fit_params_csv(std::ostream& out, const CircuitSpec& fitted) {
    out << "kind,index,c0_fF,l0_nH,cw_fF,lv_nH\n";
    for (std::size_t i = 0; i < fitted.sites(); ++i) {
        write_row(out, {"site", std::to_string(i), fmt(fitted.c0_ff[i]), fmt(fitted.l0_nh[i]), "", ""});
    }
    for (std::size_t k = 0; k <= 2 * fitted.n_cells; ++k) {
        if (k % 2 == 0) {
            write_row(out, {"coupling", std::to_string(k), "", "", fmt(fitted.cw_ff[k / 2]), ""});
        } else {
            write_row(out, {"coupling", std::to_string(k), "", "", "", fmt(fitted.lv_nh[k / 2])});
        }
    }
}

}  // namespace sshchain::io
