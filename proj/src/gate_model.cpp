#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sshchain/error.hpp"
#include "sshchain/microwave.hpp"
#include "sshchain/parallel.hpp"

namespace sshchain {

std::string_view to_string(GateMode mode) noexcept {
    return mode == GateMode::Parametric ? "parametric" : "table";
}

void GateModel::validate() const {
    if (junctions.empty()) throw ValidationError("gate model: no junctions");
    for (std::size_t j = 0; j < junctions.size(); ++j) {
        const auto& jn = junctions[j];
        const std::string tag = "junction " + std::to_string(j) + ": ";
        if (!(std::isfinite(jn.i_star_ua) && jn.i_star_ua > 0.0)) {
            throw ValidationError(tag + "i_star must be finite and > 0");
        }
        if (mode == GateMode::Parametric) {
            if (!(std::isfinite(jn.v_p) && std::isfinite(jn.v_o) && jn.v_p < jn.v_o)) {
                throw ValidationError(tag + "requires finite v_p < v_o");
            }
            if (!(std::isfinite(jn.l_min_nh) && jn.l_min_nh > 0.0)) {
                throw ValidationError(tag + "l_min must be finite and > 0");
            }
            continue;
        }
        if (jn.table.size() < 2) throw ValidationError(tag + "table needs at least 2 samples");
        for (std::size_t k = 0; k < jn.table.size(); ++k) {
            const auto& s = jn.table[k];
            if (!std::isfinite(s.v_gate_v)) throw ValidationError(tag + "non-finite table voltage");
            if (std::isnan(s.l_nh) || s.l_nh <= 0.0) {
                throw ValidationError(tag + "table inductances must be > 0 or inf");
            }
            if (k > 0 && !(s.v_gate_v > jn.table[k - 1].v_gate_v)) {
                throw ValidationError(tag + "table voltages must be strictly increasing");
            }
        }
    }
}

double smoothstep(double u) noexcept {
    const double t = std::clamp(u, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

namespace {

double low_power_inductance(const Junction& jn, GateMode mode, double v_g) {
    if (mode == GateMode::Parametric) {
        if (v_g <= jn.v_p) return kInfinity;
        const double s = smoothstep((v_g - jn.v_p) / (jn.v_o - jn.v_p));
        return s > 0.0 ? jn.l_min_nh / s : kInfinity;
    }
    const auto& t = jn.table;
    if (v_g < t.front().v_gate_v || v_g > t.back().v_gate_v) {
        throw ExtrapolationError("gate table: " + std::to_string(v_g) + " V outside [" +
                                 std::to_string(t.front().v_gate_v) + ", " +
                                 std::to_string(t.back().v_gate_v) + "] V");
    }
    const auto hi = std::lower_bound(t.begin(), t.end(), v_g, [](const GateSample& s, double v) {
        return s.v_gate_v < v;
    });
    if (hi->v_gate_v == v_g) return hi->l_nh;
    const auto lo = hi - 1;
    // Interpolate the inverse inductance, which is proportional to E_J and
    // stays finite at pinch-off.
    const double x = (v_g - lo->v_gate_v) / (hi->v_gate_v - lo->v_gate_v);
    const double inv = (1.0 - x) / lo->l_nh + x / hi->l_nh;
    return inv > 0.0 ? 1.0 / inv : kInfinity;
}

}  // namespace

double nanowire_inductance(const GateModel& model, std::size_t junction, double v_g,
                           double i_s_ua) {
    model.validate();
    if (junction >= model.junctions.size()) {
        throw ValidationError("junction index " + std::to_string(junction) + " out of range");
    }
    if (!std::isfinite(v_g)) throw ValidationError("gate voltage must be finite");
    if (!(std::isfinite(i_s_ua) && i_s_ua >= 0.0)) {
        throw ValidationError("signal current must be finite and >= 0");
    }
    const auto& jn = model.junctions[junction];
    const double ratio = i_s_ua / jn.i_star_ua;
    return low_power_inductance(jn, model.mode, v_g) * (1.0 + ratio * ratio);
}

CircuitSpec apply_gate_setting(const CircuitSpec& circuit, const GateModel& model,
                               std::span<const double> setting, double i_s_ua) {
    circuit.validate();
    if (model.junctions.size() != circuit.n_cells) {
        throw ValidationError("gate model has " + std::to_string(model.junctions.size()) +
                              " junctions, circuit has " + std::to_string(circuit.n_cells) +
                              " cells");
    }
    if (setting.size() != circuit.n_cells) {
        throw ValidationError("gate setting must list one voltage per junction");
    }
    CircuitSpec out = circuit;
    for (std::size_t c = 0; c < circuit.n_cells; ++c) {
        out.lv_nh[c] = nanowire_inductance(model, c, setting[c], i_s_ua);
    }
    return out;
}

std::vector<std::vector<double>> joint_gate_settings(const GateModel& model, std::size_t steps) {
    model.validate();
    if (steps < 2) throw ValidationError("joint gate sweep needs at least 2 steps");
    std::vector<std::vector<double>> out(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        const double u = static_cast<double>(k) / static_cast<double>(steps - 1);
        for (const auto& jn : model.junctions) out[k].push_back(jn.v_p + u * (jn.v_o - jn.v_p));
    }
    return out;
}

std::vector<std::vector<double>> single_gate_settings(const GateModel& model, std::size_t junction,
                                                      std::span<const double> voltages) {
    model.validate();
    if (junction >= model.junctions.size()) {
        throw ValidationError("junction index " + std::to_string(junction) + " out of range");
    }
    std::vector<double> held;
    for (const auto& jn : model.junctions) held.push_back(jn.v_p);
    std::vector<std::vector<double>> out;
    for (double v : voltages) {
        auto setting = held;
        setting[junction] = v;
        out.push_back(std::move(setting));
    }
    return out;
}

std::vector<PowerPoint> power_sweep(const CircuitSpec& circuit, const GateModel& model,
                                    std::span<const double> setting,
                                    std::span<const double> i_s_grid_ua, unsigned threads) {
    if (i_s_grid_ua.empty()) throw ValidationError("power sweep: empty signal-current grid");
    std::vector<PowerPoint> out(i_s_grid_ua.size());
    parallel_for(out.size(), threads, [&](std::size_t i) {
        const CircuitSpec gated = apply_gate_setting(circuit, model, setting, i_s_grid_ua[i]);
        PowerPoint& p = out[i];
        p.i_s_ua = i_s_grid_ua[i];
        p.lv_nh = gated.lv_nh;
        p.point.lv_nh = std::accumulate(gated.lv_nh.begin(), gated.lv_nh.end(), 0.0) /
                        static_cast<double>(gated.lv_nh.size());
        p.point.chain = map_circuit_to_tb(gated);
        p.point.eps_ref_ghz = p.point.chain.mean_eps();
        p.point.spectrum = eigendecompose(build_tb_hamiltonian(p.point.chain));
        if (p.point.spectrum.size() >= 4) {
            p.point.modes = classify_modes(p.point.spectrum, p.point.eps_ref_ghz);
        }
    });
    return out;
}

}  // namespace sshchain
