#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "sshchain/error.hpp"
#include "sshchain/microwave.hpp"
#include "sshchain/parallel.hpp"

namespace sshchain {

using cplx = std::complex<double>;

namespace {

constexpr double kNano = 1e-9;
constexpr double kFemto = 1e-15;

// ABCD matrix times an unbounded scale: every open series element multiplies
// the cascade by its impedance, which is factored out and counted instead.
struct Abcd {
    std::array<cplx, 4> m{1.0, 0.0, 0.0, 1.0};  // A B C D
    int open_order = 0;

    void times(const std::array<cplx, 4>& r) {
        const auto& l = m;
        m = {l[0] * r[0] + l[1] * r[2], l[0] * r[1] + l[1] * r[3],
             l[2] * r[0] + l[3] * r[2], l[2] * r[1] + l[3] * r[3]};
    }
    void series(cplx z) { times({1.0, z, 0.0, 1.0}); }
    void shunt(cplx y) { times({1.0, 0.0, y, 1.0}); }
    void open_series() {
        times({0.0, 1.0, 0.0, 0.0});
        ++open_order;
    }
};

Abcd cascade(const Ladder& ladder, double omega) {
    const cplx j{0.0, 1.0};
    Abcd t;
    for (const auto& e : ladder.elements) {
        switch (e.kind) {
            case ElementKind::SeriesC: t.series(1.0 / (j * omega * e.c_ff * kFemto)); break;
            case ElementKind::SeriesL:
                if (std::isinf(e.l_nh)) {
                    t.open_series();
                } else {
                    t.series(j * omega * e.l_nh * kNano);
                }
                break;
            case ElementKind::ShuntC: t.shunt(j * omega * e.c_ff * kFemto); break;
            case ElementKind::ShuntLC:
                t.shunt(j * omega * e.c_ff * kFemto + 1.0 / (j * omega * e.l_nh * kNano));
                break;
        }
    }
    return t;
}

cplx s21_from_y(cplx y11, cplx y12, cplx y21, cplx y22, double z0) {
    return -2.0 * y21 * z0 / ((1.0 + y11 * z0) * (1.0 + y22 * z0) - y12 * y21 * z0 * z0);
}

cplx s21_at(const Ladder& ladder, double f_ghz, double z0, const std::optional<BoxElements>& box) {
    const double omega = 2.0 * std::numbers::pi * f_ghz * 1e9;
    const Abcd t = cascade(ladder, omega);
    const auto& [a, b, c, d] = t.m;

    if (!box) {
        if (t.open_order > 0) return 0.0;
        return 2.0 / (a + b / z0 + c * z0 + d);
    }

    if (b == 0.0) {
        throw SingularElementError("s21: chain has no series impedance, Y-parameters undefined");
    }
    cplx y11 = d / b;
    cplx y22 = a / b;
    cplx y12 = 0.0;
    cplx y21 = 0.0;
    if (t.open_order == 0) {
        y12 = -(a * d - b * c) / b;
        y21 = -1.0 / b;
    }
    const cplx j{0.0, 1.0};
    const cplx zb = box->r_ohm + j * omega * box->l_nh * kNano +
                    1.0 / (j * omega * box->c_ff * kFemto);
    const cplx yb = 1.0 / zb;
    y11 += yb;
    y22 += yb;
    y12 -= yb;
    y21 -= yb;
    return s21_from_y(y11, y12, y21, y22, z0);
}

void validate_element(const LadderElement& e, std::size_t index) {
    const std::string tag = "ladder element " + std::to_string(index) + ": ";
    const bool needs_c = e.kind != ElementKind::SeriesL;
    const bool needs_l = e.kind == ElementKind::SeriesL || e.kind == ElementKind::ShuntLC;
    if (needs_c && !(std::isfinite(e.c_ff) && e.c_ff > 0.0)) {
        throw ValidationError(tag + "capacitance must be finite and > 0");
    }
    if (needs_l) {
        const bool open_ok = e.kind == ElementKind::SeriesL;
        if (std::isnan(e.l_nh) || e.l_nh <= 0.0 || (!open_ok && std::isinf(e.l_nh))) {
            throw ValidationError(tag + "invalid inductance");
        }
    }
}

}  // namespace

void BoxMode::validate() const {
    if (!(std::isfinite(f_box_ghz) && f_box_ghz > 0.0)) throw ValidationError("box: f_box must be > 0");
    if (!(std::isfinite(q_box) && q_box > 0.0)) throw ValidationError("box: q_box must be > 0");
    if (!(coupling > 0.0 && coupling <= 1.0)) throw ValidationError("box: coupling must be in (0, 1]");
}

BoxElements box_elements(const BoxMode& box, double z0_ohm) {
    box.validate();
    if (!(std::isfinite(z0_ohm) && z0_ohm > 0.0)) throw ValidationError("z0 must be > 0");
    const double omega0 = 2.0 * std::numbers::pi * box.f_box_ghz * 1e9;
    const double r = 2.0 * z0_ohm * (1.0 / box.coupling - 1.0);
    const double l = box.q_box * (r + 2.0 * z0_ohm) / omega0;
    const double c = 1.0 / (omega0 * omega0 * l);
    return {r, l / kNano, c / kFemto};
}

Ladder ladder_from_circuit(const CircuitSpec& circuit) {
    circuit.validate();
    const std::size_t n = circuit.n_cells;
    Ladder out;
    auto& e = out.elements;
    e.push_back({ElementKind::ShuntC, 0.0, circuit.c0_ff.front()});
    e.push_back({ElementKind::SeriesC, 0.0, circuit.cw_ff[0]});
    for (std::size_t c = 0; c < n; ++c) {
        e.push_back({ElementKind::ShuntLC, circuit.l0_nh[2 * c], circuit.c0_ff[2 * c]});
        e.push_back({ElementKind::SeriesL, circuit.lv_nh[c], 0.0});
        e.push_back({ElementKind::ShuntLC, circuit.l0_nh[2 * c + 1], circuit.c0_ff[2 * c + 1]});
        e.push_back({ElementKind::SeriesC, 0.0, circuit.cw_ff[c + 1]});
    }
    e.push_back({ElementKind::ShuntC, 0.0, circuit.c0_ff.back()});
    return out;
}

Ladder reversed(const Ladder& ladder) {
    Ladder out = ladder;
    std::reverse(out.elements.begin(), out.elements.end());
    return out;
}

void validate_frequency_grid(std::span<const double> freqs_ghz) {
    if (freqs_ghz.empty()) throw ValidationError("frequency grid is empty");
    for (std::size_t i = 0; i < freqs_ghz.size(); ++i) {
        const double f = freqs_ghz[i];
        if (!std::isfinite(f)) throw ValidationError("frequency grid has non-finite entries");
        if (f == 0.0) throw SingularElementError("frequency 0 makes reactive elements singular");
        if (f < 0.0) throw ValidationError("frequencies must be positive");
        if (i > 0 && !(f > freqs_ghz[i - 1])) {
            throw ValidationError("frequency grid must be strictly increasing");
        }
    }
}

S21Trace s21_ladder(const Ladder& ladder, std::span<const double> freqs_ghz, double z0_ohm,
                    const std::optional<BoxMode>& box, unsigned threads) {
    validate_frequency_grid(freqs_ghz);
    if (!(std::isfinite(z0_ohm) && z0_ohm > 0.0)) throw ValidationError("z0 must be > 0");
    for (std::size_t i = 0; i < ladder.elements.size(); ++i) validate_element(ladder.elements[i], i);
    std::optional<BoxElements> box_el;
    if (box) box_el = box_elements(*box, z0_ohm);

    S21Trace out;
    out.freqs_ghz.assign(freqs_ghz.begin(), freqs_ghz.end());
    out.s21.resize(freqs_ghz.size());
    out.box = box;
    out.z0_ohm = z0_ohm;

    constexpr std::size_t chunk = 4096;
    const std::size_t chunks = (freqs_ghz.size() + chunk - 1) / chunk;
    parallel_for(chunks, threads, [&](std::size_t k) {
        const std::size_t end = std::min(freqs_ghz.size(), (k + 1) * chunk);
        for (std::size_t i = k * chunk; i < end; ++i) {
            out.s21[i] = s21_at(ladder, freqs_ghz[i], z0_ohm, box_el);
        }
    });
    return out;
}

S21Trace s21_trace(const CircuitSpec& circuit, std::span<const double> freqs_ghz, double z0_ohm,
                   const std::optional<BoxMode>& box, unsigned threads) {
    return s21_ladder(ladder_from_circuit(circuit), freqs_ghz, z0_ohm, box, threads);
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
    if (count == 0) return {};
    if (count == 1) return {lo};
    std::vector<double> out(count);
    const double step = (hi - lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) out[i] = lo + step * static_cast<double>(i);
    out.back() = hi;
    return out;
}

Spectrum circuit_normal_modes(const CircuitSpec& circuit) {
    circuit.validate();
    const auto n = static_cast<Eigen::Index>(circuit.sites());
    Eigen::MatrixXd cap = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd inv_l = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto s = static_cast<std::size_t>(i);
        cap(i, i) = circuit.c0_ff[s] + circuit.site_cw(s);
        inv_l(i, i) = 1.0 / circuit.l0_nh[s];
    }
    for (std::size_t c = 0; c < circuit.n_cells; ++c) {
        const auto a = static_cast<Eigen::Index>(2 * c);
        if (!std::isinf(circuit.lv_nh[c])) {
            const double y = 1.0 / circuit.lv_nh[c];
            inv_l(a, a) += y;
            inv_l(a + 1, a + 1) += y;
            inv_l(a, a + 1) -= y;
            inv_l(a + 1, a) -= y;
        }
        if (c + 1 < circuit.n_cells) {
            cap(a + 1, a + 2) -= circuit.cw_ff[c + 1];
            cap(a + 2, a + 1) -= circuit.cw_ff[c + 1];
        }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> cap_solver(cap);
    const Eigen::MatrixXd c_isqrt = cap_solver.operatorInverseSqrt();
    Eigen::MatrixXd dyn = c_isqrt * inv_l * c_isqrt;
    dyn = 0.5 * (dyn + dyn.transpose()).eval();

    Spectrum out = eigendecompose(dyn);
    // omega^2 in 1/(nH fF) = 1e24 s^-2
    for (Eigen::Index k = 0; k < n; ++k) {
        if (!(out.eigenvalues(k) > 0.0)) throw NumericalError("circuit has a non-positive mode");
        out.eigenvalues(k) = std::sqrt(out.eigenvalues(k)) * 1e3 / (2.0 * std::numbers::pi);
    }
    return out;
}

S21Trace background_normalize(const S21Trace& trace,
                              std::span<const FrequencyWindow> exclusion_windows) {
    if (trace.freqs_ghz.size() != trace.s21.size()) {
        throw ValidationError("background_normalize: frequency and s21 lengths differ");
    }
    auto excluded = [&](double f) {
        return std::any_of(exclusion_windows.begin(), exclusion_windows.end(),
                           [f](const FrequencyWindow& w) { return f >= w.first && f <= w.second; });
    };
    std::vector<double> bf;
    std::vector<double> bv;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        if (excluded(trace.freqs_ghz[i])) continue;
        bf.push_back(trace.freqs_ghz[i]);
        bv.push_back(std::abs(trace.s21[i]));
    }
    if (bf.size() < 2) {
        throw ValidationError("background_normalize: fewer than 2 points outside the windows");
    }

    S21Trace out = trace;
    std::size_t k = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double f = out.freqs_ghz[i];
        double bg = 0.0;
        if (f <= bf.front()) {
            bg = bv.front();
        } else if (f >= bf.back()) {
            bg = bv.back();
        } else {
            while (bf[k + 1] < f) ++k;
            const double x = (f - bf[k]) / (bf[k + 1] - bf[k]);
            bg = (1.0 - x) * bv[k] + x * bv[k + 1];
        }
        if (!(bg > 0.0)) throw ValidationError("background_normalize: background vanishes");
        out.s21[i] /= bg;
    }
    return out;
}

std::vector<double> mode_linewidths(const Spectrum& spectrum, double kappa_port) {
    if (!(std::isfinite(kappa_port) && kappa_port >= 0.0)) {
        throw ValidationError("kappa_port must be finite and >= 0");
    }
    const auto& v = spectrum.eigenvectors;
    std::vector<double> out(static_cast<std::size_t>(v.cols()));
    if (v.rows() == 0) return out;
    const Eigen::Index last = v.rows() - 1;
    for (Eigen::Index k = 0; k < v.cols(); ++k) {
        const double edge = v(0, k) * v(0, k) + v(last, k) * v(last, k);
        out[static_cast<std::size_t>(k)] = kappa_port * edge / v.col(k).squaredNorm();
    }
    return out;
}

std::vector<S21Trace> gate_sweep_spectrum(const CircuitSpec& circuit, const GateModel& model,
                                          std::span<const std::vector<double>> settings,
                                          double i_s_ua, std::span<const double> freqs_ghz,
                                          const std::optional<BoxMode>& box, double z0_ohm,
                                          unsigned threads) {
    std::vector<S21Trace> out(settings.size());
    parallel_for(settings.size(), threads, [&](std::size_t i) {
        const CircuitSpec gated = apply_gate_setting(circuit, model, settings[i], i_s_ua);
        out[i] = s21_trace(gated, freqs_ghz, z0_ohm, box);
        out[i].gate_setting_v = settings[i];
        out[i].i_s_ua = i_s_ua;
    });
    return out;
}

}  // namespace sshchain
