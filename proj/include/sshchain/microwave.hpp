#pragma once

// Gate- and power-dependent junction inductance, two-port transmission
// through the circuit ladder, background normalization, Lorentzian peak
// extraction and port-induced mode linewidths.

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "sshchain/chain_model.hpp"
#include "sshchain/spectral.hpp"

namespace sshchain {

// ---------------------------------------------------------------- gate model

enum class GateMode { Parametric, Table };

[[nodiscard]] std::string_view to_string(GateMode mode) noexcept;

struct GateSample {
    double v_gate_v = 0.0;
    double l_nh = 0.0;  // may be +inf (pinched off)
};

struct Junction {
    double v_p = 0.0;         // pinch-off voltage (V)
    double v_o = 1.0;         // open voltage (V)
    double l_min_nh = 10.0;   // inductance at v_o, zero signal current
    double i_star_ua = 1.0;   // signal-current scale of the kinetic nonlinearity (uA)
    std::vector<GateSample> table;  // used in table mode, sorted by voltage
};

struct GateModel {
    GateMode mode = GateMode::Parametric;
    std::vector<Junction> junctions;

    void validate() const;
};

/// 3u^2 - 2u^3 on [0, 1], clamped outside.
[[nodiscard]] double smoothstep(double u) noexcept;

/// L0(v_g) [1 + (i_s / i_star)^2] in nH, +inf when pinched off.
[[nodiscard]] double nanowire_inductance(const GateModel& model, std::size_t junction, double v_g,
                                         double i_s_ua);

/// Copy of `circuit` with lv[c] = nanowire_inductance(model, c, setting[c], i_s).
[[nodiscard]] CircuitSpec apply_gate_setting(const CircuitSpec& circuit, const GateModel& model,
                                             std::span<const double> setting, double i_s_ua);

/// `steps` settings moving every junction together from v_p to v_o.
[[nodiscard]] std::vector<std::vector<double>> joint_gate_settings(const GateModel& model,
                                                                   std::size_t steps);

/// One setting per voltage for `junction`; all other junctions held at v_p.
[[nodiscard]] std::vector<std::vector<double>> single_gate_settings(const GateModel& model,
                                                                    std::size_t junction,
                                                                    std::span<const double> voltages);

struct PowerPoint {
    double i_s_ua = 0.0;
    std::vector<double> lv_nh;
    SweepPoint point;  // mapped chain, spectrum and classification
};

/// Fixed gate setting, signal current swept over `i_s_grid_ua`.
[[nodiscard]] std::vector<PowerPoint> power_sweep(const CircuitSpec& circuit, const GateModel& model,
                                                  std::span<const double> setting,
                                                  std::span<const double> i_s_grid_ua,
                                                  unsigned threads = 1);

// ------------------------------------------------------------------- ladder

/// Series R-L-C path in parallel with the chain, resonant at f_box. `coupling`
/// is its own on-resonance transmission between matched ports; q_box is the
/// loaded quality factor.
struct BoxMode {
    double f_box_ghz = 6.0;
    double q_box = 4.0;
    double coupling = 0.2;

    void validate() const;
};

struct BoxElements {
    double r_ohm;
    double l_nh;
    double c_ff;
};

[[nodiscard]] BoxElements box_elements(const BoxMode& box, double z0_ohm);

enum class ElementKind { SeriesC, SeriesL, ShuntC, ShuntLC };

struct LadderElement {
    ElementKind kind;
    double l_nh = 0.0;  // SeriesL may be +inf (open)
    double c_ff = 0.0;
};

struct Ladder {
    std::vector<LadderElement> elements;  // port 1 to port 2
};

/// Port 1, terminating shunt C, cw[0], then per cell: site LC, L_v, site LC,
/// cw[c+1], then the terminating shunt C and port 2. The terminating sites
/// reuse the capacitance of the chain site next to them.
[[nodiscard]] Ladder ladder_from_circuit(const CircuitSpec& circuit);

[[nodiscard]] Ladder reversed(const Ladder& ladder);

struct S21Trace {
    std::vector<double> freqs_ghz;
    std::vector<std::complex<double>> s21;
    std::optional<double> power_dbm;
    std::vector<double> gate_setting_v;
    double i_s_ua = 0.0;
    std::optional<BoxMode> box;
    double z0_ohm = 50.0;

    [[nodiscard]] std::size_t size() const noexcept { return freqs_ghz.size(); }
};

/// Throws ValidationError unless freqs are finite and strictly increasing,
/// SingularElementError on a zero frequency.
void validate_frequency_grid(std::span<const double> freqs_ghz);

[[nodiscard]] S21Trace s21_ladder(const Ladder& ladder, std::span<const double> freqs_ghz,
                                  double z0_ohm = 50.0, const std::optional<BoxMode>& box = {},
                                  unsigned threads = 1);

[[nodiscard]] S21Trace s21_trace(const CircuitSpec& circuit, std::span<const double> freqs_ghz,
                                 double z0_ohm = 50.0, const std::optional<BoxMode>& box = {},
                                 unsigned threads = 1);

/// Uniform grid of `count` points over [lo, hi].
[[nodiscard]] std::vector<double> linspace(double lo, double hi, std::size_t count);

/// Lossless normal modes of the isolated chain: K x = omega^2 C x with the
/// node capacitance and inductance matrices of the circuit. Eigenvalues in GHz.
[[nodiscard]] Spectrum circuit_normal_modes(const CircuitSpec& circuit);

using FrequencyWindow = std::pair<double, double>;

/// Divides s21 by a background interpolated linearly in |s21| through the
/// points outside every window (held constant beyond the outermost points).
[[nodiscard]] S21Trace background_normalize(const S21Trace& trace,
                                            std::span<const FrequencyWindow> exclusion_windows);

/// kappa_n = kappa_port (|psi_n(first)|^2 + |psi_n(last)|^2)
[[nodiscard]] std::vector<double> mode_linewidths(const Spectrum& spectrum, double kappa_port);

[[nodiscard]] std::vector<S21Trace> gate_sweep_spectrum(
    const CircuitSpec& circuit, const GateModel& model,
    std::span<const std::vector<double>> settings, double i_s_ua,
    std::span<const double> freqs_ghz, const std::optional<BoxMode>& box = {},
    double z0_ohm = 50.0, unsigned threads = 1);

// -------------------------------------------------------------------- peaks

struct Peak {
    double f0_ghz = 0.0;
    double linewidth_ghz = 0.0;  // FWHM of |s21|^2
    double amplitude = 0.0;      // Lorentzian height above the local baseline
    double prominence = 0.0;
    bool fitted = false;         // false when the least-squares refinement was rejected
};

/// Local maxima of |s21|^2 with prominence >= `prominence`, the `max_peaks`
/// most prominent kept, each refined by a Lorentzian least-squares fit over
/// +-5 estimated linewidths (overlapping windows are fitted jointly).
/// Sorted by frequency.
[[nodiscard]] std::vector<Peak> extract_peaks(const S21Trace& trace, double prominence,
                                              std::size_t max_peaks);

}  // namespace sshchain
