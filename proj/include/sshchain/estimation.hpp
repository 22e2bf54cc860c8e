#pragma once

// Derivative-free fit of circuit parameters to a list of eigenfrequencies.

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sshchain/chain_model.hpp"

namespace sshchain {

struct NelderMeadOptions {
    double tol_f = 1e-7;        // stop when max - min vertex value falls below this
    double tol_x = 1e-9;        // or when every vertex is this close to the best one
    std::size_t max_iter = 5000;
    double initial_step = 0.02; // per-coordinate offset of the initial vertices
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> best_history;  // best vertex value after each iteration
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Simplex minimizer (reflection 1, expansion 2, contraction 0.5, shrink 0.5).
/// Non-finite values during the run count as +inf.
[[nodiscard]] NelderMeadResult nelder_mead(const Objective& objective, const Eigen::VectorXd& start,
                                           const NelderMeadOptions& options = {});

enum class ParamFamily { C0, L0, Cw, Lv };

inline constexpr std::array<ParamFamily, 4> kParamFamilies{ParamFamily::C0, ParamFamily::L0,
                                                           ParamFamily::Cw, ParamFamily::Lv};

[[nodiscard]] std::string_view to_string(ParamFamily family) noexcept;

[[nodiscard]] std::vector<double>& family_values(CircuitSpec& spec, ParamFamily family);
[[nodiscard]] const std::vector<double>& family_values(const CircuitSpec& spec, ParamFamily family);

/// Per-family flags; an empty vector means "all entries free" (finite ones for L_v).
struct FitMask {
    std::vector<bool> c0, l0, cw, lv;

    [[nodiscard]] std::vector<bool>& of(ParamFamily family);
    [[nodiscard]] const std::vector<bool>& of(ParamFamily family) const;
};

/// Per-family (lo, hi); an empty vector means (start / 2, 2 start) per entry.
struct FitBounds {
    std::vector<std::pair<double, double>> c0, l0, cw, lv;

    [[nodiscard]] std::vector<std::pair<double, double>>& of(ParamFamily family);
    [[nodiscard]] const std::vector<std::pair<double, double>>& of(ParamFamily family) const;
};

struct FitProblem {
    std::vector<double> target_freqs_ghz;
    CircuitSpec start;
    FitMask free_mask;
    FitBounds bounds;
    /// A tied family varies through one common log-multiplier on its free entries.
    std::array<bool, 4> tied{false, false, false, false};
    NelderMeadOptions options;
    std::size_t restarts = 4;  // extra simplex runs started from the best point

    void validate() const;
    [[nodiscard]] bool is_tied(ParamFamily family) const {
        return tied[static_cast<std::size_t>(family)];
    }
};

struct FamilySpread {
    ParamFamily family;
    double percent;
};

struct DisorderReport {
    std::vector<FamilySpread> spreads;
    std::vector<std::string> notes;

    [[nodiscard]] const FamilySpread* find(ParamFamily family) const;
};

struct FitResult {
    CircuitSpec best;
    double residual_rms_khz = 0.0;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    bool converged = false;
    bool clamped = false;  // the best point sits on a bound
    std::size_t clamped_evaluations = 0;
    std::size_t parameters = 0;  // optimizer dimension
    std::vector<double> model_freqs_ghz;
    DisorderReport disorder_report;
    std::vector<std::string> diagnostics;
};

/// Sorted tight-binding eigenfrequencies of a circuit.
[[nodiscard]] std::vector<double> model_frequencies(const CircuitSpec& circuit);

/// RMS difference (GHz) between sorted model frequencies and sorted targets.
[[nodiscard]] double frequency_rms(const CircuitSpec& circuit, std::span<const double> targets_ghz);

[[nodiscard]] FitResult fit_circuit_params(const FitProblem& problem);

/// 100 * population standard deviation / mean per family, infinite L_v excluded.
[[nodiscard]] DisorderReport disorder_report(const CircuitSpec& fitted);

}  // namespace sshchain
