#pragma once

// JSON (de)serialization of the data model and CSV emitters.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sshchain/chain_model.hpp"
#include "sshchain/estimation.hpp"
#include "sshchain/microwave.hpp"
#include "sshchain/spectral.hpp"
#include "sshchain/topology.hpp"

namespace sshchain::io {

using nlohmann::json;

/// 12 significant digits; infinities as "inf" / "-inf", NaN as "nan".
[[nodiscard]] std::string format_double(double value);

/// Number, or one of the strings "inf", "+inf", "-inf".
[[nodiscard]] double number_from_json(const json& j, const std::string& path);
[[nodiscard]] json number_to_json(double value);

/// Throws ValidationError listing every key of `j` not in `allowed`.
void reject_unknown_keys(const json& j, std::span<const char* const> allowed,
                         const std::string& path);

// Array fields accept a single number as shorthand for a uniform array.
[[nodiscard]] ChainSpec chain_from_json(const json& j, const std::string& path = "chain");
[[nodiscard]] json to_json(const ChainSpec& spec);
[[nodiscard]] CircuitSpec circuit_from_json(const json& j, const std::string& path = "circuit");
[[nodiscard]] json to_json(const CircuitSpec& spec);
/// `junctions` may be a single object, replicated `broadcast_count` times.
[[nodiscard]] GateModel gate_model_from_json(const json& j, std::size_t broadcast_count = 0,
                                            const std::string& path = "gate");
[[nodiscard]] json to_json(const GateModel& model);
[[nodiscard]] BoxMode box_from_json(const json& j, const std::string& path = "box");
[[nodiscard]] json to_json(const BoxMode& box);
[[nodiscard]] FitProblem fit_problem_from_json(const json& j, const std::string& path = "fit");
[[nodiscard]] json to_json(const FitResult& result);
[[nodiscard]] json to_json(const EnsembleResult& result);

/// CSV with header `v_gate_V,l_nH`; "inf" allowed for the inductance.
[[nodiscard]] std::vector<GateSample> read_gate_table_csv(std::istream& in);

void write_spectrum_csv(std::ostream& out, const Spectrum& spectrum, const ModeClassification& modes,
                        double eps_ref_ghz);
void write_sweep_modes_csv(std::ostream& out, std::span<const SweepPoint> sweep);
void write_sweep_summary_csv(std::ostream& out, std::span<const SweepPoint> sweep);
void write_ensemble_csv(std::ostream& out, const EnsembleResult& result);
void write_trace_csv(std::ostream& out, const S21Trace& trace);
void write_peaks_csv(std::ostream& out, std::span<const Peak> peaks);
/// Rows `site,i,C0,L0,,` then `coupling,k,,,Cw,` / `coupling,k,,,,Lv` in chain order.
void write_fit_params_csv(std::ostream& out, const CircuitSpec& fitted);

}  // namespace sshchain::io
