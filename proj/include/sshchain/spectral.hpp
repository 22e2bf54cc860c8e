#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sshchain/chain_model.hpp"

namespace sshchain {

/// Sorted eigenvalues with orthonormal eigenvectors; column k pairs with eigenvalue k.
struct Spectrum {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;

    [[nodiscard]] Eigen::Index size() const noexcept { return eigenvalues.size(); }
};

enum class ModeLabel { BulkLower, Edge, BulkUpper };
enum class PhaseTag { Topological, Normal, Trivial };

[[nodiscard]] std::string_view to_string(ModeLabel label) noexcept;
[[nodiscard]] std::string_view to_string(PhaseTag tag) noexcept;

struct ModeClassification {
    std::vector<ModeLabel> labels;
    std::array<Eigen::Index, 2> edge_indices{};
    double fsr_edge_bulk_lower = 0.0;  // lower edge mode to the bulk mode below it
    double fsr_edge_bulk_upper = 0.0;  // upper edge mode to the bulk mode above it
    double fsr_edge_bulk = 0.0;        // larger of the two sides
    double fsr_edge_edge = 0.0;
    PhaseTag phase = PhaseTag::Normal;
};

/// Dense symmetric eigensolver. Eigenvalues ascending, degenerate values keep
/// solver order, each eigenvector's largest-magnitude component is positive.
[[nodiscard]] Spectrum eigendecompose(const Eigen::MatrixXd& h);

/// topological: edge-edge < 0.2 edge-bulk; trivial: edge-bulk < 0.2 edge-edge.
[[nodiscard]] PhaseTag phase_tag(double fsr_edge_bulk, double fsr_edge_edge) noexcept;

/// Labels the two modes nearest eps_ref as edge modes and measures the gaps.
[[nodiscard]] ModeClassification classify_modes(const Spectrum& spectrum, double eps_ref);

struct SweepPoint {
    double lv_nh = 0.0;
    ChainSpec chain;
    double eps_ref_ghz = 0.0;  // site-mean on-site energy of the mapped chain
    Spectrum spectrum;
    ModeClassification modes;
};

/// Applies each grid value to the cells in `cells` (all cells when empty),
/// remaps and diagonalizes. Output follows grid order.
[[nodiscard]] std::vector<SweepPoint> sweep_coupling(const CircuitSpec& circuit,
                                                     std::span<const double> lv_grid_nh,
                                                     std::span<const std::size_t> cells = {},
                                                     unsigned threads = 1);

struct NormalizedSpectrum {
    double lv_nh = 0.0;
    double scale_ghz = 0.0;
    Eigen::VectorXd values;
};

/// Eigenvalues divided by the site-mean resonator frequency of each point.
[[nodiscard]] std::vector<NormalizedSpectrum> normalized_spectrum(
    std::span<const SweepPoint> sweep);

/// L_v at which fsr_edge_bulk - fsr_edge_edge changes sign between adjacent
/// grid points, linearly interpolated. Empty when there is no sign change.
[[nodiscard]] std::optional<double> fsr_crossing(std::span<const SweepPoint> sweep);

}  // namespace sshchain
