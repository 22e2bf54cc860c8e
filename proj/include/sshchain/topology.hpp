#pragma once

// Topological diagnostics for chiral (sublattice-symmetric) chains: flatband
// projector, real- and k-space winding numbers, inverse participation ratio,
// localization length fits and seeded disorder ensembles.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sshchain/chain_model.hpp"

namespace sshchain {

enum class WindingMethod { RealSpace, KSpace };
enum class Sublattice { A, B };

[[nodiscard]] std::string_view to_string(WindingMethod method) noexcept;

struct WindingResult {
    double nu = 0.0;
    std::size_t chain_length = 0;  // unit cells; 0 for k-space
    WindingMethod method = WindingMethod::RealSpace;
    double raw = 0.0;              // unrounded quadrature value for k-space
};

/// Eigenvalues of H - eps_ref below this magnitude count as exact zeros.
inline constexpr double kZeroEnergyTolerance = 1e-12;

/// Q = P+ - P- of the shifted Hamiltonian. An exact-zero pair is split by
/// chirality: the Gamma = +1 combination goes to P+, the other to P-.
[[nodiscard]] Eigen::MatrixXd flatband(const Eigen::MatrixXd& h, double eps_ref);

/// The two modes closest to eps_ref, rotated within their span into
/// eigenvectors of Gamma. For an SSH chain in the topological phase the
/// A-polarized state sits on the left edge and the B-polarized one on the right.
struct EdgeStates {
    std::array<Eigen::Index, 2> indices{};  // positions in the sorted spectrum
    std::array<double, 2> energies{};       // shifted by eps_ref
    Eigen::VectorXd a_polarized;
    Eigen::VectorXd b_polarized;
    double a_chirality = 0.0;  // <a|Gamma|a>, +1 for a perfectly chiral pair
    double b_chirality = 0.0;
};

[[nodiscard]] EdgeStates resolve_edge_states(const Eigen::MatrixXd& h, double eps_ref);

/// nu = (1/N) Tr{ P_B Q P_A [X, P_A Q P_B] } with X the unit-cell index (1..N).
/// Q is built with the mid-gap pair resolved by chirality; on a finite open
/// chain the fully hybridized Q makes this trace vanish identically.
[[nodiscard]] WindingResult winding_number_real_space(const Eigen::MatrixXd& h, double eps_ref);

/// Winding of h(k) = v + w e^{ik} by trapezoidal quadrature, rounded.
[[nodiscard]] WindingResult winding_number_k_space(double v, double w);

/// sum |psi|^4 / (sum |psi|^2)^2
[[nodiscard]] double ipr(const Eigen::VectorXd& state);

/// Exponential decay length in unit cells from a least-squares fit of
/// log|psi| on one sublattice. Distance is counted from the chain end nearest
/// the amplitude peak; amplitudes below 1e-12 are ignored.
[[nodiscard]] double localization_length_fit(const Eigen::VectorXd& state, Sublattice sublattice);

struct DisorderTargets {
    bool v = true;
    bool w = true;
    bool eps = false;
};

struct DisorderConfig {
    double strength = 0.0;  // delta in x -> x (1 + delta u), u ~ U[-1, 1]
    DisorderTargets targets;
    std::size_t samples = 1;
    std::uint64_t seed = 0;

    void validate() const;
};

inline constexpr std::string_view kEnsembleGenerator = "mt19937_64 seeded by splitmix64(seed, sample)";

struct DisorderSample {
    std::size_t index = 0;
    double nu = 0.0;
    double min_gap_ghz = 0.0;  // separation of the two central eigenvalues
    std::size_t rejections = 0;
};

struct EnsembleResult {
    std::vector<DisorderSample> samples;
    double mean_nu = 0.0;
    double std_nu = 0.0;  // sample standard deviation (n - 1)
    std::size_t rejections = 0;
    std::uint64_t seed = 0;
    std::string generator{kEnsembleGenerator};
};

/// Draws disorder realization `sample` of `base`. Hops that would turn
/// negative are redrawn; the redraw count is added to `rejections`.
[[nodiscard]] ChainSpec perturb_chain(const ChainSpec& base, const DisorderConfig& config,
                                      std::size_t sample, std::size_t& rejections);

[[nodiscard]] EnsembleResult disorder_ensemble(const ChainSpec& base, const DisorderConfig& config,
                                               unsigned threads = 1);

}  // namespace sshchain
