#pragma once

// Chain data model: tight-binding (GHz) and lumped-element circuit (nH, fF)
// descriptions of a finite SSH chain, and the map between them.
//
// Site j (0-based) belongs to cell j/2; even sites are sublattice A, odd
// sites sublattice B. Intra-cell hop v[c] joins sites 2c and 2c+1, inter-cell
// hop w[c] joins sites 2c+1 and 2c+2.

#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace sshchain {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct ChainSpec {
    std::size_t n_cells = 0;
    std::vector<double> eps_ghz;  // 2N on-site energies
    std::vector<double> v_ghz;    // N intra-cell hops
    std::vector<double> w_ghz;    // N-1 inter-cell hops

    [[nodiscard]] static ChainSpec uniform(std::size_t n_cells, double eps, double v, double w);

    /// Throws ValidationError on wrong lengths, non-finite energies or negative hops.
    void validate() const;

    [[nodiscard]] std::size_t sites() const noexcept { return 2 * n_cells; }
    [[nodiscard]] double mean_eps() const;
};

struct CircuitSpec {
    std::size_t n_cells = 0;
    std::vector<double> c0_ff;  // 2N site capacitances
    std::vector<double> l0_nh;  // 2N site inductances
    std::vector<double> lv_nh;  // N intra-cell coupling inductances, +inf when pinched off
    std::vector<double> cw_ff;  // N+1 coupling capacitances; [0] and [N] face the coupling sites

    [[nodiscard]] static CircuitSpec uniform(std::size_t n_cells, double c0, double l0, double lv,
                                             double cw);

    void validate() const;

    [[nodiscard]] std::size_t sites() const noexcept { return 2 * n_cells; }

    /// Coupling capacitor touched by a site: cw[c] for A of cell c, cw[c+1] for B.
    [[nodiscard]] double site_cw(std::size_t site) const { return cw_ff[(site + 1) / 2]; }
};

/// Per-site circuit quantities behind the tight-binding map.
struct SiteCircuit {
    double l_total_nh;  // L0 parallel Lv
    double c_total_ff;  // C0 + Cw
    double freq_ghz;    // 1 / (2 pi sqrt(L_T C_T))
};

/// Resonance frequency in GHz of an LC pair given in nH and fF.
[[nodiscard]] double lc_frequency_ghz(double l_nh, double c_ff);

[[nodiscard]] std::vector<SiteCircuit> site_circuits(const CircuitSpec& spec);

/// Real-symmetric tri-diagonal Hamiltonian (GHz).
[[nodiscard]] Eigen::MatrixXd build_tb_hamiltonian(const ChainSpec& spec);

/// eps = hbar omega, v = (hbar omega / 2) L_T / L_v, w = (hbar omega / 2) C_w / C_T.
[[nodiscard]] ChainSpec map_circuit_to_tb(const CircuitSpec& spec);

/// Gamma = I_N (x) sigma_z, stored as its diagonal.
struct ChiralOperator {
    Eigen::VectorXd diagonal;

    [[nodiscard]] Eigen::Index dim() const noexcept { return diagonal.size(); }
    [[nodiscard]] Eigen::MatrixXd matrix() const { return diagonal.asDiagonal(); }
};

[[nodiscard]] ChiralOperator chiral_operator(std::size_t n_cells);

/// Largest |entry| of {Gamma, H - eps_ref I}. Zero iff the shifted H is chiral.
[[nodiscard]] double chiral_defect(const Eigen::MatrixXd& h, double eps_ref);

}  // namespace sshchain
