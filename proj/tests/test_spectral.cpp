#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles/jacobi.hpp"
#include "sshchain/error.hpp"
#include "sshchain/spectral.hpp"

using namespace sshchain;

namespace {

Spectrum ssh(std::size_t n, double eps, double v, double w) {
    return eigendecompose(build_tb_hamiltonian(ChainSpec::uniform(n, eps, v, w)));
}

}  // namespace

TEST(Eigendecompose, TwoByTwo) {
    Eigen::Matrix2d h;
    h << 6.5, 0.5, 0.5, 6.5;
    const auto s = eigendecompose(h);
    EXPECT_NEAR(s.eigenvalues(0), 6.0, 1e-14);
    EXPECT_NEAR(s.eigenvalues(1), 7.0, 1e-14);
}

TEST(Eigendecompose, DiagonalGivesPermutedIdentity) {
    const Eigen::Vector3d d(3.0, 1.0, 2.0);
    const auto s = eigendecompose(d.asDiagonal().toDenseMatrix());
    EXPECT_EQ(s.eigenvalues(0), 1.0);
    EXPECT_EQ(s.eigenvalues(1), 2.0);
    EXPECT_EQ(s.eigenvalues(2), 3.0);
    EXPECT_EQ(s.eigenvectors(1, 0), 1.0);
    EXPECT_EQ(s.eigenvectors(2, 1), 1.0);
    EXPECT_EQ(s.eigenvectors(0, 2), 1.0);
}

TEST(Eigendecompose, RejectsAsymmetricInput) {
    Eigen::Matrix2d h;
    h << 1.0, 0.2, 0.1, 1.0;
    EXPECT_THROW((void)eigendecompose(h), ValidationError);
    EXPECT_THROW((void)eigendecompose(Eigen::MatrixXd::Zero(2, 3)), ValidationError);
}

TEST(Eigendecompose, InvariantsOnRandomChains) {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        ChainSpec spec = ChainSpec::uniform(6, 0.0, 0.0, 0.0);
        for (auto& e : spec.eps_ghz) e = 6.0 + 0.2 * u(gen);
        for (auto& v : spec.v_ghz) v = u(gen);
        for (auto& w : spec.w_ghz) w = u(gen);
        const auto h = build_tb_hamiltonian(spec);
        const auto s = eigendecompose(h);
        const Eigen::MatrixXd& v = s.eigenvectors;
        EXPECT_LT((v.transpose() * v - Eigen::MatrixXd::Identity(12, 12)).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_LT((h - v * s.eigenvalues.asDiagonal() * v.transpose()).cwiseAbs().maxCoeff(), 1e-8);
        for (int k = 0; k + 1 < 12; ++k) EXPECT_LE(s.eigenvalues(k), s.eigenvalues(k + 1));
        for (int k = 0; k < 12; ++k) {
            Eigen::Index at = 0;
            v.col(k).cwiseAbs().maxCoeff(&at);
            EXPECT_GT(v(at, k), 0.0);
        }

        oracle::Matrix m(12, std::vector<double>(12));
        for (int i = 0; i < 12; ++i)
            for (int j = 0; j < 12; ++j) m[i][j] = h(i, j);
        const auto jac = oracle::jacobi(m);
        for (int k = 0; k < 12; ++k) EXPECT_NEAR(s.eigenvalues(k), jac.values[static_cast<std::size_t>(k)], 1e-10);
    }
}

TEST(Eigendecompose, TopologicalMidgapPair) {
    const auto s = ssh(5, 6.5, 0.05, 0.5);
    EXPECT_NEAR(s.eigenvalues(4), 6.5 - 4.95000000277912e-06, 1e-12);
    EXPECT_NEAR(s.eigenvalues(5), 6.5 + 4.95000000277912e-06, 1e-12);
    // first-order perturbation: splitting ~ 2 w (v/w)^N
    EXPECT_NEAR(s.eigenvalues(5) - s.eigenvalues(4), 2.0 * 0.5 * std::pow(0.1, 5), 1e-7);
}

TEST(ClassifyModes, DimerLimit) {
    const auto m = classify_modes(ssh(5, 6.5, 0.0, 0.5), 6.5);
    EXPECT_NEAR(m.fsr_edge_edge, 0.0, 1e-12);
    EXPECT_NEAR(m.fsr_edge_bulk, 0.5, 1e-12);
    EXPECT_EQ(m.phase, PhaseTag::Topological);
    EXPECT_EQ(m.edge_indices[0], 4);
    EXPECT_EQ(m.edge_indices[1], 5);
    int edges = 0;
    for (std::size_t k = 0; k < m.labels.size(); ++k) {
        if (m.labels[k] == ModeLabel::Edge) ++edges;
        if (k < 4) {
            EXPECT_EQ(m.labels[k], ModeLabel::BulkLower);
        }
        if (k > 5) {
            EXPECT_EQ(m.labels[k], ModeLabel::BulkUpper);
        }
    }
    EXPECT_EQ(edges, 2);
}

TEST(ClassifyModes, UniformChainIsNormal) {
    const auto m = classify_modes(ssh(5, 6.5, 0.5, 0.5), 6.5);
    // Frozen from an independent dense diagonalization.
    EXPECT_NEAR(m.fsr_edge_edge, 0.28462967654657234, 1e-12);
    EXPECT_NEAR(m.fsr_edge_bulk, 0.27310017472859993, 1e-12);
    const double ratio = m.fsr_edge_edge / m.fsr_edge_bulk;
    EXPECT_GE(ratio, 0.5);
    EXPECT_LE(ratio, 2.0);
    EXPECT_EQ(m.phase, PhaseTag::Normal);
}

TEST(ClassifyModes, StrongIntracellIsTrivial) {
    const auto m = classify_modes(ssh(5, 6.5, 1.0, 0.5), 6.5);
    EXPECT_GT(m.fsr_edge_edge, 2.0 * m.fsr_edge_bulk);
    EXPECT_NEAR(m.fsr_edge_edge / m.fsr_edge_bulk, 5.224, 1e-3);
    EXPECT_EQ(m.phase, PhaseTag::Trivial);
}

TEST(ClassifyModes, ShiftInvariantAndTooSmall) {
    const auto a = classify_modes(ssh(4, 6.5, 0.2, 0.5), 6.5);
    const auto b = classify_modes(ssh(4, 9.25, 0.2, 0.5), 9.25);
    EXPECT_EQ(a.labels, b.labels);
    EXPECT_NEAR(a.fsr_edge_bulk, b.fsr_edge_bulk, 1e-12);
    EXPECT_NEAR(a.fsr_edge_edge, b.fsr_edge_edge, 1e-12);
    EXPECT_THROW((void)classify_modes(ssh(1, 6.5, 0.2, 0.0), 6.5), ValidationError);
}

TEST(PhaseTag, Thresholds) {
    EXPECT_EQ(phase_tag(1.0, 0.19), PhaseTag::Topological);
    EXPECT_EQ(phase_tag(1.0, 0.2), PhaseTag::Normal);
    EXPECT_EQ(phase_tag(0.2, 1.0), PhaseTag::Normal);
    EXPECT_EQ(phase_tag(0.19, 1.0), PhaseTag::Trivial);
}

TEST(SweepCoupling, PinchedOffPointIsTopological) {
    const auto c = CircuitSpec::uniform(5, 212.6, 2.887, 30.0, 27.9);
    const std::vector<double> grid{kInfinity};
    const auto sweep = sweep_coupling(c, grid);
    ASSERT_EQ(sweep.size(), 1u);
    EXPECT_EQ(sweep[0].modes.phase, PhaseTag::Topological);
    EXPECT_NEAR(sweep[0].modes.fsr_edge_edge, 0.0, 1e-12);
}

TEST(SweepCoupling, MonotoneGridTrends) {
    const auto c = CircuitSpec::uniform(5, 212.6, 2.887, kInfinity, 27.9);
    std::vector<double> grid;
    for (double lv = 100.0; lv >= 5.0; lv -= 0.5) grid.push_back(lv);
    const auto sweep = sweep_coupling(c, grid);
    ASSERT_EQ(sweep.size(), grid.size());
    for (std::size_t i = 1; i < sweep.size(); ++i) {
        EXPECT_EQ(sweep[i].lv_nh, grid[i]);
        EXPECT_GT(sweep[i].spectrum.eigenvalues.mean(), sweep[i - 1].spectrum.eigenvalues.mean());
        // continuity on a fine grid
        EXPECT_LT((sweep[i].spectrum.eigenvalues - sweep[i - 1].spectrum.eigenvalues).cwiseAbs().maxCoeff(), 0.3);
    }
    // trend through the transition region (roughly 15-40 nH)
    for (std::size_t i = 1; i < sweep.size(); ++i) {
        if (grid[i] > 40.0 || grid[i] < 15.0) continue;
        EXPECT_GE(sweep[i].modes.fsr_edge_edge, sweep[i - 1].modes.fsr_edge_edge);
        EXPECT_LE(sweep[i].modes.fsr_edge_bulk, sweep[i - 1].modes.fsr_edge_bulk + 1e-12);
    }
}

TEST(SweepCoupling, MaskedCellsAndThreadsAgree) {
    const auto c = CircuitSpec::uniform(5, 212.6, 2.887, kInfinity, 27.9);
    std::vector<double> grid;
    for (double lv = 5.0; lv <= 50.0; lv += 1.0) grid.push_back(lv);
    const std::vector<std::size_t> cells{2};
    const auto one = sweep_coupling(c, grid, cells, 1);
    const auto many = sweep_coupling(c, grid, cells, 4);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        EXPECT_EQ(one[i].chain.v_ghz[0], 0.0);
        EXPECT_GT(one[i].chain.v_ghz[2], 0.0);
        EXPECT_TRUE(one[i].spectrum.eigenvalues == many[i].spectrum.eigenvalues);
    }
    const std::vector<std::size_t> bad{7};
    EXPECT_THROW((void)sweep_coupling(c, grid, bad), ValidationError);
    EXPECT_THROW((void)sweep_coupling(c, std::vector<double>{}), ValidationError);
    EXPECT_THROW((void)sweep_coupling(c, std::vector<double>{-1.0}), ValidationError);
}

TEST(NormalizedSpectrum, SymmetricAboutOne) {
    const auto c = CircuitSpec::uniform(5, 212.6, 2.887, kInfinity, 27.9);
    const std::vector<double> grid{8.0, 22.0, 60.0, kInfinity};
    const auto norm = normalized_spectrum(sweep_coupling(c, grid));
    for (const auto& n : norm) {
        for (int k = 0; k < 10; ++k) EXPECT_NEAR(n.values(k) - 1.0, -(n.values(9 - k) - 1.0), 1e-6);
    }
}

TEST(NormalizedSpectrum, DimerLimitValues) {
    SweepPoint p;
    p.chain = ChainSpec::uniform(5, 6.5, 0.0, 0.5);
    p.eps_ref_ghz = 6.5;
    p.spectrum = eigendecompose(build_tb_hamiltonian(p.chain));
    const auto n = normalized_spectrum(std::span<const SweepPoint>(&p, 1));
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(n[0].values(k), 1.0 - 0.5 / 6.5, 1e-12);
    for (int k = 4; k < 6; ++k) EXPECT_NEAR(n[0].values(k), 1.0, 1e-12);
    for (int k = 6; k < 10; ++k) EXPECT_NEAR(n[0].values(k), 1.0 + 0.5 / 6.5, 1e-12);
}

TEST(NormalizedSpectrum, OnsiteDisorderBoundsAsymmetry) {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ChainSpec chain = ChainSpec::uniform(5, 6.04, 0.1, 0.35);
    for (auto& e : chain.eps_ghz) e *= 1.0 + 0.01 * u(gen);
    SweepPoint p;
    p.chain = chain;
    p.eps_ref_ghz = chain.mean_eps();
    p.spectrum = eigendecompose(build_tb_hamiltonian(chain));
    const auto n = normalized_spectrum(std::span<const SweepPoint>(&p, 1));
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) worst = std::max(worst, std::abs(n[0].values(k) + n[0].values(9 - k) - 2.0));
    EXPECT_GT(worst, 1e-6);
    EXPECT_LT(worst, 2.0 * 0.01);
}

TEST(FsrCrossing, InterpolatesSignChange) {
    const auto c = CircuitSpec::uniform(5, 212.6, 2.887, kInfinity, 27.9);
    std::vector<double> grid;
    for (double lv = 5.0; lv <= 100.0; lv += 0.5) grid.push_back(lv);
    const auto crossing = fsr_crossing(sweep_coupling(c, grid));
    ASSERT_TRUE(crossing.has_value());
    EXPECT_NEAR(*crossing, 22.34, 0.05);
    const std::vector<double> flat{kInfinity};
    EXPECT_FALSE(fsr_crossing(sweep_coupling(c, flat)).has_value());
}
