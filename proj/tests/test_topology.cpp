#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "sshchain/error.hpp"
#include "sshchain/spectral.hpp"
#include "sshchain/topology.hpp"

using namespace sshchain;

namespace {

Eigen::MatrixXd ssh(std::size_t n, double eps, double v, double w) {
    return build_tb_hamiltonian(ChainSpec::uniform(n, eps, v, w));
}

double nu(std::size_t n, double v, double w, double eps = 6.5) {
    return winding_number_real_space(ssh(n, eps, v, w), eps).nu;
}

}  // namespace

TEST(Flatband, SquaresToIdentityAndIsChiralOffDiagonal) {
    for (const double v : {0.05, 0.3, 0.5, 0.9}) {
        const auto h = ssh(8, 6.5, v, 0.5);
        const auto q = flatband(h, 6.5);
        const auto n = q.rows();
        EXPECT_LT((q * q - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_LT((q - q.transpose()).cwiseAbs().maxCoeff(), 1e-12);
        const auto gamma = chiral_operator(8).matrix();
        // Q anticommutes with Gamma: no same-sublattice blocks.
        EXPECT_LT((gamma * q + q * gamma).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(Flatband, ExactZeroPairIsSplitByChirality) {
    const auto h = ssh(4, 6.5, 0.0, 0.5);
    const auto q = flatband(h, 6.5);
    EXPECT_NEAR(q(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(q(7, 7), -1.0, 1e-12);
    EXPECT_LT((q * q - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Flatband, RejectsDegenerateZeroModes) {
    // four uncoupled zero modes
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(6, 6);
    h(0, 1) = h(1, 0) = 1.0;
    EXPECT_THROW((void)flatband(h, 0.0), DegenerateMidgapError);
    // zero pair living on one sublattice cannot be split
    Eigen::MatrixXd same = Eigen::MatrixXd::Zero(4, 4);
    same(1, 3) = same(3, 1) = 1.0;
    EXPECT_THROW((void)flatband(same, 0.0), DegenerateMidgapError);
    EXPECT_THROW((void)flatband(Eigen::MatrixXd::Zero(3, 3), 0.0), ValidationError);
    EXPECT_THROW((void)flatband(Eigen::MatrixXd::Zero(2, 3), 0.0), ValidationError);
}

TEST(EdgeStates, PolarizedOnOppositeEnds) {
    const auto e = resolve_edge_states(ssh(10, 6.5, 0.1, 0.5), 6.5);
    EXPECT_NEAR(e.a_chirality, 1.0, 1e-9);
    EXPECT_NEAR(e.b_chirality, -1.0, 1e-9);
    Eigen::Index at = 0;
    e.a_polarized.cwiseAbs().maxCoeff(&at);
    EXPECT_EQ(at, 0);
    e.b_polarized.cwiseAbs().maxCoeff(&at);
    EXPECT_EQ(at, 19);
}

TEST(WindingRealSpace, FrozenOracleValues) {
    // Independent projector construction in numpy, same conventions.
    EXPECT_NEAR(nu(100, 0.05, 0.5), 0.9897979797979795, 1e-9);
    EXPECT_NEAR(nu(100, 0.25, 0.5), 0.9833333333333343, 1e-9);
    EXPECT_NEAR(nu(100, 1.0, 0.5), 0.009971967046381591, 1e-9);
    EXPECT_NEAR(nu(5, 0.05, 0.5), 0.7959595969451951, 1e-9);
    EXPECT_NEAR(nu(20, 0.25, 0.5), 0.9166666666930194, 1e-9);
    EXPECT_NEAR(nu(200, 0.25, 0.5), 0.991666666666667, 1e-9);
    EXPECT_NEAR(nu(20, 0.45, 0.5), 0.6036680875671732, 1e-9);
    EXPECT_NEAR(nu(40, 0.75, 0.5), 0.04816400567944161, 1e-9);
}

TEST(WindingRealSpace, ApproachesIntegersWithLength) {
    double prev_topo = 0.0;
    double prev_triv = 1.0;
    for (const std::size_t n : {20u, 50u, 100u, 200u}) {
        const double topo = nu(n, 0.25, 0.5);
        const double triv = nu(n, 1.0, 0.5);
        EXPECT_GT(topo, prev_topo);
        EXPECT_LT(triv, prev_triv);
        prev_topo = topo;
        prev_triv = triv;
    }
    EXPECT_NEAR(prev_topo, 1.0, 0.01);
    EXPECT_NEAR(prev_triv, 0.0, 0.01);
}

TEST(WindingRealSpace, IndependentOfOnsiteOffset) {
    EXPECT_NEAR(nu(30, 0.2, 0.5, 0.0), nu(30, 0.2, 0.5, 8.0), 1e-9);
    const auto r = winding_number_real_space(ssh(30, 6.5, 0.2, 0.5), 6.5);
    EXPECT_EQ(r.chain_length, 30u);
    EXPECT_EQ(r.method, WindingMethod::RealSpace);
}

TEST(WindingRealSpace, DimerLimitIsOneMinusInverseLength) {
    // the cell holding the right edge state carries no inter-cell bond
    EXPECT_NEAR(nu(10, 0.0, 0.5), 0.9, 1e-12);
    EXPECT_NEAR(nu(4, 0.0, 0.5), 0.75, 1e-12);
}

TEST(WindingKSpace, RandomPairsMatchPhase) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.01, 2.0);
    int checked = 0;
    while (checked < 100) {
        const double v = u(gen);
        const double w = u(gen);
        if (std::abs(v - w) < 1e-3) continue;
        const auto r = winding_number_k_space(v, w);
        EXPECT_EQ(r.nu, v < w ? 1.0 : 0.0) << v << " " << w;
        EXPECT_NEAR(r.raw, r.nu, 1e-6);
        EXPECT_EQ(r.method, WindingMethod::KSpace);
        ++checked;
    }
}

TEST(WindingKSpace, NearCriticalAndErrors) {
    EXPECT_EQ(winding_number_k_space(0.5, 0.5 * (1.0 + 1e-5)).nu, 1.0);
    EXPECT_EQ(winding_number_k_space(0.5 * (1.0 + 1e-5), 0.5).nu, 0.0);
    EXPECT_EQ(winding_number_k_space(0.0, 0.5).nu, 1.0);
    EXPECT_EQ(winding_number_k_space(0.5, 0.0).nu, 0.0);
    EXPECT_THROW((void)winding_number_k_space(0.5, 0.5), GapClosingError);
    EXPECT_THROW((void)winding_number_k_space(0.5, 0.5 * (1.0 + 1e-7)), GapClosingError);
    EXPECT_THROW((void)winding_number_k_space(0.0, 0.0), ValidationError);
    EXPECT_THROW((void)winding_number_k_space(-0.1, 0.5), ValidationError);
}

TEST(Ipr, BasicStates) {
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(10);
    delta(3) = -2.0;
    EXPECT_DOUBLE_EQ(ipr(delta), 1.0);
    EXPECT_DOUBLE_EQ(ipr(Eigen::VectorXd::Ones(10)), 0.1);
    EXPECT_THROW((void)ipr(Eigen::VectorXd::Zero(4)), ValidationError);
}

TEST(Ipr, EdgeStateFrozen) {
    const auto e = resolve_edge_states(ssh(5, 6.5, 0.05, 0.5), 6.5);
    EXPECT_NEAR(ipr(e.a_polarized), 0.9801980215369686, 1e-9);
    const auto f = resolve_edge_states(ssh(5, 6.5, 0.1, 0.5), 6.5);
    EXPECT_NEAR(ipr(f.a_polarized), 0.9230785116505186, 1e-9);
}

TEST(Ipr, BulkOfUniformChainIsExtended) {
    // open chain, v = w: every mode has IPR 3 / (2 (2N + 1))
    const auto s = eigendecompose(ssh(5, 6.5, 0.5, 0.5));
    for (int k = 0; k < 10; ++k) EXPECT_NEAR(ipr(s.eigenvectors.col(k)), 3.0 / 22.0, 1e-12);
}

TEST(LocalizationFit, SyntheticExponential) {
    Eigen::VectorXd psi = Eigen::VectorXd::Zero(40);
    for (int c = 0; c < 20; ++c) psi(2 * c) = std::exp(-c / 2.0);
    EXPECT_NEAR(localization_length_fit(psi, Sublattice::A), 2.0, 1e-10);
    // mirrored onto B at the right end
    Eigen::VectorXd mirrored = psi.reverse();
    EXPECT_NEAR(localization_length_fit(mirrored, Sublattice::B), 2.0, 1e-10);
}

TEST(LocalizationFit, EdgeStateMatchesAnalyticLength) {
    const auto e = resolve_edge_states(ssh(20, 6.5, 0.1, 0.5), 6.5);
    const double expected = 1.0 / std::log(5.0);
    EXPECT_NEAR(localization_length_fit(e.a_polarized, Sublattice::A), expected, 0.1 * expected);
    EXPECT_NEAR(localization_length_fit(e.a_polarized, Sublattice::A), 0.6213344852306404, 1e-6);
}

TEST(LocalizationFit, Unsupported) {
    Eigen::VectorXd flat = Eigen::VectorXd::Ones(20);
    EXPECT_THROW((void)localization_length_fit(flat, Sublattice::A), FitUnsupportedError);
    Eigen::VectorXd sparse = Eigen::VectorXd::Zero(20);
    sparse(0) = 1.0;
    sparse(2) = 0.5;
    EXPECT_THROW((void)localization_length_fit(sparse, Sublattice::A), FitUnsupportedError);
    EXPECT_THROW((void)localization_length_fit(Eigen::VectorXd::Ones(5), Sublattice::A), ValidationError);
}

TEST(Disorder, ZeroStrengthReproducesBase) {
    const auto base = ChainSpec::uniform(6, 6.04, 0.1, 0.35);
    DisorderConfig cfg;
    cfg.strength = 0.0;
    cfg.targets.eps = true;
    std::size_t rejections = 0;
    const auto c = perturb_chain(base, cfg, 3, rejections);
    EXPECT_EQ(c.eps_ghz, base.eps_ghz);
    EXPECT_EQ(c.v_ghz, base.v_ghz);
    EXPECT_EQ(c.w_ghz, base.w_ghz);
    EXPECT_EQ(rejections, 0u);
}

TEST(Disorder, TargetsAndBounds) {
    const auto base = ChainSpec::uniform(6, 6.04, 0.1, 0.35);
    DisorderConfig cfg;
    cfg.strength = 0.2;
    cfg.targets = {true, false, false};
    std::size_t rejections = 0;
    const auto c = perturb_chain(base, cfg, 0, rejections);
    EXPECT_EQ(c.w_ghz, base.w_ghz);
    EXPECT_EQ(c.eps_ghz, base.eps_ghz);
    bool changed = false;
    for (std::size_t i = 0; i < c.v_ghz.size(); ++i) {
        EXPECT_LE(std::abs(c.v_ghz[i] / base.v_ghz[i] - 1.0), 0.2);
        changed = changed || c.v_ghz[i] != base.v_ghz[i];
    }
    EXPECT_TRUE(changed);
}

TEST(Disorder, StrongDisorderRedrawsNegativeHops) {
    const auto base = ChainSpec::uniform(6, 6.04, 0.1, 0.35);
    DisorderConfig cfg;
    cfg.strength = 1.5;
    cfg.samples = 20;
    cfg.seed = 9;
    const auto r = disorder_ensemble(base, cfg);
    EXPECT_GT(r.rejections, 0u);
    std::size_t sum = 0;
    for (const auto& s : r.samples) sum += s.rejections;
    EXPECT_EQ(sum, r.rejections);
}

TEST(Disorder, EnsembleDeterministicAcrossThreads) {
    const auto base = ChainSpec::uniform(8, 6.04, 0.2, 0.35);
    DisorderConfig cfg;
    cfg.strength = 0.3;
    cfg.samples = 40;
    cfg.seed = 1234;
    const auto a = disorder_ensemble(base, cfg, 1);
    const auto b = disorder_ensemble(base, cfg, 4);
    ASSERT_EQ(a.samples.size(), 40u);
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        EXPECT_EQ(a.samples[i].index, i);
        EXPECT_EQ(a.samples[i].nu, b.samples[i].nu);
        EXPECT_EQ(a.samples[i].min_gap_ghz, b.samples[i].min_gap_ghz);
    }
    EXPECT_EQ(a.mean_nu, b.mean_nu);
    EXPECT_EQ(a.std_nu, b.std_nu);
    EXPECT_EQ(a.seed, 1234u);
    EXPECT_EQ(a.generator, kEnsembleGenerator);

    cfg.seed = 1235;
    const auto c = disorder_ensemble(base, cfg, 1);
    EXPECT_NE(a.samples[0].nu, c.samples[0].nu);
}

TEST(Disorder, MeanAndSampleDeviation) {
    const auto base = ChainSpec::uniform(8, 6.04, 0.2, 0.35);
    DisorderConfig cfg;
    cfg.strength = 0.3;
    cfg.samples = 25;
    cfg.seed = 2;
    const auto r = disorder_ensemble(base, cfg);
    double mean = 0.0;
    for (const auto& s : r.samples) mean += s.nu;
    mean /= 25.0;
    double var = 0.0;
    for (const auto& s : r.samples) var += (s.nu - mean) * (s.nu - mean);
    EXPECT_NEAR(r.mean_nu, mean, 1e-14);
    EXPECT_NEAR(r.std_nu, std::sqrt(var / 24.0), 1e-14);
}

TEST(Disorder, Validation) {
    DisorderConfig cfg;
    cfg.strength = -0.1;
    EXPECT_THROW(cfg.validate(), ValidationError);
    cfg.strength = 0.1;
    cfg.samples = 0;
    EXPECT_THROW(cfg.validate(), ValidationError);
}
