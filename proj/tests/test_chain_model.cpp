#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles/jacobi.hpp"
#include "sshchain/chain_model.hpp"
#include "sshchain/error.hpp"
#include "sshchain/spectral.hpp"

using namespace sshchain;

TEST(ChainSpec, ValidationRejectsBadShapes) {
    auto spec = ChainSpec::uniform(3, 6.5, 0.2, 0.4);
    EXPECT_NO_THROW(spec.validate());
    spec.w_ghz.push_back(0.1);
    EXPECT_THROW(spec.validate(), ValidationError);
    spec = ChainSpec::uniform(3, 6.5, 0.2, 0.4);
    spec.v_ghz[1] = -0.1;
    EXPECT_THROW(spec.validate(), ValidationError);
    spec = ChainSpec::uniform(3, 6.5, 0.2, 0.4);
    spec.eps_ghz[0] = std::nan("");
    EXPECT_THROW(build_tb_hamiltonian(spec), ValidationError);
}

TEST(BuildHamiltonian, TwoSiteAnalytic) {
    const auto h = build_tb_hamiltonian(ChainSpec::uniform(1, 6.5, 0.5, 0.0));
    const auto s = eigendecompose(h);
    EXPECT_NEAR(s.eigenvalues(0), 6.0, 1e-12);
    EXPECT_NEAR(s.eigenvalues(1), 7.0, 1e-12);
}

TEST(BuildHamiltonian, TridiagonalLayoutAndExactSymmetry) {
    ChainSpec spec;
    spec.n_cells = 3;
    spec.eps_ghz = {1, 2, 3, 4, 5, 6};
    spec.v_ghz = {0.1, 0.2, 0.3};
    spec.w_ghz = {0.4, 0.5};
    const auto h = build_tb_hamiltonian(spec);
    const double super[] = {0.1, 0.4, 0.2, 0.5, 0.3};
    for (int i = 0; i < 6; ++i) EXPECT_EQ(h(i, i), spec.eps_ghz[static_cast<std::size_t>(i)]);
    for (int i = 0; i < 5; ++i) EXPECT_EQ(h(i, i + 1), super[i]);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            EXPECT_EQ(h(i, j), h(j, i));
            if (std::abs(i - j) > 1) {
                EXPECT_EQ(h(i, j), 0.0);
            }
        }
}

TEST(BuildHamiltonian, DimerLimitDegeneracies) {
    const auto s = eigendecompose(build_tb_hamiltonian(ChainSpec::uniform(5, 6.5, 0.0, 0.5)));
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(s.eigenvalues(k), 6.0, 1e-12);
    for (int k = 4; k < 6; ++k) EXPECT_NEAR(s.eigenvalues(k), 6.5, 1e-12);
    for (int k = 6; k < 10; ++k) EXPECT_NEAR(s.eigenvalues(k), 7.0, 1e-12);
}

TEST(BuildHamiltonian, MatchesFrozenOracleSpectrum) {
    // Frozen from an independent dense diagonalization (numpy eigvalsh).
    const double expected[] = {5.778682080302643, 5.861900692381078, 5.990704507786893,
                               6.145726721617565, 6.488240825909104, 6.511759174090896,
                               6.854273278382439, 7.009295492213107, 7.138099307618922,
                               7.221317919697356};
    const auto s = eigendecompose(build_tb_hamiltonian(ChainSpec::uniform(5, 6.5, 0.25, 0.5)));
    for (int k = 0; k < 10; ++k) EXPECT_NEAR(s.eigenvalues(k), expected[k], 1e-12);

    const auto jac = oracle::jacobi(oracle::ssh_matrix(5, 6.5, 0.25, 0.5));
    for (int k = 0; k < 10; ++k) EXPECT_NEAR(jac.values[static_cast<std::size_t>(k)], expected[k], 1e-11);
}

TEST(MapCircuit, SingleSiteNumbers) {
    // L = 1 nH, C_T = 300 + 30 fF
    auto c = CircuitSpec::uniform(2, 300.0, 1.0, kInfinity, 30.0);
    const auto chain = map_circuit_to_tb(c);
    const double f = 1e3 / (2.0 * std::numbers::pi * std::sqrt(1.0 * 330.0));
    EXPECT_NEAR(chain.eps_ghz[0], f, 1e-12);
    EXPECT_NEAR(f, 8.761, 1e-3);
    EXPECT_EQ(chain.v_ghz[0], 0.0);
    EXPECT_EQ(chain.v_ghz[1], 0.0);
    EXPECT_NEAR(chain.w_ghz[0], 0.5 * f * 30.0 / 330.0, 1e-12);
    EXPECT_NEAR(chain.w_ghz[0], 0.398, 1e-3);
}

TEST(MapCircuit, HalvingLvRaisesEveryOnsiteFrequency) {
    auto a = CircuitSpec::uniform(5, 212.6, 2.887, 40.0, 27.9);
    auto b = a;
    for (auto& lv : b.lv_nh) lv *= 0.5;
    const auto ca = map_circuit_to_tb(a);
    const auto cb = map_circuit_to_tb(b);
    for (std::size_t j = 0; j < ca.eps_ghz.size(); ++j) EXPECT_GT(cb.eps_ghz[j], ca.eps_ghz[j]);
}

TEST(MapCircuit, MonotoneCouplingsInLv) {
    double prev_v = -1.0;
    double prev_w = -1.0;
    for (double lv = 200.0; lv >= 5.0; lv -= 5.0) {
        const auto chain = map_circuit_to_tb(CircuitSpec::uniform(5, 212.6, 2.887, lv, 27.9));
        EXPECT_GT(chain.v_ghz[0], prev_v);
        EXPECT_GE(chain.w_ghz[0], prev_w - 1e-15);
        prev_v = chain.v_ghz[0];
        prev_w = chain.w_ghz[0];
    }
}

TEST(MapCircuit, SiteLocalLvAndOuterCw) {
    auto c = CircuitSpec::uniform(3, 200.0, 3.0, kInfinity, 25.0);
    c.lv_nh[1] = 30.0;
    c.cw_ff[0] = 40.0;
    const auto sites = site_circuits(c);
    const auto chain = map_circuit_to_tb(c);
    // only the two sites of cell 1 feel L_v
    EXPECT_EQ(sites[0].l_total_nh, 3.0);
    EXPECT_NEAR(sites[2].l_total_nh, 1.0 / (1.0 / 3.0 + 1.0 / 30.0), 1e-14);
    EXPECT_NEAR(sites[3].l_total_nh, sites[2].l_total_nh, 1e-14);
    EXPECT_EQ(sites[4].l_total_nh, 3.0);
    // first site touches the outer cw
    EXPECT_EQ(sites[0].c_total_ff, 240.0);
    EXPECT_EQ(sites[1].c_total_ff, 225.0);
    EXPECT_GT(chain.eps_ghz[2], chain.eps_ghz[4]);
    EXPECT_GT(chain.v_ghz[1], 0.0);
}

TEST(MapCircuit, RejectsNonPositiveElements) {
    auto c = CircuitSpec::uniform(2, 200.0, 3.0, 20.0, 25.0);
    c.c0_ff[1] = 0.0;
    EXPECT_THROW((void)map_circuit_to_tb(c), ValidationError);
    c = CircuitSpec::uniform(2, 200.0, 3.0, 20.0, 25.0);
    c.lv_nh[0] = -1.0;
    EXPECT_THROW((void)map_circuit_to_tb(c), ValidationError);
    c = CircuitSpec::uniform(2, 200.0, 3.0, 20.0, 25.0);
    c.cw_ff.pop_back();
    EXPECT_THROW((void)map_circuit_to_tb(c), ValidationError);
}

TEST(ChiralOperator, Structure) {
    const auto g1 = chiral_operator(1);
    EXPECT_EQ(g1.diagonal(0), 1.0);
    EXPECT_EQ(g1.diagonal(1), -1.0);
    const auto g = chiral_operator(5).matrix();
    EXPECT_EQ(g.trace(), 0.0);
    EXPECT_TRUE((g * g).isIdentity(0.0));
    EXPECT_THROW((void)chiral_operator(0), ValidationError);
}

TEST(ChiralOperator, FlipsZeroDiagonalHamiltonian) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t n : {1u, 4u, 9u}) {
        ChainSpec spec = ChainSpec::uniform(n, 0.0, 0.0, 0.0);
        for (auto& v : spec.v_ghz) v = u(gen);
        for (auto& w : spec.w_ghz) w = u(gen);
        const auto h = build_tb_hamiltonian(spec);
        const auto g = chiral_operator(n).matrix();
        EXPECT_TRUE((g * h * g + h).isZero(1e-15));
    }
}

TEST(ChiralDefect, ExamplesAndErrors) {
    const auto h = build_tb_hamiltonian(ChainSpec::uniform(5, 6.5, 0.3, 0.4));
    EXPECT_EQ(chiral_defect(h, 6.5), 0.0);
    auto h2 = h;
    h2(0, 2) = h2(2, 0) = 0.07;  // same-sublattice bond
    EXPECT_NEAR(chiral_defect(h2, 6.5), 0.14, 1e-15);
    EXPECT_NEAR(chiral_defect(h, 6.0), 1.0, 1e-15);  // 2 * 0.5 offset on the diagonal
    EXPECT_THROW((void)chiral_defect(Eigen::MatrixXd::Zero(3, 3), 0.0), ValidationError);
}

TEST(ChiralDefect, UniformCircuitIsChiral) {
    const auto chain = map_circuit_to_tb(CircuitSpec::uniform(5, 212.6, 2.887, 30.0, 27.9));
    EXPECT_LT(chiral_defect(build_tb_hamiltonian(chain), chain.mean_eps()), 1e-12);
}

TEST(MapCircuit, UniformSpectrumSymmetricAboutSiteFrequency) {
    for (double lv : {10.0, 22.0, 80.0, kInfinity}) {
        const auto chain = map_circuit_to_tb(CircuitSpec::uniform(5, 212.6, 2.887, lv, 27.9));
        const auto s = eigendecompose(build_tb_hamiltonian(chain));
        const double e = chain.eps_ghz[0];
        for (int k = 0; k < 10; ++k) EXPECT_NEAR(s.eigenvalues(k) - e, -(s.eigenvalues(9 - k) - e), 1e-9);
    }
}
