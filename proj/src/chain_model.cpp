#include "sshchain/chain_model.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "sshchain/error.hpp"

namespace sshchain {

namespace {

void require_length(const std::vector<double>& values, std::size_t expected, const char* name) {
    if (values.size() != expected) {
        throw ValidationError(std::string(name) + ": expected " + std::to_string(expected) +
                              " entries, got " + std::to_string(values.size()));
    }
}

void require_positive_finite(const std::vector<double>& values, const char* name) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]) || values[i] <= 0.0) {
            throw ValidationError(std::string(name) + "[" + std::to_string(i) +
                                  "] must be finite and > 0");
        }
    }
}

}  // namespace

ChainSpec ChainSpec::uniform(std::size_t n_cells, double eps, double v, double w) {
    ChainSpec spec;
    spec.n_cells = n_cells;
    spec.eps_ghz.assign(2 * n_cells, eps);
    spec.v_ghz.assign(n_cells, v);
    spec.w_ghz.assign(n_cells > 0 ? n_cells - 1 : 0, w);
    return spec;
}

void ChainSpec::validate() const {
    if (n_cells == 0) throw ValidationError("chain: n_cells must be >= 1");
    require_length(eps_ghz, 2 * n_cells, "eps_GHz");
    require_length(v_ghz, n_cells, "v_GHz");
    require_length(w_ghz, n_cells - 1, "w_GHz");
    for (double e : eps_ghz) {
        if (!std::isfinite(e)) throw ValidationError("eps_GHz: non-finite on-site energy");
    }
    for (const auto* hops : {&v_ghz, &w_ghz}) {
        for (double t : *hops) {
            if (!std::isfinite(t) || t < 0.0) {
                throw ValidationError("hopping amplitudes must be finite and >= 0");
            }
        }
    }
}

double ChainSpec::mean_eps() const {
    if (eps_ghz.empty()) return 0.0;
    return std::accumulate(eps_ghz.begin(), eps_ghz.end(), 0.0) /
           static_cast<double>(eps_ghz.size());
}

CircuitSpec CircuitSpec::uniform(std::size_t n_cells, double c0, double l0, double lv, double cw) {
    CircuitSpec spec;
    spec.n_cells = n_cells;
    spec.c0_ff.assign(2 * n_cells, c0);
    spec.l0_nh.assign(2 * n_cells, l0);
    spec.lv_nh.assign(n_cells, lv);
    spec.cw_ff.assign(n_cells + 1, cw);
    return spec;
}

void CircuitSpec::validate() const {
    if (n_cells == 0) throw ValidationError("circuit: n_cells must be >= 1");
    require_length(c0_ff, 2 * n_cells, "c0_fF");
    require_length(l0_nh, 2 * n_cells, "l0_nH");
    require_length(lv_nh, n_cells, "lv_nH");
    require_length(cw_ff, n_cells + 1, "cw_fF");
    require_positive_finite(c0_ff, "c0_fF");
    require_positive_finite(l0_nh, "l0_nH");
    require_positive_finite(cw_ff, "cw_fF");
    for (std::size_t i = 0; i < lv_nh.size(); ++i) {
        // +inf is a pinched-off junction
        if (std::isnan(lv_nh[i]) || lv_nh[i] <= 0.0) {
            throw ValidationError("lv_nH[" + std::to_string(i) + "] must be > 0 or inf");
        }
    }
}

double lc_frequency_ghz(double l_nh, double c_ff) {
    // nH * fF = 1e-24 s^2, so f = 1e12 / (2 pi sqrt(L C)) Hz = 1e3 / (2 pi sqrt(L C)) GHz
    return 1.0e3 / (2.0 * std::numbers::pi * std::sqrt(l_nh * c_ff));
}

std::vector<SiteCircuit> site_circuits(const CircuitSpec& spec) {
    spec.validate();
    std::vector<SiteCircuit> sites(spec.sites());
    for (std::size_t j = 0; j < sites.size(); ++j) {
        const double l0 = spec.l0_nh[j];
        const double lv = spec.lv_nh[j / 2];
        const double l_total = std::isinf(lv) ? l0 : 1.0 / (1.0 / l0 + 1.0 / lv);
        const double c_total = spec.c0_ff[j] + spec.site_cw(j);
        if (!(l_total > 0.0) || !(c_total > 0.0)) {
            throw ValidationError("non-positive effective L_T or C_T at site " + std::to_string(j));
        }
        sites[j] = {l_total, c_total, lc_frequency_ghz(l_total, c_total)};
    }
    return sites;
}

Eigen::MatrixXd build_tb_hamiltonian(const ChainSpec& spec) {
    spec.validate();
    const auto n = static_cast<Eigen::Index>(spec.sites());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) h(i, i) = spec.eps_ghz[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const auto bond = static_cast<std::size_t>(i / 2);
        const double t = (i % 2 == 0) ? spec.v_ghz[bond] : spec.w_ghz[bond];
        h(i, i + 1) = t;
        h(i + 1, i) = t;
    }
    return h;
}

ChainSpec map_circuit_to_tb(const CircuitSpec& spec) {
    const auto sites = site_circuits(spec);
    ChainSpec chain;
    chain.n_cells = spec.n_cells;
    chain.eps_ghz.resize(sites.size());
    for (std::size_t j = 0; j < sites.size(); ++j) chain.eps_ghz[j] = sites[j].freq_ghz;

    chain.v_ghz.resize(spec.n_cells);
    for (std::size_t c = 0; c < spec.n_cells; ++c) {
        const double lv = spec.lv_nh[c];
        if (std::isinf(lv)) {
            chain.v_ghz[c] = 0.0;
            continue;
        }
        const auto& a = sites[2 * c];
        const auto& b = sites[2 * c + 1];
        chain.v_ghz[c] =
            0.5 * (0.5 * a.freq_ghz * a.l_total_nh / lv + 0.5 * b.freq_ghz * b.l_total_nh / lv);
    }

    chain.w_ghz.resize(spec.n_cells - 1);
    for (std::size_t c = 0; c + 1 < spec.n_cells; ++c) {
        const double cw = spec.cw_ff[c + 1];
        const auto& b = sites[2 * c + 1];
        const auto& a = sites[2 * c + 2];
        chain.w_ghz[c] =
            0.5 * (0.5 * b.freq_ghz * cw / b.c_total_ff + 0.5 * a.freq_ghz * cw / a.c_total_ff);
    }
    return chain;
}

ChiralOperator chiral_operator(std::size_t n_cells) {
    if (n_cells == 0) throw ValidationError("chiral_operator: n_cells must be >= 1");
    ChiralOperator gamma;
    gamma.diagonal.resize(static_cast<Eigen::Index>(2 * n_cells));
    for (Eigen::Index i = 0; i < gamma.diagonal.size(); ++i) {
        gamma.diagonal(i) = (i % 2 == 0) ? 1.0 : -1.0;
    }
    return gamma;
}

double chiral_defect(const Eigen::MatrixXd& h, double eps_ref) {
    if (h.rows() != h.cols()) throw ValidationError("chiral_defect: matrix must be square");
    if (h.rows() % 2 != 0) throw ValidationError("chiral_defect: dimension must be even");
    if (h.rows() == 0) return 0.0;
    const auto gamma = chiral_operator(static_cast<std::size_t>(h.rows() / 2)).diagonal;
    Eigen::MatrixXd shifted = h;
    shifted.diagonal().array() -= eps_ref;
    // {G, S}_ij = (g_i + g_j) S_ij
    double worst = 0.0;
    for (Eigen::Index j = 0; j < h.cols(); ++j) {
        for (Eigen::Index i = 0; i < h.rows(); ++i) {
            worst = std::max(worst, std::abs((gamma(i) + gamma(j)) * shifted(i, j)));
        }
    }
    return worst;
}

}  // namespace sshchain
