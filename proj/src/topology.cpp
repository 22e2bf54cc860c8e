#include "sshchain/topology.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <string>

#include "sshchain/error.hpp"
#include "sshchain/parallel.hpp"
#include "sshchain/spectral.hpp"

namespace sshchain {

std::string_view to_string(WindingMethod method) noexcept {
    return method == WindingMethod::RealSpace ? "real-space" : "k-space";
}

namespace {

std::size_t cells_of(const Eigen::MatrixXd& h) {
    if (h.rows() != h.cols()) throw ValidationError("matrix must be square");
    if (h.rows() == 0 || h.rows() % 2 != 0) {
        throw ValidationError("matrix dimension must be even and non-zero");
    }
    return static_cast<std::size_t>(h.rows() / 2);
}

Eigen::MatrixXd shifted(const Eigen::MatrixXd& h, double eps_ref) {
    Eigen::MatrixXd s = h;
    s.diagonal().array() -= eps_ref;
    return s;
}

std::string index_list(const std::vector<std::size_t>& idx) {
    std::string s;
    for (std::size_t i : idx) s += (s.empty() ? "" : ", ") + std::to_string(i);
    return s;
}

// Indices of the two eigenvalues with smallest magnitude, in ascending order.
std::array<Eigen::Index, 2> nearest_pair(const Eigen::VectorXd& ev) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(ev.size()));
    for (Eigen::Index k = 0; k < ev.size(); ++k) order[static_cast<std::size_t>(k)] = k;
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return std::abs(ev(a)) < std::abs(ev(b));
    });
    std::array<Eigen::Index, 2> pair{order[0], order[1]};
    std::sort(pair.begin(), pair.end());
    return pair;
}

struct ChiralPair {
    Eigen::VectorXd plus;   // larger <u|Gamma|u>
    Eigen::VectorXd minus;
    double plus_gamma = 0.0;
    double minus_gamma = 0.0;
};

void fix_sign(Eigen::VectorXd& u) {
    Eigen::Index at = 0;
    u.cwiseAbs().maxCoeff(&at);
    if (u(at) < 0.0) u = -u;
}

// Diagonalizes Gamma inside span{V(:,i), V(:,j)}.
ChiralPair split_by_chirality(const Eigen::MatrixXd& vecs, std::array<Eigen::Index, 2> pair,
                              const Eigen::VectorXd& gamma) {
    Eigen::MatrixXd w(vecs.rows(), 2);
    w.col(0) = vecs.col(pair[0]);
    w.col(1) = vecs.col(pair[1]);
    const Eigen::Matrix2d g = w.transpose() * gamma.asDiagonal() * w;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(g);
    const auto& ge = solver.eigenvalues();
    if (std::abs(ge(1) - ge(0)) < 1e-12) {
        const std::vector<std::size_t> idx{static_cast<std::size_t>(pair[0]),
                                           static_cast<std::size_t>(pair[1])};
        throw DegenerateMidgapError(
            "mid-gap pair (" + index_list(idx) + ") cannot be split by chirality", idx);
    }
    ChiralPair out;
    out.plus = w * solver.eigenvectors().col(1);
    out.minus = w * solver.eigenvectors().col(0);
    out.plus_gamma = ge(1);
    out.minus_gamma = ge(0);
    fix_sign(out.plus);
    fix_sign(out.minus);
    return out;
}

// Q = sum sign(lambda) |u><u| with the selected pair replaced by its chiral split.
Eigen::MatrixXd flatband_from(const Spectrum& s, const Eigen::VectorXd& gamma, bool resolve_pair) {
    const Eigen::VectorXd& ev = s.eigenvalues;
    const Eigen::Index n = ev.size();

    std::vector<std::size_t> zeros;
    for (Eigen::Index k = 0; k < n; ++k) {
        if (std::abs(ev(k)) < kZeroEnergyTolerance) zeros.push_back(static_cast<std::size_t>(k));
    }
    if (zeros.size() > 2 || zeros.size() == 1) {
        throw DegenerateMidgapError(
            "zero eigenvalues of ambiguous sign at indices " + index_list(zeros), zeros);
    }

    std::array<Eigen::Index, 2> pair{-1, -1};
    if (resolve_pair || zeros.size() == 2) pair = nearest_pair(ev);
    if (!zeros.empty() && (static_cast<std::size_t>(pair[0]) != zeros[0] ||
                           static_cast<std::size_t>(pair[1]) != zeros[1])) {
        throw DegenerateMidgapError(
            "zero eigenvalues outside the mid-gap pair at indices " + index_list(zeros), zeros);
    }

    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        if (k == pair[0] || k == pair[1]) continue;
        const double sign = ev(k) > 0.0 ? 1.0 : -1.0;
        q.noalias() += sign * s.eigenvectors.col(k) * s.eigenvectors.col(k).transpose();
    }
    if (pair[0] >= 0) {
        const auto split = split_by_chirality(s.eigenvectors, pair, gamma);
        q.noalias() += split.plus * split.plus.transpose();
        q.noalias() -= split.minus * split.minus.transpose();
    }
    return q;
}

}  // namespace

Eigen::MatrixXd flatband(const Eigen::MatrixXd& h, double eps_ref) {
    const std::size_t n_cells = cells_of(h);
    const auto spectrum = eigendecompose(shifted(h, eps_ref));
    return flatband_from(spectrum, chiral_operator(n_cells).diagonal, false);
}

EdgeStates resolve_edge_states(const Eigen::MatrixXd& h, double eps_ref) {
    const std::size_t n_cells = cells_of(h);
    const auto spectrum = eigendecompose(shifted(h, eps_ref));
    const auto pair = nearest_pair(spectrum.eigenvalues);
    const auto split = split_by_chirality(spectrum.eigenvectors, pair, chiral_operator(n_cells).diagonal);
    EdgeStates out;
    out.indices = pair;
    out.energies = {spectrum.eigenvalues(pair[0]), spectrum.eigenvalues(pair[1])};
    out.a_polarized = split.plus;
    out.b_polarized = split.minus;
    out.a_chirality = split.plus_gamma;
    out.b_chirality = split.minus_gamma;
    return out;
}

WindingResult winding_number_real_space(const Eigen::MatrixXd& h, double eps_ref) {
    const std::size_t n_cells = cells_of(h);
    const Eigen::VectorXd gamma = chiral_operator(n_cells).diagonal;
    const Eigen::MatrixXd q = flatband_from(eigendecompose(shifted(h, eps_ref)), gamma, true);

    const Eigen::Index n = q.rows();
    // Q_AB = P_A Q P_B and Q_BA = P_B Q P_A; [X, Q_AB]_ij = (x_i - x_j) Q_AB_ij
    Eigen::MatrixXd q_ab = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd q_ba = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (i % 2 == 0 && j % 2 == 1) q_ab(i, j) = q(i, j);
            if (i % 2 == 1 && j % 2 == 0) q_ba(i, j) = q(i, j);
        }
    }
    Eigen::MatrixXd comm(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            comm(i, j) = static_cast<double>(i / 2 - j / 2) * q_ab(i, j);
        }
    }
    const double trace = (q_ba * comm).trace();

    WindingResult out;
    out.nu = trace / static_cast<double>(n_cells);
    out.raw = out.nu;
    out.chain_length = n_cells;
    out.method = WindingMethod::RealSpace;
    return out;
}

WindingResult winding_number_k_space(double v, double w) {
    if (!std::isfinite(v) || !std::isfinite(w) || v < 0.0 || w < 0.0) {
        throw ValidationError("winding_number_k_space: hops must be finite and >= 0");
    }
    if (v == 0.0 && w == 0.0) throw ValidationError("winding_number_k_space: v and w both zero");
    const double scale = std::max(v, w);
    if (std::abs(v - w) <= 1e-12 * scale) {
        throw GapClosingError("winding_number_k_space: v = w closes the gap");
    }

    // The trapezoidal rule on this periodic integrand converges like r^M with
    // r = min(v, w) / max(v, w); pick M so that r^M is far below the tolerance.
    const double r = std::min(v, w) / scale;
    std::size_t m = 1024;
    if (r > 0.0) {
        const double needed = std::ceil(std::log(1e-12) / std::log(r));
        if (needed > static_cast<double>(std::size_t{1} << 24)) {
            throw GapClosingError("winding_number_k_space: v and w too close to resolve");
        }
        m = std::max<std::size_t>(m, std::bit_ceil(static_cast<std::size_t>(needed)));
    }

    // nu = (1 / 2 pi i) \oint d log h(k) = (1/2pi) \int Re[ w e^{ik} / (v + w e^{ik}) ] dk
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double k = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(m);
        const std::complex<double> e = std::polar(w, k);
        sum += (e / (v + e)).real();
    }
    const double raw = sum / static_cast<double>(m);
    const double rounded = std::round(raw);
    if (std::abs(raw - rounded) > 1e-6) {
        throw NumericalError("winding_number_k_space: quadrature did not converge (raw = " +
                             std::to_string(raw) + ")");
    }

    WindingResult out;
    out.nu = rounded;
    out.raw = raw;
    out.chain_length = 0;
    out.method = WindingMethod::KSpace;
    return out;
}

double ipr(const Eigen::VectorXd& state) {
    if (!state.allFinite()) throw ValidationError("ipr: non-finite state");
    const double norm2 = state.squaredNorm();
    if (norm2 == 0.0) throw ValidationError("ipr: zero vector");
    return state.array().square().square().sum() / (norm2 * norm2);
}

double localization_length_fit(const Eigen::VectorXd& state, Sublattice sublattice) {
    if (state.size() == 0 || state.size() % 2 != 0) {
        throw ValidationError("localization_length_fit: state dimension must be even and non-zero");
    }
    const Eigen::Index n_cells = state.size() / 2;
    const Eigen::Index offset = sublattice == Sublattice::A ? 0 : 1;

    Eigen::Index peak = 0;
    for (Eigen::Index c = 1; c < n_cells; ++c) {
        if (std::abs(state(2 * c + offset)) > std::abs(state(2 * peak + offset))) peak = c;
    }
    const bool from_left = 2 * peak <= n_cells - 1;

    std::vector<double> xs;
    std::vector<double> ys;
    for (Eigen::Index c = 0; c < n_cells; ++c) {
        const double amp = std::abs(state(2 * c + offset));
        if (amp <= 1e-12) continue;
        xs.push_back(static_cast<double>(from_left ? c : n_cells - 1 - c));
        ys.push_back(std::log(amp));
    }
    if (xs.size() < 3) {
        throw FitUnsupportedError("localization_length_fit: fewer than 3 usable amplitudes");
    }

    const double count = static_cast<double>(xs.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= count;
    my /= count;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    const double slope = sxy / sxx;
    if (!(slope < 0.0)) {
        throw FitUnsupportedError("localization_length_fit: profile does not decay");
    }
    return -1.0 / slope;
}

void DisorderConfig::validate() const {
    if (!std::isfinite(strength) || strength < 0.0) {
        throw ValidationError("disorder strength must be finite and >= 0");
    }
    if (samples == 0) throw ValidationError("disorder samples must be >= 1");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

double uniform_pm1(std::mt19937_64& gen) {
    const double unit = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    return 2.0 * unit - 1.0;
}

constexpr std::size_t kMaxRedraws = 100000;

}  // namespace

ChainSpec perturb_chain(const ChainSpec& base, const DisorderConfig& config, std::size_t sample,
                        std::size_t& rejections) {
    base.validate();
    config.validate();
    std::mt19937_64 gen(splitmix64(config.seed ^ splitmix64(sample)));
    const double d = config.strength;

    for (std::size_t attempt = 0; attempt < kMaxRedraws; ++attempt) {
        ChainSpec out = base;
        if (config.targets.eps) {
            for (double& e : out.eps_ghz) e *= 1.0 + d * uniform_pm1(gen);
        }
        bool negative = false;
        if (config.targets.v) {
            for (double& t : out.v_ghz) {
                t *= 1.0 + d * uniform_pm1(gen);
                negative = negative || t < 0.0;
            }
        }
        if (config.targets.w) {
            for (double& t : out.w_ghz) {
                t *= 1.0 + d * uniform_pm1(gen);
                negative = negative || t < 0.0;
            }
        }
        if (!negative) return out;
        ++rejections;
    }
    throw NumericalError("perturb_chain: no admissible draw after " +
                         std::to_string(kMaxRedraws) + " attempts");
}

EnsembleResult disorder_ensemble(const ChainSpec& base, const DisorderConfig& config,
                                 unsigned threads) {
    base.validate();
    config.validate();

    EnsembleResult out;
    out.seed = config.seed;
    out.samples.resize(config.samples);
    parallel_for(config.samples, threads, [&](std::size_t k) {
        DisorderSample& s = out.samples[k];
        s.index = k;
        const ChainSpec chain = perturb_chain(base, config, k, s.rejections);
        const Eigen::MatrixXd h = build_tb_hamiltonian(chain);
        s.nu = winding_number_real_space(h, chain.mean_eps()).nu;
        const Eigen::VectorXd ev =
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(h, Eigen::EigenvaluesOnly).eigenvalues();
        const auto mid = static_cast<Eigen::Index>(chain.n_cells);
        s.min_gap_ghz = ev(mid) - ev(mid - 1);
    });

    double sum = 0.0;
    for (const auto& s : out.samples) {
        sum += s.nu;
        out.rejections += s.rejections;
    }
    const double count = static_cast<double>(out.samples.size());
    out.mean_nu = sum / count;
    double ss = 0.0;
    for (const auto& s : out.samples) ss += (s.nu - out.mean_nu) * (s.nu - out.mean_nu);
    out.std_nu = out.samples.size() > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;
    return out;
}

}  // namespace sshchain
