#include "sshchain/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "sshchain/error.hpp"
#include "sshchain/parallel.hpp"

namespace sshchain {

std::string_view to_string(ModeLabel label) noexcept {
    switch (label) {
        case ModeLabel::BulkLower: return "bulk-lower";
        case ModeLabel::Edge: return "edge";
        case ModeLabel::BulkUpper: return "bulk-upper";
    }
    return "?";
}

std::string_view to_string(PhaseTag tag) noexcept {
    switch (tag) {
        case PhaseTag::Topological: return "topological";
        case PhaseTag::Normal: return "normal";
        case PhaseTag::Trivial: return "trivial";
    }
    return "?";
}

Spectrum eigendecompose(const Eigen::MatrixXd& h) {
    if (h.rows() != h.cols()) throw ValidationError("eigendecompose: matrix must be square");
    if (!h.allFinite()) throw ValidationError("eigendecompose: non-finite entries");
    const double asym = h.size() == 0 ? 0.0 : (h - h.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10) {
        throw ValidationError("eigendecompose: matrix is not symmetric (max |H - H^T| = " +
                              std::to_string(asym) + ")");
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
    if (solver.info() != Eigen::Success) throw NumericalError("eigendecompose: solver failed");

    const Eigen::Index n = h.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return solver.eigenvalues()(a) < solver.eigenvalues()(b);
    });

    Spectrum out;
    out.eigenvalues.resize(n);
    out.eigenvectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index src = order[static_cast<std::size_t>(k)];
        out.eigenvalues(k) = solver.eigenvalues()(src);
        Eigen::VectorXd vec = solver.eigenvectors().col(src);
        // phase: first component within 1e-12 of the largest magnitude is made positive
        const double peak = vec.cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(vec(i)) >= peak - 1e-12) {
                if (vec(i) < 0.0) vec = -vec;
                break;
            }
        }
        out.eigenvectors.col(k) = vec;
    }
    return out;
}

PhaseTag phase_tag(double fsr_edge_bulk, double fsr_edge_edge) noexcept {
    if (fsr_edge_edge < 0.2 * fsr_edge_bulk) return PhaseTag::Topological;
    if (fsr_edge_bulk < 0.2 * fsr_edge_edge) return PhaseTag::Trivial;
    return PhaseTag::Normal;
}

ModeClassification classify_modes(const Spectrum& spectrum, double eps_ref) {
    const Eigen::Index n = spectrum.size();
    if (n < 4) throw ValidationError("classify_modes: needs at least 4 modes (N >= 2)");
    const auto& ev = spectrum.eigenvalues;

    // The two values nearest eps_ref are adjacent in sorted order; pick the
    // adjacent pair with the smallest farther distance, then smallest sum.
    auto pair_key = [&](Eigen::Index k) {
        const double a = std::abs(ev(k) - eps_ref);
        const double b = std::abs(ev(k + 1) - eps_ref);
        return std::pair{std::max(a, b), a + b};
    };
    Eigen::Index lo = 0;
    for (Eigen::Index k = 1; k + 1 < n; ++k) {
        if (pair_key(k) < pair_key(lo)) lo = k;
    }
    const Eigen::Index hi = lo + 1;

    ModeClassification out;
    out.labels.resize(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
        out.labels[static_cast<std::size_t>(k)] =
            k < lo ? ModeLabel::BulkLower : (k > hi ? ModeLabel::BulkUpper : ModeLabel::Edge);
    }
    out.edge_indices = {lo, hi};
    out.fsr_edge_edge = ev(hi) - ev(lo);
    out.fsr_edge_bulk_lower = lo > 0 ? ev(lo) - ev(lo - 1) : 0.0;
    out.fsr_edge_bulk_upper = hi + 1 < n ? ev(hi + 1) - ev(hi) : 0.0;
    out.fsr_edge_bulk = std::max(out.fsr_edge_bulk_lower, out.fsr_edge_bulk_upper);
    out.phase = phase_tag(out.fsr_edge_bulk, out.fsr_edge_edge);
    return out;
}

std::vector<SweepPoint> sweep_coupling(const CircuitSpec& circuit, std::span<const double> lv_grid_nh,
                                       std::span<const std::size_t> cells, unsigned threads) {
    circuit.validate();
    if (lv_grid_nh.empty()) throw ValidationError("sweep_coupling: empty L_v grid");
    for (double lv : lv_grid_nh) {
        if (std::isnan(lv) || lv <= 0.0) {
            throw ValidationError("sweep_coupling: grid values must be > 0 or inf");
        }
    }
    for (std::size_t c : cells) {
        if (c >= circuit.n_cells) {
            throw ValidationError("sweep_coupling: cell index " + std::to_string(c) +
                                  " out of range");
        }
    }

    std::vector<SweepPoint> out(lv_grid_nh.size());
    parallel_for(lv_grid_nh.size(), threads, [&](std::size_t i) {
        CircuitSpec point = circuit;
        if (cells.empty()) {
            std::fill(point.lv_nh.begin(), point.lv_nh.end(), lv_grid_nh[i]);
        } else {
            for (std::size_t c : cells) point.lv_nh[c] = lv_grid_nh[i];
        }
        SweepPoint& p = out[i];
        p.lv_nh = lv_grid_nh[i];
        p.chain = map_circuit_to_tb(point);
        p.eps_ref_ghz = p.chain.mean_eps();
        p.spectrum = eigendecompose(build_tb_hamiltonian(p.chain));
        if (p.spectrum.size() >= 4) p.modes = classify_modes(p.spectrum, p.eps_ref_ghz);
    });
    return out;
}

std::vector<NormalizedSpectrum> normalized_spectrum(std::span<const SweepPoint> sweep) {
    std::vector<NormalizedSpectrum> out;
    out.reserve(sweep.size());
    for (const auto& p : sweep) {
        if (!(p.eps_ref_ghz > 0.0)) {
            throw ValidationError("normalized_spectrum: non-positive resonator frequency");
        }
        out.push_back({p.lv_nh, p.eps_ref_ghz, p.spectrum.eigenvalues / p.eps_ref_ghz});
    }
    return out;
}

std::optional<double> fsr_crossing(std::span<const SweepPoint> sweep) {
    for (std::size_t i = 0; i + 1 < sweep.size(); ++i) {
        const auto& a = sweep[i];
        const auto& b = sweep[i + 1];
        if (!std::isfinite(a.lv_nh) || !std::isfinite(b.lv_nh)) continue;
        const double da = a.modes.fsr_edge_bulk - a.modes.fsr_edge_edge;
        const double db = b.modes.fsr_edge_bulk - b.modes.fsr_edge_edge;
        if (da == 0.0) return a.lv_nh;
        if ((da < 0.0) != (db < 0.0)) {
            return a.lv_nh + (b.lv_nh - a.lv_nh) * da / (da - db);
        }
    }
    if (!sweep.empty()) {
        const auto& last = sweep.back();
        if (std::isfinite(last.lv_nh) && last.modes.fsr_edge_bulk == last.modes.fsr_edge_edge) {
            return last.lv_nh;
        }
    }
    return std::nullopt;
}

}  // namespace sshchain
