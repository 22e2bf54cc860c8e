#include <algorithm>
#include <cmath>
#include <numeric>

#include <unsupported/Eigen/NonLinearOptimization>

#include "sshchain/error.hpp"
#include "sshchain/microwave.hpp"

namespace sshchain {

namespace {

struct Candidate {
    std::size_t index;
    double prominence;
    double width_ghz;
};

std::vector<std::size_t> local_maxima(const std::vector<double>& y) {
    std::vector<std::size_t> out;
    std::size_t i = 1;
    while (i + 1 < y.size()) {
        if (y[i] > y[i - 1]) {
            std::size_t j = i;
            while (j + 1 < y.size() && y[j + 1] == y[i]) ++j;
            if (j + 1 < y.size() && y[j + 1] < y[i]) out.push_back((i + j) / 2);
            i = j + 1;
        } else {
            ++i;
        }
    }
    return out;
}

// Topographic prominence and the width at half prominence.
Candidate measure(const std::vector<double>& y, const std::vector<double>& f, std::size_t p) {
    const double top = y[p];
    std::size_t lb = p;
    double left_min = top;
    for (std::size_t i = p; i-- > 0;) {
        if (y[i] > top) break;
        if (y[i] < left_min) {
            left_min = y[i];
            lb = i;
        }
    }
    std::size_t rb = p;
    double right_min = top;
    for (std::size_t i = p + 1; i < y.size(); ++i) {
        if (y[i] > top) break;
        if (y[i] < right_min) {
            right_min = y[i];
            rb = i;
        }
    }
    const double prom = top - std::max(left_min, right_min);
    const double ref = top - 0.5 * prom;

    double fl = f[lb];
    for (std::size_t i = p; i > lb; --i) {
        if (y[i - 1] <= ref) {
            fl = f[i - 1] + (ref - y[i - 1]) / (y[i] - y[i - 1]) * (f[i] - f[i - 1]);
            break;
        }
    }
    double fr = f[rb];
    for (std::size_t i = p; i < rb; ++i) {
        if (y[i + 1] <= ref) {
            fr = f[i + 1] - (ref - y[i + 1]) / (y[i] - y[i + 1]) * (f[i + 1] - f[i]);
            break;
        }
    }
    double width = fr - fl;
    if (!(width > 0.0)) {
        const std::size_t q = std::min(p + 1, f.size() - 1);
        width = f[q] - f[q > 0 ? q - 1 : 0];
    }
    return {p, prom, width};
}

// Sum of Lorentzians in |s21|^2 plus a constant. Per peak the parameters are
// (A, s, t) with f_k = f_init + w_init s and kappa_k = w_init e^t.
struct LorentzianSum {
    using Scalar = double;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;

    std::vector<double> f;
    std::vector<double> y;
    std::vector<double> f_init;
    std::vector<double> w_init;

    [[nodiscard]] int inputs() const { return static_cast<int>(3 * f_init.size() + 1); }
    [[nodiscard]] int values() const { return static_cast<int>(f.size()); }

    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& r) const {
        const std::size_t m = f_init.size();
        for (std::size_t i = 0; i < f.size(); ++i) {
            double model = x(static_cast<Eigen::Index>(3 * m));
            for (std::size_t k = 0; k < m; ++k) {
                const auto b = static_cast<Eigen::Index>(3 * k);
                const double fk = f_init[k] + w_init[k] * x(b + 1);
                const double kappa = w_init[k] * std::exp(x(b + 2));
                const double z = 2.0 * (f[i] - fk) / kappa;
                model += x(b) / (1.0 + z * z);
            }
            r(static_cast<Eigen::Index>(i)) = model - y[i];
        }
        return 0;
    }

    int df(const Eigen::VectorXd& x, Eigen::MatrixXd& jac) const {
        const std::size_t m = f_init.size();
        for (std::size_t i = 0; i < f.size(); ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            for (std::size_t k = 0; k < m; ++k) {
                const auto b = static_cast<Eigen::Index>(3 * k);
                const double a = x(b);
                const double fk = f_init[k] + w_init[k] * x(b + 1);
                const double kappa = w_init[k] * std::exp(x(b + 2));
                const double z = 2.0 * (f[i] - fk) / kappa;
                const double q = 1.0 / (1.0 + z * z);
                jac(row, b) = q;
                jac(row, b + 1) = 4.0 * a * z * q * q / kappa * w_init[k];
                jac(row, b + 2) = 2.0 * a * z * z * q * q;
            }
            jac(row, static_cast<Eigen::Index>(3 * m)) = 1.0;
        }
        return 0;
    }
};

constexpr double kWindowWidths = 5.0;
constexpr std::size_t kMaxPointsPerPeak = 2000;

}  // namespace

std::vector<Peak> extract_peaks(const S21Trace& trace, double prominence, std::size_t max_peaks) {
    if (trace.freqs_ghz.size() != trace.s21.size()) {
        throw ValidationError("extract_peaks: frequency and s21 lengths differ");
    }
    if (!(prominence >= 0.0)) throw ValidationError("extract_peaks: prominence must be >= 0");
    const auto& f = trace.freqs_ghz;
    std::vector<double> y(trace.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::norm(trace.s21[i]);

    std::vector<Candidate> cands;
    for (std::size_t p : local_maxima(y)) {
        const Candidate c = measure(y, f, p);
        if (c.prominence >= prominence && c.prominence > 0.0) cands.push_back(c);
    }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Candidate& a, const Candidate& b) { return a.prominence > b.prominence; });
    if (cands.size() > max_peaks) cands.resize(max_peaks);
    std::sort(cands.begin(), cands.end(),
              [](const Candidate& a, const Candidate& b) { return a.index < b.index; });

    std::vector<Peak> out;
    std::size_t g0 = 0;
    while (g0 < cands.size()) {
        // Group peaks whose fit windows overlap.
        std::size_t g1 = g0 + 1;
        double reach = f[cands[g0].index] + kWindowWidths * cands[g0].width_ghz;
        while (g1 < cands.size() &&
               f[cands[g1].index] - kWindowWidths * cands[g1].width_ghz <= reach) {
            reach = std::max(reach, f[cands[g1].index] + kWindowWidths * cands[g1].width_ghz);
            ++g1;
        }

        LorentzianSum model;
        std::vector<std::size_t> pts;
        double baseline = kInfinity;
        for (std::size_t k = g0; k < g1; ++k) {
            const auto& c = cands[k];
            const double f0 = f[c.index];
            const auto lo = static_cast<std::size_t>(
                std::lower_bound(f.begin(), f.end(), f0 - kWindowWidths * c.width_ghz) - f.begin());
            const auto hi = static_cast<std::size_t>(
                std::upper_bound(f.begin(), f.end(), f0 + kWindowWidths * c.width_ghz) - f.begin());
            const std::size_t stride = std::max<std::size_t>(1, (hi - lo) / kMaxPointsPerPeak);
            for (std::size_t i = lo; i < hi; i += stride) pts.push_back(i);
            pts.push_back(c.index);
            model.f_init.push_back(f0);
            model.w_init.push_back(c.width_ghz);
            baseline = std::min(baseline, y[c.index] - c.prominence);
        }
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        for (std::size_t i : pts) {
            model.f.push_back(f[i]);
            model.y.push_back(y[i]);
        }

        const std::size_t m = g1 - g0;
        Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(3 * m + 1));
        for (std::size_t k = 0; k < m; ++k) x(static_cast<Eigen::Index>(3 * k)) = cands[g0 + k].prominence;
        x(static_cast<Eigen::Index>(3 * m)) = baseline;

        bool ok = model.f.size() > 3 * m + 1;
        if (ok) {
            Eigen::LevenbergMarquardt<LorentzianSum> lm(model);
            lm.parameters.maxfev = 400 * static_cast<Eigen::Index>(3 * m + 1);
            lm.parameters.xtol = 1e-12;
            lm.parameters.ftol = 1e-14;
            const auto status = lm.minimize(x);
            ok = status != Eigen::LevenbergMarquardtSpace::ImproperInputParameters && x.allFinite();
        }

        for (std::size_t k = 0; k < m; ++k) {
            const auto& c = cands[g0 + k];
            const auto b = static_cast<Eigen::Index>(3 * k);
            Peak p;
            p.prominence = c.prominence;
            const double fk = model.f_init[k] + model.w_init[k] * x(b + 1);
            const double kappa = model.w_init[k] * std::exp(x(b + 2));
            const bool sane = ok && x(b) > 0.0 && std::isfinite(kappa) &&
                              std::abs(fk - model.f_init[k]) <= kWindowWidths * model.w_init[k];
            if (sane) {
                p.f0_ghz = fk;
                p.linewidth_ghz = kappa;
                p.amplitude = x(b);
                p.fitted = true;
            } else {
                p.f0_ghz = model.f_init[k];
                p.linewidth_ghz = model.w_init[k];
                p.amplitude = c.prominence;
            }
            out.push_back(p);
        }
        g0 = g1;
    }

    std::sort(out.begin(), out.end(), [](const Peak& a, const Peak& b) { return a.f0_ghz < b.f0_ghz; });
    return out;
}

}  // namespace sshchain
