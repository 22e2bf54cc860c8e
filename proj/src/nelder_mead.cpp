#include <algorithm>
#include <cmath>
#include <numeric>

#include "sshchain/error.hpp"
#include "sshchain/estimation.hpp"

namespace sshchain {

NelderMeadResult nelder_mead(const Objective& objective, const Eigen::VectorXd& start,
                             const NelderMeadOptions& options) {
    const Eigen::Index n = start.size();
    if (n == 0) throw ValidationError("nelder_mead: empty start vector");
    if (!start.allFinite()) throw ValidationError("nelder_mead: non-finite start vector");
    if (!(options.tol_f >= 0.0 && options.tol_x >= 0.0 && options.initial_step != 0.0)) {
        throw ValidationError("nelder_mead: invalid options");
    }

    auto eval = [&](const Eigen::VectorXd& x) {
        const double v = objective(x);
        return std::isfinite(v) ? v : kInfinity;
    };

    const double f_start = objective(start);
    if (!std::isfinite(f_start)) throw ValidationError("nelder_mead: objective not finite at start");

    std::vector<Eigen::VectorXd> xs(static_cast<std::size_t>(n + 1), start);
    std::vector<double> fs(static_cast<std::size_t>(n + 1), f_start);
    for (Eigen::Index i = 0; i < n; ++i) {
        auto& x = xs[static_cast<std::size_t>(i + 1)];
        x(i) += options.initial_step;
        fs[static_cast<std::size_t>(i + 1)] = eval(x);
    }

    std::vector<std::size_t> order(xs.size());
    auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
        std::vector<Eigen::VectorXd> nx;
        std::vector<double> nf;
        for (std::size_t i : order) {
            nx.push_back(std::move(xs[i]));
            nf.push_back(fs[i]);
        }
        xs = std::move(nx);
        fs = std::move(nf);
    };

    NelderMeadResult out;
    const auto last = static_cast<std::size_t>(n);
    sort_simplex();
    while (true) {
        const double spread = fs[last] - fs[0];
        double size = 0.0;
        for (std::size_t i = 1; i <= last; ++i) {
            size = std::max(size, (xs[i] - xs[0]).cwiseAbs().maxCoeff());
        }
        if (spread < options.tol_f || size < options.tol_x) {
            out.converged = true;
            break;
        }
        if (out.iterations >= options.max_iter) break;
        ++out.iterations;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (std::size_t i = 0; i < last; ++i) centroid += xs[i];
        centroid /= static_cast<double>(n);

        const Eigen::VectorXd xr = centroid + (centroid - xs[last]);
        const double fr = eval(xr);
        bool shrink = false;
        if (fr < fs[0]) {
            const Eigen::VectorXd xe = centroid + 2.0 * (xr - centroid);
            const double fe = eval(xe);
            if (fe < fr) {
                xs[last] = xe;
                fs[last] = fe;
            } else {
                xs[last] = xr;
                fs[last] = fr;
            }
        } else if (fr < fs[last - 1]) {
            xs[last] = xr;
            fs[last] = fr;
        } else if (fr < fs[last]) {
            const Eigen::VectorXd xc = centroid + 0.5 * (xr - centroid);
            const double fc = eval(xc);
            if (fc <= fr) {
                xs[last] = xc;
                fs[last] = fc;
            } else {
                shrink = true;
            }
        } else {
            const Eigen::VectorXd xc = centroid + 0.5 * (xs[last] - centroid);
            const double fc = eval(xc);
            if (fc < fs[last]) {
                xs[last] = xc;
                fs[last] = fc;
            } else {
                shrink = true;
            }
        }
        if (shrink) {
            for (std::size_t i = 1; i <= last; ++i) {
                xs[i] = xs[0] + 0.5 * (xs[i] - xs[0]);
                fs[i] = eval(xs[i]);
            }
        }
        sort_simplex();
        out.best_history.push_back(fs[0]);
    }

    out.x = xs[0];
    out.value = fs[0];
    return out;
}

}  // namespace sshchain
