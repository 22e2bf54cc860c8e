#include "sshchain/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sshchain/error.hpp"
#include "sshchain/spectral.hpp"

namespace sshchain {

std::string_view to_string(ParamFamily family) noexcept {
    switch (family) {
        case ParamFamily::C0: return "c0_fF";
        case ParamFamily::L0: return "l0_nH";
        case ParamFamily::Cw: return "cw_fF";
        case ParamFamily::Lv: return "lv_nH";
    }
    return "?";
}

std::vector<double>& family_values(CircuitSpec& spec, ParamFamily family) {
    switch (family) {
        case ParamFamily::C0: return spec.c0_ff;
        case ParamFamily::L0: return spec.l0_nh;
        case ParamFamily::Cw: return spec.cw_ff;
        case ParamFamily::Lv: break;
    }
    return spec.lv_nh;
}

const std::vector<double>& family_values(const CircuitSpec& spec, ParamFamily family) {
    return family_values(const_cast<CircuitSpec&>(spec), family);
}

std::vector<bool>& FitMask::of(ParamFamily family) {
    switch (family) {
        case ParamFamily::C0: return c0;
        case ParamFamily::L0: return l0;
        case ParamFamily::Cw: return cw;
        case ParamFamily::Lv: break;
    }
    return lv;
}

const std::vector<bool>& FitMask::of(ParamFamily family) const {
    return const_cast<FitMask*>(this)->of(family);
}

std::vector<std::pair<double, double>>& FitBounds::of(ParamFamily family) {
    switch (family) {
        case ParamFamily::C0: return c0;
        case ParamFamily::L0: return l0;
        case ParamFamily::Cw: return cw;
        case ParamFamily::Lv: break;
    }
    return lv;
}

const std::vector<std::pair<double, double>>& FitBounds::of(ParamFamily family) const {
    return const_cast<FitBounds*>(this)->of(family);
}

const FamilySpread* DisorderReport::find(ParamFamily family) const {
    for (const auto& s : spreads) {
        if (s.family == family) return &s;
    }
    return nullptr;
}

namespace {

bool entry_free(const FitProblem& p, ParamFamily family, std::size_t i) {
    const auto& mask = p.free_mask.of(family);
    const double value = family_values(p.start, family)[i];
    if (mask.empty()) return std::isfinite(value);
    return mask[i];
}

std::pair<double, double> entry_bounds(const FitProblem& p, ParamFamily family, std::size_t i) {
    const auto& b = p.bounds.of(family);
    if (!b.empty()) return b[i];
    const double value = family_values(p.start, family)[i];
    return {0.5 * value, 2.0 * value};
}

// One optimizer coordinate: a log-multiplier on the listed entries of a family.
struct Slot {
    ParamFamily family;
    std::vector<std::size_t> entries;
};

std::vector<Slot> build_slots(const FitProblem& p) {
    std::vector<Slot> slots;
    for (ParamFamily fam : kParamFamilies) {
        std::vector<std::size_t> free;
        for (std::size_t i = 0; i < family_values(p.start, fam).size(); ++i) {
            if (entry_free(p, fam, i)) free.push_back(i);
        }
        if (free.empty()) continue;
        if (p.is_tied(fam)) {
            slots.push_back({fam, free});
        } else {
            for (std::size_t i : free) slots.push_back({fam, {i}});
        }
    }
    return slots;
}

}  // namespace

void FitProblem::validate() const {
    start.validate();
    if (target_freqs_ghz.size() != start.sites()) {
        throw ValidationError("fit: expected " + std::to_string(start.sites()) +
                              " target frequencies, got " + std::to_string(target_freqs_ghz.size()));
    }
    for (double f : target_freqs_ghz) {
        if (!(std::isfinite(f) && f > 0.0)) throw ValidationError("fit: targets must be finite and > 0");
    }
    for (ParamFamily fam : kParamFamilies) {
        const auto& values = family_values(start, fam);
        const std::string name(to_string(fam));
        const auto& mask = free_mask.of(fam);
        if (!mask.empty() && mask.size() != values.size()) {
            throw ValidationError("fit: mask for " + name + " has wrong length");
        }
        const auto& b = bounds.of(fam);
        if (!b.empty() && b.size() != values.size()) {
            throw ValidationError("fit: bounds for " + name + " have wrong length");
        }
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!entry_free(*this, fam, i)) continue;
            const std::string tag = name + "[" + std::to_string(i) + "]";
            if (!std::isfinite(values[i])) {
                throw ValidationError("fit: " + tag + " is infinite and cannot be free");
            }
            const auto [lo, hi] = entry_bounds(*this, fam, i);
            if (!(lo > 0.0 && lo < hi)) throw ValidationError("fit: bounds of " + tag + " invalid");
            if (values[i] < lo || values[i] > hi) {
                throw ValidationError("fit: start value of " + tag + " lies outside its bounds");
            }
        }
    }
}

std::vector<double> model_frequencies(const CircuitSpec& circuit) {
    const auto spectrum = eigendecompose(build_tb_hamiltonian(map_circuit_to_tb(circuit)));
    return {spectrum.eigenvalues.data(), spectrum.eigenvalues.data() + spectrum.eigenvalues.size()};
}

double frequency_rms(const CircuitSpec& circuit, std::span<const double> targets_ghz) {
    const auto model = model_frequencies(circuit);
    if (model.size() != targets_ghz.size()) {
        throw ValidationError("frequency_rms: target count does not match the circuit");
    }
    std::vector<double> t(targets_ghz.begin(), targets_ghz.end());
    std::sort(t.begin(), t.end());
    double ss = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) ss += (model[i] - t[i]) * (model[i] - t[i]);
    return std::sqrt(ss / static_cast<double>(t.size()));
}

FitResult fit_circuit_params(const FitProblem& problem) {
    problem.validate();
    const auto slots = build_slots(problem);
    std::vector<double> targets = problem.target_freqs_ghz;
    std::sort(targets.begin(), targets.end());

    std::size_t evaluations = 0;
    std::size_t clamped_evaluations = 0;
    auto realize = [&](const Eigen::VectorXd& x, bool& clamped) {
        CircuitSpec spec = problem.start;
        clamped = false;
        for (std::size_t s = 0; s < slots.size(); ++s) {
            auto& values = family_values(spec, slots[s].family);
            const double factor = std::exp(x(static_cast<Eigen::Index>(s)));
            for (std::size_t i : slots[s].entries) {
                const auto [lo, hi] = entry_bounds(problem, slots[s].family, i);
                const double raw = values[i] * factor;
                values[i] = std::clamp(raw, lo, hi);
                clamped = clamped || values[i] != raw;
            }
        }
        return spec;
    };
    const Objective objective = [&](const Eigen::VectorXd& x) {
        bool clamped = false;
        const CircuitSpec spec = realize(x, clamped);
        ++evaluations;
        if (clamped) ++clamped_evaluations;
        try {
            return frequency_rms(spec, targets);
        } catch (const ValidationError&) {
            return kInfinity;
        }
    };

    FitResult out;
    out.parameters = slots.size();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(slots.size()));
    if (!slots.empty()) {
        auto run = nelder_mead(objective, x, problem.options);
        out.iterations = run.iterations;
        for (std::size_t r = 0; r < problem.restarts; ++r) {
            auto next = nelder_mead(objective, run.x, problem.options);
            out.iterations += next.iterations;
            if (!(next.value < run.value)) break;
            const double gain = run.value - next.value;
            run = std::move(next);
            if (gain < problem.options.tol_f) break;
        }
        x = run.x;
        out.converged = run.converged;
        if (!out.converged) out.diagnostics.push_back("iteration limit reached before tolerance");
    } else {
        out.converged = true;
        out.diagnostics.push_back("no free parameters");
    }

    out.best = realize(x, out.clamped);
    if (out.clamped) out.diagnostics.push_back("best point clamped at a parameter bound");
    out.model_freqs_ghz = model_frequencies(out.best);
    out.residual_rms_khz = frequency_rms(out.best, targets) * 1e6;
    out.evaluations = evaluations;
    out.clamped_evaluations = clamped_evaluations;
    out.disorder_report = disorder_report(out.best);
    return out;
}

DisorderReport disorder_report(const CircuitSpec& fitted) {
    fitted.validate();
    DisorderReport out;
    for (ParamFamily fam : kParamFamilies) {
        std::vector<double> vals;
        for (double v : family_values(fitted, fam)) {
            if (std::isfinite(v)) vals.push_back(v);
        }
        if (vals.size() < 2) {
            out.notes.push_back(std::string(to_string(fam)) + ": fewer than 2 finite entries, omitted");
            continue;
        }
        const double n = static_cast<double>(vals.size());
        const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : vals) ss += (v - mean) * (v - mean);
        out.spreads.push_back({fam, 100.0 * std::sqrt(ss / n) / mean});
    }
    return out;
}

}  // namespace sshchain
