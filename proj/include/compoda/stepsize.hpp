#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace compoda {

// Parameters feeding the stepsize presets. sigma here is the per-client noise
// level of the oracle assumption; n enters through the noise averaging.
struct StepsizeParams {
    double ell = 0.0;    // average smoothness of the f_i
    double L = 0.0;      // smoothness of f
    double delta = 0.0;  // compressor contraction
    double sigma = 0.0;  // per-client gradient noise (std)
    long n = 1;          // number of clients
    double R0 = 0.0;     // ||x0 - x*|| estimate
    double F0 = 0.0;     // F(x0) - F* estimate (real-iterates preset only)
};

namespace detail {
inline void require_base(const StepsizeParams& p, long T, const char* who) {
    if (!(p.ell > 0.0)) throw std::invalid_argument(std::string(who) + ": ell must be > 0");
    if (!(p.delta > 0.0) || p.delta > 1.0)
        throw std::invalid_argument(std::string(who) + ": delta in (0, 1]");
    if (!(p.R0 > 0.0)) throw std::invalid_argument(std::string(who) + ": R0 must be > 0");
    if (p.sigma < 0.0) throw std::invalid_argument(std::string(who) + ": sigma must be >= 0");
    if (p.sigma > 0.0 && (p.n < 1 || T < 1))
        throw std::invalid_argument(std::string(who) + ": n, T >= 1 when sigma > 0");
}
}  // namespace detail

// Constant stepsize of the main convergence theorem (with the initial
// stochastic gradient step):
//   gamma = max{ 24 sqrt(2) ell / delta,
//                sqrt(T sigma^2 / (n R0^2)),
//                17 T^{1/3} ell^{1/3} sigma^{2/3} / (R0^{2/3} delta^{4/3}) }
inline double gamma_fixed(const StepsizeParams& p, long T) {
    detail::require_base(p, T, "gamma_fixed");
    const double t1 = 24.0 * std::sqrt(2.0) * p.ell / p.delta;
    double g = t1;
    if (p.sigma > 0.0) {
        const double t2 = std::sqrt(static_cast<double>(T) * p.sigma * p.sigma /
                                    (static_cast<double>(p.n) * p.R0 * p.R0));
        const double t3 = 17.0 * std::cbrt(static_cast<double>(T)) * std::cbrt(p.ell) *
                          std::pow(p.sigma, 2.0 / 3.0) /
                          (std::pow(p.R0, 2.0 / 3.0) * std::pow(p.delta, 4.0 / 3.0));
        g = std::max({t1, t2, t3});
    }
    return g;
}

// Nondecreasing schedule of the variable-stepsize theorem:
//   gamma_t = 136 ell / delta + sqrt(2 t sigma^2 / (n R0^2))
//           + 646 ell^{1/3} sigma^{2/3} t^{1/3} / (R0^{2/3} delta^{4/3})
inline double gamma_variable(long t, const StepsizeParams& p) {
    detail::require_base(p, std::max(t, 1L), "gamma_variable");
    if (t < 0) throw std::invalid_argument("gamma_variable: t >= 0");
    double g = 136.0 * p.ell / p.delta;
    if (p.sigma > 0.0) {
        g += std::sqrt(2.0 * static_cast<double>(t) * p.sigma * p.sigma /
                       (static_cast<double>(p.n) * p.R0 * p.R0));
        g += 646.0 * std::cbrt(p.ell) * std::pow(p.sigma, 2.0 / 3.0) *
             std::cbrt(static_cast<double>(t)) /
             (std::pow(p.R0, 2.0 / 3.0) * std::pow(p.delta, 4.0 / 3.0));
    }
    return g;
}

// Constant stepsize of the real-iterates guarantee:
//   gamma = max{ 24 sqrt(2) ell / delta,
//                32 ell^{2/3} F0^{1/3} / (delta^{4/3} R0^{2/3}),
//                135 sigma sqrt(T) / (delta^2 R0) }
inline double gamma_real(const StepsizeParams& p, long T) {
    detail::require_base(p, T, "gamma_real");
    if (p.F0 < 0.0) throw std::invalid_argument("gamma_real: F0 must be >= 0");
    const double t1 = 24.0 * std::sqrt(2.0) * p.ell / p.delta;
    const double t2 = 32.0 * std::pow(p.ell, 2.0 / 3.0) * std::cbrt(p.F0) /
                      (std::pow(p.delta, 4.0 / 3.0) * std::pow(p.R0, 2.0 / 3.0));
    const double t3 = p.sigma > 0.0 ? 135.0 * p.sigma * std::sqrt(static_cast<double>(T)) /
                                          (p.delta * p.delta * p.R0)
                                    : 0.0;
    return std::max({t1, t2, t3});
}

enum class StepsizePreset { fixed_theorem, variable_theorem, real_iterates, constant };

struct ScheduleSpec {
    StepsizePreset preset = StepsizePreset::fixed_theorem;
    StepsizeParams params;
    double constant_gamma = 0.0;  // preset == constant

    double gamma_at(long t, long T) const {
        switch (preset) {
            case StepsizePreset::fixed_theorem:
                return gamma_fixed(params, T);
            case StepsizePreset::variable_theorem:
                return gamma_variable(t, params);
            case StepsizePreset::real_iterates:
                return gamma_real(params, T);
            case StepsizePreset::constant:
                if (!(constant_gamma > 0.0))
                    throw std::invalid_argument("ScheduleSpec: constant gamma must be > 0");
                return constant_gamma;
        }
        return constant_gamma;
    }
};

}  // namespace compoda
