#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "compoda/composite.hpp"
#include "compoda/rng.hpp"
#include "compoda/trace.hpp"
#include "compoda/vec.hpp"

namespace compoda {

// Inequality checks pass with relative slack 1e-9 plus absolute 1e-12 to
// absorb roundoff in the long sums.
struct CheckReport {
    std::string name;
    bool passed = false;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    long worst_round = -1;
    std::string detail;

    static bool leq(double lhs, double rhs) { return lhs <= rhs * (1.0 + 1e-9) + 1e-12; }

    std::string to_line() const {
        std::ostringstream os;
        os << (passed ? "[PASS] " : "[FAIL] ") << name << "  lhs=" << lhs << " rhs=" << rhs;
        if (worst_round >= 0) os << " worst_round=" << worst_round;
        if (!detail.empty()) os << "  (" << detail << ")";
        return os.str();
    }
};

// The virtual iterate never materializes during a run; it is one prox from
// the cumulative true-gradient sample.
inline Vec virtual_iterate(const CompositePart& psi, const Vec& g_bar_t, double A, double gamma_t,
                           const Vec& x0) {
    return composite_prox(psi, g_bar_t, A, gamma_t, x0);
}

// ---------------------------------------------------------------------------
// ||xtilde_t - x_t|| <= ||e_t|| / gamma_{t-1}  per round (gamma_{-1} = gamma_0)
// ---------------------------------------------------------------------------
inline CheckReport check_virtual_real(const RunTrace& trace) {
    CheckReport rep;
    rep.name = "virtual_real_iterate";
    rep.passed = true;
    rep.slack = std::numeric_limits<double>::infinity();
    double gamma_prev = trace.rows.empty() ? 1.0 : trace.rows.front().gamma_t;
    for (const RoundRecord& r : trace.rows) {
        const double lhs = r.dist_vr;
        const double rhs = r.err_norm / gamma_prev;
        const double slack = rhs * (1.0 + 1e-9) + 1e-12 - lhs;
        if (slack < rep.slack) {
            rep.slack = slack;
            rep.lhs = lhs;
            rep.rhs = rhs;
            rep.worst_round = r.t;
        }
        if (!CheckReport::leq(lhs, rhs)) rep.passed = false;
        gamma_prev = r.gamma_t;
    }
    if (trace.rows.empty()) rep.slack = 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Error-accounting bounds of the EControl mechanism (per client, deterministic
// per trajectory; closed-form factors below, valid for the default eta)
// ---------------------------------------------------------------------------

// factor of sum ||e_t||^2  <=  factor * sum ||g_{t+1} - g_t||^2
inline double econtrol_error_sum_factor(double delta) {
    if (!(delta > 0.0) || delta > 1.0)
        throw std::invalid_argument("econtrol_error_sum_factor: delta in (0, 1]");
    const double s = std::sqrt(1.0 - delta);
    const double onep = 1.0 + s;
    return 81.0 * (1.0 - delta) * (1.0 - delta) * onep * onep * onep * onep /
           (2.0 * delta * delta * delta * delta);
}

// factor of sum ||ghat_t - g_t||^2  <=  factor * sum ||g_{t+1} - g_t||^2
inline double econtrol_ghat_err_factor(double delta) {
    if (!(delta > 0.0) || delta > 1.0)
        throw std::invalid_argument("econtrol_ghat_err_factor: delta in (0, 1]");
    const double s = std::sqrt(1.0 - delta);
    const double onep = 1.0 + s;
    return 36.0 * (1.0 - delta) * onep * onep / (delta * delta);
}

// Checks both inequalities on every client's logged trajectory. When
// `weighted` is set, terms are divided by the gamma weights of the variable
// stepsize analysis (e_t^2 / gamma_{t-1}^2, ghat-err^2 / gamma_t^4, and the
// gradient differences by gamma_t^2, with an extra 1/gamma_0^2 on the second
// bound's factor).
inline CheckReport check_econtrol_sums(const std::vector<ClientDebugLog>& logs,
                                       const std::vector<double>& gamma_log, double delta,
                                       bool weighted) {
    CheckReport rep;
    rep.name = weighted ? "econtrol_sums_weighted" : "econtrol_sums";
    rep.passed = true;
    rep.slack = std::numeric_limits<double>::infinity();
    const double f1 = econtrol_error_sum_factor(delta);
    const double f2 = econtrol_ghat_err_factor(delta);
    const double g0 = gamma_log.empty() ? 1.0 : gamma_log.front();

    for (std::size_t c = 0; c < logs.size(); ++c) {
        const auto& log = logs[c];
        double sum_e = 0.0, sum_ghat = 0.0, sum_gdiff = 0.0;
        // e_sq[t] holds ||e_{t+1}||^2, whose weight in the variable-stepsize
        // bound is 1/gamma_t^2.
        for (std::size_t t = 0; t < log.e_sq.size(); ++t) {
            const double w_e = weighted ? gamma_log[t] * gamma_log[t] : 1.0;
            sum_e += log.e_sq[t] / w_e;
        }
        for (std::size_t t = 0; t < log.ghat_err_sq.size(); ++t) {
            const double g = gamma_log.empty() ? 1.0 : gamma_log[t];
            const double w = weighted ? g * g * g * g : 1.0;
            sum_ghat += log.ghat_err_sq[t] / w;
        }
        for (std::size_t t = 0; t < log.gdiff_sq.size(); ++t) {
            const double g = gamma_log.empty() ? 1.0 : gamma_log[t];
            const double w = weighted ? g * g : 1.0;
            sum_gdiff += log.gdiff_sq[t] / w;
        }

        const double rhs1 = f1 * sum_gdiff;
        const double rhs2 = (weighted ? f2 / (g0 * g0) : f2) * sum_gdiff;
        for (int which = 0; which < 2; ++which) {
            const double lhs = which == 0 ? sum_e : sum_ghat;
            const double rhs = which == 0 ? rhs1 : rhs2;
            const double slack = rhs * (1.0 + 1e-9) + 1e-12 - lhs;
            if (slack < rep.slack) {
                rep.slack = slack;
                rep.lhs = lhs;
                rep.rhs = rhs;
                rep.worst_round = static_cast<long>(c);
                rep.detail = std::string("client ") + std::to_string(c) + ", bound " +
                             std::to_string(which + 1);
            }
            if (!CheckReport::leq(lhs, rhs)) rep.passed = false;
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Consecutive-iterate descent bound (deterministic runs, constant gamma,
// a_t = 1):
//   sum_t [ (2 gamma - L)/2 ||x_{t+1}-x_t||^2 + <ghat_t - grad f(x_t), x_{t+1}-x_t> ]
//     <= F(x_0) - F(x_T)
// ---------------------------------------------------------------------------
inline CheckReport check_consecutive_distance(const RunTrace& trace, double L) {
    CheckReport rep;
    rep.name = "consecutive_distance";
    if (!trace.debug)
        throw std::invalid_argument("check_consecutive_distance: needs a debug trace");
    if (trace.sigma != 0.0)
        throw std::invalid_argument("check_consecutive_distance: deterministic runs only");
    const DebugData& dbg = *trace.debug;
    for (std::size_t t = 1; t < dbg.gamma_log.size(); ++t)
        if (dbg.gamma_log[t] != dbg.gamma_log[0])
            throw std::invalid_argument("check_consecutive_distance: constant gamma only");

    double lhs = 0.0;
    for (std::size_t t = 0; t < dbg.rsq.size(); ++t) {
        const double gamma = dbg.gamma_log[t];
        lhs += 0.5 * (2.0 * gamma - L) * dbg.rsq[t] + dbg.inner_ghat_err[t];
    }
    const double rhs = dbg.F_x0 - dbg.F_xT;
    rep.lhs = lhs;
    rep.rhs = rhs;
    rep.slack = rhs * (1.0 + 1e-9) + 1e-12 - lhs;
    rep.passed = CheckReport::leq(lhs, rhs);
    return rep;
}

// ---------------------------------------------------------------------------
// Communication ledger: compressed vector costs 1, uncompressed costs m >= 1.
// By convention m defaults to 1/delta for a delta-contractive channel.
// ---------------------------------------------------------------------------
inline double comm_ledger(long T, double m, int uncompressed_rounds) {
    if (!(m >= 1.0)) throw std::invalid_argument("comm_ledger: m >= 1");
    if (T < 0 || uncompressed_rounds < 0) throw std::invalid_argument("comm_ledger: negative count");
    return static_cast<double>(T) + static_cast<double>(uncompressed_rounds) * m;
}

// ---------------------------------------------------------------------------
// Reservoir sampling distribution: retained index i has probability a_i / A_T.
// Monte-Carlo over independent chains, 4 binomial standard errors per index.
// ---------------------------------------------------------------------------
inline CheckReport sampling_distribution_test(const std::vector<double>& a_weights, long runs,
                                              RngStream& rng) {
    if (runs < 10000) throw std::invalid_argument("sampling_distribution_test: runs >= 10^4");
    const std::size_t T = a_weights.size();
    if (T == 0) throw std::invalid_argument("sampling_distribution_test: empty weights");

    std::vector<long> counts(T, 0);
    for (long r = 0; r < runs; ++r) {
        double H = 0.0;
        std::size_t retained = 0;
        for (std::size_t t = 0; t < T; ++t) {
            H += a_weights[t];
            if (rng.bernoulli(a_weights[t] / H)) retained = t;
        }
        ++counts[retained];
    }

    double H_T = 0.0;
    for (double a : a_weights) H_T += a;

    CheckReport rep;
    rep.name = "sampling_distribution";
    rep.passed = true;
    rep.slack = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < T; ++i) {
        const double p = a_weights[i] / H_T;
        const double freq = static_cast<double>(counts[i]) / static_cast<double>(runs);
        const double tol = 4.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(runs));
        const double dev = std::abs(freq - p);
        const double slack = tol - dev;
        if (slack < rep.slack) {
            rep.slack = slack;
            rep.lhs = dev;
            rep.rhs = tol;
            rep.worst_round = static_cast<long>(i);
        }
        if (dev > tol) rep.passed = false;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Slow reference prox: per-coordinate golden-section search for separable psi,
// long projected-gradient descent for the ball. Independent of the closed
// forms in composite_prox; used by the check battery and the test suite.
// ---------------------------------------------------------------------------
inline Vec prox_reference(const CompositePart& psi, const Vec& S, double A, double gamma,
                          const Vec& x0) {
    const std::size_t d = x0.size();
    if (psi.kind == CompositePart::Kind::ball) {
        // projected gradient on <S,x> + gamma/2 ||x-x0||^2, step 1/gamma
        Vec x = x0;
        for (int it = 0; it < 2000; ++it) {
            Vec z(d);
            for (std::size_t j = 0; j < d; ++j) {
                const double grad = S[j] + gamma * (x[j] - x0[j]);
                z[j] = x[j] - grad / gamma;
            }
            double sq = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double c = psi.center.empty() ? 0.0 : psi.center[j];
                sq += (z[j] - c) * (z[j] - c);
            }
            if (sq > psi.radius * psi.radius) {
                const double s = psi.radius / std::sqrt(sq);
                for (std::size_t j = 0; j < d; ++j) {
                    const double c = psi.center.empty() ? 0.0 : psi.center[j];
                    z[j] = c + s * (z[j] - c);
                }
            }
            x = std::move(z);
        }
        return x;
    }

    // zero / l1 are separable: minimize m(v) = S_j v + A*lam|v| + gamma/2 (v - x0_j)^2
    const double lam = psi.kind == CompositePart::Kind::l1 ? psi.lambda : 0.0;
    Vec out(d);
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    for (std::size_t j = 0; j < d; ++j) {
        auto obj = [&](double v) {
            return S[j] * v + A * lam * std::abs(v) + 0.5 * gamma * (v - x0[j]) * (v - x0[j]);
        };
        const double mid = x0[j] - S[j] / gamma;
        const double margin = A * lam / gamma + 1.0;
        double lo = mid - margin, hi = mid + margin;
        // the objective is strictly convex; golden-section to ~1e-12 width
        double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
        double f1 = obj(x1), f2 = obj(x2);
        for (int it = 0; it < 120 && hi - lo > 1e-13 * (1.0 + std::abs(mid)); ++it) {
            if (f1 < f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = obj(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = obj(x2);
            }
        }
        out[j] = 0.5 * (lo + hi);
    }
    return out;
}

}  // namespace compoda
