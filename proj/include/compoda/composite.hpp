#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "compoda/vec.hpp"

namespace compoda {

// The composite part psi: zero, l1(lambda), or the indicator of a ball.
// psi is simple enough that every prox the algorithms need has a closed form.
struct CompositePart {
    enum class Kind { zero, l1, ball };

    Kind kind = Kind::zero;
    double lambda = 0.0;  // l1
    double radius = 0.0;  // ball
    Vec center;           // ball; empty means the origin

    static CompositePart zero() { return {}; }

    static CompositePart l1(double lambda) {
        if (lambda < 0.0) throw std::invalid_argument("l1: lambda must be >= 0");
        CompositePart p;
        p.kind = Kind::l1;
        p.lambda = lambda;
        return p;
    }

    static CompositePart ball(double radius, Vec center = {}) {
        if (!(radius > 0.0)) throw std::invalid_argument("ball: radius must be > 0");
        CompositePart p;
        p.kind = Kind::ball;
        p.radius = radius;
        p.center = std::move(center);
        return p;
    }

    bool is_zero() const { return kind == Kind::zero; }
};

inline double psi_value(const CompositePart& psi, const Vec& x) {
    switch (psi.kind) {
        case CompositePart::Kind::zero:
            return 0.0;
        case CompositePart::Kind::l1:
            return psi.lambda * norm1(x);
        case CompositePart::Kind::ball: {
            double sq = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double c = psi.center.empty() ? 0.0 : psi.center[i];
                const double v = x[i] - c;
                sq += v * v;
            }
            // +inf outside the ball, never NaN
            return sq <= psi.radius * psi.radius * (1.0 + 1e-14)
                       ? 0.0
                       : std::numeric_limits<double>::infinity();
        }
    }
    return 0.0;
}

inline double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

// argmin_x <S, x> + A*psi(x) + (gamma/2) ||x - x0||^2
//
// This is the dual-averaging subproblem: S is the accumulated linear term,
// A the accumulated weight on psi, and x0 the anchor.
inline Vec composite_prox(const CompositePart& psi, const Vec& S, double A, double gamma,
                          const Vec& x0) {
    if (!(gamma > 0.0)) throw std::invalid_argument("composite_prox: gamma must be > 0");
    if (!(A > 0.0)) throw std::invalid_argument("composite_prox: A must be > 0");
    check_same_size(S, x0, "composite_prox");

    Vec y(x0.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = x0[i] - S[i] / gamma;

    switch (psi.kind) {
        case CompositePart::Kind::zero:
            return y;
        case CompositePart::Kind::l1: {
            const double t = A * psi.lambda / gamma;
            for (double& v : y) v = soft_threshold(v, t);
            return y;
        }
        case CompositePart::Kind::ball: {
            double sq = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) {
                const double c = psi.center.empty() ? 0.0 : psi.center[i];
                y[i] -= c;
                sq += y[i] * y[i];
            }
            const double nrm = std::sqrt(sq);
            const double s = nrm <= psi.radius ? 1.0 : psi.radius / nrm;
            for (std::size_t i = 0; i < y.size(); ++i) {
                const double c = psi.center.empty() ? 0.0 : psi.center[i];
                y[i] = c + s * y[i];
            }
            return y;
        }
    }
    return y;
}

// Classic local proximal step used by the baselines:
// argmin_{x'} h[<g, x'> + psi(x')] + 1/2 ||x' - x||^2
inline Vec prox_step(const CompositePart& psi, const Vec& g, const Vec& x, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("prox_step: h must be > 0");
    return composite_prox(psi, g, 1.0, 1.0 / h, x);
}

}  // namespace compoda
