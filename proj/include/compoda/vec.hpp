#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace compoda {

// Dense d-dimensional vector. All reductions run in a fixed left-to-right
// order so that traces are reproducible bit-for-bit across runs.
using Vec = std::vector<double>;

inline void check_same_size(const Vec& a, const Vec& b, const char* where) {
    if (a.size() != b.size()) {
        throw std::invalid_argument(std::string(where) + ": length mismatch (" +
                                    std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + ")");
    }
}

inline Vec zeros(std::size_t d) { return Vec(d, 0.0); }

inline Vec add(const Vec& a, const Vec& b) {
    check_same_size(a, b, "add");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline Vec sub(const Vec& a, const Vec& b) {
    check_same_size(a, b, "sub");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline Vec scale(double alpha, const Vec& a) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = alpha * a[i];
    return r;
}

// r = alpha*a + b
inline Vec axpy(double alpha, const Vec& a, const Vec& b) {
    check_same_size(a, b, "axpy");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = alpha * a[i] + b[i];
    return r;
}

inline void add_in_place(Vec& a, const Vec& b) {
    check_same_size(a, b, "add_in_place");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

inline void axpy_in_place(Vec& a, double alpha, const Vec& b) {
    check_same_size(a, b, "axpy_in_place");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += alpha * b[i];
}

inline double dot(const Vec& a, const Vec& b) {
    check_same_size(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double sq_norm(const Vec& a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return s;
}

inline double norm(const Vec& a) { return std::sqrt(sq_norm(a)); }

inline double norm1(const Vec& a) {
    double s = 0.0;
    for (double v : a) s += std::abs(v);
    return s;
}

inline bool all_finite(const Vec& a) {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

using ScalarField = std::function<double(const Vec&)>;

// Central-difference gradient, one probe pair per coordinate. Test oracle for
// the analytic gradients; not used on any algorithm path.
inline Vec finite_diff_gradient(const ScalarField& f, const Vec& x, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite_diff_gradient: h must be > 0");
    Vec g(x.size());
    Vec xp = x, xm = x;
    for (std::size_t j = 0; j < x.size(); ++j) {
        xp[j] = x[j] + h;
        xm[j] = x[j] - h;
        const double fp = f(xp);
        const double fm = f(xm);
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw std::runtime_error("finite_diff_gradient: non-finite evaluation at coordinate " +
                                     std::to_string(j));
        }
        g[j] = (fp - fm) / (2.0 * h);
        xp[j] = x[j];
        xm[j] = x[j];
    }
    return g;
}

}  // namespace compoda
