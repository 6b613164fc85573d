#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

#include "compoda/rng.hpp"
#include "compoda/vec.hpp"

namespace compoda {

// Contractive compression operator: ||C(s) - s||^2 <= (1 - delta) ||s||^2.
// Only deterministic compressors are shipped (Top-K, identity), but compress()
// takes an RngStream so randomized ones can be added without touching callers.
struct Compressor {
    enum class Kind { top_k, identity };

    Kind kind = Kind::identity;
    std::size_t k = 0;  // top_k only
    std::size_t d = 0;

    static Compressor identity(std::size_t d) { return Compressor{Kind::identity, 0, d}; }

    static Compressor top_k(std::size_t k, std::size_t d) {
        if (k < 1 || k > d) throw std::invalid_argument("top_k: need 1 <= k <= d");
        return Compressor{Kind::top_k, k, d};
    }

    // k = max(1, round(k_frac * d))
    static Compressor top_k_frac(double k_frac, std::size_t d) {
        if (!(k_frac > 0.0) || k_frac > 1.0) throw std::invalid_argument("top_k_frac: need k_frac in (0, 1]");
        auto k = static_cast<std::size_t>(std::llround(k_frac * static_cast<double>(d)));
        k = std::max<std::size_t>(1, std::min(k, d));
        return top_k(k, d);
    }
};

// Advertised contraction parameter: k/d for top_k, 1 for identity.
inline double contraction_delta(const Compressor& c) {
    if (c.kind == Compressor::Kind::top_k)
        return static_cast<double>(c.k) / static_cast<double>(c.d);
    return 1.0;
}

inline Vec compress(const Compressor& c, const Vec& s, RngStream& /*rng*/) {
    if (s.size() != c.d) throw std::invalid_argument("compress: vector length != compressor dimension");
    if (c.kind == Compressor::Kind::identity || c.k == c.d) return s;

    // Keep the k largest-magnitude entries; ties go to the lowest index.
    std::vector<std::size_t> idx(s.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto larger = [&s](std::size_t a, std::size_t b) {
        const double ma = std::abs(s[a]);
        const double mb = std::abs(s[b]);
        if (ma != mb) return ma > mb;
        return a < b;
    };
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(c.k - 1), idx.end(), larger);

    Vec out(s.size(), 0.0);
    for (std::size_t j = 0; j < c.k; ++j) out[idx[j]] = s[idx[j]];
    return out;
}

struct ContractionReport {
    double max_ratio = 0.0;   // max over trials of ||C(s)-s||^2 / ||s||^2
    long worst_trial = -1;
    std::uint64_t stream_seed = 0;   // (seed, stream_id) reproducing the worst draw
    std::uint64_t stream_id = 0;
    bool passed = false;
};

// Empirical check of the contraction inequality on standard-normal draws.
// For the shipped compressors the bound is per-call, so a single violation
// fails the report.
inline ContractionReport verify_contraction(const Compressor& c, long trials,
                                            std::uint64_t seed,
                                            std::uint64_t stream = stream_id::contraction_probe) {
    if (trials < 1) throw std::invalid_argument("verify_contraction: trials >= 1");
    RngStream rng = RngStream::derive(seed, stream);
    ContractionReport rep;
    rep.stream_seed = seed;
    rep.stream_id = stream;
    const double bound = 1.0 - contraction_delta(c) + 1e-12;
    for (long t = 0; t < trials; ++t) {
        Vec s = rng.normal_vec(c.d);
        const double total = sq_norm(s);
        if (total == 0.0) continue;
        Vec cs = compress(c, s, rng);
        const double ratio = sq_norm(sub(cs, s)) / total;
        if (ratio > rep.max_ratio) {
            rep.max_ratio = ratio;
            rep.worst_trial = t;
        }
    }
    rep.passed = rep.max_ratio <= bound;
    return rep;
}

}  // namespace compoda
