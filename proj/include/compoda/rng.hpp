#pragma once

#include <cmath>
#include <cstdint>

#include "compoda/vec.hpp"

namespace compoda {

// Counter-based splittable generator (splitmix64 core). A stream is fully
// determined by (seed, stream_id), so per-client streams can be derived
// without shared state and draw sequences do not depend on scheduling.
class RngStream {
  public:
    RngStream() : state_(0) {}

    static RngStream derive(std::uint64_t seed, std::uint64_t stream_id) {
        RngStream r;
        r.state_ = mix64(seed ^ mix64(stream_id + 0x632BE59BD9B4E019ULL));
        return r;
    }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1), 53-bit resolution
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // standard normal via Box-Muller; the paired draw is cached
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    bool bernoulli(double p) { return uniform() < p; }

    Vec normal_vec(std::size_t d) {
        Vec v(d);
        for (std::size_t i = 0; i < d; ++i) v[i] = normal();
        return v;
    }

    // uniform in [lo, hi)
    double uniform_in(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

  private:
    static std::uint64_t mix64(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Fixed stream-id layout for a simulation run. Client i's noise stream is
// noise_client + i; everything else gets its own lane.
namespace stream_id {
inline constexpr std::uint64_t data_gen = 1;
inline constexpr std::uint64_t partition = 2;
inline constexpr std::uint64_t tau_chain = 3;
inline constexpr std::uint64_t smoothness_probe = 4;
inline constexpr std::uint64_t contraction_probe = 5;
inline constexpr std::uint64_t noise_client = 1000;
inline constexpr std::uint64_t compressor_client = 2000;
}  // namespace stream_id

}  // namespace compoda
