#include <catch2/catch_amalgamated.hpp>

#include "compoda/compressor.hpp"

using namespace compoda;

namespace {
RngStream test_rng() { return RngStream::derive(17, 99); }
}  // namespace

TEST_CASE("top-1 keeps the largest magnitude") {
    RngStream rng = test_rng();
    const Compressor c = Compressor::top_k(1, 3);
    const Vec out = compress(c, {3, -1, 2}, rng);
    REQUIRE(out == Vec{3, 0, 0});
    // residual bound: 5 <= (1 - 1/3) * 14
    REQUIRE(sq_norm(sub(out, {3, -1, 2})) == 5.0);
    REQUIRE(5.0 <= (1.0 - 1.0 / 3.0) * 14.0);
}

TEST_CASE("top-k with k = d is the identity") {
    RngStream rng = test_rng();
    const Compressor c = Compressor::top_k(4, 4);
    const Vec s{0.5, -2, 0, 7};
    REQUIRE(compress(c, s, rng) == s);
    REQUIRE(contraction_delta(c) == 1.0);
}

TEST_CASE("magnitude ties break to the lowest index") {
    RngStream rng = test_rng();
    const Compressor c = Compressor::top_k(1, 2);
    REQUIRE(compress(c, {2, -2}, rng) == Vec{2, 0});
    REQUIRE(compress(c, {-2, 2}, rng) == Vec{-2, 0});
}

TEST_CASE("advertised contraction parameter") {
    REQUIRE(contraction_delta(Compressor::top_k(20, 200)) == 0.1);
    REQUIRE(contraction_delta(Compressor::identity(10)) == 1.0);
    REQUIRE(contraction_delta(Compressor::top_k(7, 7)) == 1.0);
}

TEST_CASE("k_frac rounding keeps at least one entry") {
    REQUIRE(Compressor::top_k_frac(0.1, 200).k == 20);
    REQUIRE(Compressor::top_k_frac(0.01, 10).k == 1);
    REQUIRE(Compressor::top_k_frac(1.0, 5).k == 5);
    REQUIRE_THROWS_AS(Compressor::top_k(0, 4), std::invalid_argument);
    REQUIRE_THROWS_AS(Compressor::top_k(5, 4), std::invalid_argument);
}

TEST_CASE("verify_contraction on shipped compressors") {
    const auto id_rep = verify_contraction(Compressor::identity(8), 500, 3);
    REQUIRE(id_rep.passed);
    REQUIRE(id_rep.max_ratio == 0.0);

    const auto half = verify_contraction(Compressor::top_k(1, 2), 10000, 4);
    REQUIRE(half.passed);
    REQUIRE(half.max_ratio <= 0.5);

    const auto tight = verify_contraction(Compressor::top_k(199, 200), 10000, 5);
    REQUIRE(tight.passed);
    REQUIRE(tight.max_ratio <= 0.005);

    REQUIRE_THROWS_AS(verify_contraction(Compressor::identity(4), 0, 1), std::invalid_argument);
}

TEST_CASE("per-call contraction, idempotence and support size on random input") {
    RngStream rng = test_rng();
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t d = 1 + rng.uniform_index(12);
        const std::size_t k = 1 + rng.uniform_index(d);
        const Compressor c = Compressor::top_k(k, d);
        Vec s = rng.normal_vec(d);
        if (trial % 17 == 0) s = zeros(d);  // zero vector compresses to zero
        const Vec out = compress(c, s, rng);

        REQUIRE(sq_norm(sub(out, s)) <= (1.0 - contraction_delta(c)) * sq_norm(s) + 1e-15);
        REQUIRE(compress(c, out, rng) == out);
        std::size_t support = 0;
        for (double v : out) support += v != 0.0 ? 1 : 0;
        REQUIRE(support <= k);
    }
}

TEST_CASE("compress rejects wrong dimension") {
    RngStream rng = test_rng();
    REQUIRE_THROWS_AS(compress(Compressor::top_k(1, 3), {1, 2}, rng), std::invalid_argument);
}
