#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "compoda/io.hpp"
#include "compoda/problems.hpp"

using namespace compoda;

namespace {

std::string temp_path(const char* name) {
    return std::string("compoda_test_") + name;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    out << text;
}

}  // namespace

TEST_CASE("generated softmax is recentred and minimized at the origin") {
    const SoftmaxObjective p = gen_softmax(50, 256, 0.1, 7);
    REQUIRE(norm(p.gradient(zeros(50))) <= 1e-10);

    // value at 0 equals the log-sum-exp over -b/mu and lower-bounds probes
    double acc = 0.0;
    for (double b : p.b()) acc += std::exp(-b / 0.1);
    REQUIRE(p.value(zeros(50)) == Catch::Approx(0.1 * std::log(acc)).epsilon(1e-12));

    RngStream rng = RngStream::derive(1, 2);
    const double f0 = p.value(zeros(50));
    for (int i = 0; i < 1000; ++i) {
        Vec x = rng.normal_vec(50);
        const double r = rng.uniform_in(0.0, 10.0);
        x = scale(r / norm(x), x);
        REQUIRE(p.value(x) >= f0 - 1e-12);
    }
}

TEST_CASE("softmax gradient matches finite differences") {
    const SoftmaxObjective p = gen_softmax(10, 40, 0.1, 3);
    RngStream rng = RngStream::derive(2, 2);
    auto f = [&p](const Vec& x) { return p.value(x); };
    for (int i = 0; i < 20; ++i) {
        const Vec x = rng.normal_vec(10);
        const Vec g = p.gradient(x);
        const Vec fd = finite_diff_gradient(f, x, 1e-5);
        REQUIRE(norm(sub(g, fd)) <= 1e-5 * std::max(1.0, norm(g)));
    }
}

TEST_CASE("single-row softmax has constant gradient") {
    const SoftmaxObjective p(3, 1, 0.1, {1.0, -2.0, 0.5}, {0.3});
    RngStream rng = RngStream::derive(3, 2);
    for (int i = 0; i < 5; ++i) {
        const Vec g = p.gradient(rng.normal_vec(3));
        REQUIRE(g[0] == Catch::Approx(1.0));
        REQUIRE(g[1] == Catch::Approx(-2.0));
        REQUIRE(g[2] == Catch::Approx(0.5));
    }
}

TEST_CASE("logistic gradient matches finite differences") {
    write_text(temp_path("log.csv"), gen_logistic_csv(200, 8, 4, 11));
    const Dataset ds = load_csv_dataset(temp_path("log.csv"));
    ClientPartition part = partition_heterogeneous(ds.N, ds.labels, 1, 1.0, 5);
    const ClientSet prob = make_logistic_clients(ds, part, 0);
    auto f = [&prob](const Vec& x) { return prob.value(x); };
    RngStream rng = RngStream::derive(4, 2);
    for (int i = 0; i < 20; ++i) {
        const Vec x = rng.normal_vec(8);
        const Vec g = prob.gradient(x);
        const Vec fd = finite_diff_gradient(f, x, 1e-5);
        REQUIRE(norm(sub(g, fd)) <= 1e-5 * std::max(1.0, norm(g)));
    }
    std::remove(temp_path("log.csv").c_str());
}

TEST_CASE("heterogeneous partition covers everything exactly once") {
    std::vector<int> labels(100);
    for (int i = 0; i < 100; ++i) labels[i] = i % 10;

    SECTION("pure shuffle split") {
        const ClientPartition part = partition_heterogeneous(100, labels, 7, 1.0, 3);
        std::vector<int> seen(100, 0);
        for (const auto& cl : part.assignments)
            for (std::size_t idx : cl) ++seen[idx];
        for (int s : seen) REQUIRE(s == 1);
        for (const auto& cl : part.assignments) REQUIRE(!cl.empty());
    }

    SECTION("half random, half by label") {
        const ClientPartition part = partition_heterogeneous(100, labels, 10, 0.5, 3);
        std::vector<int> seen(100, 0);
        std::size_t total = 0;
        for (const auto& cl : part.assignments) {
            REQUIRE(!cl.empty());
            total += cl.size();
            for (std::size_t idx : cl) ++seen[idx];
        }
        REQUIRE(total == 100);
        for (int s : seen) REQUIRE(s == 1);
        // label-routed samples concentrate: client c holds more of label c
        // than a uniform split would give it
        std::size_t own_label = 0;
        for (std::size_t c = 0; c < 10; ++c)
            for (std::size_t idx : part.assignments[c])
                own_label += labels[idx] == static_cast<int>(c) ? 1 : 0;
        REQUIRE(own_label > 30);  // uniform would give ~10
    }

    SECTION("degenerate single client") {
        std::vector<int> same(20, 5);
        const ClientPartition part = partition_heterogeneous(20, same, 1, 0.0, 3);
        REQUIRE(part.assignments[0].size() == 20);
    }

    SECTION("errors") {
        REQUIRE_THROWS(partition_heterogeneous(3, {0, 1, 2}, 4, 1.0, 3));
    }
}

TEST_CASE("csv loading and its error paths") {
    SECTION("direct parse") {
        write_text(temp_path("a.csv"), "1,0.5,0.25\n0,1.0,0.0\n");
        const Dataset ds = load_csv_dataset(temp_path("a.csv"));
        REQUIRE(ds.N == 2);
        REQUIRE(ds.d == 2);
        REQUIRE((*ds.features) == std::vector<double>{0.5, 0.25, 1.0, 0.0});
        REQUIRE(ds.labels == std::vector<int>{1, 0});
        std::remove(temp_path("a.csv").c_str());
    }
    SECTION("empty file") {
        write_text(temp_path("b.csv"), "");
        REQUIRE_THROWS_WITH(load_csv_dataset(temp_path("b.csv")),
                            Catch::Matchers::ContainsSubstring("empty"));
        std::remove(temp_path("b.csv").c_str());
    }
    SECTION("ragged row names the line") {
        write_text(temp_path("c.csv"), "1,0.5,0.25,0.5\n0,1.0,0.0\n");
        REQUIRE_THROWS_WITH(load_csv_dataset(temp_path("c.csv")),
                            Catch::Matchers::ContainsSubstring("line 2"));
        std::remove(temp_path("c.csv").c_str());
    }
    SECTION("non-numeric cell") {
        write_text(temp_path("d.csv"), "1,0.5,oops\n");
        REQUIRE_THROWS_WITH(load_csv_dataset(temp_path("d.csv")),
                            Catch::Matchers::ContainsSubstring("non-numeric"));
        std::remove(temp_path("d.csv").c_str());
    }
    SECTION("normalization maps each column to [0,1]") {
        write_text(temp_path("e.csv"), "0,2,10\n1,4,30\n0,3,20\n");
        const Dataset ds = load_csv_dataset(temp_path("e.csv"), false, true);
        REQUIRE((*ds.features)[0] == 0.0);
        REQUIRE((*ds.features)[2] == 1.0);
        REQUIRE((*ds.features)[4] == Catch::Approx(0.5));
        std::remove(temp_path("e.csv").c_str());
    }
}

TEST_CASE("splitting the softmax across clients preserves the average") {
    const SoftmaxObjective p = gen_softmax(12, 40, 0.1, 9);
    SECTION("single client is the full objective") {
        const ClientSet one = split_softmax_to_clients(p, 1, 3);
        RngStream rng = RngStream::derive(5, 2);
        const Vec x = rng.normal_vec(12);
        REQUIRE(one.value(x) == Catch::Approx(p.value(x)).epsilon(1e-14));
    }
    SECTION("global value is the mean of client values") {
        const ClientSet four = split_softmax_to_clients(p, 4, 3);
        RngStream rng = RngStream::derive(6, 2);
        const Vec x = rng.normal_vec(12);
        double mean = 0.0;
        for (std::size_t i = 0; i < 4; ++i) mean += four.client_value(i, x);
        REQUIRE(four.value(x) == Catch::Approx(mean / 4.0).epsilon(1e-14));
    }
    SECTION("shared data keeps the single-machine objective") {
        const ClientSet shared = share_softmax_across_clients(p, 5);
        RngStream rng = RngStream::derive(7, 2);
        const Vec x = rng.normal_vec(12);
        REQUIRE(shared.value(x) == Catch::Approx(p.value(x)).epsilon(1e-14));
        REQUIRE(shared.n() == 5);
    }
}

TEST_CASE("smoothness estimates") {
    SECTION("quadratic is exact") {
        class Quad : public SmoothFn {
          public:
            double value(const Vec& x) const override { return 0.5 * sq_norm(x); }
            Vec gradient(const Vec& x) const override { return x; }
            std::size_t dim() const override { return 4; }
        };
        ClientSet prob({std::make_shared<Quad>(), std::make_shared<Quad>()});
        RngStream rng = RngStream::derive(8, 2);
        const auto est = estimate_smoothness(prob, 20, rng, zeros(4), 1.0);
        REQUIRE(est.L_hat == Catch::Approx(1.0).margin(1e-9));
        REQUIRE(est.ell_hat == Catch::Approx(1.0).margin(1e-9));
    }
    SECTION("single client collapses the two constants") {
        const SoftmaxObjective p = gen_softmax(8, 24, 0.2, 4);
        const ClientSet one = split_softmax_to_clients(p, 1, 3);
        RngStream rng = RngStream::derive(9, 2);
        const auto est = estimate_smoothness(one, 30, rng, zeros(8), 1.0);
        REQUIRE(est.L_hat == Catch::Approx(est.ell_hat).epsilon(1e-12));
    }
    SECTION("ell dominates L on every probe set") {
        const SoftmaxObjective p = gen_softmax(8, 24, 0.2, 4);
        const ClientSet four = split_softmax_to_clients(p, 4, 3);
        RngStream rng = RngStream::derive(10, 2);
        const auto est = estimate_smoothness(four, 30, rng, zeros(8), 1.0);
        REQUIRE(est.ell_hat >= est.L_hat - 1e-12);
    }
}

TEST_CASE("stochastic gradients are unbiased with the advertised variance") {
    const SoftmaxObjective p = gen_softmax(10, 30, 0.2, 5);
    const ClientSet prob = split_softmax_to_clients(p, 1, 3);
    RngStream rng = RngStream::derive(11, 2);
    const Vec x = rng.normal_vec(10);
    const Vec g = prob.client_gradient(0, x);
    const double sigma = 2.0;

    const int draws = 10000;
    Vec mean_err = zeros(10);
    double var_acc = 0.0;
    for (int i = 0; i < draws; ++i) {
        const Vec gs = prob.stochastic_client_gradient(0, x, sigma, rng);
        const Vec err = sub(gs, g);
        add_in_place(mean_err, err);
        var_acc += sq_norm(err);
    }
    // per-coordinate empirical mean within 4 sigma / sqrt(draws)
    for (double v : mean_err) REQUIRE(std::abs(v / draws) <= 4.0 * sigma / std::sqrt(draws));
    // E||eps||^2 = sigma^2 within 5%
    REQUIRE(var_acc / draws == Catch::Approx(sigma * sigma).epsilon(0.05));
}

TEST_CASE("softmax instance files round-trip") {
    const SoftmaxObjective p = gen_softmax(6, 10, 0.25, 13);
    const std::string text = softmax_instance_to_string(p);
    const SoftmaxObjective q = softmax_instance_from_string(text);
    REQUIRE(q.dim() == 6);
    REQUIRE(q.rows() == 10);
    REQUIRE(q.a_flat() == p.a_flat());
    REQUIRE(q.b() == p.b());
    REQUIRE(softmax_instance_to_string(q) == text);
}

TEST_CASE("reference solve reaches the known optimum") {
    const SoftmaxObjective p = gen_softmax(10, 40, 0.1, 15);
    const ClientSet prob = split_softmax_to_clients(p, 1, 3);
    const CompositePart psi = CompositePart::l1(0.1);
    // recentred instance: x* = 0 and F* = f(0)
    const double ref = reference_solve(prob, psi, Vec(10, 0.4), 800);
    REQUIRE(ref == Catch::Approx(p.value(zeros(10))).margin(1e-8));
}
