#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "capmetric/capacity.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace capmetric;
using namespace capmetric::testing;

TEST_CASE("forced instance: both unit edges carry gradient one") {
    Space p3 = make_path(3);
    Domain d(p3, {1});
    for (double p : {1.0, 1.5, 2.0, 3.0}) {
        auto res = capacity({d, {1}, std::nullopt, p});
        CHECK(res.value == doctest::Approx(2.0));
        CHECK(res.extremal == ScalarField{0, 1, 0});
    }
}

TEST_CASE("five-vertex path: hand-solved quadratic optima") {
    Space p5 = make_path(5);
    Domain d(p5, {1, 2, 3});

    auto center = capacity({d, {2}, std::nullopt, 2});
    CHECK(center.value == doctest::Approx(1.0));
    CHECK(center.extremal[1] == doctest::Approx(0.5));
    CHECK(center.extremal[2] == doctest::Approx(1.0));
    CHECK(center.extremal[3] == doctest::Approx(0.5));

    auto off = capacity({d, {1}, std::nullopt, 2});
    CHECK(off.value == doctest::Approx(4.0 / 3.0));
}

TEST_CASE("degenerate capacity inputs") {
    Space p5 = make_path(5);
    Domain d(p5, {1, 2, 3});
    auto empty = capacity({d, {}, std::nullopt, 2});
    CHECK(empty.value == 0.0);
    CHECK(empty.extremal == ScalarField(5, 0.0));

    CHECK_THROWS_AS(capacity({d, {0}, std::nullopt, 2}), std::invalid_argument);
    CHECK_THROWS_AS(capacity({d, {2}, std::nullopt, 0.5}), std::invalid_argument);
}

TEST_CASE("conductivity: named examples and constraints") {
    Space p5 = make_path(5);
    Domain all(p5, {0, 1, 2, 3, 4});

    auto unconstrained = conductivity({all, {2}, std::vector<int>{0, 1, 2, 3, 4}, 2});
    CHECK(unconstrained.value == doctest::Approx(0.0));

    auto mid = conductivity({all, {2}, std::vector<int>{1, 2, 3}, 2});
    CHECK(mid.value == doctest::Approx(1.0));

    auto none = conductivity({all, {}, std::vector<int>{1, 2, 3}, 2});
    CHECK(none.value == 0.0);

    CHECK_THROWS_AS(conductivity({all, {0}, std::vector<int>{1, 2}, 2}), std::invalid_argument);
}

TEST_CASE("conductivity is monotone in the outer set and below the pair capacity") {
    SplitMix64 rng(41);
    for (int t = 0; t < 10; ++t) {
        int n = 4 + int(rng.below(3));
        Space s = random_space(rng, n, true);
        Domain d(s, s.interior());
        if (d.omega.size() < 3) continue;
        std::vector<int> F{d.omega[0]};
        std::vector<int> g_small{d.omega[0], d.omega[1]};
        std::vector<int> g_big = d.omega;
        for (double p : {1.0, 2.0, 3.0}) {
            double small = conductivity({d, F, g_small, p}).value;
            double big = conductivity({d, F, g_big, p}).value;
            CHECK(big <= small + 1e-9);
            Domain pair_domain(s, g_small);
            double cap_fg = capacity({pair_domain, F, std::nullopt, p}).value;
            CHECK(small <= cap_fg + 1e-9 * std::max(1.0, cap_fg));
        }
    }
}

TEST_CASE("global capacity needs a boundary and avoids it") {
    Space p3b = make_path(3, true);
    CHECK(global_capacity(p3b, {1}, 1).value == doctest::Approx(2.0));
    CHECK(global_capacity(p3b, {}, 1).value == 0.0);

    Space p5b = make_path(5, true);
    CHECK(global_capacity(p5b, {2}, 2).value == doctest::Approx(1.0));

    Space open = make_path(3);
    CHECK_THROWS_WITH_AS(global_capacity(open, {1}, 2),
                         doctest::Contains("far-field boundary"), std::invalid_argument);
    CHECK_THROWS_AS(global_capacity(p3b, {0}, 2), std::invalid_argument);
}

TEST_CASE("p=2 matches the series/parallel reduction oracle") {
    SplitMix64 rng(1234);
    for (int t = 0; t < 25; ++t) {
        auto net = random_sp_net(rng, 3);
        double expected = sp_effective_conductance(*net);
        Space s = realize_sp(*net);
        std::vector<int> omega;
        for (int v = 0; v < s.vertex_count(); ++v)
            if (v != 1) omega.push_back(v);  // everything but the sink terminal
        Domain d(s, omega);
        double got = capacity({d, {0}, std::nullopt, 2}).value;
        CHECK(got == doctest::Approx(expected).epsilon(1e-8));
    }
}

TEST_CASE("p=1 equals the exhaustive minimum cut") {
    SplitMix64 rng(555);
    // Unit-data graphs on up to 5 vertices, exhaustively.
    for (int n = 2; n <= 5; ++n) {
        for_each_connected_graph(n, [&](const std::vector<std::pair<int, int>>& edges) {
            std::vector<std::string> ids;
            std::vector<double> mu(n, 1.0);
            for (int i = 0; i < n; ++i) ids.push_back("v" + std::to_string(i));
            std::vector<Space::Edge> es;
            for (auto [a, b] : edges) es.push_back({a, b, 1.0, 1.0});
            Space s = Space::build(ids, mu, mu, es, {});
            std::vector<int> omega;
            for (int v = 0; v + 1 < n; ++v) omega.push_back(v);
            Domain d(s, omega);
            auto res = capacity({d, {0}, std::nullopt, 1});
            double oracle = mincut_oracle(d, {0});
            CHECK(res.value == doctest::Approx(oracle).epsilon(1e-8));
            CHECK(res.certified_lower <= res.value + 1e-12);
            CHECK(res.residual <= 1e-8);
        });
    }
    // Random weighted instances.
    for (int t = 0; t < 40; ++t) {
        int n = 3 + int(rng.below(4));
        Space s = random_space(rng, n, true);
        Domain d(s, all_but_last_interior(s));
        if (d.omega.empty()) continue;
        std::vector<int> inner{d.omega[0]};
        auto res = capacity({d, inner, std::nullopt, 1});
        CHECK(res.value == doctest::Approx(mincut_oracle(d, inner)).epsilon(1e-8));
    }
}

TEST_CASE("capacity is monotone in the inner set and antitone in the domain") {
    SplitMix64 rng(99);
    for (int t = 0; t < 8; ++t) {
        int n = 4 + int(rng.below(3));
        Space s = random_space(rng, n, true);
        auto interior = s.interior();
        Domain big(s, std::vector<int>(interior.begin(), interior.end() - 1));
        if (big.omega.size() < 2) continue;
        Domain small(s, std::vector<int>(big.omega.begin(), big.omega.end() - 1));
        std::vector<int> e1{big.omega[0]};
        std::vector<int> e2{big.omega[0], big.omega[small.omega.empty() ? 0 : small.omega.size() - 1]};
        e2 = sorted_unique(e2);
        for (double p : {1.0, 1.5, 2.0, 3.0}) {
            double c1 = capacity({big, e1, std::nullopt, p}).value;
            double c2 = capacity({big, e2, std::nullopt, p}).value;
            CHECK(c1 <= c2 + 1e-9 * std::max(1.0, c2));
            if (is_subset(e1, small.omega)) {
                double c_small = capacity({small, e1, std::nullopt, p}).value;
                CHECK(c1 <= c_small + 1e-9 * std::max(1.0, c_small));
            }
        }
    }
}

TEST_CASE("extremals live in the unit interval and clamping never increases energy") {
    SplitMix64 rng(77);
    for (int t = 0; t < 10; ++t) {
        int n = 4 + int(rng.below(4));
        Space s = random_space(rng, n, true);
        Domain d(s, all_but_last_interior(s));
        if (d.omega.empty()) continue;
        std::vector<int> inner{d.omega[0]};
        for (double p : {1.0, 1.5, 2.0, 3.0}) {
            auto res = capacity({d, inner, std::nullopt, p});
            for (double x : res.extremal) {
                CHECK(x >= -1e-12);
                CHECK(x <= 1 + 1e-12);
            }
            CHECK(res.certified_lower <= res.value + 1e-12);
            // Random admissible fields: clamping to [0,1] cannot increase energy.
            ScalarField u(s.vertex_count(), 0.0);
            for (int v : d.omega) u[v] = rng.uniform(-1.5, 2.5);
            for (int v : inner) u[v] = 1.0;
            ScalarField cl = u;
            for (int v : d.omega)
                if (!set_contains(inner, v)) cl[v] = std::clamp(cl[v], 0.0, 1.0);
            double eu = p_energy(s, minimal_upper_gradient(s, u), p);
            double ec = p_energy(s, minimal_upper_gradient(s, cl), p);
            CHECK(ec <= eu + 1e-12 * std::max(1.0, eu));
        }
    }
}

TEST_CASE("scaling every edge mass scales every capacity") {
    SplitMix64 rng(202);
    for (int t = 0; t < 6; ++t) {
        int n = 4 + int(rng.below(3));
        Space s = random_space(rng, n, true);
        std::vector<Space::Edge> scaled = s.edges();
        for (auto& e : scaled) e.mass *= 2.0;
        std::vector<std::string> ids;
        for (int v = 0; v < n; ++v) ids.push_back(s.id(v));
        Space s2 = Space::build(ids, s.mu_values(), s.nu_values(), scaled, {});
        Domain d(s, all_but_last_interior(s));
        Domain d2(s2, d.omega);
        if (d.omega.empty()) continue;
        std::vector<int> inner{d.omega[0]};
        for (double p : {1.0, 1.5, 2.0, 3.0}) {
            double a = capacity({d, inner, std::nullopt, p}).value;
            double b = capacity({d2, inner, std::nullopt, p}).value;
            CHECK(b == doctest::Approx(2.0 * a).epsilon(1e-12));
        }
    }
}

TEST_CASE("solver residuals meet the stationarity target") {
    SplitMix64 rng(303);
    for (int t = 0; t < 10; ++t) {
        int n = 4 + int(rng.below(4));
        Space s = random_space(rng, n, true);
        Domain d(s, all_but_last_interior(s));
        if (d.omega.empty()) continue;
        for (double p : {1.5, 2.0, 3.0}) {
            auto res = capacity({d, {d.omega[0]}, std::nullopt, p});
            CHECK(res.converged);
            CHECK(res.residual <= 1e-10);
        }
    }
}

TEST_CASE("capacity profile: exact enumeration on the five-vertex path") {
    Space p5 = make_path(5);
    Domain d(p5, {1, 2, 3});
    auto prof = capacity_profile(d, 2, p5.nu_values());
    CHECK(prof.masses == std::vector<double>{1, 2, 3});
    CHECK(prof.values[0] == doctest::Approx(1.0));
    CHECK(prof.values[1] == doctest::Approx(1.5));
    CHECK(prof.values[2] == doctest::Approx(2.0));
    CHECK(prof.eval(0.25) == doctest::Approx(1.0));  // s -> 0+ takes the min over subsets
    for (size_t k = 0; k + 1 < prof.values.size(); ++k) CHECK(prof.values[k] <= prof.values[k + 1]);
}

TEST_CASE("capacity profile rejects vanishing measure and oversized domains") {
    Space p5 = make_path(5);
    Domain d(p5, {1, 2, 3});
    std::vector<double> zero(5, 0.0);
    CHECK_THROWS_AS(capacity_profile(d, 2, zero), std::invalid_argument);

    ProfileOptions tight;
    tight.enumeration_cap = 2;
    CHECK_THROWS_WITH_AS(capacity_profile(d, 2, p5.nu_values(), tight),
                         doctest::Contains("--profile-sample"), std::invalid_argument);
    tight.samples = 16;
    auto approx = capacity_profile(d, 2, p5.nu_values(), tight);
    CHECK_FALSE(approx.exact);
    for (size_t k = 0; k < approx.masses.size(); ++k)
        CHECK(approx.values[k] >= 1.0 - 1e-12);  // sampled inf never undershoots
}

TEST_CASE("hausdorff content: path examples and the one-ball bound") {
    Space p3b = make_path(3, true);
    CHECK(hausdorff_content(p3b, {1}) == doctest::Approx(1.0));
    CHECK(hausdorff_content(p3b, {0, 2}) == doctest::Approx(1.5));
    CHECK(hausdorff_content(p3b, {}) == 0.0);

    // A single ball at radius r_max covers everything at cost mu(X)/r_max.
    Space p5 = make_path(5);
    std::vector<int> all{0, 1, 2, 3, 4};
    ContentOptions copt;
    copt.r_max = 4.0;
    CHECK(hausdorff_content(p5, all, copt) <= p5.total_mu() / 4.0 + 1e-12);
}

TEST_CASE("hausdorff content matches the exhaustive cover oracle") {
    SplitMix64 rng(404);
    for (int t = 0; t < 10; ++t) {
        int n = 3 + int(rng.below(4));
        Space s = random_space(rng, n, true);
        std::vector<int> K;
        for (int v = 0; v < n; ++v)
            if (rng.below(2)) K.push_back(v);
        if (K.empty()) K.push_back(0);
        double got = hausdorff_content(s, K);
        double expected = cover_oracle(s, K, s.diameter());
        CHECK(got == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("content-capacity ratios: fixture values and cycle symmetry") {
    Space p3b = make_path(3, true);
    auto rep = content_capacity_ratio(p3b, {{1}});
    CHECK(rep.entries[0].cap1 == doctest::Approx(2.0));
    CHECK(rep.entries[0].content == doctest::Approx(1.0));
    CHECK(rep.entries[0].ratio == doctest::Approx(2.0));

    // Uniform cycle with one boundary vertex: all eligible singletons tie.
    Space cyc = Space::load(
        "vertex c0 mu=1\nvertex c1 mu=1\nvertex c2 mu=1\nvertex c3 mu=1\nvertex c4 mu=1\n"
        "edge c0 c1 len=1\nedge c1 c2 len=1\nedge c2 c3 len=1\nedge c3 c4 len=1\n"
        "edge c4 c0 len=1\nboundary c0\n");
    auto sym = content_capacity_ratio(cyc, {{1}, {4}});
    CHECK(sym.entries[0].ratio == doctest::Approx(sym.entries[1].ratio));

    auto empty = content_capacity_ratio(p3b, {});
    CHECK(empty.entries.empty());

    CHECK_THROWS_AS(content_capacity_ratio(make_path(3), {{1}}), std::invalid_argument);
}
