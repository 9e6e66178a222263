#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "capmetric/space.hpp"
#include "capmetric/util.hpp"
#include "fixtures.hpp"

using namespace capmetric;
using namespace capmetric::testing;

static const char* kPath3Text =
    "# unit path\n"
    "vertex v0 mu=1\n"
    "vertex v1 mu=1\n"
    "vertex v2 mu=1\n"
    "edge v0 v1 len=1\n"
    "edge v1 v2 len=1\n";

TEST_CASE("load applies defaults: nu=mu, mass=(mu+mu)/2") {
    Space s = Space::load(kPath3Text);
    CHECK(s.vertex_count() == 3);
    CHECK(s.edge_count() == 2);
    for (int v = 0; v < 3; ++v) CHECK(s.nu(v) == s.mu(v));
    for (const auto& e : s.edges()) CHECK(e.mass == doctest::Approx(1.0));
    CHECK(s.boundary().empty());
}

TEST_CASE("load rejects self-loops with a line number") {
    CHECK_THROWS_WITH_AS(Space::load("vertex a mu=1\nedge a a len=1\n"),
                         doctest::Contains("self-loop"), SpaceError);
    try {
        Space::load("vertex a mu=1\nedge a a len=1\n");
    } catch (const SpaceError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("load rejects disconnected graphs") {
    const char* text =
        "vertex a mu=1\nvertex b mu=1\nvertex c mu=1\nvertex d mu=1\n"
        "edge a b len=1\nedge c d len=1\n";
    CHECK_THROWS_AS(Space::load(text), SpaceError);
}

TEST_CASE("load validation: measures, lengths, duplicates, unknown ids") {
    CHECK_THROWS_AS(Space::load("vertex a mu=0\n"), SpaceError);
    CHECK_THROWS_AS(Space::load("vertex a mu=1 nu=-1\n"), SpaceError);
    CHECK_THROWS_AS(Space::load("vertex a mu=1\nvertex b mu=1\nedge a b len=0\n"), SpaceError);
    CHECK_THROWS_AS(Space::load("vertex a mu=1\nvertex b mu=1\nedge a b len=1 mass=-1\n"),
                    SpaceError);
    CHECK_THROWS_AS(
        Space::load("vertex a mu=1\nvertex b mu=1\nedge a b len=1\nedge b a len=2\n"),
        SpaceError);
    CHECK_THROWS_AS(Space::load("vertex a mu=1\nvertex b mu=1\nedge a c len=1\n"), SpaceError);
    CHECK_THROWS_AS(Space::load("vertex a mu=x\n"), SpaceError);
    CHECK_THROWS_AS(Space::load("boundary z\nvertex a mu=1\n"), SpaceError);
    CHECK_THROWS_AS(Space::load(""), SpaceError);
}

TEST_CASE("path metric on unit and weighted paths") {
    Space p3 = make_path(3);
    CHECK(p3.distance(0, 2) == doctest::Approx(2.0));
    CHECK(p3.distance(1, 1) == 0.0);

    Space p5 = Space::load(
        "vertex v0 mu=1\nvertex v1 mu=1\nvertex v2 mu=1\nvertex v3 mu=1\nvertex v4 mu=1\n"
        "edge v0 v1 len=3\nedge v1 v2 len=1\nedge v2 v3 len=1\nedge v3 v4 len=1\n");
    CHECK(p5.distance(0, 2) == doctest::Approx(4.0));
}

TEST_CASE("balls use strict inequality") {
    Space p3 = make_path(3);
    CHECK(p3.ball(1, 1.0) == std::vector<int>{1});
    CHECK(p3.ball(1, 1.5) == std::vector<int>{0, 1, 2});
    CHECK(p3.ball(0, 10.0) == std::vector<int>{0, 1, 2});
}

TEST_CASE("doubling estimate on the named fixtures") {
    CHECK(make_path(3).doubling_estimate() == doctest::Approx(3.0));

    Space single = Space::load("vertex a mu=2\n");
    CHECK(single.doubling_estimate() == doctest::Approx(1.0));

    Space skewed = Space::load(
        "vertex v0 mu=1\nvertex v1 mu=10\nvertex v2 mu=1\n"
        "edge v0 v1 len=1\nedge v1 v2 len=1\n");
    CHECK(skewed.doubling_estimate() == doctest::Approx(11.0));
}

TEST_CASE("doubling estimate is at least one") {
    SplitMix64 rng(11);
    for (int t = 0; t < 10; ++t) {
        Space s = random_space(rng, 3 + int(rng.below(5)), true);
        CHECK(s.doubling_estimate() >= 1.0);
    }
}

TEST_CASE("distance is a metric and balls are monotone") {
    SplitMix64 rng(7);
    for (int t = 0; t < 12; ++t) {
        int n = 2 + int(rng.below(7));
        Space s = random_space(rng, n, true);
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y) {
                CHECK(s.distance(x, y) == doctest::Approx(s.distance(y, x)));
                CHECK((s.distance(x, y) == 0) == (x == y));
                for (int z = 0; z < n; ++z)
                    CHECK(s.distance(x, y) <= s.distance(x, z) + s.distance(z, y) + 1e-12);
            }
        for (int x = 0; x < n; ++x) {
            auto radii = s.doubling_radii();
            for (size_t i = 0; i + 1 < radii.size(); ++i) {
                auto small = s.ball(x, radii[i]), big = s.ball(x, radii[i + 1]);
                CHECK(is_subset(small, big));
            }
        }
    }
}

TEST_CASE("serialize round-trips the space") {
    SplitMix64 rng(23);
    for (int t = 0; t < 8; ++t) {
        Space s = random_space(rng, 3 + int(rng.below(5)), true, 2, t % 2 == 0);
        Space again = Space::load(s.serialize());
        CHECK(again.serialize() == s.serialize());
        CHECK(again.digest() == s.digest());
    }
}

TEST_CASE("domains exclude boundary vertices and know their complement") {
    Space s = make_path(3, true);
    CHECK_THROWS_AS(Domain(s, {0, 1}), SpaceError);
    Domain d(s, {1});
    CHECK(d.complement() == std::vector<int>{0, 2});
}

TEST_CASE("dist_to_complement on the five-vertex path") {
    Space p5 = make_path(5);
    Domain d(p5, {1, 2, 3});
    auto dist = dist_to_complement(d);
    CHECK(dist[0] == doctest::Approx(1.0));  // v1
    CHECK(dist[1] == doctest::Approx(2.0));  // v2
    CHECK(dist[2] == doctest::Approx(1.0));  // v3

    Space p3 = make_path(3);
    Domain all(p3, {0, 1, 2});
    CHECK_THROWS_AS(dist_to_complement(all), SpaceError);
}

TEST_CASE("vertex set literals parse and sort") {
    Space p5 = make_path(5);
    CHECK(parse_vertex_set(p5, "v3,v1,v1") == std::vector<int>{1, 3});
    CHECK(parse_vertex_set(p5, "") == std::vector<int>{});
    CHECK_THROWS_AS(parse_vertex_set(p5, "vX"), SpaceError);
}
