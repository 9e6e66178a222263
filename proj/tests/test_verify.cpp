#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "capmetric/verify.hpp"
#include "fixtures.hpp"

using namespace capmetric;
using namespace capmetric::testing;

namespace {

CheckOptions small_opts(double p, double q, uint64_t seed = 1) {
    CheckOptions opt;
    opt.p = p;
    opt.q = q;
    opt.n_random = 12;
    opt.rng_seed = seed;
    return opt;
}

void expect_pass(const VerifyReport& rep) {
    for (const auto& l : rep.links) {
        INFO(rep.theorem, " link ", l.name, " lhs=", l.lhs, " rhs=", l.rhs);
        CHECK(l.pass);
        if (l.exact) CHECK(l.slack >= 0.0);
    }
    CHECK(rep.verdict);
}

}  // namespace

TEST_CASE("qpey checker passes and flags equality cases") {
    Space p5 = make_path(5);
    Domain d(p5, {1, 2, 3});
    auto rep = check_qpey(d, small_opts(1, 2));
    expect_pass(rep);
    auto eq = check_qpey(d, small_opts(2, 2));
    expect_pass(eq);
    size_t eq_links = 0;
    for (const auto& l : eq.links)
        if (l.name.find("qpey-eq") != std::string::npos) {
            ++eq_links;
            CHECK(std::abs(l.slack) <= 1e-12 * std::max(1.0, std::abs(l.rhs)));
        }
    CHECK(eq_links > 0);
}

TEST_CASE("capaint checker: named single-level instance and random spaces") {
    // Omega = {v1} with u = t * indicator: integral t*2 vs bound 2*(2t).
    Space p3 = make_path(3);
    Domain d3(p3, {1});
    auto rep = check_capaint(d3, small_opts(1, 1));
    expect_pass(rep);

    Space p5 = make_path(5);
    Domain d5(p5, {1, 2, 3});
    for (double p : {1.0, 2.0, 3.0}) expect_pass(check_capaint(d5, small_opts(p, p)));

    SplitMix64 rng(61);
    for (int t = 0; t < 3; ++t) {
        Space s = random_space(rng, 5 + int(rng.below(3)), true);
        Domain d(s, all_but_last_interior(s));
        if (d.omega.empty()) continue;
        expect_pass(check_capaint(d, small_opts(2, 2, 3 + t)));
    }
}

TEST_CASE("conint checker mirrors capaint with conductivity") {
    Space p5 = make_path(5);
    Domain all(p5, {0, 1, 2, 3, 4});
    std::vector<int> G{1, 2, 3};
    for (double p : {1.0, 2.0}) expect_pass(check_conint(all, G, small_opts(p, p)));
    // G = Omega: every conductivity level vanishes, all links sit at zero lhs.
    expect_pass(check_conint(all, {0, 1, 2, 3, 4}, small_opts(2, 2)));
}

TEST_CASE("sobolev-pq checker: fixture constants and sandwich") {
    Space p3 = make_path(3);
    Domain d3(p3, {1});
    auto rep = check_sobolev_pq(d3, small_opts(2, 2));
    expect_pass(rep);

    Space p5 = make_path(5);
    Domain d5(p5, {1, 2, 3});
    for (auto [p, q] : std::vector<std::pair<double, double>>{{1, 1}, {2, 2}, {2, 3}, {1.5, 2}})
        expect_pass(check_sobolev_pq(d5, small_opts(p, q)));
}

TEST_CASE("hardy checker reuses the subset machinery under the weight") {
    Space p5 = make_path(5);
    Domain d(p5, {1, 2, 3});
    expect_pass(check_hardy(d, small_opts(2, 2)));
    Space p3 = make_path(3);
    Domain d3(p3, {1});
    expect_pass(check_hardy(d3, small_opts(2, 2)));
}

TEST_CASE("ball criterion checker on bounded fixtures") {
    Space p3b = make_path(3, true);
    auto rep = check_ball_criterion(p3b, small_opts(1, 1));
    expect_pass(rep);

    Space p5b = make_path(5, true);
    expect_pass(check_ball_criterion(p5b, small_opts(1, 1)));

    Space grid = make_grid(3, 3, true);
    expect_pass(check_ball_criterion(grid, small_opts(1, 2)));

    CHECK_THROWS_AS(check_ball_criterion(make_path(3), small_opts(1, 1)),
                    std::invalid_argument);
}

TEST_CASE("qp checker on the path and random weighted domains") {
    Space p5 = make_path(5);
    Domain d(p5, {1, 2, 3});
    expect_pass(check_qp(d, small_opts(2, 1)));
    expect_pass(check_qp(d, small_opts(3, 1.5)));

    SplitMix64 rng(71);
    for (int t = 0; t < 2; ++t) {
        Space s = random_space(rng, 5, true);
        Domain dr(s, all_but_last_interior(s));
        if (dr.omega.empty() || dr.omega.size() > 4) continue;
        expect_pass(check_qp(dr, small_opts(2, 1, 5 + t)));
    }
}

TEST_CASE("integral criterion checker and its necessity construction") {
    Space p5 = make_path(5);
    Domain d(p5, {1, 2, 3});
    auto rep = check_integral_criterion(d, small_opts(2, 1));
    expect_pass(rep);
    bool saw_fq = false, saw_gp = false;
    for (const auto& l : rep.links) {
        saw_fq = saw_fq || l.name == "necessity:fq";
        saw_gp = saw_gp || l.name == "necessity:gp";
    }
    CHECK(saw_fq);
    CHECK(saw_gp);
    expect_pass(check_integral_criterion(d, small_opts(3, 2)));
}

TEST_CASE("conductivity checker: conductor enumeration and the median split") {
    Space p5 = make_path(5);
    Domain all(p5, {0, 1, 2, 3, 4});
    expect_pass(check_conductivity(all, small_opts(1, 1)));
    expect_pass(check_conductivity(all, small_opts(2, 2)));
    expect_pass(check_conductivity(all, small_opts(2, 3)));

    Space cyc = make_cycle(5);
    Domain dc(cyc, {0, 1, 2, 3, 4});
    expect_pass(check_conductivity(dc, small_opts(2, 2)));
}

TEST_CASE("reports are byte-deterministic for a fixed seed") {
    Space p5 = make_path(5);
    Domain d(p5, {1, 2, 3});
    auto a = check_sobolev_pq(d, small_opts(2, 2, 42));
    auto b = check_sobolev_pq(d, small_opts(2, 2, 42));
    CHECK(a.to_json_text() == b.to_json_text());

    auto c = check_qp(d, small_opts(2, 1, 42));
    auto e = check_qp(d, small_opts(2, 1, 42));
    CHECK(c.to_json_text() == e.to_json_text());
}

TEST_CASE("failure injection flips the verdict") {
    Space p5 = make_path(5);
    Domain d(p5, {1, 2, 3});
    auto clean = check_sobolev_pq(d, small_opts(2, 2));
    REQUIRE(clean.verdict);

    // Find the binding subset link and overdrive its witness mass.
    CheckOptions bad = small_opts(2, 2);
    bad.nu_witness_scale = 1e3;
    auto broken = check_sobolev_pq(d, bad);
    CHECK_FALSE(broken.verdict);

    CheckOptions bad_con = small_opts(2, 2);
    bad_con.nu_witness_scale = 1e3;
    Domain all(p5, {0, 1, 2, 3, 4});
    CHECK_FALSE(check_conductivity(all, bad_con).verdict);
}

TEST_CASE("chained links compose transitively within a report") {
    Space p5 = make_path(5);
    Domain d(p5, {1, 2, 3});
    auto rep = check_capaint(d, small_opts(2, 2));
    // For every sample, lhs(strong-type) <= 2^{p-1} * dyadic and
    // dyadic <= 2^p energy imply the final bound numerically.
    for (size_t i = 0; i + 2 < rep.links.size(); ++i) {
        if (rep.links[i].name.find(":integral-vs-dyadic") == std::string::npos) continue;
        const auto& a = rep.links[i];
        const auto& b = rep.links[i + 1];
        const auto& c = rep.links[i + 2];
        REQUIRE(b.name.find(":dyadic-vs-energy") != std::string::npos);
        REQUIRE(c.name.find(":strong-type") != std::string::npos);
        CHECK(c.lhs <= a.rhs + 1e-9 * std::max(1.0, a.rhs));
        CHECK(a.rhs <= 0.5 * c.rhs + 1e-9 * std::max(1.0, c.rhs));
    }
    expect_pass(rep);
}

TEST_CASE("report json carries the contract fields") {
    Space p3 = make_path(3);
    Domain d(p3, {1});
    auto rep = check_qpey(d, small_opts(2, 2));
    auto text = rep.to_json_text();
    for (const char* key :
         {"\"theorem\"", "\"instance_digest\"", "\"params\"", "\"links\"", "\"verdict\"",
          "\"runtime_s\"", "\"rng_seed\"", "\"name\"", "\"lhs\"", "\"rhs\"", "\"slack\"",
          "\"anchor\"", "\"pass\""})
        CHECK(text.find(key) != std::string::npos);
}
