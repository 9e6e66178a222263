#include "capmetric/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>

#include "capmetric/util.hpp"

namespace capmetric {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double pow2(int j) { return std::ldexp(1.0, j); }

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    long floored_seconds() const {
        auto dt = std::chrono::steady_clock::now() - t0;
        return std::chrono::duration_cast<std::chrono::seconds>(dt).count();
    }
};

double omega_measure(const Domain& d, const std::vector<double>& m) {
    double s = 0;
    for (int v : d.omega) s += m[v];
    return s;
}

/// sum over omega of nu |u|^q (the q-th power of the norm).
double int_pow_q(const Domain& d, const ScalarField& u, double q, const std::vector<double>& nu) {
    double s = 0;
    for (int v : d.omega)
        if (u[v] != 0) s += nu[v] * std::pow(std::abs(u[v]), q);
    return s;
}

struct Sample {
    std::string tag;
    ScalarField u;
    bool indicator = false;
};

/// The documented sample family: indicators of all subsets on small
/// instances, capacity extremals of the same subsets, dyadic truncations of
/// the leading extremals, then seed-controlled pseudo-random fields.
std::vector<Sample> make_samples(const Domain& d, SolveCache& cache, double p_ext,
                                 const CheckOptions& opt, bool zero_outside) {
    const Space& s = *d.space;
    const int k = int(d.omega.size());
    std::vector<Sample> out;

    auto push = [&](std::string tag, ScalarField u, bool ind) {
        if (zero_outside) u = restrict_to(d, u);
        out.push_back({std::move(tag), std::move(u), ind});
    };

    std::vector<std::vector<int>> subsets;
    if (k <= 6) {
        for (uint32_t mask = 1; mask < (uint32_t(1) << k); ++mask) {
            std::vector<int> set;
            for (int i = 0; i < k; ++i)
                if (mask & (uint32_t(1) << i)) set.push_back(d.omega[i]);
            subsets.push_back(std::move(set));
        }
    } else {
        for (int v : d.omega) subsets.push_back({v});
        subsets.push_back(d.omega);
    }

    for (size_t i = 0; i < subsets.size(); ++i)
        push("ind" + std::to_string(i), indicator(s, subsets[i]), true);

    std::vector<ScalarField> extremals;
    for (size_t i = 0; i < subsets.size(); ++i) {
        const auto& res = cache.capacity(subsets[i], p_ext);
        push("ext" + std::to_string(i), res.extremal, false);
        if (extremals.size() < 3) extremals.push_back(res.extremal);
    }

    for (size_t i = 0; i < extremals.size(); ++i) {
        double umax = 0;
        for (int v : d.omega) umax = std::max(umax, std::abs(extremals[i][v]));
        if (umax <= 0) continue;
        for (int j = -2; j <= 1; ++j)
            push("tr" + std::to_string(i) + "j" + std::to_string(j),
                 truncate_dyadic(extremals[i], j), false);
    }

    SplitMix64 rng(opt.rng_seed);
    for (int i = 0; i < opt.n_random; ++i) {
        ScalarField u(s.vertex_count(), 0.0);
        for (int v : d.omega) u[v] = rng.uniform(-1.0, 1.0);
        if (i % 4 == 1)
            for (int v : d.omega) u[v] *= 10.0;
        if (i % 7 == 2)
            for (int v : d.omega) u[v] = std::abs(u[v]);
        push("rnd" + std::to_string(i), std::move(u), false);
    }
    return out;
}

void start_report(VerifyReport& rep, const std::string& theorem, const std::string& digest,
                  const CheckOptions& opt) {
    rep.theorem = theorem;
    rep.instance_digest = digest;
    rep.rng_seed = opt.rng_seed;
    rep.tolerance = opt.tolerance;
}

void finish_params(VerifyReport& rep, const CheckOptions& opt, long samples) {
    rep.params.set("p", opt.p)
        .set("q", opt.q)
        .set("samples", samples)
        .set("n_random", int64_t(opt.n_random))
        .set("tolerance", opt.tolerance)
        .set("rng_seed", uint64_t(opt.rng_seed));
    if (opt.nu_witness_scale != 1.0) rep.params.set("nu_witness_scale", opt.nu_witness_scale);
}

/// lhs of a closed-superlevel piecewise integral:
/// int_0^inf lambda^{p-1} f(E_lambda) dlambda with f given per closed level.
double level_integral(const std::vector<double>& thresholds, const std::vector<double>& f_closed,
                      double p) {
    double total = 0, prev = 0;
    for (size_t k = 0; k < thresholds.size(); ++k) {
        total += f_closed[k] * (std::pow(thresholds[k], p) - std::pow(prev, p)) / p;
        prev = thresholds[k];
    }
    return total;
}

/// Closed superlevel sets {|u| >= t_k} per threshold: the strict set of the
/// previous threshold, with the support at the first one.
std::vector<std::vector<int>> closed_superlevels(const Domain& d, const ScalarField& u,
                                                 const LevelData& ld) {
    std::vector<std::vector<int>> out;
    for (size_t k = 0; k < ld.thresholds.size(); ++k) {
        if (k == 0) {
            std::vector<int> supp;
            for (int v : d.omega)
                if (std::abs(u[v]) > 0) supp.push_back(v);
            out.push_back(std::move(supp));
        } else {
            out.push_back(ld.sets[k - 1]);
        }
    }
    return out;
}

}  // namespace

void VerifyReport::add(const std::string& name, double lhs, double rhs, const std::string& anchor,
                       bool exact) {
    InequalityLink link;
    link.name = name;
    link.lhs = lhs;
    link.rhs = rhs;
    if (std::isinf(rhs) && std::isinf(lhs) && lhs > 0) {
        link.slack = 0;  // both sides degenerate together
        link.pass = true;
    } else {
        link.slack = rhs - lhs;
        link.pass = exact ? link.slack >= 0
                          : link.slack >= -tolerance * std::max(1.0, rhs);
    }
    link.anchor = anchor;
    link.exact = exact;
    if (!link.pass) verdict = false;
    links.push_back(std::move(link));
}

Json VerifyReport::to_json() const {
    Json j = Json::object();
    j.set("theorem", theorem);
    j.set("instance_digest", instance_digest);
    j.set("params", params);
    Json arr = Json::array();
    for (const auto& l : links) {
        Json lj = Json::object();
        lj.set("name", l.name)
            .set("lhs", l.lhs)
            .set("rhs", l.rhs)
            .set("slack", l.slack)
            .set("anchor", l.anchor)
            .set("pass", l.pass);
        arr.push(std::move(lj));
    }
    j.set("links", std::move(arr));
    j.set("verdict", verdict ? "pass" : "fail");
    j.set("runtime_s", int64_t(runtime_s));
    j.set("rng_seed", uint64_t(rng_seed));
    return j;
}

std::string VerifyReport::to_json_text() const { return to_json().dump() + "\n"; }

VerifyReport check_qpey(const Domain& d, const CheckOptions& opt) {
    Timer timer;
    if (!(opt.p > 0) || opt.p > opt.q)
        throw std::invalid_argument("check qpey requires 0 < p <= q");
    const Space& s = *d.space;
    VerifyReport rep;
    start_report(rep, "qpey", d.digest(), opt);

    SolveCache cache(d);
    auto samples = make_samples(d, cache, std::max(opt.p, 1.0), opt, false);
    for (size_t i = 0; i < samples.size(); ++i) {
        const auto& u = samples[i].u;
        double lhs = lq_norm(s, u, opt.q, s.nu_values(), d);
        double rhs = qpey_rhs(s, u, opt.p, opt.q, s.nu_values(), d);
        std::string tag = "s" + std::to_string(i);
        rep.add(tag + ":qpey", lhs, rhs,
                "||u||_q <= (p int lambda^{p-1} nu(E_lambda)^{p/q} dlambda)^{1/p}", false);
        if (opt.p == opt.q || samples[i].indicator)
            rep.add(tag + ":qpey-eq", rhs, lhs, "equality case: reverse inequality", false);
    }
    finish_params(rep, opt, long(samples.size()));
    rep.runtime_s = timer.floored_seconds();
    return rep;
}

namespace {

/// Core of capaint/conint: exact level integral against the 2^{2p-1} energy
/// bound, with the dyadic intermediate sums.
void add_strong_type_links(VerifyReport& rep, const Domain& d, SolveCache& cache,
                           const ScalarField& u, const std::string& tag, double p,
                           const std::function<double(const std::vector<int>&)>& set_capacity,
                           double energy) {
    const Space& s = *d.space;
    LevelData ld = level_data(s, u, d);
    auto closed = closed_superlevels(d, u, ld);
    (void)cache;

    std::vector<double> caps(closed.size());
    for (size_t k = 0; k < closed.size(); ++k) caps[k] = set_capacity(closed[k]);
    double integral = level_integral(ld.thresholds, caps, p);

    // Dyadic capacitary sum over the window, with the closed-form geometric
    // tail (the superlevel set is the support below the window).
    double dyadic = 0;
    if (!ld.thresholds.empty()) {
        double umin = ld.thresholds.front(), umax = ld.thresholds.back();
        int j_lo = std::ilogb(umin);
        if (pow2(j_lo) >= umin) --j_lo;
        while (pow2(j_lo + 1) < umin) ++j_lo;
        int j_hi = std::ilogb(umax);
        if (pow2(j_hi) >= umax) --j_hi;
        while (pow2(j_hi + 1) < umax) ++j_hi;
        for (int j = j_lo; j <= j_hi; ++j) {
            std::vector<int> set;
            for (int v : d.omega)
                if (std::abs(u[v]) > pow2(j)) set.push_back(v);
            dyadic += std::pow(pow2(j), p) * set_capacity(set);
        }
        double cap_supp = set_capacity(closed[0]);
        dyadic += cap_supp * std::pow(pow2(j_lo), p) / (std::pow(2.0, p) - 1.0);
    }

    rep.add(tag + ":integral-vs-dyadic", integral, std::pow(2.0, p - 1) * dyadic,
            "int lambda^{p-1} cap(E_lambda) <= 2^{p-1} sum_j 2^{jp} cap(E_{2^j})", false);
    rep.add(tag + ":dyadic-vs-energy", dyadic, std::pow(2.0, p) * energy,
            "sum_j 2^{jp} cap(E_{2^j}) <= 2^p int g_u^p (truncation telescoping)", false);
    rep.add(tag + ":strong-type", integral, std::pow(2.0, 2 * p - 1) * energy,
            "int lambda^{p-1} cap(E_lambda) dlambda <= 2^{2p-1} int g_u^p", false);
}

}  // namespace

VerifyReport check_capaint(const Domain& d, const CheckOptions& opt) {
    Timer timer;
    if (!(opt.p >= 1)) throw std::invalid_argument("check capaint requires p >= 1");
    const Space& s = *d.space;
    VerifyReport rep;
    start_report(rep, "capaint", d.digest(), opt);

    SolveCache cache(d);
    auto samples = make_samples(d, cache, opt.p, opt, true);
    auto cap_fn = [&](const std::vector<int>& set) {
        return set.empty() ? 0.0 : cache.capacity(set, opt.p).value;
    };
    for (size_t i = 0; i < samples.size(); ++i) {
        const auto& u = samples[i].u;
        double energy = p_energy(s, minimal_upper_gradient(s, u), opt.p);
        add_strong_type_links(rep, d, cache, u, "s" + std::to_string(i), opt.p, cap_fn, energy);
    }
    finish_params(rep, opt, long(samples.size()));
    rep.runtime_s = timer.floored_seconds();
    return rep;
}

VerifyReport check_conint(const Domain& d, const std::vector<int>& G, const CheckOptions& opt) {
    Timer timer;
    if (!(opt.p >= 1)) throw std::invalid_argument("check conint requires p >= 1");
    const Space& s = *d.space;
    for (int v : G)
        if (!d.contains(v)) throw std::invalid_argument("check conint: G must lie inside omega");
    VerifyReport rep;
    start_report(rep, "conint", d.digest(), opt);
    rep.params.set("G", [&] {
        Json arr = Json::array();
        for (int v : G) arr.push(s.id(v));
        return arr;
    }());

    SolveCache cache(d);
    std::vector<char> in_g(s.vertex_count(), 0);
    for (int v : G) in_g[v] = 1;
    auto mask = edges_meeting(s, d.omega);

    auto samples = make_samples(d, cache, opt.p, opt, true);
    auto con_fn = [&](const std::vector<int>& set) {
        return set.empty() ? 0.0 : cache.conductivity(set, G, opt.p).value;
    };
    for (size_t i = 0; i < samples.size(); ++i) {
        ScalarField u = samples[i].u;
        for (int v : d.omega)
            if (!in_g[v]) u[v] = 0;  // the admissible class vanishes on omega minus G
        double energy = p_energy(s, minimal_upper_gradient(s, u), opt.p, mask);
        add_strong_type_links(rep, d, cache, u, "s" + std::to_string(i), opt.p, con_fn, energy);
    }
    finish_params(rep, opt, long(samples.size()));
    rep.runtime_s = timer.floored_seconds();
    return rep;
}

namespace {

/// Shared core of sobolev-pq and hardy: the measure is a parameter.
VerifyReport sobolev_pq_core(const Domain& d, const std::vector<double>& nu,
                             const std::string& theorem, const CheckOptions& opt) {
    Timer timer;
    if (!(opt.p >= 1) || opt.p > opt.q)
        throw std::invalid_argument("check " + theorem + " requires 1 <= p <= q");
    const Space& s = *d.space;
    const double p = opt.p, q = opt.q;
    VerifyReport rep;
    start_report(rep, theorem, d.digest(), opt);

    SolveCache cache(d);
    IsocapConstant gamma = gamma_subset(d, p, q, nu, opt.enumeration_cap, &cache);

    SobolevOptions sopt;
    sopt.p = p;
    sopt.q = q;
    sopt.cls = FnClass::ZeroBoundary;
    sopt.rng_seed = opt.rng_seed;
    sopt.enumeration_cap = opt.enumeration_cap;
    SobolevEstimate est = sobolev_constant(d, nu, sopt);

    // Exact re-evaluation of the gamma witness.
    if (!gamma.infinite) {
        const auto& wit = gamma.witness[0];
        double mass = 0;
        for (int v : wit) mass += nu[v];
        double re = std::pow(mass, p / q) / cache.capacity(wit, p).value;
        rep.add("gamma-witness-le", re, gamma.value, "witness ratio reproduces gamma", true);
        rep.add("gamma-witness-ge", gamma.value, re, "gamma reproduces witness ratio", true);
    }

    // Per-sample Sobolev bound through the layer-cake / isocapacity /
    // strong-type chain.
    auto samples = make_samples(d, cache, p, opt, true);
    double c_up = gamma.infinite ? kInf
                                 : std::pow(gamma.value * p * std::pow(2.0, 2 * p - 1), 1.0 / p);
    for (size_t i = 0; i < samples.size(); ++i) {
        const auto& u = samples[i].u;
        double lhs = lq_norm(s, u, q, nu, d);
        double energy = p_energy(s, minimal_upper_gradient(s, u), p);
        rep.add("s" + std::to_string(i) + ":sobolev-bound", lhs,
                c_up * std::pow(energy, 1.0 / p),
                "||u||_{q,nu} <= (gamma p 2^{2p-1})^{1/p} (int g_u^p)^{1/p}", false);
    }

    // Per-subset lower-bound links (direction two, exact by the seeding
    // contract). The injection hook scales the witness subset's mass.
    const int k = int(d.omega.size());
    if (k <= 8) {
        for (uint32_t mask = 1; mask < (uint32_t(1) << k); ++mask) {
            std::vector<int> set;
            for (int i = 0; i < k; ++i)
                if (mask & (uint32_t(1) << i)) set.push_back(d.omega[i]);
            double mass = 0;
            for (int v : set) mass += nu[v];
            bool is_witness = !gamma.infinite && set == gamma.witness[0];
            if (is_witness) mass *= opt.nu_witness_scale;
            double cap_val = cache.capacity(set, p).value;
            if (cap_val <= 0) continue;
            rep.add("E" + std::to_string(mask) + ":isocap-lower",
                    std::pow(mass, p / q) / cap_val, est.lower_pow_p,
                    "nu(E)^{p/q} <= c_lower^p cap_p(E, Omega)", true);
        }
    }

    if (!gamma.infinite) {
        rep.add("sandwich-left", gamma.value, est.lower_pow_p,
                "gamma <= c_lower^p (by the seeding construction)", true);
        rep.add("sandwich-right", est.lower_pow_p, gamma.value * p * std::pow(2.0, 2 * p - 1),
                "c_lower^p <= gamma p 2^{2p-1}", false);
    }

    finish_params(rep, opt, long(samples.size()));
    rep.params.set("gamma", gamma.infinite ? kInf : gamma.value)
        .set("c_s_lower", est.lower)
        .set("c_s_upper", est.upper);
    rep.runtime_s = timer.floored_seconds();
    return rep;
}

}  // namespace

VerifyReport check_sobolev_pq(const Domain& d, const CheckOptions& opt) {
    return sobolev_pq_core(d, d.space->nu_values(), "sobolev-pq", opt);
}

VerifyReport check_hardy(const Domain& d, const CheckOptions& opt) {
    if (d.complement().empty())
        throw std::invalid_argument("check hardy needs a nonempty complement");
    const Space& s = *d.space;
    std::vector<double> weight(s.vertex_count(), 0.0);
    auto dist = dist_to_complement(d);
    for (size_t i = 0; i < d.omega.size(); ++i)
        weight[d.omega[i]] = s.mu(d.omega[i]) / std::pow(dist[i], opt.p);
    CheckOptions hopt = opt;
    hopt.q = opt.p;  // the Hardy criterion is the q = p case under the weight
    return sobolev_pq_core(d, weight, "hardy", hopt);
}

VerifyReport check_ball_criterion(const Space& s, const CheckOptions& opt) {
    Timer timer;
    if (!(opt.q >= 1)) throw std::invalid_argument("check ball-p1 requires q >= 1");
    if (s.boundary().empty())
        throw std::invalid_argument("check ball-p1 needs a far-field boundary");
    const double q = opt.q;
    VerifyReport rep;
    start_report(rep, "ball-p1", s.digest(), opt);

    double c_d = s.doubling_estimate();
    IsocapConstant gb = gamma_ball(s, q);
    Domain interior(s, s.interior());
    SolveCache cache(interior);

    {
        double re = std::pow(s.nu_of(gb.witness[0]), 1.0 / q) /
                    cache.capacity(gb.witness[0], 1.0).value;
        rep.add("gamma-ball-witness-le", re, gb.value, "witness ratio reproduces gamma_ball", true);
        rep.add("gamma-ball-witness-ge", gb.value, re, "gamma_ball reproduces witness ratio", true);
    }

    // Compact family: interior singletons, eligible balls, seeded subsets.
    std::vector<std::vector<int>> family;
    for (int v : s.interior()) family.push_back({v});
    {
        std::map<std::vector<int>, char> seen;
        for (int x = 0; x < s.vertex_count(); ++x)
            for (double r : s.positive_distances()) {
                auto ball = s.ball(x, r);
                bool ok = true;
                for (int v : ball)
                    if (s.is_boundary(v)) ok = false;
                if (ok && ball.size() > 1 && seen.emplace(ball, 1).second) family.push_back(ball);
            }
        SplitMix64 rng(opt.rng_seed);
        auto interior_list = s.interior();
        for (int t = 0; t < 3 && interior_list.size() > 1; ++t) {
            std::vector<int> set;
            for (int v : interior_list)
                if (rng.next() & 1) set.push_back(v);
            if (!set.empty() && seen.emplace(set, 1).second) family.push_back(set);
        }
    }

    ContentCapacityReport cc = content_capacity_ratio(s, family);
    double c_emp = 1.0;
    for (const auto& e : cc.entries) {
        c_emp = std::max(c_emp, e.ratio);
        if (e.ratio > 0) c_emp = std::max(c_emp, 1.0 / e.ratio);
    }

    for (size_t f = 0; f < family.size(); ++f) {
        const auto& K = family[f];
        std::string tag = "K" + std::to_string(f);
        std::vector<ContentBall> cover;
        ContentOptions copts;
        copts.avoid_boundary = true;
        double h_restricted = hausdorff_content(s, K, copts, &cover);

        double nu_k = std::pow(s.nu_of(K), 1.0 / q);
        double sum_nu = 0, sum_cap = 0, sum_cost = 0;
        for (const auto& b : cover) {
            sum_nu += std::pow(s.nu_of(b.set), 1.0 / q);
            sum_cap += cache.capacity(b.set, 1.0).value;
            sum_cost += b.cost;
        }
        rep.add(tag + ":nu-subadditive", nu_k, sum_nu,
                "nu(K)^{1/q} <= sum nu(B_i)^{1/q} over the optimal cover", true);
        rep.add(tag + ":ball-isocap", sum_nu, gb.value * sum_cap,
                "sum nu(B_i)^{1/q} <= gamma_ball sum cap_1(B_i)", false);
        rep.add(tag + ":tent-bound", sum_cap, c_d * sum_cost,
                "sum cap_1(B_i) <= c_D sum mu(B_i)/r_i (tent upper gradients)", false);
        rep.add(tag + ":ball-criterion", nu_k, gb.value * c_d * h_restricted,
                "nu(K)^{1/q} <= gamma_ball c_D H(K)", false);

        const auto& entry = cc.entries[f];
        rep.add(tag + ":cap-le-content", entry.cap1, c_emp * entry.content,
                "cap_1(K) <= c H(K) (measured comparability)", false);
        rep.add(tag + ":content-le-cap", entry.content, c_emp * entry.cap1,
                "H(K) <= c cap_1(K) (measured comparability)", false);
    }

    finish_params(rep, opt, long(family.size()));
    rep.params.set("c_doubling", c_d)
        .set("gamma_ball", gb.value)
        .set("c_content_capacity", c_emp);
    rep.runtime_s = timer.floored_seconds();
    return rep;
}

VerifyReport check_qp(const Domain& d, const CheckOptions& opt) {
    Timer timer;
    if (!(opt.q >= 1) || !(opt.q < opt.p))
        throw std::invalid_argument("check qp requires 1 <= q < p");
    const Space& s = *d.space;
    const double p = opt.p, q = opt.q;
    VerifyReport rep;
    start_report(rep, "qp", d.digest(), opt);

    SolveCache cache(d);
    IsocapConstant gc = gamma_chain(d, p, q, opt.max_chain_length,
                                    std::min(opt.enumeration_cap, 12), &cache);

    SobolevOptions sopt;
    sopt.p = p;
    sopt.q = q;
    sopt.rng_seed = opt.rng_seed;
    sopt.enumeration_cap = opt.enumeration_cap;
    sopt.max_chain_length = opt.max_chain_length;
    SobolevEstimate est = sobolev_constant(d, s.nu_values(), sopt);

    auto samples = make_samples(d, cache, p, opt, true);

    // The effective chain constant must cover every sample's own dyadic
    // chain (non-strict nesting, as the supremum over sequences allows).
    std::vector<DyadicChain> chains(samples.size());
    double gamma_eff_sum = gc.infinite ? kInf : gc.raw;
    for (size_t i = 0; i < samples.size(); ++i) {
        chains[i] = dyadic_chain(d, cache, samples[i].u, p, q);
        gamma_eff_sum = std::max(gamma_eff_sum, chains[i].chain_sum);
    }
    double gamma_eff =
        std::isinf(gamma_eff_sum) ? kInf
                                  : (gamma_eff_sum > 0 ? std::pow(gamma_eff_sum, (p - q) / q) : 0.0);

    for (size_t i = 0; i < samples.size(); ++i) {
        const auto& u = samples[i].u;
        const auto& dc = chains[i];
        std::string tag = "s" + std::to_string(i);
        if (dc.sets.empty()) continue;  // zero sample
        double int_q = int_pow_q(d, u, q, s.nu_values());
        double energy = p_energy(s, minimal_upper_gradient(s, u), p);
        rep.add(tag + ":dyadic-cavalieri", int_q,
                q * std::pow(2.0, q - 1) * dc.full_nu_sum,
                "int |u|^q dnu <= q 2^{q-1} sum_j 2^{jq} nu(E_{2^j})", true);
        rep.add(tag + ":tail-control", std::pow(pow2(dc.j_lo), q) * dc.nu_mass[0],
                dc.window_nu_sum, "the sub-window tail is dominated by its first term", true);
        rep.add(tag + ":holder-split", dc.window_nu_sum,
                std::pow(dc.chain_sum, (p - q) / p) * std::pow(dc.link_cap_sum, q / p),
                "sum 2^{jq} nu_j <= S^{(p-q)/p} (sum 2^{jp} cap_j)^{q/p}", false);
        rep.add(tag + ":truncation-telescope", dc.link_cap_sum, std::pow(2.0, p) * energy,
                "sum 2^{jp} cap(E_{2^j}, E_{2^{j-1}}) <= 2^p int g_u^p", false);
        rep.add(tag + ":chain-vs-gamma", dc.chain_sum, gamma_eff_sum,
                "the sample's dyadic chain sum is below the chain supremum", true);
        double tail_factor = std::pow(2.0, q) / (std::pow(2.0, q) - 1.0);
        rep.add(tag + ":qp-conclusion", int_q,
                q * std::pow(2.0, q - 1) * tail_factor *
                    std::pow(gamma_eff_sum, (p - q) / p) *
                    std::pow(std::pow(2.0, p) * energy, q / p),
                "int |u|^q dnu <= c(gamma) (int g_u^p)^{q/p}", false);
    }

    // Direction two: enumerate strictly nested chains and check the extremal
    // construction per chain.
    const int k = int(d.omega.size());
    long emitted = 0;
    if (k <= 5 && !gc.infinite) {
        std::vector<std::vector<int>> chain_sets;
        std::function<void(uint32_t)> recurse = [&](uint32_t last) {
            if (emitted > 400) return;
            if (chain_sets.size() >= 2) {
                std::string tag = "c" + std::to_string(emitted++);
                std::vector<double> lambda;
                ScalarField u = build_chain_extremal(d, chain_sets, p, q, cache, &lambda);
                const size_t m = chain_sets.size() - 1;
                double sum_incr = 0, sum_cav = 0, sum_terms = 0, max_dev = 0;
                for (size_t j = 0; j < m; ++j) {
                    double mass = s.nu_of(chain_sets[j]);
                    double cap_j = cache.capacity_pair(chain_sets[j], chain_sets[j + 1], p).value;
                    double term = std::pow(mass / cap_j, 1.0 / (p - q));
                    sum_incr += mass * std::pow(lambda[j] - lambda[j + 1], q);
                    sum_cav += mass * (std::pow(lambda[j], q) - std::pow(lambda[j + 1], q));
                    sum_terms += std::pow(std::pow(mass, p / q) / cap_j, q / (p - q));
                    max_dev = std::max(max_dev, std::abs((lambda[j] - lambda[j + 1]) - term));
                }
                double int_q = int_pow_q(d, u, q, s.nu_values());
                rep.add(tag + ":cavalieri-lower", sum_cav, int_q,
                        "sum nu(E_j)(lambda_j^q - lambda_{j+1}^q) <= int u^q dnu", false);
                rep.add(tag + ":increment-superadd", sum_incr, sum_cav,
                        "sum nu(E_j)(lambda_j - lambda_{j+1})^q <= sum nu(E_j)(lambda_j^q - lambda_{j+1}^q)",
                        true);
                rep.add(tag + ":lambda-identity", max_dev, 0.0,
                        "lambda_j - lambda_{j+1} = (nu(E_j)/cap_p(E_j, E_{j+1}))^{1/(p-q)}", false);
                rep.add(tag + ":chain-vs-gamma", sum_terms, gamma_eff_sum,
                        "the enumerated chain sum is below the chain supremum", false);
            }
            if (chain_sets.size() >= size_t(opt.max_chain_length) + 1) return;
            uint32_t rest = ((uint32_t(1) << k) - 1) & ~last;
            for (uint32_t t = rest; t; t = (t - 1) & rest) {
                uint32_t next = last | t;
                std::vector<int> set;
                for (int i = 0; i < k; ++i)
                    if (next & (uint32_t(1) << i)) set.push_back(d.omega[i]);
                chain_sets.push_back(std::move(set));
                recurse(next);
                chain_sets.pop_back();
                if (emitted > 400) return;
            }
        };
        for (uint32_t start = 1; start < (uint32_t(1) << k); ++start) {
            std::vector<int> set;
            for (int i = 0; i < k; ++i)
                if (start & (uint32_t(1) << i)) set.push_back(d.omega[i]);
            chain_sets.push_back(std::move(set));
            recurse(start);
            chain_sets.pop_back();
            if (emitted > 400) break;
        }
    }

    if (!gc.infinite)
        rep.add("gamma-chain-vs-sobolev", gc.value, est.lower_pow_p,
                "gamma <= c_S^p (chain extremals are seeds)", false);

    finish_params(rep, opt, long(samples.size()));
    rep.params.set("gamma_chain", gc.infinite ? kInf : gc.value)
        .set("gamma_effective", gamma_eff)
        .set("chains_checked", emitted)
        .set("c_s_lower", est.lower)
        .set("c_s_upper", est.upper);
    rep.runtime_s = timer.floored_seconds();
    return rep;
}

VerifyReport check_integral_criterion(const Domain& d, const CheckOptions& opt) {
    Timer timer;
    if (!(opt.q >= 1) || !(opt.q < opt.p))
        throw std::invalid_argument("check integral requires 1 <= q < p");
    const Space& s = *d.space;
    const double p = opt.p, q = opt.q;
    const double sp = p / (p - q);  // s'
    VerifyReport rep;
    start_report(rep, "integral", d.digest(), opt);

    double nu_omega = omega_measure(d, s.nu_values());
    if (nu_omega <= 0) {
        rep.add("vacuous", 0.0, 0.0, "nu(omega) = 0: nothing to check", true);
        finish_params(rep, opt, 0);
        rep.runtime_s = timer.floored_seconds();
        return rep;
    }

    SolveCache cache(d);
    ProfileOptions popt;
    popt.enumeration_cap = opt.enumeration_cap;
    CapacityProfile prof = capacity_profile(d, p, s.nu_values(), popt);
    double c_int = integral_criterion_from_profile(prof, p, q);
    auto samples = make_samples(d, cache, p, opt, true);

    for (size_t i = 0; i < samples.size(); ++i) {
        const auto& u = samples[i].u;
        DyadicChain dc = dyadic_chain(d, cache, u, p, q);
        if (dc.sets.empty()) continue;
        std::string tag = "s" + std::to_string(i);
        double int_q = int_pow_q(d, u, q, s.nu_values());
        double energy = p_energy(s, minimal_upper_gradient(s, u), p);

        // Band masses nu({2^j < |u| <= 2^{j+1}}) within the window.
        double band_sum = 0, holder_cap = 0, holder_frac = 0;
        const size_t n = dc.sets.size();
        for (size_t t = 0; t < n; ++t) {
            int j = dc.j_lo + int(t);
            double next_mass = t + 1 < n ? dc.nu_mass[t + 1] : 0.0;
            double band = dc.nu_mass[t] - next_mass;
            if (band <= 0) continue;
            band_sum += std::pow(pow2(j), q) * band;
            holder_cap += std::pow(pow2(j), p) * dc.domain_cap[t];
            if (dc.domain_cap[t] > 0)
                holder_frac += std::pow(band, sp) / std::pow(dc.domain_cap[t], sp / (p / q));
        }
        rep.add(tag + ":band-bound", int_q, std::pow(2.0, q) * band_sum,
                "int u^q dnu <= 2^q sum_j 2^{jq} nu(band_j)", true);
        rep.add(tag + ":holder", band_sum,
                std::pow(holder_cap, q / p) * std::pow(holder_frac, 1.0 / sp),
                "Holder split with s = p/q, s' = p/(p-q)", false);
        {
            double full_cap_sum = 0;
            for (size_t t = 0; t < n; ++t)
                full_cap_sum += std::pow(pow2(dc.j_lo + int(t)), p) * dc.domain_cap[t];
            rep.add(tag + ":telescope", full_cap_sum, std::pow(2.0, p) * energy,
                    "sum_j 2^{jp} cap(E_{2^j}, Omega) <= 2^p int g_u^p", false);
        }
        rep.add(tag + ":sum-vs-integral", holder_frac, sp * c_int,
                "sum nu(band)^{s'} / cap^{s'/s} <= s' c_I", false);
        rep.add(tag + ":sufficiency", int_q,
                std::pow(4.0, q) * std::pow(sp * c_int, 1.0 / sp) * std::pow(energy, q / p),
                "int u^q dnu <= c_I^{1/s'} c (int g_u^p)^{q/p}", false);
    }

    // Necessity: the sup of scaled level extremals.
    bool necessity_ok = true;
    try {
        SupExtremal se = build_sup_extremal(d, p, q, s.nu_values(), cache, opt.enumeration_cap);
        double int_q = int_pow_q(d, se.u, q, s.nu_values());
        double energy = p_energy(s, minimal_upper_gradient(s, se.u), p);
        rep.add("necessity:fq", 0.5 * se.sum_fq, int_q,
                "int u^q dnu >= (1/2) sum beta_j^q 2^j", false);
        rep.add("necessity:gp", energy, 2.0 * se.sum_gp,
                "int g_u^p <= 2 sum beta_j^p lambda_p(2^j)", false);
        double max_dev = 0;
        for (size_t t = 0; t < se.levels.size(); ++t)
            max_dev = std::max(max_dev,
                               std::abs(std::pow(se.betas[t], q) * pow2(se.levels[t]) -
                                        std::pow(se.betas[t], p) * se.lambda_values[t]));
        rep.add("necessity:beta-identity", max_dev, 0.0,
                "beta_j^q 2^j = beta_j^p lambda_p(2^j)", false);
        double ratio = energy > 0 ? lq_norm(s, se.u, q, s.nu_values(), d) / std::pow(energy, 1.0 / p)
                                  : kInf;
        rep.add("necessity:conclusion", se.sum_fq,
                std::pow(std::pow(2.0, 1.0 + q / p) * std::pow(ratio, q), p / (p - q)),
                "sum beta_j^q 2^j <= (2^{1+q/p} c_S^q)^{p/(p-q)}", false);
    } catch (const std::invalid_argument&) {
        necessity_ok = false;
        rep.add("necessity:degenerate", 0.0, 0.0,
                "sup-extremal construction degenerate on this instance", true);
    }

    finish_params(rep, opt, long(samples.size()));
    Json masses = Json::array(), values = Json::array();
    for (double m : prof.masses) masses.push(m);
    for (double v : prof.values) values.push(v);
    rep.params.set("c_integral", c_int)
        .set("profile_masses", std::move(masses))
        .set("profile_values", std::move(values))
        .set("necessity_constructed", necessity_ok);
    rep.runtime_s = timer.floored_seconds();
    return rep;
}

VerifyReport check_conductivity(const Domain& d, const CheckOptions& opt) {
    Timer timer;
    if (!(opt.p >= 1) || opt.p > opt.q)
        throw std::invalid_argument("check conductivity requires 1 <= p <= q");
    const Space& s = *d.space;
    const double p = opt.p, q = opt.q;
    VerifyReport rep;
    start_report(rep, "conductivity", d.digest(), opt);

    double nu_omega = omega_measure(d, s.nu_values());
    if (nu_omega <= 0) throw std::invalid_argument("check conductivity requires nu(omega) > 0");
    const int k = int(d.omega.size());
    if (k > 10)
        throw std::invalid_argument("check conductivity: omega exceeds the conductor "
                                    "enumeration cap (10 vertices)");

    SolveCache cache(d);

    // Exact gamma over conductors (F inside G, nu(G) <= nu(Omega)/2).
    struct Conductor {
        std::vector<int> F, G;
        double con, ratio;
    };
    std::vector<Conductor> conductors;
    double gamma_con = 0;
    size_t witness_idx = 0;
    for (uint32_t gm = 1; gm < (uint32_t(1) << k); ++gm) {
        std::vector<int> G;
        for (int i = 0; i < k; ++i)
            if (gm & (uint32_t(1) << i)) G.push_back(d.omega[i]);
        if (s.nu_of(G) > nu_omega / 2) continue;
        for (uint32_t fm = gm; fm; fm = (fm - 1) & gm) {
            std::vector<int> F;
            for (int i = 0; i < k; ++i)
                if (fm & (uint32_t(1) << i)) F.push_back(d.omega[i]);
            double con = cache.conductivity(F, G, p).value;
            if (con <= 0) continue;
            double ratio = std::pow(s.nu_of(F), p / q) / con;
            conductors.push_back({std::move(F), std::move(G), con, ratio});
            if (ratio > gamma_con) {
                gamma_con = ratio;
                witness_idx = conductors.size() - 1;
            }
        }
    }

    // Direction-two links: each enumerated conductor sits below gamma.
    for (size_t t = 0; t < conductors.size() && t < 400; ++t) {
        double lhs = conductors[t].ratio;
        if (t == witness_idx && opt.nu_witness_scale != 1.0)
            lhs = std::pow(opt.nu_witness_scale * s.nu_of(conductors[t].F), p / q) /
                  conductors[t].con;
        rep.add("con" + std::to_string(t) + ":isocap-ratio", lhs, gamma_con,
                "nu(F)^{p/q} <= gamma con_p(F, G, Omega)", true);
    }

    // Median-split reduction per sample.
    auto mask_meet = edges_meeting(s, d.omega);
    auto mask_within = edges_within(s, d.omega);
    bool omega_is_everything = int(d.omega.size()) == s.vertex_count();
    double c1 = std::pow(gamma_con * p * std::pow(2.0, 2 * p - 1), 1.0 / p);
    auto samples = make_samples(d, cache, p, opt, true);
    for (size_t i = 0; i < samples.size(); ++i) {
        const auto& u = samples[i].u;
        std::string tag = "s" + std::to_string(i);
        double alpha = median_split(u, d);
        double nu_ge = 0, nu_gt = 0;
        for (int v : d.omega) {
            if (u[v] >= alpha) nu_ge += s.nu(v);
            if (u[v] > alpha) nu_gt += s.nu(v);
        }
        rep.add(tag + ":median-ge", nu_omega / 2, nu_ge,
                "nu({u >= alpha}) >= nu(Omega)/2", true);
        rep.add(tag + ":median-le", nu_gt, nu_omega / 2,
                "nu({u > alpha}) <= nu(Omega)/2", true);

        ScalarField v_pos(s.vertex_count(), 0.0), v_neg(s.vertex_count(), 0.0);
        for (int v : d.omega) {
            v_pos[v] = std::max(u[v] - alpha, 0.0);
            v_neg[v] = std::max(alpha - u[v], 0.0);
        }
        double e_pos = p_energy(s, minimal_upper_gradient(s, v_pos), p, mask_meet);
        double e_neg = p_energy(s, minimal_upper_gradient(s, v_neg), p, mask_meet);
        rep.add(tag + ":onesided-pos", lq_norm(s, v_pos, q, s.nu_values(), d),
                c1 * std::pow(e_pos, 1.0 / p),
                "||(u-alpha)_+||_q <= (gamma p 2^{2p-1})^{1/p} (int_{u>alpha} g^p)^{1/p}", false);
        rep.add(tag + ":onesided-neg", lq_norm(s, v_neg, q, s.nu_values(), d),
                c1 * std::pow(e_neg, 1.0 / p),
                "||(alpha-u)_+||_q <= (gamma p 2^{2p-1})^{1/p} (int_{u<alpha} g^p)^{1/p}", false);
        {
            const auto& mask = omega_is_everything ? mask_meet : mask_within;
            double ep = p_energy(s, minimal_upper_gradient(s, v_pos), p, mask);
            double en = p_energy(s, minimal_upper_gradient(s, v_neg), p, mask);
            double eu = p_energy(s, minimal_upper_gradient(s, u), p, mask);
            rep.add(tag + ":split-energy", ep + en, eu,
                    "the split parts' energies sum below the energy of u", false);
        }
        double inf_a = centered_lq_norm(u, q, s.nu_values(), d);
        rep.add(tag + ":centered", inf_a,
                c1 * std::pow(2.0, (p - 1) / p) * std::pow(e_pos + e_neg, 1.0 / p),
                "inf_a ||u-a||_q <= c (int_Omega g_u^p)^{1/p} via the median split", false);
    }

    // Direction two on conductor extremals: mean-versus-inf comparison and
    // the mean-mass bound.
    size_t shown = 0;
    for (size_t t = 0; t < conductors.size() && shown < 6; ++t) {
        if (t != witness_idx && t % std::max<size_t>(conductors.size() / 5, 1) != 0) continue;
        ++shown;
        const auto& cd = conductors[t];
        const ScalarField& u = cache.conductivity(cd.F, cd.G, p).extremal;
        ScalarField uo = restrict_to(d, u);
        std::string tag = "ii" + std::to_string(t);
        double mean = 0;
        for (int v : d.omega) mean += s.nu(v) * uo[v];
        mean /= nu_omega;
        ScalarField shifted = uo;
        for (int v : d.omega) shifted[v] = uo[v] - mean;
        double lhs = lq_norm(s, shifted, q, s.nu_values(), d);
        double inf_a = centered_lq_norm(uo, q, s.nu_values(), d);
        rep.add(tag + ":mean-vs-inf", lhs, 2.0 * inf_a,
                "||u - u_Omega||_q <= 2 inf_a ||u - a||_q", false);
        double e_meet = p_energy(s, minimal_upper_gradient(s, uo), p, mask_meet);
        rep.add(tag + ":mean-mass", std::pow(std::abs(mean), q) * nu_omega,
                std::pow(2.0, q + 1) *
                    std::pow(c1 * std::pow(2.0, (p - 1) / p), q) * std::pow(e_meet, q / p),
                "|u_Omega|^q nu(Omega) <= c (int g_u^p)^{q/p}", false);
    }

    finish_params(rep, opt, long(samples.size()));
    rep.params.set("gamma_con", gamma_con).set("conductors", int64_t(conductors.size()));
    rep.runtime_s = timer.floored_seconds();
    return rep;
}

VerifyReport run_check(const std::string& theorem_id, const Space& s, const Domain* d,
                       const std::vector<int>* conint_G, const CheckOptions& opt) {
    auto need_domain = [&]() -> const Domain& {
        if (!d) throw std::invalid_argument("verify " + theorem_id + " needs --omega");
        return *d;
    };
    if (theorem_id == "qpey") return check_qpey(need_domain(), opt);
    if (theorem_id == "capaint") return check_capaint(need_domain(), opt);
    if (theorem_id == "sobolev-pq") return check_sobolev_pq(need_domain(), opt);
    if (theorem_id == "ball-p1") return check_ball_criterion(s, opt);
    if (theorem_id == "qp") return check_qp(need_domain(), opt);
    if (theorem_id == "integral") return check_integral_criterion(need_domain(), opt);
    if (theorem_id == "conductivity") return check_conductivity(need_domain(), opt);
    if (theorem_id == "conint") {
        if (!conint_G) throw std::invalid_argument("verify conint needs --outer G");
        return check_conint(need_domain(), *conint_G, opt);
    }
    if (theorem_id == "hardy") return check_hardy(need_domain(), opt);
    throw std::invalid_argument("unknown theorem id '" + theorem_id + "'");
}

}  // namespace capmetric
