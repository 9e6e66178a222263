#include "capmetric/constants.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "capmetric/util.hpp"

namespace capmetric {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double pow2(int j) { return std::ldexp(1.0, j); }

/// Largest integer j with 2^j < x (x > 0).
int floor_log2_strict(double x) {
    int j = std::ilogb(x);
    if (pow2(j) >= x) --j;
    while (pow2(j + 1) < x) ++j;
    return j;
}

std::vector<int> mask_to_set(uint32_t mask, const std::vector<int>& base) {
    std::vector<int> out;
    for (size_t i = 0; i < base.size(); ++i)
        if (mask & (uint32_t(1) << i)) out.push_back(base[i]);
    return out;
}

double set_measure(const std::vector<int>& set, const std::vector<double>& m) {
    double s = 0;
    for (int v : set) s += m[v];
    return s;
}

}  // namespace

const char* isocap_mode_name(IsocapMode m) {
    switch (m) {
        case IsocapMode::Subset: return "subset";
        case IsocapMode::Ball: return "ball";
        case IsocapMode::Chain: return "chain";
        case IsocapMode::Integral: return "integral";
    }
    return "?";
}

IsocapConstant gamma_subset(const Domain& d, double p, double q, const std::vector<double>& nu,
                            int enumeration_cap, SolveCache* cache) {
    if (!(p >= 1) || p > q) throw std::invalid_argument("gamma_subset requires 1 <= p <= q");
    const int k = int(d.omega.size());
    if (k > enumeration_cap)
        throw std::invalid_argument("gamma_subset: omega exceeds the enumeration cap (" +
                                    std::to_string(k) + " > " + std::to_string(enumeration_cap) +
                                    "); no silent sampling");
    IsocapConstant out;
    out.mode = IsocapMode::Subset;
    out.p = p;
    out.q = q;

    const uint32_t n_masks = uint32_t(1) << k;
    std::vector<double> caps;
    if (!cache) {
        caps.assign(n_masks, 0.0);
        parallel_for(n_masks - 1, [&](size_t i) {
            uint32_t mask = uint32_t(i) + 1;
            CapacityProblem prob{d, mask_to_set(mask, d.omega), std::nullopt, p};
            caps[mask] = capacity(prob).value;
        });
    }

    double best = 0;
    uint32_t best_mask = 1;
    bool infinite = false;
    for (uint32_t mask = 1; mask < n_masks; ++mask) {
        auto set = mask_to_set(mask, d.omega);
        double cap_val = cache ? cache->capacity(set, p).value : caps[mask];
        double mass = set_measure(set, nu);
        if (cap_val <= 0) {
            if (mass > 0) {
                infinite = true;
                best_mask = mask;
                break;
            }
            continue;
        }
        double ratio = std::pow(mass, p / q) / cap_val;
        if (ratio > best) {
            best = ratio;
            best_mask = mask;
        }
    }
    out.infinite = infinite;
    out.value = infinite ? kInf : best;
    out.raw = out.value;
    out.witness.push_back(mask_to_set(best_mask, d.omega));
    return out;
}

IsocapConstant gamma_ball(const Space& s, double q) {
    if (!(q >= 1)) throw std::invalid_argument("gamma_ball requires q >= 1");
    if (s.boundary().empty())
        throw std::invalid_argument("gamma_ball needs a far-field boundary");
    IsocapConstant out;
    out.mode = IsocapMode::Ball;
    out.p = 1;
    out.q = q;

    std::map<std::vector<int>, char> seen;
    double best = 0;
    std::vector<int> best_ball;
    for (int x = 0; x < s.vertex_count(); ++x) {
        for (double r : s.positive_distances()) {
            auto ball = s.ball(x, r);
            bool eligible = true;
            for (int v : ball)
                if (s.is_boundary(v)) {
                    eligible = false;
                    break;
                }
            if (!eligible || !seen.emplace(ball, 1).second) continue;
            double cap1 = global_capacity(s, ball, 1.0).value;
            if (cap1 <= 0) continue;  // cannot happen with a nonempty boundary
            double ratio = std::pow(s.nu_of(ball), 1.0 / q) / cap1;
            if (ratio > best || best_ball.empty()) {
                best = ratio;
                best_ball = ball;
            }
        }
    }
    if (best_ball.empty())
        throw std::invalid_argument("gamma_ball: no ball avoids the boundary");
    out.value = best;
    out.raw = best;
    out.witness.push_back(best_ball);
    return out;
}

IsocapConstant gamma_chain(const Domain& d, double p, double q, int max_chain_length,
                           int enumeration_cap, SolveCache* cache) {
    if (!(q >= 1) || !(q < p)) throw std::invalid_argument("gamma_chain requires 1 <= q < p");
    const int k = int(d.omega.size());
    if (k > enumeration_cap || k > 12)
        throw std::invalid_argument("gamma_chain: omega exceeds the chain enumeration cap (" +
                                    std::to_string(k) + " vertices; max " +
                                    std::to_string(std::min(enumeration_cap, 12)) + ")");
    if (max_chain_length < 1) throw std::invalid_argument("gamma_chain: chain length must be >= 1");

    IsocapConstant out;
    out.mode = IsocapMode::Chain;
    out.p = p;
    out.q = q;

    SolveCache local(d);
    SolveCache& sc = cache ? *cache : local;
    const uint32_t n_masks = uint32_t(1) << k;
    const double expo = q / (p - q);

    // Link weights w(A,B) = (nu(A)^{p/q} / cap_p(A,B))^{q/(p-q)} over nested
    // pairs A < B, evaluated lazily.
    std::unordered_map<uint64_t, double> weight;
    bool infinite = false;
    uint64_t infinite_pair = 0;
    auto link_weight = [&](uint32_t a, uint32_t b) {
        uint64_t key = (uint64_t(b) << 32) | a;
        auto it = weight.find(key);
        if (it != weight.end()) return it->second;
        auto sa = mask_to_set(a, d.omega);
        auto sb = mask_to_set(b, d.omega);
        double mass = set_measure(sa, d.space->nu_values());
        double w;
        double cap_val = sc.capacity_pair(sa, sb, p).value;
        if (cap_val <= 0) {
            if (mass > 0) {
                w = kInf;
                if (!infinite) {
                    infinite = true;
                    infinite_pair = key;
                }
            } else {
                w = 0;
            }
        } else {
            w = std::pow(std::pow(mass, p / q) / cap_val, expo);
        }
        weight.emplace(key, w);
        return w;
    };

    // Longest-path DP over the strict subset lattice, at most L links.
    const int L = max_chain_length;
    std::vector<double> prev(n_masks, 0.0), cur(n_masks, 0.0);
    std::vector<std::vector<uint32_t>> choice(L, std::vector<uint32_t>(n_masks, 0));
    for (int l = 1; l <= L; ++l) {
        for (uint32_t a = 1; a < n_masks; ++a) {
            double best = 0;
            uint32_t best_b = 0;
            uint32_t rest = (n_masks - 1) & ~a;
            for (uint32_t t = rest; t; t = (t - 1) & rest) {
                uint32_t b = a | t;
                double w = link_weight(a, b) + (l > 1 ? prev[b] : 0.0);
                if (w > best) {
                    best = w;
                    best_b = b;
                }
            }
            cur[a] = best;
            choice[l - 1][a] = best_b;
        }
        std::swap(prev, cur);
    }

    double best_sum = 0;
    uint32_t best_start = 1;
    for (uint32_t a = 1; a < n_masks; ++a)
        if (prev[a] > best_sum) {
            best_sum = prev[a];
            best_start = a;
        }

    if (infinite) {
        out.infinite = true;
        out.value = kInf;
        out.raw = kInf;
        out.witness.push_back(mask_to_set(uint32_t(infinite_pair & 0xffffffff), d.omega));
        out.witness.push_back(mask_to_set(uint32_t(infinite_pair >> 32), d.omega));
        return out;
    }

    // Reconstruct the witness chain by following the DP choices.
    uint32_t a = best_start;
    out.witness.push_back(mask_to_set(a, d.omega));
    for (int l = L; l >= 1; --l) {
        uint32_t b = choice[l - 1][a];
        if (b == 0) break;
        out.witness.push_back(mask_to_set(b, d.omega));
        a = b;
    }
    out.raw = best_sum;
    out.value = best_sum > 0 ? std::pow(best_sum, (p - q) / q) : 0.0;
    return out;
}

double integral_criterion_from_profile(const CapacityProfile& prof, double p, double q) {
    if (!(q >= 1) || !(q < p)) throw std::invalid_argument("integral criterion requires 1 <= q < p");
    const double sp = p / (p - q);      // s' = Holder conjugate of p/q
    const double ce = q / (p - q);      // exponent on 1/lambda
    double total = 0, prev = 0;
    for (size_t k = 0; k < prof.masses.size(); ++k) {
        double s = prof.masses[k];
        double lam = prof.values[k];
        if (lam <= 0) return kInf;  // flagged: profile vanishes on (prev, s]
        total += (std::pow(s, sp) - std::pow(prev, sp)) / (sp * std::pow(lam, ce));
        prev = s;
    }
    return total;
}

double integral_criterion(const Domain& d, double p, double q, const std::vector<double>& nu,
                          const ProfileOptions& opts) {
    double nu_omega = 0;
    for (int v : d.omega) nu_omega += nu[v];
    if (nu_omega <= 0) return 0.0;
    CapacityProfile prof = capacity_profile(d, p, nu, opts);
    return integral_criterion_from_profile(prof, p, q);
}

DyadicChain dyadic_chain(const Domain& d, SolveCache& cache, const ScalarField& u, double p,
                         double q) {
    DyadicChain out;
    const Space& s = *d.space;
    double umax = 0, umin_pos = kInf;
    for (int v : d.omega) {
        double a = std::abs(u[v]);
        if (a > 0) {
            umax = std::max(umax, a);
            umin_pos = std::min(umin_pos, a);
        }
    }
    if (umax == 0) return out;  // empty window

    out.j_hi = floor_log2_strict(umax);
    out.j_lo = floor_log2_strict(umin_pos);

    auto superlevel = [&](double t) {
        std::vector<int> set;
        for (int v : d.omega)
            if (std::abs(u[v]) > t) set.push_back(v);
        return set;
    };

    const double expo = q < p ? q / (p - q) : 0.0;
    std::vector<int> prev_set = superlevel(pow2(out.j_lo - 1));  // = support of |u| on omega
    double supp_nu = s.nu_of(prev_set);
    for (int j = out.j_lo; j <= out.j_hi; ++j) {
        auto set = superlevel(pow2(j));
        double mass = s.nu_of(set);
        double link_cap = cache.capacity_pair(set, prev_set, p).value;
        double dom_cap = cache.capacity(set, p).value;
        out.window_nu_sum += std::pow(pow2(j), q) * mass;
        out.link_cap_sum += std::pow(pow2(j), p) * link_cap;
        if (q < p) {
            if (link_cap <= 0) {
                out.chain_sum = mass > 0 ? kInf : out.chain_sum;
            } else {
                out.chain_sum += std::pow(std::pow(mass, p / q) / link_cap, expo);
            }
        }
        out.sets.push_back(set);
        out.nu_mass.push_back(mass);
        out.link_cap.push_back(link_cap);
        out.domain_cap.push_back(dom_cap);
        prev_set = std::move(set);
    }
    // Geometric tail below the window: E_{2^j} equals the support there.
    double tail = supp_nu * std::pow(pow2(out.j_lo), q) / (std::pow(2.0, q) - 1.0);
    out.full_nu_sum = out.window_nu_sum + tail;
    return out;
}

ScalarField build_chain_extremal(const Domain& d, const std::vector<std::vector<int>>& chain,
                                 double p, double q, SolveCache& cache,
                                 std::vector<double>* lambdas) {
    if (!(q >= 1) || !(q < p))
        throw std::invalid_argument("build_chain_extremal requires 1 <= q < p");
    if (chain.size() < 2) throw std::invalid_argument("chain needs at least two sets");
    for (size_t j = 0; j + 1 < chain.size(); ++j) {
        if (!is_subset(chain[j], chain[j + 1]) || chain[j].size() >= chain[j + 1].size())
            throw std::invalid_argument("chain sets must be strictly nested");
    }
    const Space& s = *d.space;
    const size_t m = chain.size() - 1;  // number of links
    std::vector<double> term(m), caps(m);
    for (size_t j = 0; j < m; ++j) {
        caps[j] = cache.capacity_pair(chain[j], chain[j + 1], p).value;
        if (caps[j] <= 0) throw std::invalid_argument("degenerate chain link with zero capacity");
        double mass = s.nu_of(chain[j]);
        term[j] = std::pow(mass / caps[j], 1.0 / (p - q));
    }
    std::vector<double> lambda(m + 1, 0.0);
    for (int j = int(m) - 1; j >= 0; --j) lambda[j] = lambda[j + 1] + term[j];
    if (lambdas) *lambdas = lambda;

    ScalarField u(s.vertex_count(), 0.0);
    for (size_t j = 0; j < m; ++j) {
        const auto& link = cache.capacity_pair(chain[j], chain[j + 1], p).extremal;
        for (int v = 0; v < s.vertex_count(); ++v) u[v] += term[j] * link[v];
    }
    return u;
}

SupExtremal build_sup_extremal(const Domain& d, double p, double q,
                               const std::vector<double>& nu, SolveCache& cache,
                               int enumeration_cap) {
    if (!(q >= 1) || !(q < p))
        throw std::invalid_argument("build_sup_extremal requires 1 <= q < p");
    const int k = int(d.omega.size());
    if (k > enumeration_cap)
        throw std::invalid_argument("build_sup_extremal: omega exceeds the enumeration cap");
    const Space& s = *d.space;
    double nu_omega = 0;
    for (int v : d.omega) nu_omega += nu[v];
    if (!(nu_omega > 0)) throw std::invalid_argument("build_sup_extremal: nu vanishes on omega");

    const uint32_t n_masks = uint32_t(1) << k;
    std::vector<double> mass(n_masks, 0.0);
    double min_pos_mass = kInf;
    for (uint32_t mask = 1; mask < n_masks; ++mask) {
        mass[mask] = set_measure(mask_to_set(mask, d.omega), nu);
        if (mass[mask] > 0) min_pos_mass = std::min(min_pos_mass, mass[mask]);
    }

    int j_top = floor_log2_strict(nu_omega);
    if (pow2(j_top + 1) <= nu_omega) ++j_top;  // largest j with 2^j <= nu(omega)
    int j_bot = floor_log2_strict(min_pos_mass) + 1;  // smallest j with 2^j >= min mass
    if (j_bot > j_top) j_bot = j_top;

    SupExtremal out;
    out.u.assign(s.vertex_count(), 0.0);
    for (int j = j_bot; j <= j_top; ++j) {
        double level = pow2(j);
        double best_cap = kInf;
        uint32_t best_mask = 0;
        for (uint32_t mask = 1; mask < n_masks; ++mask) {
            if (mass[mask] < level) continue;
            double c = cache.capacity(mask_to_set(mask, d.omega), p).value;
            if (c < best_cap) {
                best_cap = c;
                best_mask = mask;
            }
        }
        if (best_mask == 0) continue;  // no witness set at this level
        if (best_cap <= 0)
            throw std::invalid_argument("build_sup_extremal: degenerate level with zero capacity");
        auto set = mask_to_set(best_mask, d.omega);
        double beta = std::pow(level / best_cap, 1.0 / (p - q));
        const auto& ext = cache.capacity(set, p).extremal;
        for (int v = 0; v < s.vertex_count(); ++v)
            out.u[v] = std::max(out.u[v], beta * ext[v]);
        out.levels.push_back(j);
        out.betas.push_back(beta);
        out.lambda_values.push_back(best_cap);
        out.subsets.push_back(std::move(set));
        out.sum_fq += std::pow(beta, q) * level;
        out.sum_gp += std::pow(beta, p) * best_cap;
    }
    if (out.levels.empty())
        throw std::invalid_argument("build_sup_extremal: no admissible dyadic level");
    return out;
}

double median_split(const ScalarField& u, const Domain& d) {
    const Space& s = *d.space;
    double nu_omega = 0;
    for (int v : d.omega) nu_omega += s.nu(v);
    if (!(nu_omega > 0)) throw std::invalid_argument("median split needs nu(omega) > 0");
    std::vector<double> vals;
    for (int v : d.omega) vals.push_back(u[v]);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    for (double a : vals) {
        double ge = 0, gt = 0;
        for (int v : d.omega) {
            if (u[v] >= a) ge += s.nu(v);
            if (u[v] > a) gt += s.nu(v);
        }
        if (ge >= nu_omega / 2 && gt <= nu_omega / 2) return a;
    }
    // Unreachable: the smallest value with gt <= half also has ge >= half.
    return vals.back();
}

double centered_lq_norm(const ScalarField& u, double q, const std::vector<double>& nu,
                        const Domain& d, double* best_shift) {
    auto eval = [&](double a) {
        double total = 0;
        for (int v : d.omega) {
            double t = std::abs(u[v] - a);
            if (t != 0) total += nu[v] * std::pow(t, q);
        }
        return std::pow(total, 1.0 / q);
    };
    double lo = kInf, hi = -kInf;
    for (int v : d.omega) {
        lo = std::min(lo, u[v]);
        hi = std::max(hi, u[v]);
    }
    double best_a = lo, best = eval(lo);
    for (int v : d.omega) {
        double f = eval(u[v]);
        if (f < best) {
            best = f;
            best_a = u[v];
        }
    }
    double mean_num = 0, mean_den = 0;
    for (int v : d.omega) {
        mean_num += nu[v] * u[v];
        mean_den += nu[v];
    }
    if (mean_den > 0) {
        double m = mean_num / mean_den;
        double f = eval(m);
        if (f < best) {
            best = f;
            best_a = m;
        }
    }
    // Golden-section refinement of the convex objective.
    const double phi = (std::sqrt(5.0) - 1) / 2;
    double a = lo, b = hi;
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = eval(x1), f2 = eval(x2);
    for (int it = 0; it < 120 && b - a > 1e-14 * std::max(1.0, std::abs(hi)); ++it) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = eval(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = eval(x2);
        }
    }
    double xm = (a + b) / 2, fm = eval(xm);
    if (fm < best) {
        best = fm;
        best_a = xm;
    }
    if (best_shift) *best_shift = best_a;
    return best;
}

namespace {

struct RatioEval {
    double ratio;
    double energy;
    double norm;
};

/// Shared ratio machinery for the Sobolev estimator.
struct RatioContext {
    const Domain* d;
    const std::vector<double>* nu;
    double p, q;
    FnClass cls;
    std::vector<char> energy_mask;  // meeting-omega mask for the centered class

    RatioEval eval(const ScalarField& raw) const {
        const Space& s = *d->space;
        ScalarField u = restrict_to(*d, raw);
        double energy;
        EdgeField g = minimal_upper_gradient(s, u);
        if (cls == FnClass::ZeroBoundary) {
            energy = p_energy(s, g, p);
        } else {
            energy = p_energy(s, g, p, energy_mask);
        }
        double norm = cls == FnClass::ZeroBoundary ? lq_norm(s, u, q, *nu, *d)
                                                   : centered_lq_norm(u, q, *nu, *d);
        double ratio;
        if (energy > 0) ratio = norm / std::pow(energy, 1.0 / p);
        else ratio = norm > 0 ? kInf : 0.0;
        return {ratio, energy, norm};
    }
};

}  // namespace

SobolevEstimate sobolev_constant(const Domain& d, const std::vector<double>& nu,
                                 const SobolevOptions& opt) {
    if (!(opt.p >= 1) || !(opt.q >= 1))
        throw std::invalid_argument("sobolev_constant requires p, q >= 1");
    const Space& s = *d.space;
    const int k = int(d.omega.size());
    const double p = opt.p, q = opt.q;

    SobolevEstimate est;
    est.rng_seed = opt.rng_seed;
    SolveCache cache(d);
    RatioContext ctx{&d, &nu, p, q, opt.cls, edges_meeting(s, d.omega)};

    ScalarField best_witness(s.vertex_count(), 0.0);
    double best_ratio = 0;
    auto consider = [&](const ScalarField& u) {
        RatioEval ev = ctx.eval(u);
        ++est.seeds_used;
        if (ev.ratio > best_ratio) {
            best_ratio = ev.ratio;
            best_witness = restrict_to(d, u);
        }
        if (std::isfinite(ev.ratio)) {
            double rp = std::pow(ev.ratio, p);
            if (rp > est.lower_pow_p) est.lower_pow_p = rp;
        } else {
            est.lower_pow_p = kInf;
        }
        return ev;
    };

    std::vector<ScalarField> trunc_sources;

    const bool enumerable = k <= opt.enumeration_cap;
    est.enumeration_exact = enumerable;
    double gamma_sub = 0;
    bool gamma_sub_infinite = false;
    if (enumerable && opt.cls == FnClass::ZeroBoundary) {
        // Mandatory seeds: the capacity extremal of every nonempty subset.
        // The certified form nu(E)^{p/q}/cap keeps the sandwich link exact.
        const uint32_t n_masks = uint32_t(1) << k;
        for (uint32_t mask = 1; mask < n_masks; ++mask) {
            auto set = mask_to_set(mask, d.omega);
            const CapacityResult& res = cache.capacity(set, p);
            double mass = set_measure(set, nu);
            consider(res.extremal);
            if (res.value <= 0) {
                if (mass > 0) gamma_sub_infinite = true;
                continue;
            }
            double g = std::pow(mass, p / q) / res.value;
            if (g > gamma_sub) gamma_sub = g;
            if (g > est.lower_pow_p) est.lower_pow_p = g;
            double r = std::pow(g, 1.0 / p);
            if (r > best_ratio) {
                best_ratio = r;
                best_witness = res.extremal;
            }
            if (trunc_sources.size() < 4) trunc_sources.push_back(res.extremal);
        }
    }

    double gamma_con = 0;
    if (opt.cls == FnClass::MedianCentered && enumerable && k <= 10) {
        // Conductor extremal seeds (F inside G, nu(G) <= nu(omega)/2).
        double nu_omega = 0;
        for (int v : d.omega) nu_omega += nu[v];
        const uint32_t n_masks = uint32_t(1) << k;
        for (uint32_t gm = 1; gm < n_masks; ++gm) {
            auto G = mask_to_set(gm, d.omega);
            if (set_measure(G, nu) > nu_omega / 2) continue;
            for (uint32_t fm = gm; fm; fm = (fm - 1) & gm) {
                auto F = mask_to_set(fm, d.omega);
                const CapacityResult& res = cache.conductivity(F, G, p);
                consider(res.extremal);
                if (res.value > 0) {
                    double g = std::pow(set_measure(F, nu), p / q) / res.value;
                    if (g > gamma_con) gamma_con = g;
                }
            }
        }
    }

    // Indicator seeds.
    if (k <= 10) {
        for (uint32_t mask = 1; mask < (uint32_t(1) << k); ++mask)
            consider(indicator(s, mask_to_set(mask, d.omega)));
    } else {
        for (int v : d.omega) consider(indicator(s, {v}));
        consider(indicator(s, d.omega));
    }

    // Dyadic truncation combinations of the leading extremals.
    trunc_sources.push_back(best_witness);
    for (const auto& src : trunc_sources) {
        double umax = 0, umin = kInf;
        for (int v : d.omega) {
            double a = std::abs(src[v]);
            if (a > 0) {
                umax = std::max(umax, a);
                umin = std::min(umin, a);
            }
        }
        if (umax <= 0) continue;
        int j_lo = floor_log2_strict(umin) + 1, j_hi = floor_log2_strict(umax) + 1;
        for (int j = j_lo; j <= j_hi; ++j) consider(truncate_dyadic(src, j));
    }

    // Chain-regime seeds.
    double gamma_chain_raw = 0;
    if (q < p && opt.cls == FnClass::ZeroBoundary && k <= std::min(opt.enumeration_cap, 10)) {
        IsocapConstant gc = gamma_chain(d, p, q, opt.max_chain_length,
                                        std::min(opt.enumeration_cap, 12), &cache);
        if (!gc.infinite) {
            gamma_chain_raw = gc.raw;
            if (gc.witness.size() >= 2) consider(build_chain_extremal(d, gc.witness, p, q, cache));
        }
        try {
            SupExtremal se = build_sup_extremal(d, p, q, nu, cache, opt.enumeration_cap);
            consider(se.u);
        } catch (const std::invalid_argument&) {
            // degenerate profile; the remaining seeds stand
        }
    }

    // Pseudo-random seeds and multi-restart ascent.
    SplitMix64 rng(opt.rng_seed);
    std::vector<ScalarField> starts{best_witness};
    for (int i = 0; i < opt.n_random; ++i) {
        ScalarField u(s.vertex_count(), 0.0);
        for (int v : d.omega) u[v] = rng.uniform(-1.0, 1.0);
        consider(u);
        if (int(starts.size()) < opt.restarts) starts.push_back(u);
    }
    while (int(starts.size()) < opt.restarts) {
        ScalarField u(s.vertex_count(), 0.0);
        for (int v : d.omega) u[v] = rng.uniform(-1.0, 1.0);
        starts.push_back(u);
    }

    auto ascend = [&](ScalarField u) {
        RatioEval ev = ctx.eval(u);
        if (!std::isfinite(ev.ratio)) return;
        double step = 0.5;
        for (int it = 0; it < opt.ascent_iters; ++it) {
            if (ev.energy <= 0 || ev.norm <= 0) break;
            ScalarField z = restrict_to(d, u);
            double shift = 0;
            if (opt.cls == FnClass::MedianCentered) centered_lq_norm(z, q, nu, d, &shift);
            // Gradient of log(norm) - (1/p) log(energy).
            std::vector<double> grad(s.vertex_count(), 0.0);
            double norm_q = std::pow(ev.norm, q);
            for (int v : d.omega) {
                double t = z[v] - shift;
                if (t != 0) grad[v] += nu[v] * std::pow(std::abs(t), q - 1) * (t > 0 ? 1 : -1) / norm_q;
            }
            for (int e = 0; e < s.edge_count(); ++e) {
                if (opt.cls == FnClass::MedianCentered && !ctx.energy_mask[e]) continue;
                const auto& ed = s.edge(e);
                double t = (z[ed.a] - z[ed.b]) / ed.length;
                if (t == 0) continue;
                double dgrad = ed.mass * p * std::pow(std::abs(t), p - 1) * (t > 0 ? 1 : -1) / ed.length;
                double c = dgrad / (p * ev.energy);
                grad[ed.a] -= c;
                grad[ed.b] += c;
            }
            double gmax = 0, umax = 0;
            for (int v : d.omega) {
                gmax = std::max(gmax, std::abs(grad[v]));
                umax = std::max(umax, std::abs(z[v]));
            }
            if (gmax <= 0) break;
            bool improved = false;
            for (int ls = 0; ls < 12; ++ls) {
                ScalarField trial = z;
                double sc = step * std::max(umax, 1e-6) / gmax;
                for (int v : d.omega) trial[v] += sc * grad[v];
                RatioEval tev = ctx.eval(trial);
                if (tev.ratio > ev.ratio) {
                    u = trial;
                    ev = tev;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if (!improved || step < 1e-12) break;
            step = std::min(step * 2, 1.0);
        }
        consider(u);
    };
    for (auto& st : starts) {
        ascend(st);
        ++est.restarts;
    }

    est.lower = best_ratio;
    est.witness = best_witness;

    // Isocapacitary upper bound of the matching theorem.
    if (opt.cls == FnClass::ZeroBoundary) {
        if (p <= q) {
            est.gamma = gamma_sub_infinite ? kInf : gamma_sub;
            est.gamma_infinite = gamma_sub_infinite;
            est.upper = enumerable
                            ? std::pow(est.gamma * p * std::pow(2.0, 2 * p - 1), 1.0 / p)
                            : kInf;
        } else {
            // Effective chain constant: enumerated chains plus the dyadic
            // chains of the leading candidates; sound for every evaluated u.
            double raw = gamma_chain_raw;
            auto fold = [&](const ScalarField& u) {
                DyadicChain dc = dyadic_chain(d, cache, u, p, q);
                if (dc.chain_sum > raw) raw = dc.chain_sum;
            };
            fold(best_witness);
            for (const auto& src : trunc_sources) fold(src);
            est.gamma_raw = raw;
            est.gamma = std::isinf(raw) ? kInf : (raw > 0 ? std::pow(raw, (p - q) / q) : 0.0);
            double cq = q * std::pow(2.0, 2 * q - 1) / (std::pow(2.0, q) - 1);
            est.upper = est.gamma > 0 ? 2.0 * std::pow(cq, 1.0 / q) * std::pow(est.gamma, 1.0 / p)
                                      : 0.0;
        }
    } else {
        if (p <= q && enumerable && k <= 10) {
            est.gamma = gamma_con;
            est.upper = std::pow(gamma_con * p * std::pow(2.0, 2 * p - 1), 1.0 / p) *
                        std::pow(2.0, (p - 1) / p);
        } else {
            est.upper = kInf;
        }
    }
    return est;
}

HardyResult hardy_constant(const Domain& d, double p, const SobolevOptions& base) {
    if (d.complement().empty())
        throw std::invalid_argument("hardy_constant needs a nonempty complement");
    const Space& s = *d.space;
    HardyResult out;
    out.weight.assign(s.vertex_count(), 0.0);
    auto dist = dist_to_complement(d);
    for (size_t i = 0; i < d.omega.size(); ++i)
        out.weight[d.omega[i]] = s.mu(d.omega[i]) / std::pow(dist[i], p);
    SobolevOptions opt = base;
    opt.p = p;
    opt.q = p;
    opt.cls = FnClass::ZeroBoundary;
    out.estimate = sobolev_constant(d, out.weight, opt);
    out.gamma_weighted = gamma_subset(d, p, p, out.weight, opt.enumeration_cap);
    return out;
}

double poincare_estimate(const Space& s, double p, const PoincareOptions& opt) {
    if (!(p >= 1)) throw std::invalid_argument("poincare_estimate requires p >= 1");

    // Candidate balls: per-center representative radii (below the first
    // distance, between consecutive distances, and past the farthest).
    struct Ball {
        int center;
        double r;
        std::vector<int> inner, outer;  // B and tau*B
    };
    std::vector<Ball> balls;
    for (int x = 0; x < s.vertex_count(); ++x) {
        std::vector<double> dists;
        for (int v = 0; v < s.vertex_count(); ++v)
            if (v != x) dists.push_back(s.distance(x, v));
        std::sort(dists.begin(), dists.end());
        dists.erase(std::unique(dists.begin(), dists.end()), dists.end());
        std::vector<double> radii;
        if (dists.empty()) {
            radii.push_back(1.0);
        } else {
            radii.push_back(dists[0] / 2);
            for (size_t i = 0; i + 1 < dists.size(); ++i)
                radii.push_back((dists[i] + dists[i + 1]) / 2);
            radii.push_back(1.5 * dists.back());
        }
        for (double r : radii)
            balls.push_back({x, r, s.ball(x, r), s.ball(x, opt.tau * r)});
    }

    // Sample fields: ball indicators, distance functions, random fields.
    std::vector<ScalarField> samples;
    for (const auto& b : balls) samples.push_back(indicator(s, b.inner));
    for (int x = 0; x < s.vertex_count(); ++x) {
        ScalarField u(s.vertex_count());
        for (int v = 0; v < s.vertex_count(); ++v) u[v] = s.distance(x, v);
        samples.push_back(u);
    }
    SplitMix64 rng(opt.rng_seed);
    for (int i = 0; i < opt.n_random; ++i) {
        ScalarField u(s.vertex_count());
        for (int v = 0; v < s.vertex_count(); ++v) u[v] = rng.uniform(-1.0, 1.0);
        samples.push_back(u);
    }

    double best = 0;
    for (const auto& b : balls) {
        double mu_b = s.mu_of(b.inner), mu_tb = s.mu_of(b.outer);
        if (mu_b <= 0 || mu_tb <= 0) continue;
        auto mask = edges_within(s, b.outer);
        for (const auto& u : samples) {
            double mean = 0;
            for (int v : b.inner) mean += s.mu(v) * u[v];
            mean /= mu_b;
            double osc = 0;
            for (int v : b.inner) osc += s.mu(v) * std::abs(u[v] - mean);
            osc /= mu_b;
            if (osc <= 0) continue;
            double ge = p_energy(s, minimal_upper_gradient(s, u), p, mask) / mu_tb;
            if (ge <= 0) continue;
            double ratio = osc / (b.r * std::pow(ge, 1.0 / p));
            best = std::max(best, ratio);
        }
    }
    return best;
}

}  // namespace capmetric
