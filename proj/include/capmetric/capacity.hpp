#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "capmetric/fields.hpp"
#include "capmetric/space.hpp"

namespace capmetric {

/// Constrained p-energy minimization instance.  `inner` is the set pinned to
/// one (E, or F for conductivity); when `outer` is present the problem is the
/// conductivity con_p(inner, outer, omega), otherwise the relative capacity
/// cap_p(inner, omega).
struct CapacityProblem {
    Domain domain;
    std::vector<int> inner;
    std::optional<std::vector<int>> outer;
    double p = 2.0;
};

struct CapacityResult {
    double value = 0;           // optimal p-energy
    ScalarField extremal;       // admissible minimizer, values in [0,1]
    long iterations = 0;
    double residual = 0;        // normalized stationarity (p>1) or duality gap (p=1)
    double certified_lower = 0; // dual or flow bound, may equal 0
    bool converged = true;
};

/// cap_p(E, Omega): minimize sum over edges of mass(e) * (|du|/len)^p over
/// fields with u=1 on E and u=0 outside Omega.  p=2 solves the stationarity
/// system directly; p>1 uses damped Newton with line search to normalized
/// residual 1e-10; p=1 solves a smoothed relaxation and rounds by
/// thresholding, with a max-flow dual certificate in `certified_lower`.
CapacityResult capacity(const CapacityProblem& prob);

/// con_p(F, G, Omega): u >= 1 on F and u <= 0 on Omega minus G (both active
/// at 1/0 at the optimum, so the solver pins them); vertices outside Omega
/// are unconstrained optimization variables; the energy runs over edges with
/// at least one endpoint in Omega.
CapacityResult conductivity(const CapacityProblem& prob);

/// cap_p(K, X minus far-field boundary); requires a nonempty boundary.
CapacityResult global_capacity(const Space& s, const std::vector<int>& K, double p);

/// The step function lambda_p(s) = inf{cap_p(G, Omega) : G in Omega, nu(G) >= s}
/// on (0, nu(Omega)], represented by its breakpoints at achievable nu-masses.
struct CapacityProfile {
    std::vector<double> masses;  // sorted distinct achievable nu(G) > 0
    std::vector<double> values;  // lambda on (masses[k-1], masses[k]]
    double nu_omega = 0;
    bool exact = true;

    double eval(double s) const;  // lambda_p(s) for s in (0, nu_omega]
};

struct ProfileOptions {
    int enumeration_cap = 18;
    bool global = false;     // use cap_p(G, X minus boundary) instead of cap_p(G, Omega)
    long samples = 0;        // >0 enables the sampling fallback past the cap
    uint64_t rng_seed = 1;
};

CapacityProfile capacity_profile(const Domain& d, double p, const std::vector<double>& nu,
                                 const ProfileOptions& opts = {});

/// A candidate cover ball for the co-dimension-one Hausdorff content.
struct ContentBall {
    int center;
    double radius;
    std::vector<int> set;
    double cost;  // mu(ball) / radius
};

struct ContentOptions {
    std::optional<double> r_max;   // default: diameter
    bool avoid_boundary = false;   // drop balls meeting the far-field boundary
};

/// Exact infimum over finite covers of K by candidate balls (centers at
/// vertices, radii the positive pairwise distances <= r_max) of
/// sum mu(B_i)/r_i, by branch-and-bound over the deduplicated ball list.
double hausdorff_content(const Space& s, const std::vector<int>& K,
                         const ContentOptions& opts = {},
                         std::vector<ContentBall>* witness = nullptr);

struct ContentCapacityEntry {
    std::vector<int> set;
    double cap1;
    double content;
    double ratio;  // cap1 / content
};

struct ContentCapacityReport {
    std::vector<ContentCapacityEntry> entries;
    double min_ratio, max_ratio;  // empirical two-sided comparability constant
};

ContentCapacityReport content_capacity_ratio(const Space& s,
                                             const std::vector<std::vector<int>>& family);

/// Memoizes capacity/conductivity solves; checkers re-solve the same sets for
/// every sampled field, so this dominates their running time.
class SolveCache {
public:
    explicit SolveCache(const Domain& d) : domain_(&d) {}

    const CapacityResult& capacity(const std::vector<int>& inner, double p);
    /// cap_p(inner, outer) for nested pairs inner within outer within omega.
    const CapacityResult& capacity_pair(const std::vector<int>& inner,
                                        const std::vector<int>& outer, double p);
    const CapacityResult& conductivity(const std::vector<int>& F, const std::vector<int>& G,
                                       double p);

    const Domain& domain() const { return *domain_; }

private:
    const Domain* domain_;
    std::unordered_map<std::string, CapacityResult> map_;

    const CapacityResult& memo(const std::string& key, const CapacityProblem& prob, bool con);
};

}  // namespace capmetric
