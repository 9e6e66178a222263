#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "capmetric/capacity.hpp"
#include "capmetric/fields.hpp"
#include "capmetric/space.hpp"

namespace capmetric {

enum class IsocapMode { Subset, Ball, Chain, Integral };

const char* isocap_mode_name(IsocapMode m);

/// An isocapacitary constant together with the witness attaining it.
/// `raw` is the same supremum kept in its natural summation domain
/// (for chains, the inner sum before the (p-q)/q power) so that checker
/// links can compare bitwise against enumerated candidates.
struct IsocapConstant {
    double value = 0;
    double raw = 0;
    IsocapMode mode = IsocapMode::Subset;
    bool infinite = false;
    std::vector<std::vector<int>> witness;  // one set, or the chain sets in order
    double p = 2, q = 2;
};

/// sup over nonempty E in omega of nu(E)^{p/q} / cap_p(E, omega), exact by
/// subset enumeration (1 <= p <= q).
IsocapConstant gamma_subset(const Domain& d, double p, double q, const std::vector<double>& nu,
                            int enumeration_cap = 18, SolveCache* cache = nullptr);

/// sup over distinct balls avoiding the far-field boundary of
/// nu(B)^{1/q} / cap_1(B, X minus boundary).
IsocapConstant gamma_ball(const Space& s, double q);

/// sup over strictly nested chains C_0 < ... < C_m in omega, m links,
/// 1 <= m <= max_chain_length, of
///   [ sum_j (nu(C_j)^{p/q} / cap_p(C_j, C_{j+1}))^{q/(p-q)} ]^{(p-q)/q},
/// computed exactly by longest-path dynamic programming over the subset
/// lattice (1 <= q < p).
IsocapConstant gamma_chain(const Domain& d, double p, double q, int max_chain_length = 4,
                           int enumeration_cap = 12, SolveCache* cache = nullptr);

/// Closed-form integral of t^{p/(p-q)-1} / lambda_p(t)^{q/(p-q)} over the
/// constancy intervals of the capacity profile; +infinity when lambda_p
/// vanishes on an interval of positive length.
double integral_criterion(const Domain& d, double p, double q, const std::vector<double>& nu,
                          const ProfileOptions& opts = {});
double integral_criterion_from_profile(const CapacityProfile& prof, double p, double q);

/// Dyadic superlevel chain data of a field: the j-window [j_lo, j_hi] with
/// E_{2^j} nonempty, the chain sum
///   S = sum_j (nu(E_{2^j})^{p/q} / cap_p(E_{2^j}, E_{2^{j-1}}))^{q/(p-q)},
/// and the capacitary sums used by the q<p checkers.
struct DyadicChain {
    int j_lo = 0, j_hi = -1;         // empty window when j_hi < j_lo
    std::vector<std::vector<int>> sets;    // E_{2^j} for j in [j_lo, j_hi]
    std::vector<double> nu_mass;
    std::vector<double> link_cap;          // cap(E_{2^j}, E_{2^{j-1}})
    std::vector<double> domain_cap;        // cap(E_{2^j}, omega)
    double chain_sum = 0;                  // S above
    double window_nu_sum = 0;              // sum_j 2^{jq} nu(E_{2^j}) over the window
    double full_nu_sum = 0;                // including the closed-form geometric tail
    double link_cap_sum = 0;               // sum_j 2^{jp} cap(E_{2^j}, E_{2^{j-1}})
};

DyadicChain dyadic_chain(const Domain& d, SolveCache& cache, const ScalarField& u, double p,
                         double q);

enum class FnClass { ZeroBoundary, MedianCentered };

struct SobolevOptions {
    double p = 2, q = 2;
    FnClass cls = FnClass::ZeroBoundary;
    uint64_t rng_seed = 1;
    int enumeration_cap = 18;
    int restarts = 4;
    int ascent_iters = 120;
    int n_random = 16;
    int max_chain_length = 4;
};

struct SobolevEstimate {
    double lower = 0;        // best certified ratio
    double lower_pow_p = 0;  // max ratio^p kept in the gamma float domain
    double upper = 0;        // isocapacitary upper bound of the matching theorem
    ScalarField witness;
    long seeds_used = 0;
    long restarts = 0;
    bool ascent_converged = true;
    double gamma = 0;          // constant backing `upper`
    double gamma_raw = 0;      // chain-regime gamma in the summation domain
    bool gamma_infinite = false;
    uint64_t rng_seed = 1;
    bool enumeration_exact = true;
};

/// Best-constant estimate for (int |u|^q dnu)^{1/q} <= c (int g_u^p dmu)^{1/p}
/// (zero-boundary class) or its median-centered variant with inf over shifts.
/// The lower bound is a maximum of evaluated ratios: capacity extremals of
/// every enumerated subset are mandatory seeds, then dyadic truncations,
/// chain extremals (q<p), and seeded multi-restart ascent.
SobolevEstimate sobolev_constant(const Domain& d, const std::vector<double>& nu,
                                 const SobolevOptions& opt);

struct HardyResult {
    SobolevEstimate estimate;
    IsocapConstant gamma_weighted;
    std::vector<double> weight;  // nu_H per vertex (0 outside omega)
};

/// Hardy inequality machinery: sobolev_constant with q=p under the weight
/// nu_H(x) = mu(x) / dist(x, complement)^p, plus the weighted gamma.
HardyResult hardy_constant(const Domain& d, double p, const SobolevOptions& base);

struct PoincareOptions {
    double tau = 1.0;
    uint64_t rng_seed = 1;
    int n_random = 32;
};

/// Lower estimate of the best constant in the weak (1,p)-Poincare inequality:
/// max over candidate balls and sampled fields of
///   (mean_B |u - u_B| dmu) / ( r * (mean_{tau B} g_u^p)^{1/p} ).
double poincare_estimate(const Space& s, double p, const PoincareOptions& opt);

/// Assemble the piecewise extremal of a strictly nested chain from per-link
/// capacity extremals; equals lambda_0 on C_0 and 0 outside C_m.
ScalarField build_chain_extremal(const Domain& d, const std::vector<std::vector<int>>& chain,
                                 double p, double q, SolveCache& cache,
                                 std::vector<double>* lambdas = nullptr);

struct SupExtremal {
    ScalarField u;
    std::vector<int> levels;               // dyadic exponents j
    std::vector<double> betas;             // (2^j / lambda_p(2^j))^{1/(p-q)}
    std::vector<double> lambda_values;     // lambda_p(2^j)
    std::vector<std::vector<int>> subsets; // the attaining sets
    double sum_fq = 0;                     // sum beta_j^q 2^j
    double sum_gp = 0;                     // sum beta_j^p lambda_p(2^j)
};

/// sup_j beta_j u_j over dyadic mass levels, where u_j is the capacity
/// extremal of the lambda_p(2^j)-attaining subset.
SupExtremal build_sup_extremal(const Domain& d, double p, double q,
                               const std::vector<double>& nu, SolveCache& cache,
                               int enumeration_cap = 18);

/// Smallest value alpha of u on omega with nu({u >= alpha}) >= nu(omega)/2
/// and nu({u > alpha}) <= nu(omega)/2.
double median_split(const ScalarField& u, const Domain& d);

/// inf over shifts a of (sum_omega nu |u-a|^q)^{1/q}; evaluates every vertex
/// value of u plus the nu-mean and a golden-section refinement, so the
/// reported value never exceeds the value at the median split.
double centered_lq_norm(const ScalarField& u, double q, const std::vector<double>& nu,
                        const Domain& d, double* best_shift = nullptr);

}  // namespace capmetric
