#pragma once

#include <optional>
#include <string>
#include <vector>

#include "capmetric/space.hpp"

namespace capmetric {

/// One real value per vertex (index-aligned with the space).
using ScalarField = std::vector<double>;

/// One nonnegative value per edge (index-aligned with the space).
using EdgeField = std::vector<double>;

/// Superlevel structure of |u| on a domain: strictly increasing thresholds
/// (the distinct nonzero values of |u| on omega), the strict superlevel set
/// E_t = {x in omega : |u(x)| > t} per threshold, and its nu/mu masses.
/// Between consecutive thresholds the sets are constant, so integrals of
/// lambda^{p-1} against set masses evaluate in closed form.
struct LevelData {
    std::vector<double> thresholds;
    std::vector<std::vector<int>> sets;  // nested decreasing; sets[k] = {|u| > thresholds[k]}
    std::vector<double> nu_mass, mu_mass;
};

/// Smallest edge field g with |u(x)-u(y)| <= g(e) * length(e) per edge;
/// dominating it edgewise dominates every edge-chain path integral.
EdgeField minimal_upper_gradient(const Space& s, const ScalarField& u);

/// Sum over edges of mass(e) * g(e)^p, optionally restricted by an edge mask.
double p_energy(const Space& s, const EdgeField& g, double p);
double p_energy(const Space& s, const EdgeField& g, double p, const std::vector<char>& edge_mask);

/// Edge masks for restrictions: edges with at least one endpoint in the set,
/// and edges with both endpoints in the set.
std::vector<char> edges_meeting(const Space& s, const std::vector<int>& set);
std::vector<char> edges_within(const Space& s, const std::vector<int>& set);

LevelData level_data(const Space& s, const ScalarField& u, const Domain& d);

/// Exact Cavalieri evaluation p * integral of lambda^{p-1} m(E_lambda)
/// via closed-form integration over level intervals; equals the direct sum
/// of m(x)|u(x)|^p over omega up to roundoff.
double cavalieri(const Space& s, const ScalarField& u, double p,
                 const std::vector<double>& vertex_measure, const Domain& d);

/// ( p * integral of lambda^{p-1} m(E_lambda)^{p/q} )^{1/p}, 0 < p <= q.
double qpey_rhs(const Space& s, const ScalarField& u, double p, double q,
                const std::vector<double>& vertex_measure, const Domain& d);

/// (sum over omega of m|u|^q)^{1/q}.
double lq_norm(const Space& s, const ScalarField& u, double q,
               const std::vector<double>& vertex_measure, const Domain& d);

/// Dyadic truncation: 1 where |u| >= 2^j, 0 where |u| <= 2^{j-1},
/// affine (2^{1-j}|u| - 1) between; values in [0,1].
ScalarField truncate_dyadic(const ScalarField& u, int j);

/// Indicator of a vertex set.
ScalarField indicator(const Space& s, const std::vector<int>& set);

/// Zero the field outside omega (the zero-boundary class).
ScalarField restrict_to(const Domain& d, ScalarField u);

/// Parse "<id>=<decimal>,<id>=<decimal>,..."; omitted vertices default to 0.
ScalarField parse_field(const Space& s, const std::string& literal);

}  // namespace capmetric
