#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "capmetric/constants.hpp"
#include "capmetric/json.hpp"

namespace capmetric {

/// One checked inequality: pass means slack = rhs - lhs is nonnegative,
/// exactly for links between exactly computed quantities, within the
/// normalized tolerance for solver-dependent ones.
struct InequalityLink {
    std::string name;
    double lhs = 0, rhs = 0, slack = 0;
    std::string anchor;  // the inequality being checked, in formula form
    bool pass = true;
    bool exact = false;
};

struct VerifyReport {
    std::string theorem;
    std::string instance_digest;
    Json params = Json::object();
    std::vector<InequalityLink> links;
    bool verdict = true;
    long runtime_s = 0;  // floored to whole seconds for byte-stable reports
    uint64_t rng_seed = 1;
    double tolerance = 1e-9;

    /// Append a link; exact links pass iff slack >= 0, others iff
    /// slack >= -tolerance * max(1, rhs).
    void add(const std::string& name, double lhs, double rhs, const std::string& anchor,
             bool exact);

    Json to_json() const;
    std::string to_json_text() const;  // canonical byte-stable serialization
};

struct CheckOptions {
    double p = 2, q = 2;
    int n_random = 64;
    uint64_t rng_seed = 1;
    double tolerance = 1e-9;
    int enumeration_cap = 18;
    int max_chain_length = 4;
    /// Failure-injection hook for the harness self-test: scales the witness
    /// subset's nu mass inside the binding isocapacitary link.
    double nu_witness_scale = 1.0;
};

/// Layer-cake norm bound: lq norm <= (p int lambda^{p-1} nu(E_lambda)^{p/q})^{1/p},
/// with equality links when p = q and for indicator samples.
VerifyReport check_qpey(const Domain& d, const CheckOptions& opt);

/// Capacitary strong-type bound:
/// int lambda^{p-1} cap_p(E_lambda, Omega) dlambda <= 2^{2p-1} int g_u^p,
/// with the dyadic intermediate sums emitted as separate links.
VerifyReport check_capaint(const Domain& d, const CheckOptions& opt);

/// Same machinery with conductivity con_p(E_lambda, G, Omega) for samples
/// vanishing on Omega minus G.
VerifyReport check_conint(const Domain& d, const std::vector<int>& G, const CheckOptions& opt);

/// Isocapacitary characterization for 1 <= p <= q: exact gamma enumeration,
/// per-sample Sobolev bounds, per-subset seeded lower-bound links, and the
/// two-sided sandwich gamma <= c_lower^p <= gamma p 2^{2p-1}.
VerifyReport check_sobolev_pq(const Domain& d, const CheckOptions& opt);

/// Same characterization under the Hardy weight mu(x)/dist(x, complement)^p
/// with q = p.
VerifyReport check_hardy(const Domain& d, const CheckOptions& opt);

/// p = 1 ball criterion: cover subadditivity, per-ball isocapacity, the tent
/// capacity bound with the measured doubling constant, the assembled
/// nu(K)^{1/q} <= gamma c_D H(K) chain, and measured content-capacity
/// comparability.
VerifyReport check_ball_criterion(const Space& s, const CheckOptions& opt);

/// q < p chain characterization: dyadic Holder chains per sample (direction
/// one) and nested-chain extremal links (direction two).
VerifyReport check_qp(const Domain& d, const CheckOptions& opt);

/// q < p integral criterion: sufficiency chain against the closed-form
/// integral of the capacity profile and the sup-extremal necessity links.
VerifyReport check_integral_criterion(const Domain& d, const CheckOptions& opt);

/// Conductor criterion and the median-split reduction for general boundary
/// values (1 <= p <= q).
VerifyReport check_conductivity(const Domain& d, const CheckOptions& opt);

/// Dispatch by theorem id: qpey, capaint, sobolev-pq, ball-p1, qp, integral,
/// conductivity, conint, hardy.
VerifyReport run_check(const std::string& theorem_id, const Space& s, const Domain* d,
                       const std::vector<int>* conint_G, const CheckOptions& opt);

}  // namespace capmetric
