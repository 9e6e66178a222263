#include "capmetric/fields.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace capmetric {

EdgeField minimal_upper_gradient(const Space& s, const ScalarField& u) {
    if (int(u.size()) != s.vertex_count())
        throw std::invalid_argument("field size does not match vertex count");
    EdgeField g(s.edge_count());
    for (int e = 0; e < s.edge_count(); ++e) {
        const auto& ed = s.edge(e);
        g[e] = std::abs(u[ed.a] - u[ed.b]) / ed.length;
    }
    return g;
}

double p_energy(const Space& s, const EdgeField& g, double p) {
    if (p < 1) throw std::invalid_argument("p_energy requires p >= 1");
    double total = 0;
    for (int e = 0; e < s.edge_count(); ++e)
        if (g[e] != 0) total += s.edge(e).mass * std::pow(g[e], p);
    return total;
}

double p_energy(const Space& s, const EdgeField& g, double p, const std::vector<char>& mask) {
    if (p < 1) throw std::invalid_argument("p_energy requires p >= 1");
    double total = 0;
    for (int e = 0; e < s.edge_count(); ++e)
        if (mask[e] && g[e] != 0) total += s.edge(e).mass * std::pow(g[e], p);
    return total;
}

std::vector<char> edges_meeting(const Space& s, const std::vector<int>& set) {
    std::vector<char> in(s.vertex_count(), 0);
    for (int v : set) in[v] = 1;
    std::vector<char> mask(s.edge_count(), 0);
    for (int e = 0; e < s.edge_count(); ++e)
        mask[e] = in[s.edge(e).a] || in[s.edge(e).b];
    return mask;
}

std::vector<char> edges_within(const Space& s, const std::vector<int>& set) {
    std::vector<char> in(s.vertex_count(), 0);
    for (int v : set) in[v] = 1;
    std::vector<char> mask(s.edge_count(), 0);
    for (int e = 0; e < s.edge_count(); ++e)
        mask[e] = in[s.edge(e).a] && in[s.edge(e).b];
    return mask;
}

LevelData level_data(const Space& s, const ScalarField& u, const Domain& d) {
    LevelData out;
    std::vector<double> vals;
    for (int v : d.omega) {
        double a = std::abs(u[v]);
        if (a > 0) vals.push_back(a);
    }
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    out.thresholds = vals;
    for (double t : vals) {
        std::vector<int> set;
        double numass = 0, mumass = 0;
        for (int v : d.omega) {
            if (std::abs(u[v]) > t) {
                set.push_back(v);
                numass += s.nu(v);
                mumass += s.mu(v);
            }
        }
        out.sets.push_back(std::move(set));
        out.nu_mass.push_back(numass);
        out.mu_mass.push_back(mumass);
    }
    return out;
}

namespace {

/// Masses m({|u| >= t_k}) for the distinct positive levels t_1 < ... < t_K.
/// On (t_{k-1}, t_k) the strict superlevel set equals {|u| >= t_k}, so
/// closed-form integration needs exactly these closed-superlevel masses.
struct LevelMasses {
    std::vector<double> levels;  // t_1 < ... < t_K
    std::vector<double> mass;    // m({|u| >= t_k})
};

LevelMasses closed_superlevel_masses(const ScalarField& u, const std::vector<double>& m,
                                     const Domain& d) {
    std::map<double, double> at_level;  // level -> total mass sitting exactly there
    for (size_t i = 0; i < d.omega.size(); ++i) {
        int v = d.omega[i];
        double a = std::abs(u[v]);
        if (a > 0) at_level[a] += m[v];
    }
    LevelMasses out;
    out.levels.reserve(at_level.size());
    out.mass.reserve(at_level.size());
    for (const auto& [lvl, _] : at_level) out.levels.push_back(lvl);
    double cum = 0;
    out.mass.assign(out.levels.size(), 0);
    for (int k = int(out.levels.size()) - 1; k >= 0; --k) {
        cum += at_level[out.levels[k]];
        out.mass[k] = cum;
    }
    return out;
}

}  // namespace

double cavalieri(const Space& s, const ScalarField& u, double p,
                 const std::vector<double>& m, const Domain& d) {
    if (p < 1) throw std::invalid_argument("cavalieri requires p >= 1");
    auto lm = closed_superlevel_masses(u, m, d);
    // p * int_0^inf lambda^{p-1} m(E_lambda) dlambda, piecewise exact:
    // on (t_{k-1}, t_k) the mass is m({|u| >= t_k}).
    (void)s;
    double total = 0, prev = 0;
    for (size_t k = 0; k < lm.levels.size(); ++k) {
        double t = lm.levels[k];
        total += lm.mass[k] * (std::pow(t, p) - std::pow(prev, p));
        prev = t;
    }
    return total;
}

double qpey_rhs(const Space& s, const ScalarField& u, double p, double q,
                const std::vector<double>& m, const Domain& d) {
    if (!(p > 0) || p > q) throw std::invalid_argument("qpey_rhs requires 0 < p <= q");
    (void)s;
    auto lm = closed_superlevel_masses(u, m, d);
    double total = 0, prev = 0;
    for (size_t k = 0; k < lm.levels.size(); ++k) {
        double t = lm.levels[k];
        total += std::pow(lm.mass[k], p / q) * (std::pow(t, p) - std::pow(prev, p));
        prev = t;
    }
    return std::pow(total, 1.0 / p);
}

double lq_norm(const Space& s, const ScalarField& u, double q,
               const std::vector<double>& m, const Domain& d) {
    (void)s;
    double total = 0;
    for (int v : d.omega)
        if (u[v] != 0) total += m[v] * std::pow(std::abs(u[v]), q);
    return std::pow(total, 1.0 / q);
}

ScalarField truncate_dyadic(const ScalarField& u, int j) {
    const double hi = std::ldexp(1.0, j);       // 2^j
    const double lo = std::ldexp(1.0, j - 1);   // 2^{j-1}
    ScalarField out(u.size());
    for (size_t i = 0; i < u.size(); ++i) {
        double a = std::abs(u[i]);
        if (a >= hi) out[i] = 1.0;
        else if (a <= lo) out[i] = 0.0;
        else out[i] = a / lo - 1.0;
    }
    return out;
}

ScalarField indicator(const Space& s, const std::vector<int>& set) {
    ScalarField u(s.vertex_count(), 0.0);
    for (int v : set) u[v] = 1.0;
    return u;
}

ScalarField restrict_to(const Domain& d, ScalarField u) {
    for (int v = 0; v < d.space->vertex_count(); ++v)
        if (!d.contains(v)) u[v] = 0.0;
    return u;
}

ScalarField parse_field(const Space& s, const std::string& literal) {
    ScalarField u(s.vertex_count(), 0.0);
    std::istringstream in(literal);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        if (tok.empty()) continue;
        auto eq = tok.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("field literal entry '" + tok + "' lacks '='");
        int v = s.index_of(tok.substr(0, eq));
        u[v] = std::stod(tok.substr(eq + 1));
    }
    return u;
}

}  // namespace capmetric
