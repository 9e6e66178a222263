#include "capmetric/space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <sstream>

#include "capmetric/util.hpp"

namespace capmetric {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

double parse_decimal(const std::string& text, int line_no, const std::string& what) {
    try {
        size_t pos = 0;
        double v = std::stod(text, &pos);
        if (pos != text.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw SpaceError("line " + std::to_string(line_no) + ": bad decimal for " + what +
                         ": '" + text + "'");
    }
}

/// key=value attribute, or nullopt when the token has a different key.
std::optional<double> attr(const std::string& tok, const std::string& key, int line_no) {
    if (tok.size() <= key.size() + 1 || tok.compare(0, key.size(), key) != 0 ||
        tok[key.size()] != '=')
        return std::nullopt;
    return parse_decimal(tok.substr(key.size() + 1), line_no, key);
}

}  // namespace

Space Space::load(const std::string& text) {
    Space s;
    struct PendingEdge {
        std::string a, b;
        double len;
        std::optional<double> mass;
        int line;
    };
    std::vector<PendingEdge> pending_edges;
    std::vector<std::pair<std::string, int>> pending_boundary;
    std::vector<std::optional<double>> explicit_nu;

    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        auto toks = split_ws(line);
        if (toks.empty()) continue;
        const std::string& kind = toks[0];
        if (kind == "vertex") {
            if (toks.size() < 3)
                throw SpaceError("line " + std::to_string(line_no) + ": vertex needs <id> mu=<v>");
            const std::string& id = toks[1];
            if (s.index_.count(id))
                throw SpaceError("line " + std::to_string(line_no) + ": duplicate vertex '" + id + "'");
            std::optional<double> mu, nu;
            for (size_t i = 2; i < toks.size(); ++i) {
                if (auto v = attr(toks[i], "mu", line_no)) mu = v;
                else if (auto w = attr(toks[i], "nu", line_no)) nu = w;
                else throw SpaceError("line " + std::to_string(line_no) + ": unknown vertex attribute '" + toks[i] + "'");
            }
            if (!mu) throw SpaceError("line " + std::to_string(line_no) + ": vertex missing mu");
            if (*mu <= 0)
                throw SpaceError("line " + std::to_string(line_no) + ": mu must be positive");
            if (nu && *nu < 0)
                throw SpaceError("line " + std::to_string(line_no) + ": nu must be nonnegative");
            s.index_[id] = int(s.ids_.size());
            s.ids_.push_back(id);
            s.mu_.push_back(*mu);
            explicit_nu.push_back(nu);
        } else if (kind == "edge") {
            if (toks.size() < 4)
                throw SpaceError("line " + std::to_string(line_no) + ": edge needs <id1> <id2> len=<v>");
            PendingEdge pe{toks[1], toks[2], 0, std::nullopt, line_no};
            std::optional<double> len;
            for (size_t i = 3; i < toks.size(); ++i) {
                if (auto v = attr(toks[i], "len", line_no)) len = v;
                else if (auto w = attr(toks[i], "mass", line_no)) pe.mass = w;
                else throw SpaceError("line " + std::to_string(line_no) + ": unknown edge attribute '" + toks[i] + "'");
            }
            if (!len) throw SpaceError("line " + std::to_string(line_no) + ": edge missing len");
            pe.len = *len;
            pending_edges.push_back(pe);
        } else if (kind == "boundary") {
            if (toks.size() != 2)
                throw SpaceError("line " + std::to_string(line_no) + ": boundary needs one <id>");
            pending_boundary.emplace_back(toks[1], line_no);
        } else {
            throw SpaceError("line " + std::to_string(line_no) + ": unknown directive '" + kind + "'");
        }
    }

    if (s.ids_.empty()) throw SpaceError("space file declares no vertices");

    s.nu_.resize(s.ids_.size());
    for (size_t i = 0; i < s.ids_.size(); ++i)
        s.nu_[i] = explicit_nu[i] ? *explicit_nu[i] : s.mu_[i];

    for (const auto& pe : pending_edges) {
        auto ia = s.try_index_of(pe.a), ib = s.try_index_of(pe.b);
        if (!ia || !ib)
            throw SpaceError("line " + std::to_string(pe.line) + ": edge references unknown vertex '" +
                             (!ia ? pe.a : pe.b) + "'");
        if (pe.len <= 0)
            throw SpaceError("line " + std::to_string(pe.line) + ": len must be positive");
        double mass = pe.mass ? *pe.mass : (s.mu_[*ia] + s.mu_[*ib]) / 2.0;
        if (mass <= 0)
            throw SpaceError("line " + std::to_string(pe.line) + ": mass must be positive");
        if (*ia == *ib)
            throw SpaceError("line " + std::to_string(pe.line) + ": self-loop at '" + pe.a + "'");
        Edge e{std::min(*ia, *ib), std::max(*ia, *ib), pe.len, mass};
        s.edges_.push_back(e);
    }

    s.boundary_flag_.assign(s.ids_.size(), 0);
    for (const auto& [id, ln] : pending_boundary) {
        auto idx = s.try_index_of(id);
        if (!idx)
            throw SpaceError("line " + std::to_string(ln) + ": boundary references unknown vertex '" + id + "'");
        s.boundary_flag_[*idx] = 1;
    }

    s.finalize();
    return s;
}

Space Space::build(const std::vector<std::string>& ids, const std::vector<double>& mu,
                   const std::vector<double>& nu, const std::vector<Edge>& edges,
                   const std::vector<int>& boundary) {
    Space s;
    if (ids.size() != mu.size() || ids.size() != nu.size())
        throw SpaceError("build: ids/mu/nu size mismatch");
    if (ids.empty()) throw SpaceError("build: empty vertex set");
    for (size_t i = 0; i < ids.size(); ++i) {
        if (s.index_.count(ids[i])) throw SpaceError("build: duplicate vertex '" + ids[i] + "'");
        if (mu[i] <= 0) throw SpaceError("build: mu must be positive at '" + ids[i] + "'");
        if (nu[i] < 0) throw SpaceError("build: nu must be nonnegative at '" + ids[i] + "'");
        s.index_[ids[i]] = int(i);
    }
    s.ids_ = ids;
    s.mu_ = mu;
    s.nu_ = nu;
    for (auto e : edges) {
        if (e.a == e.b) throw SpaceError("build: self-loop at '" + ids[e.a] + "'");
        if (e.a > e.b) std::swap(e.a, e.b);
        if (e.length <= 0 || e.mass <= 0) throw SpaceError("build: nonpositive edge length or mass");
        s.edges_.push_back(e);
    }
    s.boundary_flag_.assign(ids.size(), 0);
    for (int v : boundary) {
        if (v < 0 || v >= int(ids.size())) throw SpaceError("build: boundary index out of range");
        s.boundary_flag_[v] = 1;
    }
    s.finalize();
    return s;
}

void Space::finalize() {
    const int n = int(ids_.size());

    std::set<std::pair<int, int>> seen;
    for (const auto& e : edges_) {
        if (!seen.insert({e.a, e.b}).second)
            throw SpaceError("duplicate edge between '" + ids_[e.a] + "' and '" + ids_[e.b] + "'");
    }

    adj_.assign(n, {});
    for (int ei = 0; ei < int(edges_.size()); ++ei) {
        adj_[edges_[ei].a].emplace_back(edges_[ei].b, ei);
        adj_[edges_[ei].b].emplace_back(edges_[ei].a, ei);
    }

    boundary_.clear();
    for (int v = 0; v < n; ++v)
        if (boundary_flag_[v]) boundary_.push_back(v);

    // All-pairs shortest paths (Dijkstra per vertex); also checks connectivity.
    const double inf = std::numeric_limits<double>::infinity();
    dist_.assign(size_t(n) * n, inf);
    for (int src = 0; src < n; ++src) {
        double* d = &dist_[size_t(src) * n];
        d[src] = 0;
        using Item = std::pair<double, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        pq.push({0.0, src});
        while (!pq.empty()) {
            auto [dv, v] = pq.top();
            pq.pop();
            if (dv > d[v]) continue;
            for (auto [w, ei] : adj_[v]) {
                double nd = dv + edges_[ei].length;
                if (nd < d[w]) {
                    d[w] = nd;
                    pq.push({nd, w});
                }
            }
        }
        for (int v = 0; v < n; ++v)
            if (!(d[v] < inf)) throw SpaceError("graph is disconnected ('" + ids_[src] + "' cannot reach '" + ids_[v] + "')");
    }

    std::set<double> dvals;
    diameter_ = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double d = distance(i, j);
            dvals.insert(d);
            diameter_ = std::max(diameter_, d);
        }
    pos_dists_.assign(dvals.begin(), dvals.end());
}

std::string Space::serialize() const {
    std::string out;
    for (int v = 0; v < vertex_count(); ++v)
        out += "vertex " + ids_[v] + " mu=" + fmt17(mu_[v]) + " nu=" + fmt17(nu_[v]) + "\n";
    for (const auto& e : edges_)
        out += "edge " + ids_[e.a] + " " + ids_[e.b] + " len=" + fmt17(e.length) +
               " mass=" + fmt17(e.mass) + "\n";
    for (int v : boundary_) out += "boundary " + ids_[v] + "\n";
    return out;
}

int Space::index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw SpaceError("unknown vertex '" + id + "'");
    return it->second;
}

std::optional<int> Space::try_index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::vector<int> Space::interior() const {
    std::vector<int> out;
    for (int v = 0; v < vertex_count(); ++v)
        if (!boundary_flag_[v]) out.push_back(v);
    return out;
}

std::vector<int> Space::ball(int x, double r) const {
    std::vector<int> out;
    for (int v = 0; v < vertex_count(); ++v)
        if (distance(x, v) < r) out.push_back(v);
    return out;
}

std::vector<double> Space::doubling_radii() const {
    std::vector<double> radii;
    for (double d : pos_dists_) {
        radii.push_back(d);
        radii.push_back(d / 2.0);
    }
    std::sort(radii.begin(), radii.end());
    radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
    return radii;
}

double Space::doubling_estimate() const {
    if (vertex_count() == 1) return 1.0;
    double best = 1.0;
    for (double r : doubling_radii()) {
        for (int x = 0; x < vertex_count(); ++x) {
            double inner = 0, outer = 0;
            for (int v = 0; v < vertex_count(); ++v) {
                double d = distance(x, v);
                if (d < r) inner += mu_[v];
                if (d < 2 * r) outer += mu_[v];
            }
            best = std::max(best, outer / inner);  // inner >= mu(x) > 0
        }
    }
    return best;
}

double Space::mu_of(const std::vector<int>& set) const {
    double s = 0;
    for (int v : set) s += mu_[v];
    return s;
}

double Space::nu_of(const std::vector<int>& set) const {
    double s = 0;
    for (int v : set) s += nu_[v];
    return s;
}

double Space::total_mu() const {
    double s = 0;
    for (double m : mu_) s += m;
    return s;
}

double Space::total_nu() const {
    double s = 0;
    for (double m : nu_) s += m;
    return s;
}

std::string Space::digest() const { return hex64(fnv1a64(serialize())); }

Domain::Domain(const Space& s, std::vector<int> omega_vertices)
    : space(&s), omega(sorted_unique(std::move(omega_vertices))) {
    in_omega.assign(s.vertex_count(), 0);
    for (int v : omega) {
        if (v < 0 || v >= s.vertex_count()) throw SpaceError("domain vertex index out of range");
        if (s.is_boundary(v))
            throw SpaceError("domain may not contain the far-field boundary vertex '" + s.id(v) + "'");
        in_omega[v] = 1;
    }
}

std::vector<int> Domain::complement() const {
    std::vector<int> out;
    for (int v = 0; v < space->vertex_count(); ++v)
        if (!in_omega[v]) out.push_back(v);
    return out;
}

std::string Domain::digest() const {
    std::string blob = space->serialize() + "|omega:";
    for (int v : omega) blob += space->id(v) + ",";
    return hex64(fnv1a64(blob));
}

std::vector<int> parse_vertex_set(const Space& s, const std::string& literal) {
    std::vector<int> out;
    std::string tok;
    std::istringstream in(literal);
    while (std::getline(in, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(s.index_of(tok));
    }
    return sorted_unique(std::move(out));
}

std::vector<double> dist_to_complement(const Domain& d) {
    auto comp = d.complement();
    if (comp.empty())
        throw SpaceError("dist_to_complement: omega covers every vertex, weight undefined");
    std::vector<double> out(d.omega.size());
    for (size_t i = 0; i < d.omega.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int y : comp) best = std::min(best, d.space->distance(d.omega[i], y));
        out[i] = best;
    }
    return out;
}

}  // namespace capmetric
