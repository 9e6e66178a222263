#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace capmetric {

/// Raised on malformed space files and violated model invariants.
class SpaceError : public std::runtime_error {
public:
    explicit SpaceError(const std::string& what) : std::runtime_error(what) {}
};

/// Finite metric measure space: a connected edge-weighted graph carrying a
/// volume measure mu and a target measure nu on vertices, an edge length
/// (metric units) and an edge mass (energy-measure units) per edge, and an
/// optional far-field boundary set.  Immutable once built; all queries are
/// pure and safe for concurrent use.
class Space {
public:
    struct Edge {
        int a, b;        // endpoint indices, a < b
        double length;   // > 0
        double mass;     // > 0
    };

    /// Parse the line-oriented space file format:
    ///   vertex <id> mu=<decimal> [nu=<decimal>]
    ///   edge <id1> <id2> len=<decimal> [mass=<decimal>]
    ///   boundary <id>
    /// '#' starts a comment.  nu defaults to mu, mass to (mu(a)+mu(b))/2.
    static Space load(const std::string& text);

    /// Programmatic construction; runs the same validation as load().
    static Space build(const std::vector<std::string>& ids,
                       const std::vector<double>& mu,
                       const std::vector<double>& nu,
                       const std::vector<Edge>& edges,
                       const std::vector<int>& boundary);

    /// Canonical text form; load(serialize(s)) reproduces the same space.
    std::string serialize() const;

    int vertex_count() const { return int(mu_.size()); }
    int edge_count() const { return int(edges_.size()); }

    const std::string& id(int v) const { return ids_[v]; }
    int index_of(const std::string& id) const;
    std::optional<int> try_index_of(const std::string& id) const;

    double mu(int v) const { return mu_[v]; }
    double nu(int v) const { return nu_[v]; }
    const std::vector<double>& mu_values() const { return mu_; }
    const std::vector<double>& nu_values() const { return nu_; }

    const Edge& edge(int e) const { return edges_[e]; }
    const std::vector<Edge>& edges() const { return edges_; }

    /// (neighbor vertex, edge index) pairs.
    const std::vector<std::pair<int, int>>& neighbors(int v) const { return adj_[v]; }

    bool is_boundary(int v) const { return boundary_flag_[v] != 0; }
    const std::vector<int>& boundary() const { return boundary_; }

    /// Vertices not in the far-field boundary, sorted.
    std::vector<int> interior() const;

    /// Shortest-path metric over edge chains weighted by length.
    double distance(int x, int y) const { return dist_[size_t(x) * mu_.size() + y]; }

    /// Open metric ball {y : d(x,y) < r}; strict inequality.
    std::vector<int> ball(int x, double r) const;

    double diameter() const { return diameter_; }

    /// All positive pairwise distances, sorted unique.
    const std::vector<double>& positive_distances() const { return pos_dists_; }

    /// Candidate radii for the doubling estimate: positive pairwise
    /// distances and their halves.
    std::vector<double> doubling_radii() const;

    /// Exact minimal doubling constant over candidate radii:
    /// max over vertices x and candidate r of mu(B(x,2r)) / mu(B(x,r)).
    double doubling_estimate() const;

    double mu_of(const std::vector<int>& set) const;
    double nu_of(const std::vector<int>& set) const;
    double total_mu() const;
    double total_nu() const;

    /// FNV-1a digest of the canonical serialization, as 16 hex chars.
    std::string digest() const;

private:
    std::vector<std::string> ids_;
    std::unordered_map<std::string, int> index_;
    std::vector<double> mu_, nu_;
    std::vector<Edge> edges_;
    std::vector<std::vector<std::pair<int, int>>> adj_;
    std::vector<char> boundary_flag_;
    std::vector<int> boundary_;
    std::vector<double> dist_;  // row-major all-pairs matrix
    std::vector<double> pos_dists_;
    double diameter_ = 0;

    void finalize();  // validate, build adjacency, compute metric
};

/// An open bounded set: a subset of non-boundary vertices of a space.
struct Domain {
    const Space* space = nullptr;
    std::vector<int> omega;       // sorted
    std::vector<char> in_omega;   // size vertex_count

    Domain() = default;
    Domain(const Space& s, std::vector<int> omega_vertices);

    bool contains(int v) const { return in_omega[v] != 0; }
    std::vector<int> complement() const;  // vertices(space) minus omega
    std::string digest() const;
};

/// Parse a comma-separated list of vertex ids into sorted indices.
std::vector<int> parse_vertex_set(const Space& s, const std::string& literal);

/// For each x in omega, the distance to the nearest vertex outside omega.
/// Errors when omega covers every vertex.
std::vector<double> dist_to_complement(const Domain& d);

}  // namespace capmetric
