#pragma once

#include <string>
#include <vector>

#include "capmetric/space.hpp"
#include "capmetric/util.hpp"

namespace capmetric::testing {

inline Space make_path(int n, bool boundary_ends = false) {
    std::vector<std::string> ids;
    std::vector<double> mu(n, 1.0), nu(n, 1.0);
    std::vector<Space::Edge> edges;
    for (int i = 0; i < n; ++i) ids.push_back("v" + std::to_string(i));
    for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, 1.0, 1.0});
    std::vector<int> boundary;
    if (boundary_ends && n >= 2) boundary = {0, n - 1};
    return Space::build(ids, mu, nu, edges, boundary);
}

inline Space make_cycle(int n) {
    std::vector<std::string> ids;
    std::vector<double> mu(n, 1.0), nu(n, 1.0);
    std::vector<Space::Edge> edges;
    for (int i = 0; i < n; ++i) ids.push_back("c" + std::to_string(i));
    for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n, 1.0, 1.0});
    return Space::build(ids, mu, nu, edges, {});
}

/// rows x cols unit grid; optionally the border ring is far-field boundary.
inline Space make_grid(int rows, int cols, bool border_boundary = false) {
    auto at = [cols](int r, int c) { return r * cols + c; };
    int n = rows * cols;
    std::vector<std::string> ids;
    std::vector<double> mu(n, 1.0), nu(n, 1.0);
    std::vector<Space::Edge> edges;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) ids.push_back("g" + std::to_string(r) + "_" + std::to_string(c));
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            if (c + 1 < cols) edges.push_back({at(r, c), at(r, c + 1), 1.0, 1.0});
            if (r + 1 < rows) edges.push_back({at(r, c), at(r + 1, c), 1.0, 1.0});
        }
    std::vector<int> boundary;
    if (border_boundary)
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                if (r == 0 || c == 0 || r == rows - 1 || c == cols - 1) boundary.push_back(at(r, c));
    return Space::build(ids, mu, nu, edges, boundary);
}

/// Connected random space: a random spanning tree plus extra edges, with
/// optionally randomized measures, lengths, and masses.
inline Space random_space(SplitMix64& rng, int n, bool weighted, int extra_edges = 2,
                          bool with_boundary = false) {
    std::vector<std::string> ids;
    std::vector<double> mu(n), nu(n);
    for (int i = 0; i < n; ++i) {
        ids.push_back("r" + std::to_string(i));
        mu[i] = weighted ? rng.uniform(0.5, 2.0) : 1.0;
        nu[i] = weighted ? rng.uniform(0.0, 2.0) : 1.0;
    }
    std::vector<Space::Edge> edges;
    std::vector<std::pair<int, int>> present;
    auto has = [&](int a, int b) {
        for (auto [x, y] : present)
            if ((x == a && y == b) || (x == b && y == a)) return true;
        return false;
    };
    for (int i = 1; i < n; ++i) {
        int j = int(rng.below(uint64_t(i)));
        present.push_back({j, i});
        edges.push_back({j, i, weighted ? rng.uniform(0.5, 2.0) : 1.0,
                         weighted ? rng.uniform(0.5, 2.0) : 1.0});
    }
    for (int t = 0; t < extra_edges && n > 2; ++t) {
        int a = int(rng.below(uint64_t(n))), b = int(rng.below(uint64_t(n)));
        if (a == b || has(a, b)) continue;
        present.push_back({a, b});
        edges.push_back({std::min(a, b), std::max(a, b), weighted ? rng.uniform(0.5, 2.0) : 1.0,
                         weighted ? rng.uniform(0.5, 2.0) : 1.0});
    }
    std::vector<int> boundary;
    if (with_boundary) boundary.push_back(n - 1);
    return Space::build(ids, mu, nu, edges, boundary);
}

/// All interior vertices except the last: a proper subdomain with a
/// nonempty complement.
inline std::vector<int> all_but_last_interior(const Space& s) {
    auto inter = s.interior();
    if (!inter.empty()) inter.pop_back();
    return inter;
}

}  // namespace capmetric::testing
