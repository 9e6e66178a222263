#include "capmetric/capacity.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <stdexcept>

#include "capmetric/util.hpp"

namespace capmetric {

namespace {

constexpr double kResidualTarget = 1e-10;
constexpr long kMaxIterations = 100000;

/// Pinned/free structure shared by the capacity and conductivity solvers.
struct VarProblem {
    const Space* space;
    double p;
    std::vector<int> pin;       // -1 free, otherwise the pinned value 0 or 1
    std::vector<char> active;   // edges whose energy counts
    std::vector<double> w;      // mass / len^p per edge (0 where inactive)
    double total_w = 0;

    double grad_scale() const { return std::max(1.0, p * total_w); }
};

VarProblem make_var_problem(const Space& s, double p, const std::vector<int>& pin1,
                            const std::vector<int>& pin0, std::vector<char> active) {
    VarProblem vp;
    vp.space = &s;
    vp.p = p;
    vp.pin.assign(s.vertex_count(), -1);
    for (int v : pin0) vp.pin[v] = 0;
    for (int v : pin1) vp.pin[v] = 1;
    vp.active = std::move(active);
    vp.w.assign(s.edge_count(), 0.0);
    for (int e = 0; e < s.edge_count(); ++e) {
        if (!vp.active[e]) continue;
        const auto& ed = s.edge(e);
        vp.w[e] = ed.mass / std::pow(ed.length, p);
        vp.total_w += vp.w[e];
    }
    return vp;
}

/// Free components (over active edges) that never touch a pinned vertex have
/// constant minimizers; pin them to zero so the remaining system is SPD.
void ground_isolated_components(VarProblem& vp) {
    const Space& s = *vp.space;
    std::vector<int> comp(s.vertex_count(), -1);
    int ncomp = 0;
    for (int v = 0; v < s.vertex_count(); ++v) {
        if (vp.pin[v] != -1 || comp[v] != -1) continue;
        std::deque<int> queue{v};
        comp[v] = ncomp;
        while (!queue.empty()) {
            int x = queue.front();
            queue.pop_front();
            for (auto [y, e] : s.neighbors(x)) {
                if (!vp.active[e] || vp.pin[y] != -1 || comp[y] != -1) continue;
                comp[y] = ncomp;
                queue.push_back(y);
            }
        }
        ++ncomp;
    }
    if (ncomp == 0) return;
    std::vector<char> grounded(ncomp, 0);
    for (int e = 0; e < s.edge_count(); ++e) {
        if (!vp.active[e]) continue;
        int a = s.edge(e).a, b = s.edge(e).b;
        if (vp.pin[a] != -1 && vp.pin[b] == -1) grounded[comp[b]] = 1;
        if (vp.pin[b] != -1 && vp.pin[a] == -1) grounded[comp[a]] = 1;
    }
    for (int v = 0; v < s.vertex_count(); ++v)
        if (vp.pin[v] == -1 && !grounded[comp[v]]) vp.pin[v] = 0;
}

double smooth_dphi(double x, double p, double eps) {
    if (eps > 0) return x / std::sqrt(x * x + eps * eps);
    if (x == 0) return 0;
    return p * std::copysign(std::pow(std::abs(x), p - 1), x);
}

double smooth_d2phi(double x, double p, double eps) {
    if (eps > 0) {
        double s2 = x * x + eps * eps;
        return eps * eps / (s2 * std::sqrt(s2));
    }
    double a = std::abs(x);
    if (p < 2) a = std::max(a, 1e-9);  // keep the Newton weights finite
    return p * (p - 1) * std::pow(a, p - 2);
}

double smoothed_energy(const VarProblem& vp, const ScalarField& u, double eps) {
    const Space& s = *vp.space;
    double total = 0;
    for (int e = 0; e < s.edge_count(); ++e) {
        if (!vp.active[e]) continue;
        const auto& ed = s.edge(e);
        double t = (u[ed.a] - u[ed.b]) / ed.length;
        if (eps > 0) {
            total += ed.mass * std::sqrt(t * t + eps * eps);
        } else if (t != 0) {
            total += ed.mass * std::pow(std::abs(t), vp.p);
        }
    }
    return total;
}

/// Gradient wrt vertex values of the (possibly smoothed) energy.
void smoothed_gradient(const VarProblem& vp, const ScalarField& u, double eps,
                       std::vector<double>& grad) {
    const Space& s = *vp.space;
    grad.assign(s.vertex_count(), 0.0);
    for (int e = 0; e < s.edge_count(); ++e) {
        if (!vp.active[e]) continue;
        const auto& ed = s.edge(e);
        double t = (u[ed.a] - u[ed.b]) / ed.length;
        double d = ed.mass * smooth_dphi(t, vp.p, eps) / ed.length;
        grad[ed.a] += d;
        grad[ed.b] -= d;
    }
}

double free_residual(const VarProblem& vp, const std::vector<double>& grad) {
    double r = 0;
    for (int v = 0; v < vp.space->vertex_count(); ++v)
        if (vp.pin[v] == -1) r = std::max(r, std::abs(grad[v]));
    return r / vp.grad_scale();
}

/// Direct solution of the p=2 stationarity system over free vertices.
ScalarField solve_quadratic(const VarProblem& vp) {
    const Space& s = *vp.space;
    std::vector<int> free_index(s.vertex_count(), -1);
    std::vector<int> free_list;
    for (int v = 0; v < s.vertex_count(); ++v)
        if (vp.pin[v] == -1) {
            free_index[v] = int(free_list.size());
            free_list.push_back(v);
        }
    ScalarField u(s.vertex_count(), 0.0);
    for (int v = 0; v < s.vertex_count(); ++v)
        if (vp.pin[v] != -1) u[v] = vp.pin[v];
    if (free_list.empty()) return u;

    const int nf = int(free_list.size());
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf);
    std::vector<double> diag(nf, 0.0);
    for (int e = 0; e < s.edge_count(); ++e) {
        if (!vp.active[e]) continue;
        const auto& ed = s.edge(e);
        double c = ed.mass / (ed.length * ed.length);  // quadratic form weight
        int fa = free_index[ed.a], fb = free_index[ed.b];
        if (fa >= 0 && fb >= 0) {
            diag[fa] += c;
            diag[fb] += c;
            trip.emplace_back(fa, fb, -c);
            trip.emplace_back(fb, fa, -c);
        } else if (fa >= 0) {
            diag[fa] += c;
            rhs[fa] += c * vp.pin[ed.b];
        } else if (fb >= 0) {
            diag[fb] += c;
            rhs[fb] += c * vp.pin[ed.a];
        }
    }
    for (int i = 0; i < nf; ++i) trip.emplace_back(i, i, diag[i]);
    Eigen::SparseMatrix<double> A(nf, nf);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("quadratic capacity system factorization failed");
    Eigen::VectorXd x = solver.solve(rhs);
    for (int i = 0; i < nf; ++i) u[free_list[i]] = x[i];
    return u;
}

/// Damped Newton with Armijo backtracking on the (smoothed) energy.
/// `var_of` maps each vertex to its optimization variable (-1 for pinned);
/// vertices sharing a variable move together, which lets the driver glue
/// edges whose optimal difference vanishes (their gradient is exactly zero
/// for p > 1, but their curvature degenerates and stalls plain Newton).
ScalarField newton_minimize(const VarProblem& vp, ScalarField u, double eps, long budget,
                            double tol, const std::vector<int>& var_of, int n_vars, long& iters,
                            double& residual, bool& converged) {
    const Space& s = *vp.space;
    std::vector<double> grad;
    smoothed_gradient(vp, u, eps, grad);
    residual = free_residual(vp, grad);
    if (n_vars == 0) {
        converged = true;
        return u;
    }

    double damping = 0.0;
    double energy = smoothed_energy(vp, u, eps);
    converged = false;
    long spent = 0;
    Eigen::VectorXd g(n_vars);
    while (spent < budget && iters < kMaxIterations) {
        if (residual <= tol) {
            converged = true;
            break;
        }
        ++iters;
        ++spent;

        g.setZero();
        for (int v = 0; v < s.vertex_count(); ++v)
            if (var_of[v] >= 0) g[var_of[v]] += grad[v];

        std::vector<Eigen::Triplet<double>> trip;
        std::vector<double> diag(n_vars, 0.0);
        for (int e = 0; e < s.edge_count(); ++e) {
            if (!vp.active[e]) continue;
            const auto& ed = s.edge(e);
            int fa = var_of[ed.a], fb = var_of[ed.b];
            if (fa == fb) continue;  // within a glued group or both pinned
            double t = (u[ed.a] - u[ed.b]) / ed.length;
            double h = ed.mass * smooth_d2phi(t, vp.p, eps) / (ed.length * ed.length);
            if (fa >= 0) diag[fa] += h;
            if (fb >= 0) diag[fb] += h;
            if (fa >= 0 && fb >= 0) {
                trip.emplace_back(fa, fb, -h);
                trip.emplace_back(fb, fa, -h);
            }
        }
        double max_diag = 0;
        for (double dgv : diag) max_diag = std::max(max_diag, dgv);
        double shift = damping * std::max(max_diag, 1.0) + 1e-300;
        for (int i = 0; i < n_vars; ++i) trip.emplace_back(i, i, diag[i] + shift);
        Eigen::SparseMatrix<double> H(n_vars, n_vars);
        H.setFromTriplets(trip.begin(), trip.end());
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(H);
        bool solved = ldlt.info() == Eigen::Success;
        Eigen::VectorXd step;
        if (solved) {
            step = ldlt.solve(-g);
            solved = ldlt.info() == Eigen::Success && step.allFinite();
        }
        if (!solved) {
            damping = std::max(damping * 10, 1e-8);
            continue;
        }

        double slope = g.dot(step);
        if (slope > 0) {  // not a descent direction: damp harder
            damping = std::max(damping * 10, 1e-8);
            continue;
        }
        double t = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 48; ++ls, t *= 0.5) {
            ScalarField trial = u;
            for (int v = 0; v < s.vertex_count(); ++v)
                if (var_of[v] >= 0) trial[v] += t * step[var_of[v]];
            double e_trial = smoothed_energy(vp, trial, eps);
            if (e_trial <= energy + 1e-4 * t * slope) {
                u = std::move(trial);
                energy = e_trial;
                moved = true;
                break;
            }
        }
        if (!moved) {
            damping = std::max(damping * 10, 1e-8);
            if (damping > 1e14) break;  // no further progress possible
            continue;
        }
        damping *= 0.25;
        if (damping < 1e-14) damping = 0;
        smoothed_gradient(vp, u, eps, grad);
        residual = free_residual(vp, grad);
    }
    if (residual <= tol) converged = true;
    return u;
}

std::vector<int> identity_vars(const VarProblem& vp, int& n_vars) {
    std::vector<int> var_of(vp.space->vertex_count(), -1);
    n_vars = 0;
    for (int v = 0; v < vp.space->vertex_count(); ++v)
        if (vp.pin[v] == -1) var_of[v] = n_vars++;
    return var_of;
}

/// Glue active edges with |difference| below the threshold into shared
/// variables; groups containing conflicting pins abort the merge of the
/// offending edge. Returns false when nothing glues.
bool glue_small_edges(const VarProblem& vp, const ScalarField& u, double threshold,
                      std::vector<int>& var_of, int& n_vars, ScalarField& glued_u) {
    const Space& s = *vp.space;
    std::vector<int> parent(s.vertex_count());
    for (int v = 0; v < s.vertex_count(); ++v) parent[v] = v;
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::vector<int> comp_pin(s.vertex_count(), -1);
    for (int v = 0; v < s.vertex_count(); ++v) comp_pin[v] = vp.pin[v];
    bool any = false;
    for (int e = 0; e < s.edge_count(); ++e) {
        if (!vp.active[e]) continue;
        const auto& ed = s.edge(e);
        if (std::abs(u[ed.a] - u[ed.b]) > threshold) continue;
        int ra = find(ed.a), rb = find(ed.b);
        if (ra == rb) continue;
        int pa = comp_pin[ra], pb = comp_pin[rb];
        if (pa != -1 && pb != -1 && pa != pb) continue;  // conflicting pins
        parent[ra] = rb;
        comp_pin[rb] = pa != -1 ? pa : pb;
        any = true;
    }
    if (!any) return false;

    var_of.assign(s.vertex_count(), -1);
    n_vars = 0;
    std::vector<int> var_of_root(s.vertex_count(), -1);
    glued_u = u;
    for (int v = 0; v < s.vertex_count(); ++v) {
        int r = find(v);
        if (comp_pin[r] != -1) {
            glued_u[v] = comp_pin[r];
            continue;
        }
        if (var_of_root[r] == -1) var_of_root[r] = n_vars++;
        var_of[v] = var_of_root[r];
        glued_u[v] = u[r];  // one representative value per group, bitwise shared
    }
    return true;
}

/// Newton with a glue-on-stall fallback: if the identity problem stalls
/// short of the target (degenerate curvature for p < 2 on edges whose
/// optimal difference is zero), retries with near-flat edges merged. The
/// full-resolution residual is always what gets reported.
ScalarField newton_with_gluing(const VarProblem& vp, ScalarField u, long& iters,
                               double& residual, bool& converged) {
    int n_vars = 0;
    auto var_of = identity_vars(vp, n_vars);
    u = newton_minimize(vp, u, 0.0, kMaxIterations / 4, kResidualTarget, var_of, n_vars, iters,
                        residual, converged);
    if (converged) return u;

    std::vector<double> grad;
    ScalarField best_u = u;
    double best_res = residual;
    for (double threshold : {1e-8, 1e-6, 1e-4, 1e-3}) {
        std::vector<int> glued_vars;
        int glued_n = 0;
        ScalarField glued_u;
        if (!glue_small_edges(vp, u, threshold, glued_vars, glued_n, glued_u)) continue;
        double res = 0;
        bool conv = false;
        ScalarField cand = newton_minimize(vp, std::move(glued_u), 0.0, 20000, kResidualTarget,
                                           glued_vars, glued_n, iters, res, conv);
        smoothed_gradient(vp, cand, 0.0, grad);
        double full_res = free_residual(vp, grad);
        if (full_res < best_res) {
            best_res = full_res;
            best_u = cand;
        }
        if (full_res <= kResidualTarget) break;
    }
    residual = best_res;
    converged = residual <= kResidualTarget;
    return best_u;
}

void clamp_unit(const VarProblem& vp, ScalarField& u) {
    for (int v = 0; v < vp.space->vertex_count(); ++v)
        if (vp.pin[v] == -1) u[v] = std::clamp(u[v], 0.0, 1.0);
}

/// Edmonds-Karp max flow on the active graph; pin-1 vertices hang off the
/// source, pin-0 vertices off the sink. The augmentation count is bounded by
/// V*E regardless of capacities.
struct FlowNetwork {
    int n;
    std::vector<int> first;  // head of arc list per node
    std::vector<int> next_arc, dest;
    std::vector<double> cap;

    explicit FlowNetwork(int nodes) : n(nodes), first(nodes, -1) {}

    void add(int u, int v, double c) {
        next_arc.push_back(first[u]);
        dest.push_back(v);
        cap.push_back(c);
        first[u] = int(next_arc.size()) - 1;
        next_arc.push_back(first[v]);
        dest.push_back(u);
        cap.push_back(c);  // undirected edge: symmetric residual pair
        first[v] = int(next_arc.size()) - 1;
    }

    void add_directed(int u, int v, double c) {
        next_arc.push_back(first[u]);
        dest.push_back(v);
        cap.push_back(c);
        first[u] = int(next_arc.size()) - 1;
        next_arc.push_back(first[v]);
        dest.push_back(u);
        cap.push_back(0.0);
        first[v] = int(next_arc.size()) - 1;
    }

    double maxflow(int s, int t, long& augmentations) {
        double flow = 0;
        const double tiny = 1e-13;
        std::vector<int> pred_arc(n);
        while (true) {
            std::fill(pred_arc.begin(), pred_arc.end(), -1);
            std::deque<int> queue{s};
            pred_arc[s] = -2;
            while (!queue.empty() && pred_arc[t] == -1) {
                int v = queue.front();
                queue.pop_front();
                for (int a = first[v]; a != -1; a = next_arc[a]) {
                    if (cap[a] > tiny && pred_arc[dest[a]] == -1) {
                        pred_arc[dest[a]] = a;
                        queue.push_back(dest[a]);
                    }
                }
            }
            if (pred_arc[t] == -1) break;
            double bottleneck = std::numeric_limits<double>::infinity();
            for (int v = t; v != s;) {
                int a = pred_arc[v];
                bottleneck = std::min(bottleneck, cap[a]);
                v = dest[a ^ 1];
            }
            for (int v = t; v != s;) {
                int a = pred_arc[v];
                cap[a] -= bottleneck;
                cap[a ^ 1] += bottleneck;
                v = dest[a ^ 1];
            }
            flow += bottleneck;
            ++augmentations;
        }
        return flow;
    }

    std::vector<char> source_side(int s) const {
        std::vector<char> side(n, 0);
        std::deque<int> queue{s};
        side[s] = 1;
        const double tiny = 1e-13;
        while (!queue.empty()) {
            int v = queue.front();
            queue.pop_front();
            for (int a = first[v]; a != -1; a = next_arc[a]) {
                if (cap[a] > tiny && !side[dest[a]]) {
                    side[dest[a]] = 1;
                    queue.push_back(dest[a]);
                }
            }
        }
        return side;
    }
};

double cut_value(const VarProblem& vp, const std::vector<char>& in_s) {
    const Space& s = *vp.space;
    double total = 0;
    for (int e = 0; e < s.edge_count(); ++e) {
        if (!vp.active[e]) continue;
        const auto& ed = s.edge(e);
        if (in_s[ed.a] != in_s[ed.b]) total += vp.w[e];
    }
    return total;
}

CapacityResult solve_p1(const VarProblem& vp) {
    const Space& s = *vp.space;
    CapacityResult res;

    // Relaxed problem: smoothed total-variation minimization, eps continuation.
    long iters = 0;
    double resid = 0;
    bool conv = true;
    // The relaxation only steers the threshold rounding; the max-flow dual
    // below certifies the value, so coarse smoothing stages suffice.
    ScalarField u = solve_quadratic(vp);
    clamp_unit(vp, u);
    int n_vars = 0;
    auto var_of = identity_vars(vp, n_vars);
    for (double eps : {1e-2, 1e-3}) {
        bool stage_conv = false;
        u = newton_minimize(vp, u, eps, 120, 1e-6, var_of, n_vars, iters, resid, stage_conv);
        clamp_unit(vp, u);
        conv = stage_conv;
    }
    conv = true;

    // Threshold roundings of the relaxed solution at all value midpoints.
    std::vector<double> vals{0.0, 1.0};
    for (int v = 0; v < s.vertex_count(); ++v)
        if (vp.pin[v] == -1) vals.push_back(std::clamp(u[v], 0.0, 1.0));
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    std::vector<double> thresholds;
    for (size_t i = 0; i + 1 < vals.size(); ++i) thresholds.push_back((vals[i] + vals[i + 1]) / 2);
    if (thresholds.empty()) thresholds.push_back(0.5);

    auto side_for = [&](double t) {
        std::vector<char> in_s(s.vertex_count(), 0);
        for (int v = 0; v < s.vertex_count(); ++v) {
            if (vp.pin[v] == 1) in_s[v] = 1;
            else if (vp.pin[v] == -1 && u[v] > t) in_s[v] = 1;
        }
        return in_s;
    };
    std::vector<char> best_side = side_for(thresholds[0]);
    double best = cut_value(vp, best_side);
    for (size_t i = 1; i < thresholds.size(); ++i) {
        auto side = side_for(thresholds[i]);
        double c = cut_value(vp, side);
        if (c < best) {
            best = c;
            best_side = side;
        }
    }

    // Max-flow dual certificate; its residual cut joins the candidate pool.
    FlowNetwork net(s.vertex_count() + 2);
    const int src = s.vertex_count(), sink = s.vertex_count() + 1;
    double inf_cap = 2 * vp.total_w + 1;
    for (int e = 0; e < s.edge_count(); ++e) {
        if (!vp.active[e]) continue;
        net.add(s.edge(e).a, s.edge(e).b, vp.w[e]);
    }
    bool has_pin1 = false, has_pin0 = false;
    for (int v = 0; v < s.vertex_count(); ++v) {
        if (vp.pin[v] == 1) {
            net.add_directed(src, v, inf_cap);
            has_pin1 = true;
        } else if (vp.pin[v] == 0) {
            net.add_directed(v, sink, inf_cap);
            has_pin0 = true;
        }
    }
    double flow = 0;
    if (has_pin1 && has_pin0) {
        flow = net.maxflow(src, sink, iters);
        auto side = net.source_side(src);
        side.resize(s.vertex_count());
        double c = cut_value(vp, side);
        if (c < best) {
            best = c;
            best_side = side;
        }
    }

    res.value = best;
    res.extremal.assign(s.vertex_count(), 0.0);
    for (int v = 0; v < s.vertex_count(); ++v) res.extremal[v] = best_side[v] ? 1.0 : 0.0;
    res.iterations = iters;
    res.certified_lower = std::min(flow, best);
    res.residual = std::max(0.0, best - flow);
    res.converged = conv;
    return res;
}

CapacityResult solve_variational(VarProblem vp) {
    const Space& s = *vp.space;
    CapacityResult res;

    bool any_pin0 = false, any_free = false;
    for (int v = 0; v < s.vertex_count(); ++v) {
        if (vp.pin[v] == 0) any_pin0 = true;
        if (vp.pin[v] == -1) any_free = true;
    }
    if (!any_pin0) {
        // Nothing is forced to zero: the constant-one field is admissible.
        res.value = 0;
        res.extremal.assign(s.vertex_count(), 1.0);
        res.certified_lower = 0;
        return res;
    }

    ground_isolated_components(vp);

    if (vp.p == 1.0) return solve_p1(vp);

    ScalarField u = solve_quadratic(vp);
    long iters = 1;
    double resid = 0;
    bool conv = true;
    if (vp.p != 2.0) {
        clamp_unit(vp, u);
        u = newton_with_gluing(vp, u, iters, resid, conv);
    }
    clamp_unit(vp, u);
    std::vector<double> grad;
    smoothed_gradient(vp, u, 0.0, grad);
    resid = free_residual(vp, grad);

    res.value = smoothed_energy(vp, u, 0.0);
    res.extremal = std::move(u);
    res.iterations = any_free ? iters : 0;
    res.residual = resid;
    res.converged = conv && resid <= kResidualTarget * 10;
    // Convexity bound: the minimizer lies in [0,1]^free, so the optimum is at
    // least E(u) - ||grad_free||_1.
    double g1 = 0;
    for (int v = 0; v < s.vertex_count(); ++v)
        if (vp.pin[v] == -1) g1 += std::abs(grad[v]);
    res.certified_lower = std::max(0.0, res.value - g1);
    return res;
}

}  // namespace

CapacityResult capacity(const CapacityProblem& prob) {
    const Domain& d = prob.domain;
    const Space& s = *d.space;
    if (prob.p < 1) throw std::invalid_argument("capacity requires p >= 1");
    if (prob.outer) throw std::invalid_argument("capacity does not take an outer set; use conductivity");
    for (int v : prob.inner)
        if (!d.contains(v))
            throw std::invalid_argument("capacity: inner set must lie inside omega (offender '" +
                                        s.id(v) + "')");
    if (prob.inner.empty()) {
        CapacityResult res;
        res.extremal.assign(s.vertex_count(), 0.0);
        return res;
    }
    auto vp = make_var_problem(s, prob.p, prob.inner, d.complement(),
                               std::vector<char>(s.edge_count(), 1));
    return solve_variational(std::move(vp));
}

CapacityResult conductivity(const CapacityProblem& prob) {
    const Domain& d = prob.domain;
    const Space& s = *d.space;
    if (prob.p < 1) throw std::invalid_argument("conductivity requires p >= 1");
    if (!prob.outer) throw std::invalid_argument("conductivity requires the outer set G");
    const auto& F = prob.inner;
    const auto& G = *prob.outer;
    if (!is_subset(F, G))
        throw std::invalid_argument("conductivity: F must be a subset of G");
    for (int v : G)
        if (!d.contains(v)) throw std::invalid_argument("conductivity: G must lie inside omega");
    if (F.empty()) {
        CapacityResult res;
        res.extremal.assign(s.vertex_count(), 0.0);
        return res;
    }
    // Pin the B-class inequality constraints at their active values; vertices
    // outside omega stay free and the energy runs over edges meeting omega.
    std::vector<int> pin0 = set_difference(d.omega, G);
    auto vp = make_var_problem(s, prob.p, F, pin0, edges_meeting(s, d.omega));
    return solve_variational(std::move(vp));
}

CapacityResult global_capacity(const Space& s, const std::vector<int>& K, double p) {
    if (s.boundary().empty())
        throw std::invalid_argument("global capacity needs a far-field boundary");
    for (int v : K)
        if (s.is_boundary(v))
            throw std::invalid_argument("global capacity: K may not meet the boundary");
    Domain d(s, s.interior());
    CapacityProblem prob{d, sorted_unique(K), std::nullopt, p};
    return capacity(prob);
}

double CapacityProfile::eval(double ss) const {
    if (!(ss > 0) || masses.empty()) throw std::invalid_argument("profile evaluated outside (0, nu(omega)]");
    auto it = std::lower_bound(masses.begin(), masses.end(), ss);
    if (it == masses.end()) throw std::invalid_argument("profile evaluated past nu(omega)");
    return values[size_t(it - masses.begin())];
}

CapacityProfile capacity_profile(const Domain& d, double p, const std::vector<double>& nu,
                                 const ProfileOptions& opts) {
    const Space& s = *d.space;
    const int k = int(d.omega.size());
    double nu_omega = 0;
    for (int v : d.omega) nu_omega += nu[v];
    if (!(nu_omega > 0))
        throw std::invalid_argument("capacity profile undefined: nu vanishes on omega");

    std::vector<std::vector<int>> subsets;
    bool exact = true;
    if (k <= opts.enumeration_cap) {
        subsets.reserve((size_t(1) << k) - 1);
        for (uint32_t mask = 1; mask < (uint32_t(1) << k); ++mask) {
            std::vector<int> g;
            for (int i = 0; i < k; ++i)
                if (mask & (uint32_t(1) << i)) g.push_back(d.omega[i]);
            subsets.push_back(std::move(g));
        }
    } else if (opts.samples > 0) {
        exact = false;
        SplitMix64 rng(opts.rng_seed);
        for (int i = 0; i < k; ++i) subsets.push_back({d.omega[i]});
        subsets.push_back(d.omega);
        for (long n = 0; n < opts.samples; ++n) {
            std::vector<int> g;
            for (int i = 0; i < k; ++i)
                if (rng.next() & 1) g.push_back(d.omega[i]);
            if (!g.empty()) subsets.push_back(std::move(g));
        }
    } else {
        throw std::invalid_argument(
            "capacity profile: omega has " + std::to_string(k) + " vertices, over the exhaustive "
            "enumeration cap " + std::to_string(opts.enumeration_cap) +
            "; raise --enum-cap or pass --profile-sample <count> for the sampling fallback");
    }

    std::optional<Domain> global_domain;
    if (opts.global) global_domain.emplace(s, s.interior());

    std::vector<std::pair<double, double>> mass_cap(subsets.size());
    parallel_for(subsets.size(), [&](size_t i) {
        double mass = 0;
        for (int v : subsets[i]) mass += nu[v];
        CapacityProblem prob{opts.global ? *global_domain : d, subsets[i], std::nullopt, p};
        mass_cap[i] = {mass, capacity(prob).value};
    });

    std::vector<double> masses;
    for (auto& [m, c] : mass_cap)
        if (m > 0) masses.push_back(m);
    std::sort(masses.begin(), masses.end());
    masses.erase(std::unique(masses.begin(), masses.end()), masses.end());
    if (masses.empty())
        throw std::invalid_argument("capacity profile undefined: no subset carries nu mass");

    CapacityProfile prof;
    prof.masses = masses;
    prof.values.assign(masses.size(), std::numeric_limits<double>::infinity());
    prof.nu_omega = nu_omega;
    prof.exact = exact;
    // lambda(s) = min cap over subsets of mass >= s: sweep masses descending.
    std::sort(mass_cap.begin(), mass_cap.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    double running = std::numeric_limits<double>::infinity();
    size_t next = 0;
    for (int mi = int(masses.size()) - 1; mi >= 0; --mi) {
        while (next < mass_cap.size() && mass_cap[next].first >= masses[size_t(mi)]) {
            running = std::min(running, mass_cap[next].second);
            ++next;
        }
        prof.values[size_t(mi)] = running;
    }
    return prof;
}

double hausdorff_content(const Space& s, const std::vector<int>& K, const ContentOptions& opts,
                         std::vector<ContentBall>* witness) {
    if (witness) witness->clear();
    if (K.empty()) return 0.0;
    double r_max = opts.r_max ? *opts.r_max : s.diameter();
    if (s.vertex_count() == 1) r_max = std::max(r_max, 1.0);

    std::vector<char> in_k(s.vertex_count(), 0);
    for (int v : K) in_k[v] = 1;

    // Candidate balls: vertex centers, radii the positive pairwise distances
    // capped at r_max; deduplicate by vertex set keeping the cheapest.
    std::vector<double> radii = s.positive_distances();
    if (radii.empty()) radii.push_back(r_max);  // single-vertex space
    std::map<std::vector<int>, ContentBall> dedup;
    for (int x = 0; x < s.vertex_count(); ++x) {
        for (double r : radii) {
            if (r > r_max) break;
            auto set = s.ball(x, r);
            bool touches_k = false, touches_boundary = false;
            for (int v : set) {
                if (in_k[v]) touches_k = true;
                if (s.is_boundary(v)) touches_boundary = true;
            }
            if (!touches_k) continue;
            if (opts.avoid_boundary && touches_boundary) continue;
            double cost = s.mu_of(set) / r;
            auto it = dedup.find(set);
            if (it == dedup.end() || cost < it->second.cost)
                dedup[set] = ContentBall{x, r, set, cost};
        }
    }
    std::vector<ContentBall> balls;
    for (auto& [_, b] : dedup) balls.push_back(b);
    std::sort(balls.begin(), balls.end(),
              [](const ContentBall& a, const ContentBall& b) { return a.cost < b.cost; });

    // Coverage bitsets over K.
    const int nk = int(K.size());
    std::vector<int> k_index(s.vertex_count(), -1);
    for (int i = 0; i < nk; ++i) k_index[K[i]] = i;
    std::vector<uint64_t> cover(balls.size(), 0);
    if (nk > 64) throw std::invalid_argument("hausdorff content: compact set too large (max 64)");
    for (size_t b = 0; b < balls.size(); ++b)
        for (int v : balls[b].set)
            if (k_index[v] >= 0) cover[b] |= uint64_t(1) << k_index[v];
    const uint64_t full = nk == 64 ? ~uint64_t(0) : (uint64_t(1) << nk) - 1;

    std::vector<double> min_cover_cost(nk, std::numeric_limits<double>::infinity());
    for (size_t b = 0; b < balls.size(); ++b)
        for (int i = 0; i < nk; ++i)
            if (cover[b] & (uint64_t(1) << i))
                min_cover_cost[i] = std::min(min_cover_cost[i], balls[b].cost);
    for (int i = 0; i < nk; ++i)
        if (std::isinf(min_cover_cost[i]))
            throw std::invalid_argument("hausdorff content: vertex '" + s.id(K[i]) +
                                        "' is not coverable by any candidate ball");

    // Exact branch-and-bound set cover.
    double best = std::numeric_limits<double>::infinity();
    std::vector<size_t> chosen, best_choice;
    auto lower_bound_rest = [&](uint64_t uncovered) {
        double lb = 0;
        for (int i = 0; i < nk; ++i)
            if (uncovered & (uint64_t(1) << i)) lb = std::max(lb, min_cover_cost[i]);
        return lb;
    };
    std::function<void(uint64_t, double)> recurse = [&](uint64_t uncovered, double cost) {
        if (cost + lower_bound_rest(uncovered) >= best) return;
        if (uncovered == 0) {
            best = cost;
            best_choice = chosen;
            return;
        }
        // Branch on the most constrained uncovered element.
        int pick = -1;
        long fewest = std::numeric_limits<long>::max();
        for (int i = 0; i < nk; ++i) {
            if (!(uncovered & (uint64_t(1) << i))) continue;
            long cnt = 0;
            for (size_t b = 0; b < balls.size(); ++b)
                if (cover[b] & (uint64_t(1) << i)) ++cnt;
            if (cnt < fewest) {
                fewest = cnt;
                pick = i;
            }
        }
        for (size_t b = 0; b < balls.size(); ++b) {
            if (!(cover[b] & (uint64_t(1) << pick))) continue;
            chosen.push_back(b);
            recurse(uncovered & ~cover[b], cost + balls[b].cost);
            chosen.pop_back();
        }
    };
    recurse(full, 0.0);

    if (witness)
        for (size_t b : best_choice) witness->push_back(balls[b]);
    return best;
}

ContentCapacityReport content_capacity_ratio(const Space& s,
                                             const std::vector<std::vector<int>>& family) {
    if (s.boundary().empty())
        throw std::invalid_argument("content-capacity ratio needs a far-field boundary");
    ContentCapacityReport rep;
    rep.min_ratio = std::numeric_limits<double>::quiet_NaN();
    rep.max_ratio = std::numeric_limits<double>::quiet_NaN();
    for (const auto& K : family) {
        ContentCapacityEntry e;
        e.set = sorted_unique(K);
        e.cap1 = global_capacity(s, e.set, 1.0).value;
        e.content = hausdorff_content(s, e.set);
        e.ratio = e.cap1 / e.content;
        rep.entries.push_back(std::move(e));
    }
    for (const auto& e : rep.entries) {
        if (std::isnan(rep.min_ratio) || e.ratio < rep.min_ratio) rep.min_ratio = e.ratio;
        if (std::isnan(rep.max_ratio) || e.ratio > rep.max_ratio) rep.max_ratio = e.ratio;
    }
    return rep;
}

const CapacityResult& SolveCache::memo(const std::string& key, const CapacityProblem& prob,
                                       bool con) {
    auto it = map_.find(key);
    if (it != map_.end()) return it->second;
    CapacityResult res = con ? capmetric::conductivity(prob) : capmetric::capacity(prob);
    return map_.emplace(key, std::move(res)).first->second;
}

namespace {
std::string set_key(const std::vector<int>& s) {
    std::string k;
    for (int v : s) {
        k += std::to_string(v);
        k += ',';
    }
    return k;
}
}  // namespace

const CapacityResult& SolveCache::capacity(const std::vector<int>& inner, double p) {
    std::string key = "c|" + fmt17(p) + "|" + set_key(inner);
    CapacityProblem prob{*domain_, inner, std::nullopt, p};
    return memo(key, prob, false);
}

const CapacityResult& SolveCache::capacity_pair(const std::vector<int>& inner,
                                                const std::vector<int>& outer, double p) {
    std::string key = "p|" + fmt17(p) + "|" + set_key(inner) + "|" + set_key(outer);
    auto it = map_.find(key);
    if (it != map_.end()) return it->second;
    Domain pair_domain(*domain_->space, outer);
    CapacityProblem prob{pair_domain, inner, std::nullopt, p};
    CapacityResult res = capmetric::capacity(prob);
    return map_.emplace(key, std::move(res)).first->second;
}

const CapacityResult& SolveCache::conductivity(const std::vector<int>& F,
                                               const std::vector<int>& G, double p) {
    std::string key = "n|" + fmt17(p) + "|" + set_key(F) + "|" + set_key(G);
    CapacityProblem prob{*domain_, F, G, p};
    return memo(key, prob, true);
}

}  // namespace capmetric
