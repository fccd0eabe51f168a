#include "codwoe/ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "codwoe/error.hpp"

namespace codwoe {

void TransportProblem::validate() const {
    if (a.empty() || b.empty()) throw Error("transport problem: empty marginal");
    if (cost.size() != a.size() * b.size())
        throw Error("transport problem: cost matrix is " + std::to_string(cost.size()) +
                    " entries, expected " + std::to_string(a.size() * b.size()));
    double sa = 0.0, sb = 0.0;
    for (double x : a) {
        if (x < 0.0) throw Error("transport problem: negative source mass");
        sa += x;
    }
    for (double x : b) {
        if (x < 0.0) throw Error("transport problem: negative target mass");
        sb += x;
    }
    if (std::fabs(sa - 1.0) > 1e-9 || std::fabs(sb - 1.0) > 1e-9)
        throw Error("transport problem: masses must sum to 1 within 1e-9");
    for (double c : cost)
        if (!std::isfinite(c) || c < 0.0)
            throw Error("transport problem: cost entries must be finite and nonnegative");
}

namespace {

struct Cell {
    size_t i, j;
};

// Finds the unique cycle closed by `entering` over the basis tree. Nodes are
// rows [0,m) and columns [m,m+n); basis edges connect row i to column j.
// Returns the cycle as cells starting at the entering cell.
std::vector<Cell> find_cycle(const std::vector<Cell>& basis, Cell entering, size_t m, size_t n) {
    const size_t nodes = m + n;
    std::vector<std::vector<std::pair<size_t, size_t>>> adj(nodes); // (neighbor, basis idx)
    for (size_t e = 0; e < basis.size(); ++e) {
        size_t r = basis[e].i;
        size_t c = m + basis[e].j;
        adj[r].push_back({c, e});
        adj[c].push_back({r, e});
    }
    // Path in the tree from the entering cell's column back to its row.
    std::vector<long> parent_node(nodes, -1);
    std::vector<long> parent_edge(nodes, -1);
    std::vector<char> seen(nodes, 0);
    std::vector<size_t> stack{entering.i};
    seen[entering.i] = 1;
    while (!stack.empty()) {
        size_t u = stack.back();
        stack.pop_back();
        if (u == m + entering.j) break;
        for (auto [v, e] : adj[u]) {
            if (!seen[v]) {
                seen[v] = 1;
                parent_node[v] = static_cast<long>(u);
                parent_edge[v] = static_cast<long>(e);
                stack.push_back(v);
            }
        }
    }
    std::vector<Cell> cycle{entering};
    size_t node = m + entering.j;
    while (node != entering.i) {
        long e = parent_edge[node];
        if (e < 0) throw Error("transportation simplex: basis is not connected");
        cycle.push_back(basis[static_cast<size_t>(e)]);
        node = static_cast<size_t>(parent_node[node]);
    }
    return cycle;
}

} // namespace

TransportPlan solve_exact(const TransportProblem& p) {
    p.validate();
    const size_t m = p.a.size();
    const size_t n = p.b.size();
    if (m > 8 || n > 8)
        throw Error("solve_exact: instance " + std::to_string(m) + "x" + std::to_string(n) +
                    " exceeds the 8x8 cap");

    std::vector<double> plan(m * n, 0.0);
    std::vector<Cell> basis;
    basis.reserve(m + n - 1);

    // Northwest-corner start. One index advances per step, so the basis ends
    // up with exactly m + n - 1 cells (degenerate zero cells included).
    {
        std::vector<double> ra = p.a, rb = p.b;
        size_t i = 0, j = 0;
        while (true) {
            double x = std::min(ra[i], rb[j]);
            plan[i * n + j] = x;
            basis.push_back({i, j});
            ra[i] -= x;
            rb[j] -= x;
            if (i == m - 1 && j == n - 1) break;
            // In the last column only rows remain; rounding residue in ra
            // must not push j past the edge.
            if (j == n - 1 || (ra[i] <= 0.0 && i < m - 1))
                ++i;
            else
                ++j;
        }
    }

    std::vector<char> in_basis(m * n, 0);
    for (const Cell& c : basis) in_basis[c.i * n + c.j] = 1;

    const double kTol = 1e-12;
    const size_t kMaxPivots = 100000;
    size_t pivots = 0;
    std::vector<double> u(m), v(n);
    std::vector<char> u_set(m), v_set(n);

    while (true) {
        if (++pivots > kMaxPivots) throw Error("transportation simplex: pivot limit exceeded");

        // Duals from u_i + v_j = c_ij over the basis tree.
        std::fill(u_set.begin(), u_set.end(), 0);
        std::fill(v_set.begin(), v_set.end(), 0);
        u[0] = 0.0;
        u_set[0] = 1;
        bool progress = true;
        while (progress) {
            progress = false;
            for (const Cell& c : basis) {
                if (u_set[c.i] && !v_set[c.j]) {
                    v[c.j] = p.cost_at(c.i, c.j) - u[c.i];
                    v_set[c.j] = 1;
                    progress = true;
                } else if (!u_set[c.i] && v_set[c.j]) {
                    u[c.i] = p.cost_at(c.i, c.j) - v[c.j];
                    u_set[c.i] = 1;
                    progress = true;
                }
            }
        }

        // Bland's rule: first cell (row-major) with negative reduced cost.
        bool found = false;
        Cell entering{0, 0};
        for (size_t i = 0; i < m && !found; ++i)
            for (size_t j = 0; j < n && !found; ++j) {
                if (in_basis[i * n + j]) continue;
                if (p.cost_at(i, j) - u[i] - v[j] < -kTol) {
                    entering = {i, j};
                    found = true;
                }
            }
        if (!found) break;

        std::vector<Cell> cycle = find_cycle(basis, entering, m, n);
        // Alternate signs along the cycle; entering cell is positive.
        double theta = std::numeric_limits<double>::infinity();
        size_t leave_pos = 1;
        for (size_t k = 1; k < cycle.size(); k += 2) {
            double flow = plan[cycle[k].i * n + cycle[k].j];
            if (flow < theta) {
                theta = flow;
                leave_pos = k;
            }
        }
        for (size_t k = 0; k < cycle.size(); ++k) {
            double& flow = plan[cycle[k].i * n + cycle[k].j];
            flow += (k % 2 == 0) ? theta : -theta;
        }
        Cell leaving = cycle[leave_pos];
        plan[leaving.i * n + leaving.j] = 0.0;
        in_basis[leaving.i * n + leaving.j] = 0;
        in_basis[entering.i * n + entering.j] = 1;
        for (auto& c : basis) {
            if (c.i == leaving.i && c.j == leaving.j) {
                c = entering;
                break;
            }
        }
    }

    TransportPlan out;
    out.plan = std::move(plan);
    out.iterations = pivots;
    out.cost = 0.0;
    for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < n; ++j) out.cost += out.plan[i * n + j] * p.cost_at(i, j);
    return out;
}

TransportPlan solve_sinkhorn(const TransportProblem& p, double epsilon, size_t max_iter,
                             double tol) {
    p.validate();
    if (epsilon <= 0.0) throw Error("solve_sinkhorn: epsilon must be positive");
    const size_t m = p.a.size();
    const size_t n = p.b.size();

    // Zero-mass atoms stay out of the scaling loop; their plan entries are 0.
    std::vector<size_t> rows, cols;
    for (size_t i = 0; i < m; ++i)
        if (p.a[i] > 0.0) rows.push_back(i);
    for (size_t j = 0; j < n; ++j)
        if (p.b[j] > 0.0) cols.push_back(j);

    const size_t mr = rows.size(), nc = cols.size();
    std::vector<double> loga(mr), logb(nc), f(mr, 0.0), g(nc, 0.0);
    for (size_t i = 0; i < mr; ++i) loga[i] = std::log(p.a[rows[i]]);
    for (size_t j = 0; j < nc; ++j) logb[j] = std::log(p.b[cols[j]]);

    auto cost_rc = [&](size_t i, size_t j) { return p.cost_at(rows[i], cols[j]); };

    std::vector<double> logp(mr * nc);
    TransportPlan out;
    out.converged = false;

    auto lse = [](const std::vector<double>& terms) {
        double mx = -std::numeric_limits<double>::infinity();
        for (double t : terms) mx = std::max(mx, t);
        if (!std::isfinite(mx)) return mx;
        double s = 0.0;
        for (double t : terms) s += std::exp(t - mx);
        return mx + std::log(s);
    };

    std::vector<double> terms;
    size_t it = 0;
    for (it = 1; it <= max_iter; ++it) {
        for (size_t i = 0; i < mr; ++i) {
            terms.assign(nc, 0.0);
            for (size_t j = 0; j < nc; ++j) terms[j] = (g[j] - cost_rc(i, j)) / epsilon;
            f[i] = epsilon * (loga[i] - lse(terms));
        }
        for (size_t j = 0; j < nc; ++j) {
            terms.assign(mr, 0.0);
            for (size_t i = 0; i < mr; ++i) terms[i] = (f[i] - cost_rc(i, j)) / epsilon;
            g[j] = epsilon * (logb[j] - lse(terms));
        }
        for (size_t i = 0; i < mr; ++i)
            for (size_t j = 0; j < nc; ++j)
                logp[i * nc + j] = (f[i] + g[j] - cost_rc(i, j)) / epsilon;

        double violation = 0.0;
        for (size_t i = 0; i < mr; ++i) {
            double s = 0.0;
            for (size_t j = 0; j < nc; ++j) s += std::exp(logp[i * nc + j]);
            violation += std::fabs(s - p.a[rows[i]]);
        }
        for (size_t j = 0; j < nc; ++j) {
            double s = 0.0;
            for (size_t i = 0; i < mr; ++i) s += std::exp(logp[i * nc + j]);
            violation += std::fabs(s - p.b[cols[j]]);
        }
        out.marginal_violation = violation;
        if (violation < tol) {
            out.converged = true;
            break;
        }
    }
    out.iterations = std::min(it, max_iter);

    out.plan.assign(m * n, 0.0);
    out.cost = 0.0;
    for (size_t i = 0; i < mr; ++i)
        for (size_t j = 0; j < nc; ++j) {
            double x = std::exp(logp[i * nc + j]);
            out.plan[rows[i] * n + cols[j]] = x;
            out.cost += x * cost_rc(i, j);
        }
    return out;
}

} // namespace codwoe
