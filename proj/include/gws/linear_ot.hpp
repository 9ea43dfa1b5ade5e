#pragma once

// Exact linear optimal transport min <cost, gamma> over couplings with fixed
// marginals, solved by the transportation simplex (a network simplex on the
// dense bipartite graph). Deterministic: entering arcs take the most negative
// reduced cost with lowest (row, col) ties, leaving arcs the lowest cycle
// position among minimizers. Falls back to Bland's rule if an unusually long
// degenerate run is detected.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gws/mm_space.hpp"

namespace gws {

struct LinearOtResult {
    Coupling coupling;
    double value = 0.0;
    Eigen::VectorXd row_potentials;  // dual u
    Eigen::VectorXd col_potentials;  // dual v
    int pivots = 0;
};

namespace detail {

struct BasicCell {
    int i, j;
    double x;
};

}  // namespace detail

inline LinearOtResult linear_ot(const Eigen::MatrixXd& cost, const Eigen::VectorXd& mu,
                                const Eigen::VectorXd& nu) {
    const int n = static_cast<int>(mu.size());
    const int m = static_cast<int>(nu.size());
    if (cost.rows() != n || cost.cols() != m) {
        throw std::invalid_argument("linear_ot: cost shape mismatch");
    }
    if (!cost.allFinite()) throw std::domain_error("linear_ot: cost contains NaN or infinity");
    for (int i = 0; i < n; ++i)
        if (mu(i) < 0.0) throw std::invalid_argument("linear_ot: negative marginal");
    for (int j = 0; j < m; ++j)
        if (nu(j) < 0.0) throw std::invalid_argument("linear_ot: negative marginal");
    if (std::fabs(mu.sum() - nu.sum()) > 1e-9) {
        throw std::invalid_argument("linear_ot: marginal masses differ");
    }

    // Northwest-corner initial basis; exactly n + m - 1 basic cells, keeping
    // degenerate zeros so the basis stays a spanning tree.
    std::vector<detail::BasicCell> basis;
    basis.reserve(n + m - 1);
    {
        Eigen::VectorXd supply = mu;
        // absorb the rounding residue so the last demand closes exactly
        Eigen::VectorXd demand = nu;
        demand(m - 1) += mu.sum() - nu.sum();
        int i = 0, j = 0;
        while (static_cast<int>(basis.size()) < n + m - 1) {
            const double x = std::min(supply(i), demand(j));
            basis.push_back({i, j, std::max(0.0, x)});
            supply(i) -= x;
            demand(j) -= x;
            if (i == n - 1 && j == m - 1) break;
            if (supply(i) <= demand(j) && i < n - 1) {
                ++i;
            } else if (j < m - 1) {
                ++j;
            } else {
                ++i;
            }
        }
    }

    const int nodes = n + m;  // rows 0..n-1, cols n..n+m-1
    std::vector<std::vector<std::pair<int, int>>> adj(nodes);  // (neighbor, basis idx)
    auto rebuild_adj = [&]() {
        for (auto& a : adj) a.clear();
        for (int b = 0; b < static_cast<int>(basis.size()); ++b) {
            adj[basis[b].i].push_back({n + basis[b].j, b});
            adj[n + basis[b].j].push_back({basis[b].i, b});
        }
    };
    rebuild_adj();

    Eigen::VectorXd u(n), v(m);
    std::vector<int> stack, parent(nodes), parent_arc(nodes);
    auto compute_potentials = [&]() {
        std::vector<char> seen(nodes, 0);
        u(0) = 0.0;
        seen[0] = 1;
        stack.assign(1, 0);
        while (!stack.empty()) {
            const int node = stack.back();
            stack.pop_back();
            for (auto [next, b] : adj[node]) {
                if (seen[next]) continue;
                seen[next] = 1;
                const auto& cell = basis[b];
                if (next >= n) {
                    v(next - n) = cost(cell.i, cell.j) - u(cell.i);
                } else {
                    u(next) = cost(cell.i, cell.j) - v(cell.j);
                }
                stack.push_back(next);
            }
        }
    };

    const double tol = 1e-11 * (1.0 + cost.cwiseAbs().maxCoeff());
    const int bland_after = 20 * (n + 1) * (m + 1);
    const int max_pivots = 2000 * (n + m) + 100000;
    int pivots = 0;

    while (true) {
        compute_potentials();

        // entering arc
        int ei = -1, ej = -1;
        double best = -tol;
        if (pivots < bland_after) {
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < m; ++j) {
                    const double rc = cost(i, j) - u(i) - v(j);
                    if (rc < best) {
                        best = rc;
                        ei = i;
                        ej = j;
                    }
                }
            }
        } else {
            for (int i = 0; i < n && ei < 0; ++i) {
                for (int j = 0; j < m; ++j) {
                    if (cost(i, j) - u(i) - v(j) < -tol) {
                        ei = i;
                        ej = j;
                        break;
                    }
                }
            }
        }
        if (ei < 0) break;

        // unique tree path from row ei to column ej
        std::fill(parent.begin(), parent.end(), -1);
        parent[ei] = ei;
        stack.assign(1, ei);
        while (!stack.empty()) {
            const int node = stack.back();
            stack.pop_back();
            if (node == n + ej) break;
            for (auto [next, b] : adj[node]) {
                if (parent[next] != -1) continue;
                parent[next] = node;
                parent_arc[next] = b;
                stack.push_back(next);
            }
        }
        if (parent[n + ej] == -1) throw std::runtime_error("linear_ot: basis lost connectivity");

        // cycle arcs alternate signs; entering arc gets +, then the path back
        std::vector<int> cycle;  // basis indices along the path ej -> ei
        for (int node = n + ej; node != ei; node = parent[node]) {
            cycle.push_back(parent_arc[node]);
        }
        // cycle[0] touches ej and carries sign -, alternating from there
        double theta = std::numeric_limits<double>::infinity();
        int leave_pos = -1;
        for (int k = 0; k < static_cast<int>(cycle.size()); k += 2) {
            const detail::BasicCell& cell = basis[cycle[k]];
            const bool better =
                cell.x < theta ||
                (cell.x == theta && leave_pos >= 0 &&
                 std::make_pair(cell.i, cell.j) <
                     std::make_pair(basis[cycle[leave_pos]].i, basis[cycle[leave_pos]].j));
            if (better) {
                theta = cell.x;
                leave_pos = k;
            }
        }
        if (leave_pos < 0) throw std::runtime_error("linear_ot: unbounded pivot");

        for (int k = 0; k < static_cast<int>(cycle.size()); ++k) {
            basis[cycle[k]].x += (k % 2 == 0) ? -theta : theta;
        }
        const int leaving = cycle[leave_pos];
        basis[leaving] = {ei, ej, theta};
        rebuild_adj();

        if (++pivots > max_pivots) {
            throw std::runtime_error("linear_ot: pivot limit exceeded");
        }
    }

    LinearOtResult out;
    out.coupling.gamma = Eigen::MatrixXd::Zero(n, m);
    for (const auto& cell : basis) {
        out.coupling.gamma(cell.i, cell.j) += std::max(0.0, cell.x);
    }
    out.coupling.mu = mu;
    out.coupling.nu = nu;
    out.value = (cost.cwiseProduct(out.coupling.gamma)).sum();
    out.row_potentials = u;
    out.col_potentials = v;
    out.pivots = pivots;
    return out;
}

}  // namespace gws
