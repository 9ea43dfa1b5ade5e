#pragma once

// The DLB / SLB / TLB hierarchy of lower bounds for 2 d_GW(p,q), for finite
// metric-measure spaces and for analytic spheres. For q <= p the chain
//   2 d_GW >= TLB >= SLB >= DLB_{p, min(p,q)}
// holds; for p < q the diameter bound can fail and nothing is asserted.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gws/linear_ot.hpp"
#include "gws/mm_space.hpp"
#include "gws/sphere.hpp"
#include "gws/wasserstein1d.hpp"

namespace gws {

// ----------------------------------------------------------------------------
// Distance distributions of finite spaces
// ----------------------------------------------------------------------------

// Global distribution of distances: the pushforward of mu x mu through d.
// Self-pairs contribute an atom at 0 with weight sum_i w_i^2.
inline Discrete1DDistribution global_distance_distribution(const FiniteMMSpace& X) {
    const Eigen::Index n = X.n_points();
    std::vector<double> atoms, weights;
    atoms.reserve(n * n);
    weights.reserve(n * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < n; ++k) {
            atoms.push_back(X.dist(i, k));
            weights.push_back(X.weights(i) * X.weights(k));
        }
    }
    return make_discrete_distribution(std::move(atoms), std::move(weights));
}

// Local distribution of distances seen from point i.
inline Discrete1DDistribution local_distance_distribution(const FiniteMMSpace& X,
                                                          Eigen::Index i) {
    const Eigen::Index n = X.n_points();
    std::vector<double> atoms(n), weights(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        atoms[k] = X.dist(i, k);
        weights[k] = X.weights(k);
    }
    return make_discrete_distribution(std::move(atoms), std::move(weights));
}

// ----------------------------------------------------------------------------
// DLB
// ----------------------------------------------------------------------------

inline double dlb(const FiniteMMSpace& X, const FiniteMMSpace& Y, double p, double q) {
    return lambda_q(p_diameter(X, p), p_diameter(Y, p), q);
}

inline double dlb(const SphereSpec& X, const SphereSpec& Y, double p, double q,
                  const QuadratureConfig& cfg = {}) {
    return lambda_q(sphere_diam_p(X, p, cfg), sphere_diam_p(Y, p, cfg), q);
}

// ----------------------------------------------------------------------------
// SLB
// ----------------------------------------------------------------------------

inline double slb(const FiniteMMSpace& X, const FiniteMMSpace& Y, double p, double q) {
    return wasserstein_1d_lambda_q(global_distance_distribution(X),
                                   global_distance_distribution(Y), p, q);
}

inline double slb(const SphereSpec& X, const SphereSpec& Y, double p, double q,
                  const QuadratureConfig& cfg = {}) {
    cfg.validate();
    return wasserstein_1d_lambda_q(quantile_source(X), quantile_source(Y), p, q,
                                   cfg.node_count);
}

// ----------------------------------------------------------------------------
// TLB
// ----------------------------------------------------------------------------

struct TlbResult {
    double value = 0.0;
    Coupling coupling;  // optimizer of the linear relaxation
};

// Cost c_ij is the p-th power of the 1D distance between the local
// distributions, so the outer problem stays linear in gamma; the p-th root is
// applied once at the end.
inline TlbResult tlb(const FiniteMMSpace& X, const FiniteMMSpace& Y, double p, double q) {
    if (std::isinf(p)) throw std::domain_error("tlb: p = inf not supported");
    const Eigen::Index n = X.n_points(), m = Y.n_points();
    std::vector<Discrete1DDistribution> locals_x, locals_y;
    locals_x.reserve(n);
    locals_y.reserve(m);
    for (Eigen::Index i = 0; i < n; ++i) locals_x.push_back(local_distance_distribution(X, i));
    for (Eigen::Index j = 0; j < m; ++j) locals_y.push_back(local_distance_distribution(Y, j));

    Eigen::MatrixXd cost(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            cost(i, j) = std::pow(wasserstein_1d_lambda_q(locals_x[i], locals_y[j], p, q), p);
        }
    }
    LinearOtResult ot = linear_ot(cost, X.weights, Y.weights);
    return TlbResult{std::pow(std::max(0.0, ot.value), 1.0 / p), std::move(ot.coupling)};
}

// ----------------------------------------------------------------------------
// Hierarchy report
// ----------------------------------------------------------------------------

struct HierarchyReport {
    PqParams pq;
    double dlb = 0.0;  // evaluated at (p, min(p,q))
    double slb = 0.0;
    double tlb = 0.0;
    std::optional<double> upper;  // a witnessed distortion, when available
    bool ordering_ok = false;
    bool limit_mode = false;  // p or q was infinite
};

namespace detail {

inline bool hierarchy_chain_ok(const HierarchyReport& r, double tol = 1e-9) {
    if (r.upper && *r.upper + tol < r.tlb) return false;
    if (r.tlb + tol < r.slb) return false;
    if (r.slb + tol < r.dlb) return false;
    return true;
}

}  // namespace detail

inline HierarchyReport hierarchy_report(const FiniteMMSpace& X, const FiniteMMSpace& Y,
                                        double p, double q,
                                        const std::optional<Coupling>& witness = std::nullopt) {
    HierarchyReport r;
    r.pq = PqParams(p, q);
    r.limit_mode = std::isinf(p) || std::isinf(q);
    r.dlb = dlb(X, Y, p, std::min(p, q));
    r.slb = slb(X, Y, p, q);
    r.tlb = std::isinf(p) ? r.slb : tlb(X, Y, p, q).value;
    if (witness) r.upper = distortion_pq(X, Y, *witness, r.pq);
    r.ordering_ok = detail::hierarchy_chain_ok(r);
    return r;
}

// Sphere variant: on spheres the local distribution equals the global one,
// so TLB coincides with SLB and no transport problem is solved.
inline HierarchyReport hierarchy_report(const SphereSpec& X, const SphereSpec& Y, double p,
                                        double q, std::optional<double> upper = std::nullopt,
                                        const QuadratureConfig& cfg = {}) {
    HierarchyReport r;
    r.pq = PqParams(p, q);
    r.limit_mode = std::isinf(p) || std::isinf(q);
    r.dlb = dlb(X, Y, p, std::min(p, q), cfg);
    r.slb = slb(X, Y, p, q, cfg);
    r.tlb = r.slb;
    r.upper = upper;
    r.ordering_ok = detail::hierarchy_chain_ok(r);
    return r;
}

}  // namespace gws
