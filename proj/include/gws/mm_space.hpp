#pragma once

// Finite metric-measure spaces, couplings between them, the Lambda_q metric
// family on R_+, (p,q)-distortions, p-diameters, and the cross-correlation
// functional J used by the sphere optimality analysis.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gws {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Metric { Euclidean, Geodesic };

// ----------------------------------------------------------------------------
// Lambda_q
// ----------------------------------------------------------------------------

// Lambda_q(a, b) = |a^q - b^q|^{1/q} for finite q; at q = inf it is
// max(a, b) when a != b and 0 otherwise. Equality at q = inf is detected
// with absolute tolerance 1e-12 (the function is discontinuous there).
inline double lambda_q(double a, double b, double q) {
    if (a < 0.0 || b < 0.0) throw std::domain_error("lambda_q: negative input");
    if (!(q >= 1.0)) throw std::domain_error("lambda_q: q must be >= 1");
    if (std::isinf(q)) {
        if (std::fabs(a - b) <= 1e-12) return 0.0;
        return std::max(a, b);
    }
    if (q == 1.0) return std::fabs(a - b);
    if (q == 2.0) return std::sqrt(std::fabs(a * a - b * b));
    return std::pow(std::fabs(std::pow(a, q) - std::pow(b, q)), 1.0 / q);
}

// ----------------------------------------------------------------------------
// Domain types
// ----------------------------------------------------------------------------

struct PqParams {
    double p = 2.0;
    double q = 1.0;

    PqParams() = default;
    PqParams(double p_, double q_) : p(p_), q(q_) {
        if (!(p >= 1.0) || !(q >= 1.0)) {
            throw std::domain_error("PqParams: p and q must be >= 1");
        }
    }
};

struct FiniteMMSpace {
    Eigen::MatrixXd dist;                    // n x n, symmetric, zero diagonal
    Eigen::VectorXd weights;                 // n, nonnegative, sums to 1
    std::optional<Eigen::MatrixXd> coords;   // n x d ambient coordinates
    Metric coord_metric = Metric::Euclidean; // metric the coords realize

    Eigen::Index n_points() const { return weights.size(); }
};

struct Coupling {
    Eigen::MatrixXd gamma;  // n x m, nonnegative
    Eigen::VectorXd mu;     // row marginal
    Eigen::VectorXd nu;     // column marginal

    Eigen::Index rows() const { return gamma.rows(); }
    Eigen::Index cols() const { return gamma.cols(); }
};

struct CrossCorrelation {
    Eigen::MatrixXd M;  // d_X x d_Y, M = sum gamma_ij x_i y_j^T
    double J = 0.0;     // squared Frobenius norm of M
    double D = 0.0;     // sum of squared leading-diagonal entries
};

// ----------------------------------------------------------------------------
// Construction and validation
// ----------------------------------------------------------------------------

inline double metric_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                              Metric metric) {
    if (metric == Metric::Euclidean) return (a - b).norm();
    // geodesic on the unit sphere; clamp keeps arccos finite at antipodes
    const double c = std::clamp(a.dot(b), -1.0, 1.0);
    return std::acos(c);
}

inline Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& coords, Metric metric) {
    const Eigen::Index n = coords.rows();
    Eigen::MatrixXd d(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d(i, i) = 0.0;
        for (Eigen::Index k = i + 1; k < n; ++k) {
            const double v = metric_distance(coords.row(i), coords.row(k), metric);
            d(i, k) = v;
            d(k, i) = v;
        }
    }
    return d;
}

// Validating factory. The triangle inequality is deliberately not enforced
// (the solvers do not need it); pass check_triangle to opt in.
inline FiniteMMSpace make_mm_space(Eigen::MatrixXd dist, Eigen::VectorXd weights,
                                   std::optional<Eigen::MatrixXd> coords = std::nullopt,
                                   Metric coord_metric = Metric::Euclidean,
                                   bool check_triangle = false) {
    const Eigen::Index n = weights.size();
    if (n == 0) throw std::invalid_argument("FiniteMMSpace: empty space");
    if (dist.rows() != n || dist.cols() != n) {
        throw std::invalid_argument("FiniteMMSpace: dist shape does not match weights");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (dist(i, i) != 0.0) throw std::invalid_argument("FiniteMMSpace: nonzero diagonal");
        if (weights(i) < 0.0) throw std::invalid_argument("FiniteMMSpace: negative weight");
        for (Eigen::Index k = 0; k < n; ++k) {
            if (dist(i, k) < 0.0) throw std::invalid_argument("FiniteMMSpace: negative distance");
            if (std::fabs(dist(i, k) - dist(k, i)) > 1e-12) {
                throw std::invalid_argument("FiniteMMSpace: dist not symmetric");
            }
        }
    }
    if (std::fabs(weights.sum() - 1.0) > 1e-12) {
        throw std::invalid_argument("FiniteMMSpace: weights must sum to 1");
    }
    if (coords) {
        if (coords->rows() != n) {
            throw std::invalid_argument("FiniteMMSpace: coords rows do not match weights");
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index k = 0; k < n; ++k) {
                if (i == k) continue;  // diagonal is pinned to zero above
                const double expect = metric_distance(coords->row(i), coords->row(k), coord_metric);
                if (std::fabs(expect - dist(i, k)) > 1e-10) {
                    throw std::invalid_argument("FiniteMMSpace: dist disagrees with coords metric");
                }
            }
        }
    }
    if (check_triangle) {
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                for (Eigen::Index k = 0; k < n; ++k)
                    if (dist(i, j) > dist(i, k) + dist(k, j) + 1e-9) {
                        throw std::invalid_argument("FiniteMMSpace: triangle inequality violated");
                    }
    }
    FiniteMMSpace space;
    space.dist = std::move(dist);
    space.weights = std::move(weights);
    space.coords = std::move(coords);
    space.coord_metric = coord_metric;
    return space;
}

inline FiniteMMSpace space_from_points(const Eigen::MatrixXd& coords, Metric metric,
                                       Eigen::VectorXd weights) {
    return make_mm_space(pairwise_distances(coords, metric), std::move(weights), coords, metric);
}

inline FiniteMMSpace space_from_points(const Eigen::MatrixXd& coords, Metric metric) {
    const Eigen::Index n = coords.rows();
    return space_from_points(coords, metric,
                             Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
}

inline Coupling product_coupling(const Eigen::VectorXd& mu, const Eigen::VectorXd& nu) {
    return Coupling{mu * nu.transpose(), mu, nu};
}

// Requires equal sizes and equal marginals.
inline Coupling diagonal_coupling(const Eigen::VectorXd& mu, const Eigen::VectorXd& nu) {
    if (mu.size() != nu.size() || (mu - nu).lpNorm<Eigen::Infinity>() > 1e-12) {
        throw std::invalid_argument("diagonal_coupling: marginals must coincide");
    }
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(mu.size(), mu.size());
    g.diagonal() = mu;
    return Coupling{std::move(g), mu, nu};
}

struct CouplingCheck {
    bool ok = true;
    double worst_marginal_rel_dev = 0.0;
    double min_entry = 0.0;
    double mass_error = 0.0;
    std::vector<std::string> violations;
};

// Report-style validation: no throwing, the caller inspects the result.
inline CouplingCheck validate_coupling(const Coupling& c, double marginal_rel_tol = 1e-8,
                                       double mass_tol = 1e-12) {
    CouplingCheck out;
    out.min_entry = c.gamma.size() > 0 ? c.gamma.minCoeff() : 0.0;
    if (out.min_entry < 0.0) {
        out.ok = false;
        out.violations.push_back("negativity: entry " + std::to_string(out.min_entry));
    }
    const Eigen::VectorXd row_sums = c.gamma.rowwise().sum();
    const Eigen::VectorXd col_sums = c.gamma.colwise().sum().transpose();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < c.mu.size(); ++i) {
        worst = std::max(worst, std::fabs(row_sums(i) - c.mu(i)) / std::max(1e-300, std::fabs(c.mu(i))));
    }
    for (Eigen::Index j = 0; j < c.nu.size(); ++j) {
        worst = std::max(worst, std::fabs(col_sums(j) - c.nu(j)) / std::max(1e-300, std::fabs(c.nu(j))));
    }
    out.worst_marginal_rel_dev = worst;
    if (worst > marginal_rel_tol) {
        out.ok = false;
        out.violations.push_back("marginal deviation " + std::to_string(worst));
    }
    out.mass_error = std::fabs(c.gamma.sum() - 1.0);
    if (out.mass_error > mass_tol) {
        out.ok = false;
        out.violations.push_back("total mass off by " + std::to_string(out.mass_error));
    }
    return out;
}

namespace detail {

inline void require_matching_marginals(const FiniteMMSpace& X, const FiniteMMSpace& Y,
                                       const Coupling& gamma) {
    if (gamma.rows() != X.n_points() || gamma.cols() != Y.n_points()) {
        throw std::invalid_argument("coupling shape does not match the spaces");
    }
    const Eigen::VectorXd rs = gamma.gamma.rowwise().sum();
    const Eigen::VectorXd cs = gamma.gamma.colwise().sum().transpose();
    for (Eigen::Index i = 0; i < rs.size(); ++i) {
        if (std::fabs(rs(i) - X.weights(i)) > 1e-8 * std::max(1.0, std::fabs(X.weights(i)))) {
            throw std::invalid_argument("coupling row marginal does not match X weights");
        }
    }
    for (Eigen::Index j = 0; j < cs.size(); ++j) {
        if (std::fabs(cs(j) - Y.weights(j)) > 1e-8 * std::max(1.0, std::fabs(Y.weights(j)))) {
            throw std::invalid_argument("coupling column marginal does not match Y weights");
        }
    }
}

}  // namespace detail

// ----------------------------------------------------------------------------
// p-diameter and (p,q)-distortion
// ----------------------------------------------------------------------------

inline double p_diameter(const FiniteMMSpace& X, double p) {
    if (!(p >= 1.0)) throw std::domain_error("p_diameter: p must be >= 1");
    const Eigen::Index n = X.n_points();
    if (std::isinf(p)) {
        double best = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (X.weights(i) <= 0.0) continue;
            for (Eigen::Index k = 0; k < n; ++k) {
                if (X.weights(k) <= 0.0) continue;
                best = std::max(best, X.dist(i, k));
            }
        }
        return best;
    }
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < n; ++k) {
            if (X.dist(i, k) == 0.0) continue;
            sum += std::pow(X.dist(i, k), p) * X.weights(i) * X.weights(k);
        }
    }
    return std::pow(sum, 1.0 / p);
}

namespace detail {

// Quadruple-sum reference evaluation of dis_{p,q}(gamma)^p.
inline double distortion_pow_reference(const FiniteMMSpace& X, const FiniteMMSpace& Y,
                                       const Eigen::MatrixXd& g, double p, double q) {
    const Eigen::Index n = X.n_points(), m = Y.n_points();
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            const double gij = g(i, j);
            if (gij == 0.0) continue;
            double inner = 0.0;
            for (Eigen::Index k = 0; k < n; ++k) {
                const double dx = X.dist(i, k);
                for (Eigen::Index l = 0; l < m; ++l) {
                    const double gkl = g(k, l);
                    if (gkl == 0.0) continue;
                    inner += std::pow(lambda_q(dx, Y.dist(j, l), q), p) * gkl;
                }
            }
            total += gij * inner;
        }
    }
    return total;
}

// dis_{p,q}^p for p = 2q via the three-matrix-product expansion of the
// squared loss: sum (a^q - b^q)^2 g g = <A^2, w w^T> + <B^2, v v^T>
// - 2 tr(A g B g^T) with A = dX^{.q}, B = dY^{.q}.
inline double distortion_pow_quadratic(const FiniteMMSpace& X, const FiniteMMSpace& Y,
                                       const Eigen::MatrixXd& g, double q) {
    Eigen::MatrixXd A = (q == 2.0) ? X.dist.array().square().matrix()
                        : (q == 1.0) ? X.dist
                                     : X.dist.array().pow(q).matrix();
    Eigen::MatrixXd B = (q == 2.0) ? Y.dist.array().square().matrix()
                        : (q == 1.0) ? Y.dist
                                     : Y.dist.array().pow(q).matrix();
    const Eigen::VectorXd& w = X.weights;
    const Eigen::VectorXd& v = Y.weights;
    const double term_x = w.dot(A.array().square().matrix() * w);
    const double term_y = v.dot(B.array().square().matrix() * v);
    const Eigen::MatrixXd Ag = A * g;           // n x m
    const double cross = (Ag.transpose().cwiseProduct(B * g.transpose())).sum();
    return term_x + term_y - 2.0 * cross;
}

}  // namespace detail

// (p,q)-distortion of a coupling. For p < inf this is the L^p(gamma x gamma)
// norm of Lambda_q applied to the two distance matrices; for p = inf it is
// the sup over pairs of support atoms, where an atom is in the support when
// its gamma entry exceeds support_threshold times the total mass.
inline double distortion_pq(const FiniteMMSpace& X, const FiniteMMSpace& Y,
                            const Coupling& gamma, const PqParams& pq,
                            double support_threshold = 1e-15) {
    detail::require_matching_marginals(X, Y, gamma);
    const Eigen::MatrixXd& g = gamma.gamma;
    if (std::isinf(pq.p)) {
        const double mass = g.sum();
        const double thresh = support_threshold * mass;
        std::vector<std::pair<Eigen::Index, Eigen::Index>> support;
        for (Eigen::Index i = 0; i < g.rows(); ++i)
            for (Eigen::Index j = 0; j < g.cols(); ++j)
                if (g(i, j) > thresh) support.emplace_back(i, j);
        double best = 0.0;
        for (const auto& [i, j] : support)
            for (const auto& [k, l] : support)
                best = std::max(best, lambda_q(X.dist(i, k), Y.dist(j, l), pq.q));
        return best;
    }
    double pow_value;
    if (!std::isinf(pq.q) && pq.p == 2.0 * pq.q) {
        pow_value = detail::distortion_pow_quadratic(X, Y, g, pq.q);
    } else {
        pow_value = detail::distortion_pow_reference(X, Y, g, pq.p, pq.q);
    }
    return std::pow(std::max(0.0, pow_value), 1.0 / pq.p);
}

// ----------------------------------------------------------------------------
// Cross-correlation / J-functional
// ----------------------------------------------------------------------------

inline CrossCorrelation cross_correlation(const FiniteMMSpace& X, const FiniteMMSpace& Y,
                                          const Coupling& gamma) {
    if (!X.coords || !Y.coords) {
        throw std::invalid_argument("cross_correlation: both spaces need coordinates");
    }
    if (gamma.rows() != X.n_points() || gamma.cols() != Y.n_points()) {
        throw std::invalid_argument("cross_correlation: coupling shape mismatch");
    }
    CrossCorrelation out;
    // M = sum_ij gamma_ij x_i y_j^T = X^T gamma Y
    out.M = X.coords->transpose() * gamma.gamma * (*Y.coords);
    out.J = out.M.squaredNorm();
    const Eigen::Index k = std::min(out.M.rows(), out.M.cols());
    out.D = out.M.topLeftCorner(k, k).diagonal().squaredNorm();
    return out;
}

// dis_{4,2} of a coupling between unit-norm point clouds, computed from
// inner products: dis^4 = 4 T_X + 4 T_Y - 8 J(gamma) where
// T_X = sum_ik w_i w_k <x_i, x_k>^2 = |sum_i w_i x_i x_i^T|_F^2.
inline double dis42_via_inner_products(const FiniteMMSpace& X, const FiniteMMSpace& Y,
                                       const Coupling& gamma) {
    if (!X.coords || !Y.coords) {
        throw std::invalid_argument("dis42_via_inner_products: both spaces need coordinates");
    }
    for (Eigen::Index i = 0; i < X.coords->rows(); ++i) {
        if (std::fabs(X.coords->row(i).norm() - 1.0) > 1e-10) {
            throw std::invalid_argument("dis42_via_inner_products: X rows must be unit norm");
        }
    }
    for (Eigen::Index j = 0; j < Y.coords->rows(); ++j) {
        if (std::fabs(Y.coords->row(j).norm() - 1.0) > 1e-10) {
            throw std::invalid_argument("dis42_via_inner_products: Y rows must be unit norm");
        }
    }
    const Eigen::MatrixXd& xc = *X.coords;
    const Eigen::MatrixXd& yc = *Y.coords;
    const Eigen::MatrixXd sx =
        xc.transpose() * X.weights.asDiagonal() * xc;  // sum_i w_i x_i x_i^T
    const Eigen::MatrixXd sy = yc.transpose() * Y.weights.asDiagonal() * yc;
    const double term_x = sx.squaredNorm();
    const double term_y = sy.squaredNorm();
    const double J = (xc.transpose() * gamma.gamma * yc).squaredNorm();
    const double pow4 = 4.0 * term_x + 4.0 * term_y - 8.0 * J;
    return std::pow(std::max(0.0, pow4), 0.25);
}

}  // namespace gws
