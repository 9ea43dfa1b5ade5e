#pragma once

// p-Wasserstein distance on (R_+, Lambda_q) between one-dimensional
// distributions, via the quantile closed form
//   ( \int_0^1 Lambda_q(F_a^{-1}(u), F_b^{-1}(u))^p du )^{1/p},
// valid for q <= p. Discrete inputs are evaluated exactly by merging the two
// cumulative-weight breakpoint sequences; analytic inputs by Gauss-Legendre
// on the smooth pieces. p = inf takes the sup over merged quantile segments
// (limit mode).

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "gws/mm_space.hpp"
#include "gws/sphere.hpp"

namespace gws {

// Raised when q > p: the quantile closed form does not apply there.
struct closed_form_unavailable : std::domain_error {
    using std::domain_error::domain_error;
};

// ----------------------------------------------------------------------------
// Discrete distributions on R_+
// ----------------------------------------------------------------------------

struct Discrete1DDistribution {
    std::vector<double> atoms;    // strictly increasing after dedup-merge
    std::vector<double> weights;  // same length, nonnegative, sums to 1

    // r-moment, the W_r distance to the Dirac at zero.
    double moment(double r) const {
        double s = 0.0;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            if (atoms[i] > 0.0) s += std::pow(atoms[i], r) * weights[i];
        }
        return std::pow(s, 1.0 / r);
    }
};

// Sorts, merges equal atoms, and validates the weight mass.
inline Discrete1DDistribution make_discrete_distribution(std::vector<double> atoms,
                                                         std::vector<double> weights) {
    if (atoms.size() != weights.size() || atoms.empty()) {
        throw std::invalid_argument("Discrete1DDistribution: atoms/weights size mismatch");
    }
    std::vector<std::size_t> order(atoms.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });

    Discrete1DDistribution out;
    double mass = 0.0;
    for (std::size_t idx : order) {
        const double a = atoms[idx];
        const double w = weights[idx];
        if (a < 0.0) throw std::invalid_argument("Discrete1DDistribution: negative atom");
        if (w < 0.0) throw std::invalid_argument("Discrete1DDistribution: negative weight");
        mass += w;
        if (!out.atoms.empty() && a == out.atoms.back()) {
            out.weights.back() += w;
        } else {
            out.atoms.push_back(a);
            out.weights.push_back(w);
        }
    }
    if (std::fabs(mass - 1.0) > 1e-12) {
        throw std::invalid_argument("Discrete1DDistribution: weights must sum to 1");
    }
    return out;
}

// ----------------------------------------------------------------------------
// Quantile sources
// ----------------------------------------------------------------------------

// A quantile function on (0,1) together with its interior discontinuity /
// kink locations, so integrals can be split into smooth segments.
struct QuantileSource {
    std::function<double(double)> quantile;
    std::vector<double> breakpoints;
};

inline QuantileSource quantile_source(const Discrete1DDistribution& d) {
    std::vector<double> cum(d.weights.size());
    double running = 0.0;
    for (std::size_t i = 0; i < d.weights.size(); ++i) {
        running += d.weights[i];
        cum[i] = running;
    }
    cum.back() = 1.0;
    QuantileSource src;
    for (std::size_t i = 0; i + 1 < cum.size(); ++i) src.breakpoints.push_back(cum[i]);
    auto atoms = d.atoms;
    src.quantile = [atoms, cum](double u) {
        // inf{ t : F(t) > u }
        const auto it = std::upper_bound(cum.begin(), cum.end(), u);
        const std::size_t idx = std::min<std::size_t>(it - cum.begin(), atoms.size() - 1);
        return atoms[idx];
    };
    return src;
}

inline QuantileSource quantile_source(const SphereSpec& s) {
    QuantileSource src;
    if (s.dim == 0) src.breakpoints.push_back(0.5);
    src.quantile = [s](double u) { return sphere_quantile(s, u); };
    return src;
}

// ----------------------------------------------------------------------------
// Wasserstein on (R_+, Lambda_q)
// ----------------------------------------------------------------------------

namespace detail {

inline void check_pq_for_closed_form(double p, double q) {
    if (!(p >= 1.0) || !(q >= 1.0)) {
        throw std::domain_error("wasserstein_1d_lambda_q: p, q must be >= 1");
    }
    if (!std::isinf(p) && q > p) {
        throw closed_form_unavailable(
            "wasserstein_1d_lambda_q: quantile closed form requires q <= p");
    }
}

inline std::vector<double> merged_segments(const std::vector<double>& a,
                                           const std::vector<double>& b) {
    std::vector<double> pts;
    pts.reserve(a.size() + b.size() + 2);
    pts.push_back(0.0);
    pts.insert(pts.end(), a.begin(), a.end());
    pts.insert(pts.end(), b.begin(), b.end());
    pts.push_back(1.0);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](double x, double y) { return std::fabs(x - y) < 1e-15; }),
              pts.end());
    return pts;
}

}  // namespace detail

// Exact evaluation for two discrete distributions: between consecutive merged
// cumulative breakpoints both quantiles are constant, so each segment
// contributes its length times Lambda_q(...)^p with no quadrature error.
inline double wasserstein_1d_lambda_q(const Discrete1DDistribution& alpha,
                                      const Discrete1DDistribution& beta, double p, double q) {
    detail::check_pq_for_closed_form(p, q);
    const QuantileSource qa = quantile_source(alpha);
    const QuantileSource qb = quantile_source(beta);
    const std::vector<double> pts = detail::merged_segments(qa.breakpoints, qb.breakpoints);

    if (std::isinf(p)) {
        double sup = 0.0;
        for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
            const double mid = 0.5 * (pts[k] + pts[k + 1]);
            sup = std::max(sup, lambda_q(qa.quantile(mid), qb.quantile(mid), q));
        }
        return sup;
    }
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const double len = pts[k + 1] - pts[k];
        if (len <= 0.0) continue;
        const double mid = 0.5 * (pts[k] + pts[k + 1]);
        sum += len * std::pow(lambda_q(qa.quantile(mid), qb.quantile(mid), q), p);
    }
    return std::pow(sum, 1.0 / p);
}

// General quantile-source path (analytic spheres, mixed inputs).
inline double wasserstein_1d_lambda_q(const QuantileSource& alpha, const QuantileSource& beta,
                                      double p, double q, int node_count = 256) {
    detail::check_pq_for_closed_form(p, q);
    const std::vector<double> pts = detail::merged_segments(alpha.breakpoints, beta.breakpoints);

    if (std::isinf(p)) {
        double sup = 0.0;
        const QuadratureRule& rule = gauss_legendre_rule(node_count);
        for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
            const double half = 0.5 * (pts[k + 1] - pts[k]);
            const double mid = 0.5 * (pts[k] + pts[k + 1]);
            for (double node : rule.nodes) {
                const double u = mid + half * node;
                sup = std::max(sup, lambda_q(alpha.quantile(u), beta.quantile(u), q));
            }
        }
        return sup;
    }
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        if (pts[k + 1] - pts[k] <= 0.0) continue;
        sum += integrate_gl(
            [&](double u) { return std::pow(lambda_q(alpha.quantile(u), beta.quantile(u), q), p); },
            pts[k], pts[k + 1], node_count);
    }
    return std::pow(sum, 1.0 / p);
}

}  // namespace gws
