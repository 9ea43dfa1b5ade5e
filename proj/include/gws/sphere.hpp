#pragma once

// Analytic layer for unit spheres S^n with geodesic or Euclidean metric and
// uniform measure: distance distributions and quantiles, p-diameters, the
// exact GW(4,2) value between Euclidean spheres, equatorial-coupling
// distortions, and the mean projected-norm Gamma ratio behind them.
//
// Distance CDFs reduce to the regularized incomplete beta:
//   H_{S^n_G}(t) = I_{(1-cos t)/2}(n/2, n/2),   H_{S^n_E}(t) = I_{t^2/4}(n/2, n/2),
// which the test suite checks against direct integration of the sin^{n-1}
// density before anything relies on them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "gws/mm_space.hpp"
#include "gws/rng.hpp"
#include "gws/special_functions.hpp"

namespace gws {

struct SphereSpec {
    int dim = 1;  // n of S^n, n >= 0
    Metric metric = Metric::Geodesic;

    double diameter() const { return metric == Metric::Geodesic ? M_PI : 2.0; }
};

struct QuadratureConfig {
    int node_count = 256;           // Gauss-Legendre nodes
    int mc_samples = 100000;        // Monte Carlo pair budget
    Seed seed{0x5eedu};

    void validate() const {
        if (node_count < 16) throw std::domain_error("QuadratureConfig: node_count >= 16 required");
        if (mc_samples < 2) throw std::domain_error("QuadratureConfig: mc_samples >= 2 required");
    }
};

// ----------------------------------------------------------------------------
// Distance distribution and quantile
// ----------------------------------------------------------------------------

inline double sphere_cdf(const SphereSpec& s, double t) {
    if (s.dim < 0) throw std::domain_error("sphere_cdf: dim must be >= 0");
    const double diam = s.diameter();
    if (t < -1e-15 || t > diam + 1e-12) throw std::domain_error("sphere_cdf: t outside [0, diameter]");
    t = std::clamp(t, 0.0, diam);
    if (s.dim == 0) {
        // two points: half the product mass sits on the diagonal
        return t >= diam ? 1.0 : 0.5;
    }
    const double half_n = 0.5 * s.dim;
    const double z = (s.metric == Metric::Geodesic) ? 0.5 * (1.0 - std::cos(t))
                                                    : 0.25 * t * t;
    return regularized_incomplete_beta(half_n, half_n, std::clamp(z, 0.0, 1.0));
}

// Generalized inverse in the convention inf{ t : H(t) > u }. For the
// two-point sphere this is the step quantile: 0 on [0, 1/2], the diameter on
// (1/2, 1].
inline double sphere_quantile(const SphereSpec& s, double u) {
    if (s.dim < 0) throw std::domain_error("sphere_quantile: dim must be >= 0");
    u = std::clamp(u, 0.0, 1.0);
    const double diam = s.diameter();
    if (s.dim == 0) return u <= 0.5 ? 0.0 : diam;
    const double half_n = 0.5 * s.dim;
    const double z = inverse_regularized_incomplete_beta(half_n, half_n, u);
    if (s.metric == Metric::Geodesic) return std::acos(std::clamp(1.0 - 2.0 * z, -1.0, 1.0));
    return 2.0 * std::sqrt(z);
}

// ----------------------------------------------------------------------------
// p-diameter
// ----------------------------------------------------------------------------

// diam_p(S^n)^p = c_n \int_0^pi phi(t)^p sin^{n-1}(t) dt with phi the metric
// profile; integrating against the smooth density instead of the quantile
// keeps Gauss-Legendre at machine accuracy. The two-point case is exact.
inline double sphere_diam_p(const SphereSpec& s, double p, const QuadratureConfig& cfg = {}) {
    if (!(p >= 1.0)) throw std::domain_error("sphere_diam_p: p must be >= 1");
    cfg.validate();
    const double diam = s.diameter();
    if (std::isinf(p)) return diam;
    if (s.dim == 0) return diam * std::pow(0.5, 1.0 / p);
    const int n = s.dim;
    const double cn = std::exp(log_gamma(0.5 * (n + 1)) - log_gamma(0.5 * n)) / std::sqrt(M_PI);
    const bool geodesic = (s.metric == Metric::Geodesic);
    const double integral = integrate_gl(
        [&](double t) {
            const double profile = geodesic ? t : 2.0 * std::sin(0.5 * t);
            return std::pow(profile, p) * std::pow(std::sin(t), n - 1);
        },
        0.0, M_PI, cfg.node_count);
    return std::pow(cn * integral, 1.0 / p);
}

// ----------------------------------------------------------------------------
// Exact GW(4,2) between Euclidean spheres and the equatorial coupling
// ----------------------------------------------------------------------------

// E |y_A| for y uniform on S^n and y_A its leading (m+1)-block: the Gamma
// ratio coming from |y_A|^2 ~ Beta((m+1)/2, (n-m)/2).
inline double mean_projection_norm(int m, int n) {
    if (m < 0 || n < m) throw std::domain_error("mean_projection_norm: requires 0 <= m <= n");
    if (m == n) return 1.0;
    return gamma_ratio(0.5 * (m + 2), 0.5 * (n + 1), 0.5 * (m + 1), 0.5 * (n + 2));
}

inline double exact_gw42_euclidean(int m, int n) {
    if (m < 0 || n < m) throw std::domain_error("exact_gw42_euclidean: requires 0 <= m <= n");
    if (m == n) return 0.0;
    const double r = mean_projection_norm(m, n);
    const double inner = 1.0 / (m + 1.0) + 1.0 / (n + 1.0) - 2.0 / (m + 1.0) * r * r;
    return std::pow(std::max(0.0, inner), 0.25) / std::sqrt(2.0);
}

inline double equatorial_dis42_euclidean(int m, int n) {
    if (m < 0 || n < m) throw std::domain_error("equatorial_dis42_euclidean: requires 0 <= m <= n");
    if (m == n) return 0.0;
    const double r = mean_projection_norm(m, n);
    const double inner = 4.0 / (m + 1.0) + 4.0 / (n + 1.0) - 8.0 / (m + 1.0) * r * r;
    return std::pow(std::max(0.0, inner), 0.25);
}

// Limit of exact_gw42_euclidean(m, m+k) as k grows.
inline double gw42_asymptote_fixed_m(int m) {
    if (m < 0) throw std::domain_error("gw42_asymptote_fixed_m: m must be >= 0");
    return std::pow(1.0 / (m + 1.0), 0.25) / std::sqrt(2.0);
}

struct GeodesicDistortionEstimate {
    double value = 0.0;
    double std_error = 0.0;  // zero on the analytic branches
};

// dis_{4,2} of the equatorial coupling between geodesic spheres. (0,1) has
// the closed form pi / 5^{1/4}; other pairs are estimated by Monte Carlo over
// sample pairs of the coupling, with the standard error reported.
inline GeodesicDistortionEstimate equatorial_dis42_geodesic(int m, int n,
                                                            const QuadratureConfig& cfg = {}) {
    if (m < 0 || n < m) throw std::domain_error("equatorial_dis42_geodesic: requires 0 <= m <= n");
    cfg.validate();
    if (m == n) return {0.0, 0.0};
    if (m == 0 && n == 1) return {M_PI * std::pow(0.2, 0.25), 0.0};

    const double diam4_m = std::pow(sphere_diam_p(SphereSpec{m, Metric::Geodesic}, 4.0, cfg), 4.0);
    const double diam4_n = std::pow(sphere_diam_p(SphereSpec{n, Metric::Geodesic}, 4.0, cfg), 4.0);

    Rng rng(cfg.seed);
    const int d = n + 1;
    Eigen::VectorXd y(d), yp(d);
    auto draw_unit = [&](Eigen::VectorXd& v) {
        double norm2;
        do {
            for (int i = 0; i < d; ++i) v(i) = rng.normal();
            norm2 = v.squaredNorm();
        } while (norm2 < 1e-24);
        v /= std::sqrt(norm2);
    };
    // geodesic distance between the equatorial images of y and y'
    auto projected_dist = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        const auto ha = a.head(m + 1);
        const auto hb = b.head(m + 1);
        const double na = ha.norm(), nb = hb.norm();
        if (na < 1e-12 || nb < 1e-12) return -1.0;  // degenerate, caller resamples
        return std::acos(std::clamp(ha.dot(hb) / (na * nb), -1.0, 1.0));
    };

    const int N = cfg.mc_samples;
    double sum = 0.0, sum_sq = 0.0;
    for (int it = 0; it < N; ++it) {
        double dm;
        do {
            draw_unit(y);
            draw_unit(yp);
            dm = projected_dist(y, yp);
        } while (dm < 0.0);
        const double dn = std::acos(std::clamp(y.dot(yp), -1.0, 1.0));
        const double z = dm * dm * dn * dn;
        sum += z;
        sum_sq += z * z;
    }
    const double mean = sum / N;
    const double var = std::max(0.0, sum_sq / N - mean * mean) * N / (N - 1.0);
    const double se_mean = std::sqrt(var / N);

    const double pow4 = std::max(0.0, diam4_m + diam4_n - 2.0 * mean);
    const double value = std::pow(pow4, 0.25);
    const double se4 = 2.0 * se_mean;
    const double se = value > 0.0 ? se4 / (4.0 * value * value * value) : std::pow(se4, 0.25);
    return {value, se};
}

}  // namespace gws
