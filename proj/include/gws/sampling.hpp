#pragma once

// Sphere and Gaussian samplers, farthest-point subsampling, Voronoi weight
// estimation, and the equatorial map with its induced discrete couplings.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "gws/mm_space.hpp"
#include "gws/rng.hpp"
#include "gws/sphere.hpp"

namespace gws {

struct PointCloud {
    Eigen::MatrixXd coords;  // N x (d+1)
    bool on_sphere = false;

    Eigen::Index size() const { return coords.rows(); }
    Eigen::Index ambient_dim() const { return coords.cols(); }
};

// N i.i.d. uniform points on S^n, as normalized standard Gaussian vectors.
// For n = 0 this draws +-1 fairly.
inline PointCloud sample_sphere_uniform(int n, int N, Seed seed) {
    if (n < 0) throw std::domain_error("sample_sphere_uniform: n must be >= 0");
    if (N < 1) throw std::domain_error("sample_sphere_uniform: N must be >= 1");
    Rng rng(seed);
    PointCloud cloud;
    cloud.coords.resize(N, n + 1);
    cloud.on_sphere = true;
    for (int i = 0; i < N; ++i) {
        double norm2;
        do {
            for (int d = 0; d <= n; ++d) cloud.coords(i, d) = rng.normal();
            norm2 = cloud.coords.row(i).squaredNorm();
        } while (norm2 < 1e-24);
        cloud.coords.row(i) /= std::sqrt(norm2);
    }
    return cloud;
}

// Greedy farthest-point subsample: the first index is uniform under the seed,
// each following index maximizes the distance to the selected set, ties going
// to the lowest index.
inline std::vector<Eigen::Index> farthest_point_sample(const PointCloud& cloud, int k,
                                                       Metric metric, Seed seed) {
    const Eigen::Index N = cloud.size();
    if (k < 1 || k > N) throw std::domain_error("farthest_point_sample: need 1 <= k <= N");
    Rng rng(seed);
    std::vector<Eigen::Index> selected;
    selected.reserve(k);
    selected.push_back(static_cast<Eigen::Index>(rng.uniform_index(N)));

    std::vector<double> min_dist(N, std::numeric_limits<double>::infinity());
    for (int step = 1; step < k; ++step) {
        const Eigen::Index last = selected.back();
        Eigen::Index best = -1;
        double best_dist = -1.0;
        for (Eigen::Index i = 0; i < N; ++i) {
            const double d = metric_distance(cloud.coords.row(i), cloud.coords.row(last), metric);
            if (d < min_dist[i]) min_dist[i] = d;
            if (min_dist[i] > best_dist) {
                best_dist = min_dist[i];
                best = i;
            }
        }
        selected.push_back(best);
    }
    return selected;
}

// Landmark weights as the fraction of a fresh uniform reference sample lying
// nearest to each landmark (lowest index on ties). Counts over total, so the
// result sums to one exactly.
inline Eigen::VectorXd voronoi_weights(const PointCloud& landmarks, int reference_size,
                                       Seed seed) {
    const Eigen::Index k = landmarks.size();
    if (k < 1) throw std::domain_error("voronoi_weights: landmarks must be nonempty");
    if (reference_size < 1) throw std::domain_error("voronoi_weights: reference_size >= 1");
    if (!landmarks.on_sphere) {
        throw std::domain_error("voronoi_weights: reference sampling needs a sphere cloud");
    }
    const int n = static_cast<int>(landmarks.ambient_dim()) - 1;
    Rng rng(seed);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd point(n + 1);
    for (int s = 0; s < reference_size; ++s) {
        double norm2;
        do {
            for (int d = 0; d <= n; ++d) point(d) = rng.normal();
            norm2 = point.squaredNorm();
        } while (norm2 < 1e-24);
        point /= std::sqrt(norm2);
        // nearest landmark by Euclidean distance (argmax inner product on the
        // sphere; coincides with geodesic-nearest)
        Eigen::Index best = 0;
        double best_dot = landmarks.coords.row(0).dot(point);
        for (Eigen::Index i = 1; i < k; ++i) {
            const double dot = landmarks.coords.row(i).dot(point);
            if (dot > best_dot) {
                best_dot = dot;
                best = i;
            }
        }
        counts(best) += 1.0;
    }
    return counts / counts.sum();
}

// Equatorial map e_{n,m}: normalize the leading m+1 coordinates. Points of
// the measure-zero set O_{n,m} (leading block below 1e-12) come back empty.
inline std::optional<Eigen::VectorXd> equatorial_map(const Eigen::VectorXd& y, int m) {
    if (m < 0 || m + 1 > y.size()) throw std::domain_error("equatorial_map: bad target dim");
    if (std::fabs(y.norm() - 1.0) > 1e-10) {
        throw std::domain_error("equatorial_map: input must be a unit vector");
    }
    Eigen::VectorXd head = y.head(m + 1);
    const double norm = head.norm();
    if (norm < 1e-12) return std::nullopt;
    return head / norm;
}

// Discrete equatorial coupling: pairs (e_{n,m}(y_i), y_i) with mass 1/N on
// the diagonal. The inputs must already avoid O_{n,m}; samplers resample
// degenerate draws away, so hitting one here is an error.
inline std::tuple<FiniteMMSpace, FiniteMMSpace, Coupling> equatorial_coupling_empirical(
    const PointCloud& samples, int m, Metric metric) {
    if (!samples.on_sphere) {
        throw std::domain_error("equatorial_coupling_empirical: samples must lie on a sphere");
    }
    const Eigen::Index N = samples.size();
    const int n = static_cast<int>(samples.ambient_dim()) - 1;
    if (m > n) throw std::domain_error("equatorial_coupling_empirical: m must be <= n");
    Eigen::MatrixXd projected(N, m + 1);
    for (Eigen::Index i = 0; i < N; ++i) {
        const auto image = equatorial_map(samples.coords.row(i), m);
        if (!image) {
            throw std::domain_error("equatorial_coupling_empirical: degenerate point present");
        }
        projected.row(i) = *image;
    }
    const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(N, 1.0 / static_cast<double>(N));
    FiniteMMSpace X = space_from_points(projected, metric, uniform);
    FiniteMMSpace Y = space_from_points(samples.coords, metric, uniform);
    Coupling c = diagonal_coupling(uniform, uniform);
    return {std::move(X), std::move(Y), std::move(c)};
}

// Empirical J of the Gaussian projection coupling: N standard Gaussian
// vectors in R^{n+1} paired with their leading (m+1)-blocks. Converges to
// m + 1.
inline double gaussian_projection_J(int m, int n, int N, Seed seed) {
    if (m < 0 || n < m) throw std::domain_error("gaussian_projection_J: requires 0 <= m <= n");
    if (N < 2) throw std::domain_error("gaussian_projection_J: N must be >= 2");
    Rng rng(seed);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m + 1, n + 1);
    Eigen::VectorXd z(n + 1);
    for (int s = 0; s < N; ++s) {
        for (int d = 0; d <= n; ++d) z(d) = rng.normal();
        M += z.head(m + 1) * z.transpose();
    }
    M /= static_cast<double>(N);
    return M.squaredNorm();
}

}  // namespace gws
