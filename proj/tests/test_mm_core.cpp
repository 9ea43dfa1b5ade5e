#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gws/mm_space.hpp"
#include "gws/rng.hpp"

using namespace gws;

namespace {

FiniteMMSpace random_space(int n, Rng& rng, int ambient = 3) {
    Eigen::MatrixXd pts(n, ambient);
    for (int i = 0; i < n; ++i)
        for (int d = 0; d < ambient; ++d) pts(i, d) = rng.normal();
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) w(i) = 0.2 + rng.uniform();
    w /= w.sum();
    return space_from_points(pts, Metric::Euclidean, w);
}

Coupling random_coupling(const Eigen::VectorXd& mu, const Eigen::VectorXd& nu, Rng& rng) {
    Eigen::MatrixXd g(mu.size(), nu.size());
    for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = 0.1 + rng.uniform();
    for (int it = 0; it < 400; ++it) {
        const Eigen::VectorXd rs = g.rowwise().sum();
        for (Eigen::Index i = 0; i < g.rows(); ++i) g.row(i) *= mu(i) / rs(i);
        const Eigen::VectorXd cs = g.colwise().sum().transpose();
        for (Eigen::Index j = 0; j < g.cols(); ++j) g.col(j) *= nu(j) / cs(j);
    }
    return Coupling{g, mu, nu};
}

// The Fig. 5 style two-point instance: X has weights (alpha, 1-alpha), Y is
// uniform, both with a single unit distance.
std::pair<FiniteMMSpace, FiniteMMSpace> counterexample_pair(double alpha) {
    Eigen::MatrixXd d(2, 2);
    d << 0, 1, 1, 0;
    Eigen::VectorXd wx(2), wy(2);
    wx << alpha, 1.0 - alpha;
    wy << 0.5, 0.5;
    return {make_mm_space(d, wx), make_mm_space(d, wy)};
}

}  // namespace

TEST_CASE("lambda_q closed forms and errors") {
    REQUIRE(lambda_q(3, 5, 1) == 2.0);
    REQUIRE(lambda_q(0, 2, 2) == 2.0);
    REQUIRE(lambda_q(2, 2, kInf) == 0.0);
    REQUIRE(lambda_q(1, 2, kInf) == 2.0);
    REQUIRE_THROWS_AS(lambda_q(-0.1, 1, 2), std::domain_error);
    REQUIRE_THROWS_AS(lambda_q(1, -1, 2), std::domain_error);
    REQUIRE_THROWS_AS(lambda_q(1, 1, 0.5), std::domain_error);
}

TEST_CASE("lambda_q metric axioms on random triples") {
    Rng rng(Seed{11});
    const double qs[] = {1.0, 1.5, 2.0, 4.0, kInf};
    for (int trial = 0; trial < 1000; ++trial) {
        const double a = 3.0 * rng.uniform();
        const double b = 3.0 * rng.uniform();
        const double c = 3.0 * rng.uniform();
        for (double q : qs) {
            const double ab = lambda_q(a, b, q);
            REQUIRE(ab >= 0.0);
            REQUIRE(ab == Catch::Approx(lambda_q(b, a, q)).margin(1e-15));
            REQUIRE(ab <= lambda_q(a, c, q) + lambda_q(c, b, q) + 1e-12);
        }
        REQUIRE(lambda_q(a, a, 2.0) == 0.0);
    }
}

TEST_CASE("lambda_q is monotone in q") {
    Rng rng(Seed{12});
    for (int trial = 0; trial < 500; ++trial) {
        const double a = 4.0 * rng.uniform();
        const double b = 4.0 * rng.uniform();
        double prev = lambda_q(a, b, 1.0);
        for (double q : {1.3, 2.0, 3.0, 6.0, kInf}) {
            const double cur = lambda_q(a, b, q);
            REQUIRE(cur + 1e-12 >= prev);
            prev = cur;
        }
    }
}

TEST_CASE("validate_coupling accepts feasible couplings and flags violations") {
    Eigen::VectorXd mu(2), nu(2);
    mu << 0.5, 0.5;
    nu << 0.5, 0.5;
    REQUIRE(validate_coupling(product_coupling(mu, nu)).ok);
    REQUIRE(validate_coupling(diagonal_coupling(mu, nu)).ok);

    Coupling bad = product_coupling(mu, nu);
    bad.gamma(0, 0) = -1e-3;
    const CouplingCheck check = validate_coupling(bad);
    REQUIRE_FALSE(check.ok);
    REQUIRE(check.min_entry < 0.0);
}

TEST_CASE("distortion against a one-point space is the p-diameter") {
    Rng rng(Seed{13});
    const FiniteMMSpace X = random_space(5, rng);
    FiniteMMSpace point = make_mm_space(Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Ones(1));
    const Coupling c = product_coupling(X.weights, point.weights);
    for (double p : {1.0, 2.0, 3.5, 4.0}) {
        for (double q : {1.0, 2.0, 5.0}) {
            REQUIRE(distortion_pq(X, point, c, PqParams(p, q)) ==
                    Catch::Approx(p_diameter(X, p)).margin(1e-12));
        }
    }
    // p = inf against a point is the support diameter
    REQUIRE(distortion_pq(X, point, c, PqParams(kInf, 2.0)) ==
            Catch::Approx(p_diameter(X, kInf)).margin(1e-12));
}

TEST_CASE("identity coupling on identical spaces has zero distortion") {
    Rng rng(Seed{14});
    const FiniteMMSpace X = random_space(6, rng);
    const Coupling c = diagonal_coupling(X.weights, X.weights);
    REQUIRE(distortion_pq(X, X, c, PqParams(4.0, 2.0)) == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(distortion_pq(X, X, c, PqParams(kInf, kInf)) == 0.0);
}

TEST_CASE("counterexample coupling evaluates to 3/8") {
    auto [X, Y] = counterexample_pair(0.75);
    Eigen::MatrixXd g(2, 2);
    g << 0.5, 0.25, 0.0, 0.25;
    const Coupling c{g, X.weights, Y.weights};
    REQUIRE(distortion_pq(X, Y, c, PqParams(1.0, 4.0)) == Catch::Approx(0.375).margin(1e-15));
}

TEST_CASE("p_diameter closed cases") {
    Eigen::MatrixXd d(2, 2);
    d << 0, M_PI, M_PI, 0;
    Eigen::VectorXd w(2);
    w << 0.5, 0.5;
    const FiniteMMSpace two = make_mm_space(d, w);
    REQUIRE(p_diameter(two, 4.0) == Catch::Approx(M_PI / std::pow(2.0, 0.25)).margin(1e-14));

    const FiniteMMSpace point =
        make_mm_space(Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Ones(1));
    REQUIRE(p_diameter(point, 1.0) == 0.0);
    REQUIRE(p_diameter(point, kInf) == 0.0);

    Eigen::MatrixXd d2(2, 2);
    d2 << 0, 2, 2, 0;
    REQUIRE(p_diameter(make_mm_space(d2, w), kInf) == 2.0);
}

TEST_CASE("distortion is monotone in p and q for a fixed coupling") {
    Rng rng(Seed{15});
    for (int trial = 0; trial < 20; ++trial) {
        const FiniteMMSpace X = random_space(4, rng);
        const FiniteMMSpace Y = random_space(3, rng);
        const Coupling c = random_coupling(X.weights, Y.weights, rng);
        const double grid[] = {1.0, 2.0, 4.0, 8.0};
        for (std::size_t i = 0; i < 4; ++i) {
            for (std::size_t j = 0; j + 1 < 4; ++j) {
                const double base = distortion_pq(X, Y, c, PqParams(grid[i], grid[j]));
                REQUIRE(distortion_pq(X, Y, c, PqParams(grid[i], grid[j + 1])) + 1e-10 >= base);
                if (i + 1 < 4) {
                    REQUIRE(distortion_pq(X, Y, c, PqParams(grid[i + 1], grid[j])) + 1e-10 >= base);
                }
            }
        }
    }
}

TEST_CASE("distortion symmetry and scale homogeneity") {
    Rng rng(Seed{16});
    const FiniteMMSpace X = random_space(4, rng);
    const FiniteMMSpace Y = random_space(5, rng);
    const Coupling c = random_coupling(X.weights, Y.weights, rng);
    Coupling ct{c.gamma.transpose(), Y.weights, X.weights};
    for (double p : {1.0, 3.0, 4.0}) {
        for (double q : {1.0, 2.0}) {
            const double fwd = distortion_pq(X, Y, c, PqParams(p, q));
            REQUIRE(distortion_pq(Y, X, ct, PqParams(p, q)) == Catch::Approx(fwd).margin(1e-12));
        }
    }
    const double lambda = 2.7;
    FiniteMMSpace Xs = X, Ys = Y;
    Xs.dist *= lambda;
    Xs.coords.reset();
    Ys.dist *= lambda;
    Ys.coords.reset();
    for (double q : {1.0, 2.0, 3.0}) {
        const double base = distortion_pq(X, Y, c, PqParams(2.0 * q, q));
        REQUIRE(distortion_pq(Xs, Ys, c, PqParams(2.0 * q, q)) ==
                Catch::Approx(lambda * base).epsilon(1e-12));
    }
}

TEST_CASE("fast quadratic path agrees with the quadruple-sum reference") {
    Rng rng(Seed{17});
    for (int trial = 0; trial < 10; ++trial) {
        const FiniteMMSpace X = random_space(5, rng);
        const FiniteMMSpace Y = random_space(4, rng);
        const Coupling c = random_coupling(X.weights, Y.weights, rng);
        for (double q : {1.0, 2.0}) {
            const double fast = detail::distortion_pow_quadratic(X, Y, c.gamma, q);
            const double ref = detail::distortion_pow_reference(X, Y, c.gamma, 2.0 * q, q);
            REQUIRE(fast == Catch::Approx(ref).margin(1e-9));
        }
    }
}

TEST_CASE("infinite-p distortion respects the support threshold") {
    auto [X, Y] = counterexample_pair(0.5);
    Eigen::MatrixXd g(2, 2);
    // off-diagonal mass below the default support threshold
    const double tiny = 1e-18;
    g << 0.5 - tiny, tiny, tiny, 0.5 - tiny;
    const Coupling c{g, X.weights, Y.weights};
    REQUIRE(distortion_pq(X, Y, c, PqParams(kInf, 1.0)) == 0.0);
    // once the threshold is lowered the off-diagonal pairs count
    REQUIRE(distortion_pq(X, Y, c, PqParams(kInf, 1.0), 1e-20) == Catch::Approx(1.0));
}

TEST_CASE("marginal mismatch is a precondition error") {
    Rng rng(Seed{18});
    const FiniteMMSpace X = random_space(3, rng);
    const FiniteMMSpace Y = random_space(3, rng);
    Coupling c = product_coupling(X.weights, Y.weights);
    c.gamma(0, 0) += 1e-3;
    REQUIRE_THROWS_AS(distortion_pq(X, Y, c, PqParams(2.0, 1.0)), std::invalid_argument);
}

TEST_CASE("cross_correlation basics") {
    // S^0 = {+1, -1} with the diagonal coupling: J = 1
    Eigen::MatrixXd pts(2, 1);
    pts << 1, -1;
    Eigen::VectorXd w(2);
    w << 0.5, 0.5;
    const FiniteMMSpace S0 = space_from_points(pts, Metric::Euclidean, w);
    const CrossCorrelation diag = cross_correlation(S0, S0, diagonal_coupling(w, w));
    REQUIRE(diag.J == Catch::Approx(1.0).margin(1e-15));
    REQUIRE(diag.D == Catch::Approx(1.0).margin(1e-15));

    // product coupling of centered clouds: J = 0
    Rng rng(Seed{19});
    const FiniteMMSpace X = random_space(4, rng);
    FiniteMMSpace Xc = X;
    Eigen::RowVectorXd mean = X.weights.transpose() * (*X.coords);
    Eigen::MatrixXd centered = *X.coords;
    centered.rowwise() -= mean;
    Xc = make_mm_space(pairwise_distances(centered, Metric::Euclidean), X.weights, centered);
    const CrossCorrelation prod = cross_correlation(Xc, Xc, product_coupling(X.weights, X.weights));
    REQUIRE(prod.J == Catch::Approx(0.0).margin(1e-20));

    FiniteMMSpace no_coords = make_mm_space(X.dist, X.weights);
    REQUIRE_THROWS_AS(cross_correlation(no_coords, X, product_coupling(X.weights, X.weights)),
                      std::invalid_argument);
}

TEST_CASE("dis42_via_inner_products matches the quadruple sum on unit clouds") {
    Rng rng(Seed{20});
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::MatrixXd px(3, 3), py(4, 4);
        for (int i = 0; i < 3; ++i) {
            for (int d = 0; d < 3; ++d) px(i, d) = rng.normal();
            px.row(i).normalize();
        }
        for (int j = 0; j < 4; ++j) {
            for (int d = 0; d < 4; ++d) py(j, d) = rng.normal();
            py.row(j).normalize();
        }
        Eigen::VectorXd wx = Eigen::VectorXd::Constant(3, 1.0 / 3);
        Eigen::VectorXd wy(4);
        for (int j = 0; j < 4; ++j) wy(j) = 0.3 + rng.uniform();
        wy /= wy.sum();
        const FiniteMMSpace X = space_from_points(px, Metric::Euclidean, wx);
        const FiniteMMSpace Y = space_from_points(py, Metric::Euclidean, wy);
        const Coupling c = random_coupling(wx, wy, rng);
        REQUIRE(dis42_via_inner_products(X, Y, c) ==
                Catch::Approx(distortion_pq(X, Y, c, PqParams(4.0, 2.0))).margin(1e-9));
    }
}

TEST_CASE("dis42_via_inner_products is zero for the identity coupling") {
    Rng rng(Seed{21});
    Eigen::MatrixXd pts(5, 3);
    for (int i = 0; i < 5; ++i) {
        for (int d = 0; d < 3; ++d) pts(i, d) = rng.normal();
        pts.row(i).normalize();
    }
    const FiniteMMSpace X = space_from_points(pts, Metric::Euclidean);
    REQUIRE(dis42_via_inner_products(X, X, diagonal_coupling(X.weights, X.weights)) ==
            Catch::Approx(0.0).margin(1e-9));

    Eigen::MatrixXd bad = pts;
    bad(0, 0) *= 1.5;
    FiniteMMSpace Xbad = make_mm_space(pairwise_distances(bad, Metric::Euclidean),
                                       X.weights, bad);
    REQUIRE_THROWS_AS(dis42_via_inner_products(Xbad, X, diagonal_coupling(X.weights, X.weights)),
                      std::invalid_argument);
}

TEST_CASE("mm-space construction validates its invariants") {
    Eigen::MatrixXd d(2, 2);
    d << 0, 1, 1, 0;
    Eigen::VectorXd w(2);
    w << 0.6, 0.4;
    REQUIRE_NOTHROW(make_mm_space(d, w));

    Eigen::VectorXd bad_w(2);
    bad_w << 0.6, 0.5;
    REQUIRE_THROWS_AS(make_mm_space(d, bad_w), std::invalid_argument);

    Eigen::MatrixXd asym = d;
    asym(0, 1) = 2.0;
    REQUIRE_THROWS_AS(make_mm_space(asym, w), std::invalid_argument);

    Eigen::MatrixXd neg = d;
    neg(0, 1) = neg(1, 0) = -1.0;
    REQUIRE_THROWS_AS(make_mm_space(neg, w), std::invalid_argument);

    // coords that do not realize the distances
    Eigen::MatrixXd pts(2, 2);
    pts << 0, 0, 3, 0;
    REQUIRE_THROWS_AS(make_mm_space(d, w, pts, Metric::Euclidean), std::invalid_argument);

    // the triangle inequality is only enforced on request
    Eigen::MatrixXd skew(3, 3);
    skew << 0, 1, 5, 1, 0, 1, 5, 1, 0;
    Eigen::VectorXd w3 = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
    REQUIRE_NOTHROW(make_mm_space(skew, w3));
    REQUIRE_THROWS_AS(make_mm_space(skew, w3, std::nullopt, Metric::Euclidean, true),
                      std::invalid_argument);
}

TEST_CASE("q = inf inside a finite-p distortion uses Lambda_inf pointwise") {
    Rng rng(Seed{22});
    const FiniteMMSpace X = random_space(4, rng);
    const FiniteMMSpace Y = random_space(3, rng);
    const Coupling c = random_coupling(X.weights, Y.weights, rng);
    const double at_inf = distortion_pq(X, Y, c, PqParams(2.0, kInf));
    REQUIRE(std::isfinite(at_inf));
    // Lambda_q increases toward Lambda_inf, so q = inf dominates finite q
    REQUIRE(at_inf + 1e-10 >= distortion_pq(X, Y, c, PqParams(2.0, 8.0)));
}
