#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "gws/linear_ot.hpp"
#include "gws/rng.hpp"

using namespace gws;

namespace {

Eigen::VectorXd random_marginal(int n, Rng& rng) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = 0.1 + rng.uniform();
    return v / v.sum();
}

// optimality certificate: feasible duals + complementary slackness
void check_certificate(const Eigen::MatrixXd& cost, const LinearOtResult& res) {
    const double tol = 1e-8 * (1.0 + cost.cwiseAbs().maxCoeff());
    double dual_value = res.coupling.mu.dot(res.row_potentials) +
                        res.coupling.nu.dot(res.col_potentials);
    REQUIRE(dual_value == Catch::Approx(res.value).margin(1e-8));
    for (Eigen::Index i = 0; i < cost.rows(); ++i) {
        for (Eigen::Index j = 0; j < cost.cols(); ++j) {
            const double rc = cost(i, j) - res.row_potentials(i) - res.col_potentials(j);
            REQUIRE(rc >= -tol);
            if (res.coupling.gamma(i, j) > 1e-12) {
                REQUIRE(std::fabs(rc) <= tol);
            }
        }
    }
}

}  // namespace

TEST_CASE("single-row problems copy the column marginal") {
    Rng rng(Seed{51});
    const Eigen::VectorXd nu = random_marginal(5, rng);
    Eigen::VectorXd mu(1);
    mu << 1.0;
    Eigen::MatrixXd cost(1, 5);
    for (int j = 0; j < 5; ++j) cost(0, j) = rng.uniform();
    const LinearOtResult res = linear_ot(cost, mu, nu);
    REQUIRE((res.coupling.gamma.row(0).transpose() - nu).lpNorm<Eigen::Infinity>() < 1e-14);
    REQUIRE(res.value == Catch::Approx(cost.row(0).dot(nu)).margin(1e-14));
}

TEST_CASE("identity-favoring cost yields the diagonal coupling") {
    const int n = 6;
    Eigen::MatrixXd cost = Eigen::MatrixXd::Ones(n, n);
    cost.diagonal().setZero();
    const Eigen::VectorXd mu = Eigen::VectorXd::Constant(n, 1.0 / n);
    const LinearOtResult res = linear_ot(cost, mu, mu);
    REQUIRE(res.value == Catch::Approx(0.0).margin(1e-14));
    REQUIRE((res.coupling.gamma - Eigen::MatrixXd(mu.asDiagonal())).lpNorm<Eigen::Infinity>() <
            1e-14);
}

TEST_CASE("sorted-atom absolute-value cost reproduces the quantile formula") {
    Rng rng(Seed{52});
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 6;
        std::vector<double> a(n), b(n);
        for (int i = 0; i < n; ++i) {
            a[i] = 4.0 * rng.uniform();
            b[i] = 4.0 * rng.uniform();
        }
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        Eigen::MatrixXd cost(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) cost(i, j) = std::fabs(a[i] - b[j]);
        const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(n, 1.0 / n);
        const LinearOtResult res = linear_ot(cost, uniform, uniform);
        double sorted_match = 0.0;
        for (int i = 0; i < n; ++i) sorted_match += std::fabs(a[i] - b[i]) / n;
        REQUIRE(res.value == Catch::Approx(sorted_match).margin(1e-12));
    }
}

TEST_CASE("random instances satisfy the duality certificate") {
    Rng rng(Seed{53});
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_index(8));
        const int m = 2 + static_cast<int>(rng.uniform_index(8));
        Eigen::MatrixXd cost(n, m);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) cost(i, j) = 10.0 * rng.uniform() - 3.0;
        const Eigen::VectorXd mu = random_marginal(n, rng);
        const Eigen::VectorXd nu = random_marginal(m, rng);
        const LinearOtResult res = linear_ot(cost, mu, nu);
        REQUIRE(validate_coupling(res.coupling).ok);
        check_certificate(cost, res);
        // upper bound check against random feasible plans
        Eigen::MatrixXd g = mu * nu.transpose();
        REQUIRE(res.value <= (cost.cwiseProduct(g)).sum() + 1e-12);
    }
}

TEST_CASE("degenerate marginals with zero mass entries") {
    Eigen::VectorXd mu(3), nu(3);
    mu << 0.5, 0.0, 0.5;
    nu << 0.25, 0.5, 0.25;
    Eigen::MatrixXd cost(3, 3);
    cost << 1, 2, 3, 4, 5, 6, 3, 2, 1;
    const LinearOtResult res = linear_ot(cost, mu, nu);
    REQUIRE(validate_coupling(res.coupling, 1e-8, 1e-9).ok);
    REQUIRE(res.coupling.gamma.row(1).sum() == Catch::Approx(0.0).margin(1e-15));
    check_certificate(cost, res);
}

TEST_CASE("deterministic output across repeated runs") {
    Rng rng(Seed{54});
    Eigen::MatrixXd cost(5, 7);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 7; ++j) cost(i, j) = rng.uniform();
    const Eigen::VectorXd mu = random_marginal(5, rng);
    const Eigen::VectorXd nu = random_marginal(7, rng);
    const LinearOtResult a = linear_ot(cost, mu, nu);
    const LinearOtResult b = linear_ot(cost, mu, nu);
    REQUIRE(a.value == b.value);
    REQUIRE((a.coupling.gamma - b.coupling.gamma).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("invalid costs are rejected") {
    Eigen::MatrixXd cost(2, 2);
    cost << 0.0, std::numeric_limits<double>::quiet_NaN(), 1.0, 2.0;
    Eigen::VectorXd mu(2);
    mu << 0.5, 0.5;
    REQUIRE_THROWS_AS(linear_ot(cost, mu, mu), std::domain_error);
    cost(0, 1) = std::numeric_limits<double>::infinity();
    REQUIRE_THROWS_AS(linear_ot(cost, mu, mu), std::domain_error);
}
