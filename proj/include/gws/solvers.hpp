#pragma once

// Discrete GW solvers over the coupling polytope M(mu, nu), minimizing
// dis_{p,q}(gamma)^p, which is a quadratic form in gamma.
//   - gw_cgd: Frank-Wolfe with exact linear OT subproblems and exact line
//     search along each segment (the restriction of a quadratic is quadratic).
//   - gw_entropic: repeated linearization solved by log-domain Sinkhorn, the
//     final plan rounded to exact marginals; reports the unregularized
//     distortion so the entropic bias stays visible.
//   - gw_bruteforce_small: grid search over the free entries of small
//     coupling polytopes, used as an independent oracle.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <stdexcept>
#include <thread>
#include <vector>

#include "gws/linear_ot.hpp"
#include "gws/mm_space.hpp"
#include "gws/rng.hpp"

namespace gws {

enum class InitStrategy { Product, Diagonal, Random };

struct GWSolveParams {
    PqParams pq{4.0, 2.0};
    int max_iter = 1000;
    double rel_tol = 1e-9;
    double epsilon = 0.01;  // entropic regularization
    InitStrategy init = InitStrategy::Product;
    Seed seed{0};
    int inner_sinkhorn_iter = 1000;
    double sinkhorn_marginal_tol = 1e-9;
};

struct SolverReport {
    double value = 0.0;  // dis_{p,q} of the returned coupling (not halved)
    Coupling coupling;
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace;  // dis values, one per iterate
    std::uint64_t seed = 0;
};

struct sinkhorn_overflow_error : std::runtime_error {
    int iteration;
    explicit sinkhorn_overflow_error(int iter)
        : std::runtime_error("sinkhorn: non-finite potential at iteration " +
                             std::to_string(iter)),
          iteration(iter) {}
};

namespace detail {

// Rounds a positive matrix onto the transport polytope (scale rows and
// columns down, then spread the missing mass as a rank-one correction).
inline Eigen::MatrixXd round_to_marginals(Eigen::MatrixXd g, const Eigen::VectorXd& mu,
                                          const Eigen::VectorXd& nu) {
    const Eigen::VectorXd row = g.rowwise().sum();
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
        if (row(i) > mu(i) && row(i) > 0.0) g.row(i) *= mu(i) / row(i);
    }
    const Eigen::VectorXd col = g.colwise().sum();
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
        if (col(j) > nu(j) && col(j) > 0.0) g.col(j) *= nu(j) / col(j);
    }
    Eigen::VectorXd err_mu = mu - g.rowwise().sum();
    Eigen::VectorXd err_nu = nu - g.colwise().sum().transpose();
    err_mu = err_mu.cwiseMax(0.0);
    err_nu = err_nu.cwiseMax(0.0);
    const double total = err_mu.sum();
    if (total > 0.0) g += err_mu * err_nu.transpose() / total;
    return g;
}

// Quadratic loss machinery shared by the solvers. The fast branch covers
// p = 2q via the three-matrix-product expansion; the generic branch contracts
// the Lambda_q^p tensor on the fly and is size-capped.
class GWObjective {
public:
    GWObjective(const FiniteMMSpace& X, const FiniteMMSpace& Y, const PqParams& pq)
        : X_(X), Y_(Y), pq_(pq) {
        if (std::isinf(pq.p)) throw std::domain_error("GW solvers require p < inf");
        fast_ = !std::isinf(pq.q) && pq.p == 2.0 * pq.q;
        if (fast_) {
            A_ = X.dist.array().pow(pq.q).matrix();
            B_ = Y.dist.array().pow(pq.q).matrix();
            a_ = A_.array().square().matrix() * X.weights;
            b_ = B_.array().square().matrix() * Y.weights;
            const_term_ = X.weights.dot(a_) + Y.weights.dot(b_);
        } else if (X.n_points() * Y.n_points() > 10000) {
            throw std::length_error("generic (p,q) loss capped at n*m <= 10^4");
        }
    }

    // dis^p at gamma
    double value_pow(const Eigen::MatrixXd& g) const {
        if (fast_) {
            const Eigen::MatrixXd Ag = A_ * g;
            const double cross = (Ag.transpose().cwiseProduct(B_ * g.transpose())).sum();
            return const_term_ - 2.0 * cross;
        }
        return 0.5 * gradient(g).cwiseProduct(g).sum();
    }

    // gradient of dis^p: 2 sum_kl Lambda_q(dX_ik, dY_jl)^p gamma_kl
    Eigen::MatrixXd gradient(const Eigen::MatrixXd& g) const {
        if (fast_) {
            Eigen::MatrixXd grad = (-4.0 * (A_ * g * B_));
            grad.colwise() += 2.0 * a_;
            grad.rowwise() += 2.0 * b_.transpose();
            return grad;
        }
        const Eigen::Index n = X_.n_points(), m = Y_.n_points();
        Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(n, m);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < m; ++j) {
                double s = 0.0;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double dx = X_.dist(i, k);
                    for (Eigen::Index l = 0; l < m; ++l) {
                        const double gkl = g(k, l);
                        if (gkl == 0.0) continue;
                        s += std::pow(lambda_q(dx, Y_.dist(j, l), pq_.q), pq_.p) * gkl;
                    }
                }
                grad(i, j) = 2.0 * s;
            }
        }
        return grad;
    }

    double p() const { return pq_.p; }

private:
    const FiniteMMSpace& X_;
    const FiniteMMSpace& Y_;
    PqParams pq_;
    bool fast_ = false;
    Eigen::MatrixXd A_, B_;
    Eigen::VectorXd a_, b_;
    double const_term_ = 0.0;
};

inline Eigen::MatrixXd initial_coupling(const FiniteMMSpace& X, const FiniteMMSpace& Y,
                                        InitStrategy init, Seed seed) {
    switch (init) {
        case InitStrategy::Product:
            return X.weights * Y.weights.transpose();
        case InitStrategy::Diagonal:
            return diagonal_coupling(X.weights, Y.weights).gamma;
        case InitStrategy::Random: {
            Rng rng(seed);
            Eigen::MatrixXd g(X.n_points(), Y.n_points());
            for (Eigen::Index i = 0; i < g.rows(); ++i)
                for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = 0.05 + rng.uniform();
            // iterative proportional fitting toward the marginals, then an
            // exact rounding step
            for (int it = 0; it < 100; ++it) {
                const Eigen::VectorXd rs = g.rowwise().sum();
                for (Eigen::Index i = 0; i < g.rows(); ++i)
                    if (rs(i) > 0.0) g.row(i) *= X.weights(i) / rs(i);
                const Eigen::VectorXd cs = g.colwise().sum().transpose();
                for (Eigen::Index j = 0; j < g.cols(); ++j)
                    if (cs(j) > 0.0) g.col(j) *= Y.weights(j) / cs(j);
            }
            return round_to_marginals(std::move(g), X.weights, Y.weights);
        }
    }
    throw std::logic_error("initial_coupling: unknown strategy");
}

}  // namespace detail

// ----------------------------------------------------------------------------
// Conditional gradient (Frank-Wolfe)
// ----------------------------------------------------------------------------

inline SolverReport gw_cgd(const FiniteMMSpace& X, const FiniteMMSpace& Y,
                           const GWSolveParams& params) {
    if (params.max_iter < 1) throw std::domain_error("gw_cgd: max_iter >= 1 required");
    const detail::GWObjective loss(X, Y, params.pq);
    Eigen::MatrixXd g = detail::initial_coupling(X, Y, params.init, params.seed);

    SolverReport report;
    report.seed = params.seed.value;
    double e_cur = loss.value_pow(g);
    report.objective_trace.push_back(std::pow(std::max(0.0, e_cur), 1.0 / params.pq.p));
    report.converged = false;

    int iter = 0;
    for (; iter < params.max_iter; ++iter) {
        if (e_cur <= 1e-30) {
            report.converged = true;
            break;
        }
        const Eigen::MatrixXd grad = loss.gradient(g);
        LinearOtResult direction = linear_ot(grad, X.weights, Y.weights);
        const Eigen::MatrixXd delta = direction.coupling.gamma - g;
        const double slope = grad.cwiseProduct(delta).sum();
        if (slope >= -params.rel_tol * std::max(1.0, std::fabs(e_cur))) {
            report.converged = true;  // Frank-Wolfe gap closed
            break;
        }
        // restriction of the quadratic objective to the segment:
        // E(g + t delta) = e_cur + t * slope + t^2 * curv
        const double e_end = loss.value_pow(g + delta);
        const double curv = e_end - e_cur - slope;
        double t;
        if (curv > 0.0) {
            t = std::clamp(-slope / (2.0 * curv), 0.0, 1.0);
        } else {
            t = (slope + curv < 0.0) ? 1.0 : 0.0;
        }
        if (t <= 0.0) {
            report.converged = true;
            break;
        }
        const Eigen::MatrixXd g_next = g + t * delta;
        const double e_next = loss.value_pow(g_next);
        if (e_next >= e_cur) {
            report.converged = true;
            break;
        }
        const double rel_drop = (e_cur - e_next) / std::max(1.0, std::fabs(e_cur));
        g = g_next;
        e_cur = e_next;
        report.objective_trace.push_back(std::pow(std::max(0.0, e_cur), 1.0 / params.pq.p));
        if (rel_drop < params.rel_tol) {
            report.converged = true;
            ++iter;
            break;
        }
    }
    report.iterations = iter;
    report.coupling = Coupling{std::move(g), X.weights, Y.weights};
    report.value = distortion_pq(X, Y, report.coupling, params.pq);
    return report;
}

// ----------------------------------------------------------------------------
// Entropic solver (Sinkhorn projections)
// ----------------------------------------------------------------------------

namespace detail {

// Log-domain Sinkhorn for min <cost, g> + eps * KL(g | mu x nu); potentials
// are warm-started across calls.
inline Eigen::MatrixXd sinkhorn_log_domain(const Eigen::MatrixXd& cost,
                                           const Eigen::VectorXd& mu, const Eigen::VectorXd& nu,
                                           double eps, int max_iter, double marginal_tol,
                                           Eigen::VectorXd& f, Eigen::VectorXd& g_pot) {
    const Eigen::Index n = mu.size(), m = nu.size();
    Eigen::VectorXd log_mu(n), log_nu(m);
    for (Eigen::Index i = 0; i < n; ++i) log_mu(i) = std::log(std::max(mu(i), 1e-300));
    for (Eigen::Index j = 0; j < m; ++j) log_nu(j) = std::log(std::max(nu(j), 1e-300));

    // plan_ij = exp((f_i + g_j - cost_ij)/eps) mu_i nu_j, so each logsumexp
    // carries the reference-measure log weight
    auto lse_rows = [&](Eigen::VectorXd& out) {
        for (Eigen::Index i = 0; i < n; ++i) {
            double mx = -std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < m; ++j) {
                mx = std::max(mx, (g_pot(j) - cost(i, j)) / eps + log_nu(j));
            }
            double s = 0.0;
            for (Eigen::Index j = 0; j < m; ++j) {
                s += std::exp((g_pot(j) - cost(i, j)) / eps + log_nu(j) - mx);
            }
            out(i) = mx + std::log(s);
        }
    };
    auto lse_cols = [&](Eigen::VectorXd& out) {
        for (Eigen::Index j = 0; j < m; ++j) {
            double mx = -std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < n; ++i) {
                mx = std::max(mx, (f(i) - cost(i, j)) / eps + log_mu(i));
            }
            double s = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                s += std::exp((f(i) - cost(i, j)) / eps + log_mu(i) - mx);
            }
            out(j) = mx + std::log(s);
        }
    };

    Eigen::VectorXd lse(n), lse_c(m);
    auto build_plan = [&]() {
        Eigen::MatrixXd plan(n, m);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < m; ++j)
                plan(i, j) = std::exp((f(i) + g_pot(j) - cost(i, j)) / eps) * mu(i) * nu(j);
        return plan;
    };

    for (int it = 0; it < max_iter; ++it) {
        lse_rows(lse);
        f = -eps * lse.array();
        lse_cols(lse_c);
        g_pot = -eps * lse_c.array();
        if (!f.allFinite() || !g_pot.allFinite()) throw sinkhorn_overflow_error(it);
        if (it % 10 == 9 || it == max_iter - 1) {
            const Eigen::MatrixXd plan = build_plan();
            const double err = (plan.rowwise().sum() - mu).cwiseAbs().sum();
            if (err < marginal_tol) return plan;
        }
    }
    return build_plan();
}

}  // namespace detail

inline SolverReport gw_entropic(const FiniteMMSpace& X, const FiniteMMSpace& Y,
                                const GWSolveParams& params) {
    if (params.epsilon <= 0.0) throw std::domain_error("gw_entropic: epsilon must be > 0");
    if (params.max_iter < 1) throw std::domain_error("gw_entropic: max_iter >= 1 required");
    const detail::GWObjective loss(X, Y, params.pq);
    Eigen::MatrixXd g = detail::initial_coupling(X, Y, params.init, params.seed);

    SolverReport report;
    report.seed = params.seed.value;
    double e_cur = loss.value_pow(g);
    report.objective_trace.push_back(std::pow(std::max(0.0, e_cur), 1.0 / params.pq.p));

    // the plan is reconstructed against mu x nu, so potentials start at zero
    Eigen::VectorXd f = Eigen::VectorXd::Zero(X.n_points());
    Eigen::VectorXd h = Eigen::VectorXd::Zero(Y.n_points());

    int iter = 0;
    for (; iter < params.max_iter; ++iter) {
        const Eigen::MatrixXd grad = loss.gradient(g);
        Eigen::MatrixXd plan = detail::sinkhorn_log_domain(
            grad, X.weights, Y.weights, params.epsilon, params.inner_sinkhorn_iter,
            params.sinkhorn_marginal_tol, f, h);
        plan = detail::round_to_marginals(std::move(plan), X.weights, Y.weights);
        const double e_next = loss.value_pow(plan);
        const double rel_change = std::fabs(e_next - e_cur) / std::max(1.0, std::fabs(e_cur));
        g = std::move(plan);
        e_cur = e_next;
        report.objective_trace.push_back(std::pow(std::max(0.0, e_cur), 1.0 / params.pq.p));
        if (rel_change < params.rel_tol) {
            report.converged = true;
            ++iter;
            break;
        }
    }
    report.iterations = iter;
    report.coupling = Coupling{std::move(g), X.weights, Y.weights};
    report.value = distortion_pq(X, Y, report.coupling, params.pq);
    return report;
}

// ----------------------------------------------------------------------------
// Brute-force oracle for small instances
// ----------------------------------------------------------------------------

// Grid search over the free block gamma[0..n-2][0..m-2] of the coupling
// polytope (the remaining entries follow from the marginals). Guaranteed
// within O(1/resolution) of the optimum by Lipschitz continuity of the
// quadratic objective on the compact polytope.
inline double gw_bruteforce_small(const FiniteMMSpace& X, const FiniteMMSpace& Y,
                                  const PqParams& pq, int resolution) {
    if (std::isinf(pq.p)) throw std::domain_error("gw_bruteforce_small: p must be finite");
    if (resolution < 1) throw std::domain_error("gw_bruteforce_small: resolution >= 1");
    const int n = static_cast<int>(X.n_points());
    const int m = static_cast<int>(Y.n_points());
    const int free_count = (n - 1) * (m - 1);
    if (free_count > 4) {
        throw std::length_error("gw_bruteforce_small: more than 4 free parameters");
    }
    const Eigen::VectorXd& mu = X.weights;
    const Eigen::VectorXd& nu = Y.weights;
    if (free_count == 0) {
        // one of the sides is a single point: the polytope is a singleton
        Eigen::MatrixXd g;
        if (n == 1) {
            g = nu.transpose();
        } else {
            g = mu;
        }
        const Coupling c{std::move(g), mu, nu};
        return distortion_pq(X, Y, c, pq);
    }

    // T[(i,j),(k,l)] = Lambda_q(dX_ik, dY_jl)^p; E(gamma) = vec^T T vec
    const int nm = n * m;
    Eigen::MatrixXd T(nm, nm);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < m; ++l)
                    T(i * m + j, k * m + l) =
                        std::pow(lambda_q(X.dist(i, k), Y.dist(j, l), pq.q), pq.p);

    std::vector<std::pair<int, int>> free_cells;
    std::vector<double> caps;
    for (int i = 0; i < n - 1; ++i)
        for (int j = 0; j < m - 1; ++j) {
            free_cells.push_back({i, j});
            caps.push_back(std::min(mu(i), nu(j)));
        }

    constexpr double feas_tol = 1e-12;
    auto evaluate_block = [&](int first_lo, int first_hi) {
        double best = std::numeric_limits<double>::infinity();
        std::vector<int> idx(free_cells.size(), 0);
        std::vector<double> vec(nm);
        idx[0] = first_lo;
        while (true) {
            // build the candidate coupling
            std::fill(vec.begin(), vec.end(), 0.0);
            bool feasible = true;
            for (std::size_t c = 0; c < free_cells.size(); ++c) {
                const auto [i, j] = free_cells[c];
                vec[i * m + j] = caps[c] * idx[c] / static_cast<double>(resolution);
            }
            for (int i = 0; i < n - 1 && feasible; ++i) {
                double row = 0.0;
                for (int j = 0; j < m - 1; ++j) row += vec[i * m + j];
                const double rest = mu(i) - row;
                if (rest < -feas_tol) feasible = false;
                vec[i * m + (m - 1)] = std::max(0.0, rest);
            }
            for (int j = 0; j < m - 1 && feasible; ++j) {
                double col = 0.0;
                for (int i = 0; i < n - 1; ++i) col += vec[i * m + j];
                const double rest = nu(j) - col;
                if (rest < -feas_tol) feasible = false;
                vec[(n - 1) * m + j] = std::max(0.0, rest);
            }
            if (feasible) {
                double corner = nu(m - 1);
                for (int i = 0; i < n - 1; ++i) corner -= vec[i * m + (m - 1)];
                if (corner < -feas_tol) {
                    feasible = false;
                } else {
                    vec[(n - 1) * m + (m - 1)] = std::max(0.0, corner);
                }
            }
            if (feasible) {
                double e = 0.0;
                for (int r = 0; r < nm; ++r) {
                    if (vec[r] == 0.0) continue;
                    double s = 0.0;
                    for (int c = 0; c < nm; ++c) s += T(r, c) * vec[c];
                    e += vec[r] * s;
                }
                best = std::min(best, e);
            }
            // odometer over the grid; the first axis only spans [first_lo, first_hi)
            std::size_t d = free_cells.size();
            while (d > 0) {
                --d;
                ++idx[d];
                const int limit = (d == 0) ? first_hi : resolution + 1;
                if (idx[d] < limit) break;
                idx[d] = (d == 0) ? first_hi : 0;
            }
            if (idx[0] >= first_hi) break;
        }
        return best;
    };

    // split the first free axis across a couple of workers
    const int jobs = std::max(1u, std::min(4u, std::thread::hardware_concurrency()));
    std::vector<std::future<double>> futures;
    const int total = resolution + 1;
    const int chunk = (total + jobs - 1) / jobs;
    for (int w = 0; w < jobs; ++w) {
        const int lo = w * chunk;
        const int hi = std::min(total, lo + chunk);
        if (lo >= hi) break;
        futures.push_back(std::async(std::launch::async, evaluate_block, lo, hi));
    }
    double best = std::numeric_limits<double>::infinity();
    for (auto& fut : futures) best = std::min(best, fut.get());
    return std::pow(std::max(0.0, best), 1.0 / pq.p);
}

// ----------------------------------------------------------------------------
// Multistart
// ----------------------------------------------------------------------------

inline SolverReport multistart(const FiniteMMSpace& X, const FiniteMMSpace& Y,
                               const GWSolveParams& params, int n_starts, Seed seed) {
    if (n_starts < 1) throw std::domain_error("multistart: n_starts >= 1");
    std::vector<GWSolveParams> runs;
    GWSolveParams base = params;
    base.init = InitStrategy::Product;
    runs.push_back(base);
    const bool square = X.n_points() == Y.n_points() &&
                        (X.weights - Y.weights).lpNorm<Eigen::Infinity>() <= 1e-12;
    if (n_starts >= 2 && square) {
        GWSolveParams diag = params;
        diag.init = InitStrategy::Diagonal;
        runs.push_back(diag);
    }
    while (static_cast<int>(runs.size()) < n_starts) {
        GWSolveParams rnd = params;
        rnd.init = InitStrategy::Random;
        rnd.seed = derive_seed(seed, runs.size());
        runs.push_back(rnd);
    }
    SolverReport best;
    bool first = true;
    for (const auto& run : runs) {
        SolverReport rep = gw_cgd(X, Y, run);
        if (first || rep.value < best.value) {
            best = std::move(rep);
            first = false;
        }
    }
    return best;
}

}  // namespace gws
