// gwspheres: compute exact GW(4,2) sphere values, lower-bound hierarchies,
// coupling distortions, and solver estimates; reproduce the benchmark tables,
// convergence sweeps, and dimension heatmaps as CSV/JSON.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "gws/gws.hpp"

namespace {

using namespace gws;

Seed resolve_seed(const CLI::Option* seed_opt, std::uint64_t seed_flag,
                  std::optional<std::uint64_t> config_seed) {
    if (seed_opt->count() > 0) return Seed{seed_flag};
    if (config_seed) return Seed{*config_seed};
    if (const char* env = std::getenv("GW_SPHERES_SEED")) {
        return Seed{std::strtoull(env, nullptr, 10)};
    }
    return Seed{202409u};
}

Metric parse_metric(const std::string& name) {
    if (name == "geodesic") return Metric::Geodesic;
    if (name == "euclidean") return Metric::Euclidean;
    throw CLI::ValidationError("--metric", "expected 'geodesic' or 'euclidean'");
}

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

Eigen::MatrixXd load_matrix_csv(const std::string& path) {
    return load_point_cloud_csv(path, false).coords;
}

void emit(const nlohmann::json& j, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot open " + out_path);
        out << j.dump(2) << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    using namespace gws;
    CLI::App app{"(p,q)-Gromov-Wasserstein distortions, bounds and solvers on spheres"};
    app.require_subcommand(1);

    // ---- exact ------------------------------------------------------------
    auto* cmd_exact = app.add_subcommand("exact", "exact GW(4,2) between Euclidean spheres");
    int ex_m = 0, ex_n = 0;
    std::string ex_metric = "euclidean";
    bool ex_geodesic = false;
    cmd_exact->add_option("m", ex_m, "lower-dimensional sphere")->required();
    cmd_exact->add_option("n", ex_n, "higher-dimensional sphere")->required();
    cmd_exact->add_option("--metric", ex_metric, "euclidean|geodesic");
    cmd_exact->add_flag("--geodesic", ex_geodesic, "shorthand for --metric geodesic");
    cmd_exact->callback([&]() {
        const int m = std::min(ex_m, ex_n), n = std::max(ex_m, ex_n);
        if (ex_geodesic || parse_metric(ex_metric) == Metric::Geodesic) {
            QuadratureConfig quad;
            const auto est = equatorial_dis42_geodesic(m, n, quad);
            std::printf("upper bound only (geodesic equatorial coupling): %.12g\n",
                        0.5 * est.value);
            if (est.std_error > 0.0) {
                std::printf("monte carlo std error: %.3g\n", 0.5 * est.std_error);
            }
        } else {
            std::printf("%.12g\n", exact_gw42_euclidean(m, n));
        }
    });

    // ---- bounds -----------------------------------------------------------
    auto* cmd_bounds = app.add_subcommand("bounds", "DLB/SLB/TLB hierarchy report");
    int b_m = 0, b_n = 1;
    double b_p = 4.0, b_q = 2.0;
    std::string b_metric = "euclidean", b_x, b_y, b_out;
    cmd_bounds->add_option("--m", b_m, "sphere dimension m");
    cmd_bounds->add_option("--n", b_n, "sphere dimension n");
    cmd_bounds->add_option("--p", b_p, "outer exponent");
    cmd_bounds->add_option("--q", b_q, "inner exponent");
    cmd_bounds->add_option("--metric", b_metric, "euclidean|geodesic");
    cmd_bounds->add_option("--x", b_x, "finite space JSON (overrides spheres)");
    cmd_bounds->add_option("--y", b_y, "finite space JSON");
    cmd_bounds->add_option("--out", b_out, "write report JSON here instead of stdout");
    cmd_bounds->callback([&]() {
        HierarchyReport report;
        if (!b_x.empty() || !b_y.empty()) {
            if (b_x.empty() || b_y.empty()) {
                throw CLI::ValidationError("--x/--y", "both finite spaces are required");
            }
            report = hierarchy_report(load_mm_space(b_x), load_mm_space(b_y), b_p, b_q);
        } else {
            const Metric metric = parse_metric(b_metric);
            const int m = std::min(b_m, b_n), n = std::max(b_m, b_n);
            std::optional<double> upper;
            if (metric == Metric::Euclidean && b_p == 4.0 && b_q == 2.0) {
                upper = equatorial_dis42_euclidean(m, n);
            } else if (metric == Metric::Geodesic && b_p == 4.0 && b_q == 2.0) {
                upper = equatorial_dis42_geodesic(m, n).value;
            }
            report = hierarchy_report(SphereSpec{m, metric}, SphereSpec{n, metric}, b_p, b_q, upper);
        }
        emit(hierarchy_report_to_json(report), b_out);
    });

    // ---- distortion ---------------------------------------------------------
    auto* cmd_dis = app.add_subcommand("distortion", "(p,q)-distortion of a coupling");
    std::string d_x, d_y, d_coupling, d_out;
    double d_p = 4.0, d_q = 2.0;
    cmd_dis->add_option("--x", d_x, "finite space JSON")->required();
    cmd_dis->add_option("--y", d_y, "finite space JSON")->required();
    cmd_dis->add_option("--coupling", d_coupling, "coupling CSV (row-major)")->required();
    cmd_dis->add_option("--p", d_p, "outer exponent");
    cmd_dis->add_option("--q", d_q, "inner exponent");
    cmd_dis->add_option("--out", d_out, "write JSON here instead of stdout");
    cmd_dis->callback([&]() {
        const FiniteMMSpace X = load_mm_space(d_x);
        const FiniteMMSpace Y = load_mm_space(d_y);
        const Coupling c{load_matrix_csv(d_coupling), X.weights, Y.weights};
        nlohmann::json j;
        j["p"] = d_p;
        j["q"] = d_q;
        j["distortion"] = distortion_pq(X, Y, c, PqParams(d_p, d_q));
        const CouplingCheck check = validate_coupling(c);
        j["coupling_ok"] = check.ok;
        j["worst_marginal_rel_dev"] = check.worst_marginal_rel_dev;
        emit(j, d_out);
    });

    // ---- solve --------------------------------------------------------------
    auto* cmd_solve = app.add_subcommand("solve", "run a GW solver on spheres or space files");
    int s_m = 1, s_n = 2, s_points = 100;
    double s_p = 4.0, s_q = 2.0, s_epsilon = 0.01;
    std::uint64_t s_seed = 0;
    std::string s_metric = "euclidean", s_sampler = "fps", s_weights = "voronoi";
    std::string s_solver = "cgd", s_x, s_y, s_out, s_coupling_out;
    int s_reference = 0;
    bool s_paper_scale = false, s_trace = false;
    cmd_solve->add_option("--m", s_m, "sphere dimension m");
    cmd_solve->add_option("--n", s_n, "sphere dimension n");
    cmd_solve->add_option("--points", s_points, "samples per sphere");
    cmd_solve->add_option("--p", s_p, "outer exponent");
    cmd_solve->add_option("--q", s_q, "inner exponent");
    cmd_solve->add_option("--epsilon", s_epsilon, "entropic regularization");
    auto* s_seed_opt = cmd_solve->add_option("--seed", s_seed, "RNG seed");
    cmd_solve->add_option("--metric", s_metric, "euclidean|geodesic");
    cmd_solve->add_option("--sampler", s_sampler, "random|fps");
    cmd_solve->add_option("--weights", s_weights, "uniform|voronoi");
    cmd_solve->add_option("--solver", s_solver, "cgd|entropic");
    cmd_solve->add_option("--x", s_x, "finite space JSON (overrides sampling)");
    cmd_solve->add_option("--y", s_y, "finite space JSON");
    cmd_solve->add_option("--reference-size", s_reference, "sampling reference size");
    cmd_solve->add_flag("--paper-scale", s_paper_scale, "paper-scale reference sizes");
    cmd_solve->add_flag("--trace", s_trace, "include the objective trace");
    cmd_solve->add_option("--out", s_out, "write report JSON here instead of stdout");
    cmd_solve->add_option("--coupling-out", s_coupling_out, "dump the coupling as CSV");
    cmd_solve->callback([&]() {
        const Seed seed = resolve_seed(s_seed_opt, s_seed, std::nullopt);
        FiniteMMSpace X, Y;
        if (!s_x.empty() || !s_y.empty()) {
            if (s_x.empty() || s_y.empty()) {
                throw CLI::ValidationError("--x/--y", "both finite spaces are required");
            }
            X = load_mm_space(s_x);
            Y = load_mm_space(s_y);
        } else {
            const Metric metric = parse_metric(s_metric);
            const SamplerKind sampler =
                s_sampler == "random" ? SamplerKind::Random : SamplerKind::FPS;
            const WeightsKind weights =
                s_weights == "uniform" ? WeightsKind::Uniform : WeightsKind::Voronoi;
            const int reference =
                s_reference > 0 ? s_reference : (s_paper_scale ? 1000000 : 100000);
            X = sampled_sphere_space(s_m, s_points, sampler, weights, metric, reference,
                                     derive_seed(seed, 10));
            Y = sampled_sphere_space(s_n, s_points, sampler, weights, metric, reference,
                                     derive_seed(seed, 20));
        }
        const SolverKind solver = s_solver == "entropic" ? SolverKind::Entropic : SolverKind::CGD;
        const SolverReport rep =
            run_solver(X, Y, solver, PqParams(s_p, s_q), s_epsilon, derive_seed(seed, 30));
        nlohmann::json j = solver_report_to_json(rep, s_trace);
        j["estimate"] = 0.5 * rep.value;
        if (parse_metric(s_metric) == Metric::Euclidean && s_p == 4.0 && s_q == 2.0 &&
            s_x.empty()) {
            j["exact"] = exact_gw42_euclidean(std::min(s_m, s_n), std::max(s_m, s_n));
        }
        emit(j, s_out);
        if (!s_coupling_out.empty()) save_coupling_csv(rep.coupling, s_coupling_out);
    });

    // ---- experiments --------------------------------------------------------
    struct ExperimentFlags {
        std::string config, out, sampler, weights, solver, metric;
        int m = -1, n = -1, points = -1, trials = -1, jobs = -1, reference = -1;
        int dim_lo = -1, dim_hi = -1;
        std::vector<int> sample_sizes;
        double p = -1.0, q = -1.0, epsilon = -1.0;
        std::uint64_t seed = 0;
        bool paper_scale = false;
        bool hierarchy_audit = false;
        CLI::Option* seed_opt = nullptr;
    };

    auto add_experiment_flags = [](CLI::App* cmd, ExperimentFlags& f) {
        cmd->add_option("--config", f.config, "JSON config file (flags override it)");
        cmd->add_option("--m", f.m, "sphere dimension m");
        cmd->add_option("--n", f.n, "sphere dimension n");
        cmd->add_option("--dim-lo", f.dim_lo, "heatmap lowest dimension");
        cmd->add_option("--dim-hi", f.dim_hi, "heatmap highest dimension");
        cmd->add_option("--points", f.points, "heatmap samples per sphere");
        cmd->add_option("--sample-sizes", f.sample_sizes, "convergence sample sizes");
        cmd->add_option("--trials", f.trials, "trials per configuration");
        cmd->add_option("--sampler", f.sampler, "random|fps");
        cmd->add_option("--weights", f.weights, "uniform|voronoi");
        cmd->add_option("--solver", f.solver, "cgd|entropic");
        cmd->add_option("--metric", f.metric, "euclidean|geodesic");
        cmd->add_option("--p", f.p, "outer exponent");
        cmd->add_option("--q", f.q, "inner exponent");
        cmd->add_option("--epsilon", f.epsilon, "entropic regularization");
        f.seed_opt = cmd->add_option("--seed", f.seed, "RNG seed");
        cmd->add_option("--jobs", f.jobs, "parallel trial workers");
        cmd->add_option("--reference-size", f.reference, "sampling reference size");
        cmd->add_flag("--paper-scale", f.paper_scale, "paper-scale trials and references");
        cmd->add_flag("--hierarchy-audit", f.hierarchy_audit,
                      "also assert estimate >= tlb/2 - 1e-6 per row");
        cmd->add_option("--out", f.out, "output base path (.csv/.json appended)");
    };

    auto build_config = [&](const ExperimentFlags& f, ExperimentKind kind) {
        ExperimentConfig cfg;
        std::optional<std::uint64_t> config_seed;
        if (!f.config.empty()) {
            const nlohmann::json j = load_json(f.config);
            cfg = config_from_json(j);
            if (j.contains("seed")) config_seed = cfg.seed.value;
        }
        cfg.experiment = kind;
        if (f.m >= 0) cfg.m = f.m;
        if (f.n >= 0) cfg.n = f.n;
        if (f.dim_lo >= 0) cfg.dim_lo = f.dim_lo;
        if (f.dim_hi >= 0) cfg.dim_hi = f.dim_hi;
        if (f.points >= 0) cfg.heatmap_points = f.points;
        if (!f.sample_sizes.empty()) cfg.sample_sizes = f.sample_sizes;
        if (f.trials >= 0) cfg.trials = f.trials;
        if (!f.sampler.empty())
            cfg.sampler = f.sampler == "random" ? SamplerKind::Random : SamplerKind::FPS;
        if (!f.weights.empty())
            cfg.weights = f.weights == "uniform" ? WeightsKind::Uniform : WeightsKind::Voronoi;
        if (!f.solver.empty())
            cfg.solver = f.solver == "entropic" ? SolverKind::Entropic : SolverKind::CGD;
        if (!f.metric.empty()) cfg.metric = parse_metric(f.metric);
        if (f.p > 0 || f.q > 0) cfg.pq = PqParams(f.p > 0 ? f.p : 4.0, f.q > 0 ? f.q : 2.0);
        if (f.epsilon > 0) cfg.epsilon = f.epsilon;
        cfg.seed = resolve_seed(f.seed_opt, f.seed, config_seed);
        if (f.jobs >= 1) cfg.jobs = f.jobs;
        if (f.reference >= 1) cfg.reference_size = f.reference;
        if (f.paper_scale) cfg.paper_scale = true;
        if (f.hierarchy_audit) cfg.hierarchy_audit = true;
        if (!f.out.empty()) cfg.output_path = f.out;
        return cfg;
    };

    ExperimentFlags tables_flags, conv_flags, heat_flags;
    auto* cmd_tables = app.add_subcommand("tables", "lower-bound tables for the sphere pairs");
    add_experiment_flags(cmd_tables, tables_flags);
    cmd_tables->callback([&]() {
        const auto rows = run_experiment(build_config(tables_flags, ExperimentKind::Tables));
        if (tables_flags.out.empty()) std::cout << rows_to_csv(rows);
    });

    auto* cmd_conv = app.add_subcommand("convergence", "estimate quality vs sample count");
    add_experiment_flags(cmd_conv, conv_flags);
    cmd_conv->callback([&]() {
        const auto rows = run_experiment(build_config(conv_flags, ExperimentKind::Convergence));
        if (conv_flags.out.empty()) std::cout << rows_to_csv(rows);
    });

    auto* cmd_heat = app.add_subcommand("heatmap", "relative error across dimension pairs");
    add_experiment_flags(cmd_heat, heat_flags);
    cmd_heat->callback([&]() {
        const auto rows = run_experiment(build_config(heat_flags, ExperimentKind::Heatmap));
        if (heat_flags.out.empty()) std::cout << rows_to_csv(rows);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
