#pragma once

// Benchmark harness: seeded experiment configurations, the table /
// convergence / heatmap runners, and deterministic CSV + JSON output.
//
// Determinism contract: every run unit gets its seed derived up front from
// (config seed, unit index), rows are sorted before writing, and the CSV
// carries only reproducible columns (wall times live in the JSON summary).

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "gws/bounds.hpp"
#include "gws/sampling.hpp"
#include "gws/serialization.hpp"
#include "gws/solvers.hpp"
#include "gws/sphere.hpp"

namespace gws {

enum class ExperimentKind { Tables, Convergence, Heatmap };
enum class SamplerKind { Random, FPS };
enum class WeightsKind { Uniform, Voronoi };
enum class SolverKind { CGD, Entropic };

inline const char* to_string(SamplerKind s) { return s == SamplerKind::Random ? "random" : "fps"; }
inline const char* to_string(WeightsKind w) {
    return w == WeightsKind::Uniform ? "uniform" : "voronoi";
}
inline const char* to_string(SolverKind s) { return s == SolverKind::CGD ? "cgd" : "entropic"; }

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::Convergence;
    int m = 1;
    int n = 2;
    int dim_lo = 1;                 // heatmap dimension range
    int dim_hi = 7;
    std::vector<int> sample_sizes;  // default 10..200 step 10
    int trials = 0;                 // 0 = resolve from scale defaults
    SamplerKind sampler = SamplerKind::FPS;
    WeightsKind weights = WeightsKind::Voronoi;
    SolverKind solver = SolverKind::CGD;
    Metric metric = Metric::Euclidean;
    Seed seed{202409u};
    PqParams pq{4.0, 2.0};
    double epsilon = 0.01;
    int reference_size = 0;         // 0 = resolve from scale defaults
    int heatmap_points = 100;
    int jobs = 1;
    bool paper_scale = false;
    bool hierarchy_audit = false;   // also check estimate >= tlb/2 - 1e-6 per row
    std::string output_path;        // base path: writes <base>.csv / <base>.json

    void resolve_defaults() {
        if (sample_sizes.empty()) {
            for (int N = 10; N <= 200; N += 10) sample_sizes.push_back(N);
        }
        if (trials == 0) {
            if (paper_scale) {
                trials = experiment == ExperimentKind::Heatmap ? 10 : 20;
            } else {
                trials = 5;
            }
        }
        if (reference_size == 0) reference_size = paper_scale ? 1000000 : 100000;
        if (jobs < 1) jobs = 1;
        if (trials < 1) throw std::invalid_argument("ExperimentConfig: trials must be >= 1");
        for (int N : sample_sizes) {
            if (N < 2) throw std::invalid_argument("ExperimentConfig: sample sizes must be >= 2");
        }
        if (heatmap_points < 2) {
            throw std::invalid_argument("ExperimentConfig: points must be >= 2");
        }
    }
};

struct ResultRow {
    std::string experiment;
    int m = 0, n = 0, N = 0, trial = 0;
    std::string sampler, weights, solver;
    double estimate = 0.0;  // value / 2
    std::optional<double> exact;
    std::optional<double> relative_error;
    std::uint64_t seed = 0;
    bool converged = true;
    std::string note;
    double wall_time_seconds = 0.0;  // JSON summary only

    // sort key shared by all writers so parallel execution never reorders files
    auto key() const {
        return std::tie(experiment, m, n, N, trial, sampler, weights, solver, note);
    }
};

// ----------------------------------------------------------------------------
// Instance construction
// ----------------------------------------------------------------------------

// One sampled, weighted sphere instance per the experiment knobs.
inline FiniteMMSpace sampled_sphere_space(int dim, int N, SamplerKind sampler,
                                          WeightsKind weights, Metric metric,
                                          int reference_size, Seed seed) {
    PointCloud cloud;
    if (sampler == SamplerKind::Random) {
        cloud = sample_sphere_uniform(dim, N, derive_seed(seed, 0));
    } else {
        const int base_size = std::max(N, reference_size);
        const PointCloud base = sample_sphere_uniform(dim, base_size, derive_seed(seed, 0));
        const auto idx = farthest_point_sample(base, N, metric, derive_seed(seed, 1));
        Eigen::MatrixXd landmarks(N, base.ambient_dim());
        for (int i = 0; i < N; ++i) landmarks.row(i) = base.coords.row(idx[i]);
        cloud = PointCloud{std::move(landmarks), true};
    }
    Eigen::VectorXd w;
    if (weights == WeightsKind::Uniform) {
        w = Eigen::VectorXd::Constant(N, 1.0 / static_cast<double>(N));
    } else {
        w = voronoi_weights(cloud, reference_size, derive_seed(seed, 2));
    }
    return space_from_points(cloud.coords, metric, std::move(w));
}

inline SolverReport run_solver(const FiniteMMSpace& X, const FiniteMMSpace& Y,
                               SolverKind solver, const PqParams& pq, double epsilon,
                               Seed seed) {
    GWSolveParams params;
    params.pq = pq;
    params.epsilon = epsilon;
    params.seed = seed;
    if (solver == SolverKind::Entropic) {
        params.max_iter = 100;
        params.inner_sinkhorn_iter = 1000;
        return gw_entropic(X, Y, params);
    }
    return gw_cgd(X, Y, params);
}

// ----------------------------------------------------------------------------
// Runners
// ----------------------------------------------------------------------------

// Lower-bound tables for the four benchmark sphere pairs: half DLB, half
// SLB (= TLB on spheres), and the upper/exact column.
inline std::vector<ResultRow> run_tables(ExperimentConfig cfg) {
    cfg.resolve_defaults();
    QuadratureConfig quad;
    quad.seed = cfg.seed;
    quad.mc_samples = cfg.paper_scale ? 4000000 : 1000000;

    struct Pair {
        int m, n;
        Metric metric;
    };
    const Pair pairs[] = {{0, 1, Metric::Geodesic},
                          {1, 2, Metric::Geodesic},
                          {0, 1, Metric::Euclidean},
                          {1, 2, Metric::Euclidean}};
    std::vector<ResultRow> rows;
    for (const Pair& pr : pairs) {
        const SphereSpec A{pr.m, pr.metric};
        const SphereSpec B{pr.n, pr.metric};
        const bool euclidean = pr.metric == Metric::Euclidean;
        ResultRow base;
        base.experiment = "tables";
        base.m = pr.m;
        base.n = pr.n;
        base.sampler = euclidean ? "euclidean" : "geodesic";
        base.seed = cfg.seed.value;

        ResultRow dlb_row = base;
        dlb_row.note = "dlb_half";
        dlb_row.estimate = 0.5 * dlb(A, B, cfg.pq.p, cfg.pq.q, quad);
        rows.push_back(dlb_row);

        ResultRow slb_row = base;
        slb_row.note = "slb_half";
        slb_row.estimate = 0.5 * slb(A, B, cfg.pq.p, cfg.pq.q, quad);
        rows.push_back(slb_row);

        ResultRow upper_row = base;
        if (euclidean) {
            upper_row.note = "exact_half";
            upper_row.estimate = exact_gw42_euclidean(pr.m, pr.n);
        } else {
            upper_row.note = "upper_half";
            upper_row.estimate = 0.5 * equatorial_dis42_geodesic(pr.m, pr.n, quad).value;
        }
        rows.push_back(upper_row);
    }
    std::sort(rows.begin(), rows.end(),
              [](const ResultRow& a, const ResultRow& b) { return a.key() < b.key(); });
    return rows;
}

namespace detail {

struct TrialTask {
    int m, n, N, trial;
    Seed seed;
};

inline ResultRow run_trial(const ExperimentConfig& cfg, const TrialTask& task,
                           const char* experiment_name) {
    ResultRow row;
    row.experiment = experiment_name;
    row.m = task.m;
    row.n = task.n;
    row.N = task.N;
    row.trial = task.trial;
    row.sampler = to_string(cfg.sampler);
    row.weights = to_string(cfg.weights);
    row.solver = to_string(cfg.solver);
    row.seed = task.seed.value;
    const auto start = std::chrono::steady_clock::now();
    try {
        const FiniteMMSpace X =
            sampled_sphere_space(task.m, task.N, cfg.sampler, cfg.weights, cfg.metric,
                                 cfg.reference_size, derive_seed(task.seed, 10));
        const FiniteMMSpace Y =
            sampled_sphere_space(task.n, task.N, cfg.sampler, cfg.weights, cfg.metric,
                                 cfg.reference_size, derive_seed(task.seed, 20));
        const SolverReport rep = run_solver(X, Y, cfg.solver, cfg.pq, cfg.epsilon,
                                            derive_seed(task.seed, 30));
        row.estimate = 0.5 * rep.value;
        row.converged = rep.converged;
        if (cfg.hierarchy_audit) {
            const double tlb_half = 0.5 * tlb(X, Y, cfg.pq.p, cfg.pq.q).value;
            if (row.estimate + 1e-6 < tlb_half) {
                row.converged = false;
                row.note = "hierarchy violation: estimate " + format_double(row.estimate) +
                           " below tlb/2 " + format_double(tlb_half);
            } else {
                row.note = "tlb_half=" + format_double(tlb_half);
            }
        }
    } catch (const std::exception& e) {
        row.converged = false;
        row.estimate = std::numeric_limits<double>::quiet_NaN();
        row.note = std::string("error: ") + e.what();
    }
    row.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (cfg.metric == Metric::Euclidean && cfg.pq.p == 4.0 && cfg.pq.q == 2.0) {
        row.exact = exact_gw42_euclidean(std::min(task.m, task.n), std::max(task.m, task.n));
        if (*row.exact > 0.0 && std::isfinite(row.estimate)) {
            row.relative_error = (row.estimate - *row.exact) / *row.exact;
        } else if (*row.exact == 0.0) {
            if (row.note.empty()) row.note = "diagonal: absolute estimate";
        }
    }
    return row;
}

inline std::vector<ResultRow> run_tasks(const ExperimentConfig& cfg,
                                        const std::vector<TrialTask>& tasks,
                                        const char* experiment_name) {
    std::vector<ResultRow> rows(tasks.size());
    if (cfg.jobs <= 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            rows[i] = run_trial(cfg, tasks[i], experiment_name);
        }
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= tasks.size()) break;
                rows[i] = run_trial(cfg, tasks[i], experiment_name);
            }
        };
        std::vector<std::future<void>> pool;
        for (int w = 0; w < cfg.jobs; ++w) pool.push_back(std::async(std::launch::async, worker));
        for (auto& f : pool) f.get();
    }
    std::sort(rows.begin(), rows.end(),
              [](const ResultRow& a, const ResultRow& b) { return a.key() < b.key(); });
    return rows;
}

}  // namespace detail

// Varying-sample-size experiment for one (m, n) pair.
inline std::vector<ResultRow> run_convergence(ExperimentConfig cfg) {
    cfg.resolve_defaults();
    std::vector<detail::TrialTask> tasks;
    std::uint64_t unit = 0;
    for (int N : cfg.sample_sizes) {
        for (int t = 0; t < cfg.trials; ++t) {
            tasks.push_back({cfg.m, cfg.n, N, t, derive_seed(cfg.seed, unit++)});
        }
    }
    return detail::run_tasks(cfg, tasks, "convergence");
}

// Dimension sweep at fixed N.
inline std::vector<ResultRow> run_heatmap(ExperimentConfig cfg) {
    cfg.resolve_defaults();
    std::vector<detail::TrialTask> tasks;
    std::uint64_t unit = 0;
    for (int m = cfg.dim_lo; m <= cfg.dim_hi; ++m) {
        for (int n = m; n <= cfg.dim_hi; ++n) {
            for (int t = 0; t < cfg.trials; ++t) {
                tasks.push_back({m, n, cfg.heatmap_points, t, derive_seed(cfg.seed, unit++)});
            }
        }
    }
    return detail::run_tasks(cfg, tasks, "heatmap");
}

// ----------------------------------------------------------------------------
// Output
// ----------------------------------------------------------------------------

inline std::string rows_to_csv(const std::vector<ResultRow>& rows) {
    std::ostringstream out;
    out << "# schema_version=1\n";
    out << "experiment,m,n,N,trial,sampler,weights,solver,estimate,exact,relative_error,seed,"
           "converged,note\n";
    for (const ResultRow& r : rows) {
        out << r.experiment << ',' << r.m << ',' << r.n << ',' << r.N << ',' << r.trial << ','
            << r.sampler << ',' << r.weights << ',' << r.solver << ','
            << format_double(r.estimate) << ',' << (r.exact ? format_double(*r.exact) : "") << ','
            << (r.relative_error ? format_double(*r.relative_error) : "") << ',' << r.seed << ','
            << (r.converged ? 1 : 0) << ',' << r.note << '\n';
    }
    return out.str();
}

// Mean and central-80% band per (m, n, N) group, plus wall-clock totals.
inline nlohmann::json summarize_rows(const std::vector<ResultRow>& rows) {
    struct Group {
        std::vector<double> estimates;
        std::optional<double> exact;
        double wall = 0.0;
    };
    std::map<std::tuple<int, int, int>, Group> groups;
    double total_wall = 0.0;
    for (const ResultRow& r : rows) {
        auto& g = groups[{r.m, r.n, r.N}];
        if (std::isfinite(r.estimate)) g.estimates.push_back(r.estimate);
        if (r.exact) g.exact = r.exact;
        g.wall += r.wall_time_seconds;
        total_wall += r.wall_time_seconds;
    }
    nlohmann::json out;
    out["total_wall_time_seconds"] = total_wall;
    auto& arr = out["groups"] = nlohmann::json::array();
    for (auto& [key, g] : groups) {
        nlohmann::json j;
        j["m"] = std::get<0>(key);
        j["n"] = std::get<1>(key);
        j["N"] = std::get<2>(key);
        j["count"] = g.estimates.size();
        j["wall_time_seconds"] = g.wall;
        if (!g.estimates.empty()) {
            std::sort(g.estimates.begin(), g.estimates.end());
            double mean = 0.0;
            for (double v : g.estimates) mean += v;
            mean /= static_cast<double>(g.estimates.size());
            j["mean_estimate"] = mean;
            // central 80%: 10th and 90th percentile of the trial estimates
            const auto pct = [&](double q) {
                const double pos = q * (g.estimates.size() - 1);
                const std::size_t lo = static_cast<std::size_t>(pos);
                const std::size_t hi = std::min(lo + 1, g.estimates.size() - 1);
                return g.estimates[lo] + (pos - lo) * (g.estimates[hi] - g.estimates[lo]);
            };
            j["band_lo"] = pct(0.1);
            j["band_hi"] = pct(0.9);
            if (g.exact) {
                j["exact"] = *g.exact;
                if (*g.exact > 0.0) {
                    j["relative_error"] = (mean - *g.exact) / *g.exact;
                } else {
                    j["absolute_estimate"] = mean;
                }
            }
        }
        arr.push_back(std::move(j));
    }
    return out;
}

// Heatmap grid CSV: mean relative error per cell; diagonal cells carry the
// mean absolute estimate (the relative error divides by zero there).
inline std::string heatmap_grid_csv(const std::vector<ResultRow>& rows, int dim_lo, int dim_hi) {
    std::map<std::pair<int, int>, std::pair<double, int>> acc;  // sum, count
    std::map<std::pair<int, int>, std::optional<double>> exact;
    for (const ResultRow& r : rows) {
        if (!std::isfinite(r.estimate)) continue;
        auto& a = acc[{r.m, r.n}];
        a.first += r.estimate;
        a.second += 1;
        exact[{r.m, r.n}] = r.exact;
    }
    std::ostringstream out;
    out << "# schema_version=1\n";
    out << "m\\n";
    for (int n = dim_lo; n <= dim_hi; ++n) out << ',' << n;
    out << '\n';
    for (int m = dim_lo; m <= dim_hi; ++m) {
        out << m;
        for (int n = dim_lo; n <= dim_hi; ++n) {
            const auto key = std::make_pair(std::min(m, n), std::max(m, n));
            out << ',';
            const auto it = acc.find(key);
            if (it == acc.end() || it->second.second == 0) continue;
            const double mean = it->second.first / it->second.second;
            const auto ex = exact[key];
            if (ex && *ex > 0.0) {
                out << format_double((mean - *ex) / *ex);
            } else {
                out << format_double(mean);  // diagonal: absolute estimate
            }
        }
        out << '\n';
    }
    return out.str();
}

inline void write_experiment_outputs(const ExperimentConfig& cfg,
                                     const std::vector<ResultRow>& rows) {
    if (cfg.output_path.empty()) return;
    {
        std::ofstream csv(cfg.output_path + ".csv");
        if (!csv) throw std::runtime_error("cannot open " + cfg.output_path + ".csv");
        csv << rows_to_csv(rows);
    }
    {
        std::ofstream json(cfg.output_path + ".json");
        if (!json) throw std::runtime_error("cannot open " + cfg.output_path + ".json");
        json << summarize_rows(rows).dump(2) << "\n";
    }
    if (cfg.experiment == ExperimentKind::Heatmap) {
        std::ofstream grid(cfg.output_path + "_grid.csv");
        if (!grid) throw std::runtime_error("cannot open " + cfg.output_path + "_grid.csv");
        grid << heatmap_grid_csv(rows, cfg.dim_lo, cfg.dim_hi);
    }
}

// ----------------------------------------------------------------------------
// Config file round trip
// ----------------------------------------------------------------------------

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    const auto str = [&](const char* key, const std::string& fallback) {
        return j.contains(key) ? j.at(key).get<std::string>() : fallback;
    };
    const std::string kind = str("experiment", "convergence");
    if (kind == "tables") cfg.experiment = ExperimentKind::Tables;
    else if (kind == "heatmap") cfg.experiment = ExperimentKind::Heatmap;
    else if (kind == "convergence") cfg.experiment = ExperimentKind::Convergence;
    else throw std::invalid_argument("config: unknown experiment " + kind);
    if (j.contains("m")) cfg.m = j.at("m").get<int>();
    if (j.contains("n")) cfg.n = j.at("n").get<int>();
    if (j.contains("dim_lo")) cfg.dim_lo = j.at("dim_lo").get<int>();
    if (j.contains("dim_hi")) cfg.dim_hi = j.at("dim_hi").get<int>();
    if (j.contains("sample_sizes")) {
        cfg.sample_sizes = j.at("sample_sizes").get<std::vector<int>>();
    }
    if (j.contains("trials")) cfg.trials = j.at("trials").get<int>();
    const std::string sampler = str("sampler", "fps");
    cfg.sampler = sampler == "random" ? SamplerKind::Random : SamplerKind::FPS;
    const std::string weights = str("weights", "voronoi");
    cfg.weights = weights == "uniform" ? WeightsKind::Uniform : WeightsKind::Voronoi;
    const std::string solver = str("solver", "cgd");
    cfg.solver = solver == "entropic" ? SolverKind::Entropic : SolverKind::CGD;
    const std::string metric = str("metric", "euclidean");
    cfg.metric = metric == "geodesic" ? Metric::Geodesic : Metric::Euclidean;
    if (j.contains("seed")) cfg.seed = Seed{j.at("seed").get<std::uint64_t>()};
    if (j.contains("p") || j.contains("q")) {
        cfg.pq = PqParams(j.value("p", 4.0), j.value("q", 2.0));
    }
    if (j.contains("epsilon")) cfg.epsilon = j.at("epsilon").get<double>();
    if (j.contains("reference_size")) cfg.reference_size = j.at("reference_size").get<int>();
    if (j.contains("points")) cfg.heatmap_points = j.at("points").get<int>();
    if (j.contains("jobs")) cfg.jobs = j.at("jobs").get<int>();
    if (j.contains("paper_scale")) cfg.paper_scale = j.at("paper_scale").get<bool>();
    if (j.contains("hierarchy_audit")) cfg.hierarchy_audit = j.at("hierarchy_audit").get<bool>();
    if (j.contains("out")) cfg.output_path = j.at("out").get<std::string>();
    return cfg;
}

inline std::vector<ResultRow> run_experiment(ExperimentConfig cfg) {
    cfg.resolve_defaults();
    std::vector<ResultRow> rows;
    switch (cfg.experiment) {
        case ExperimentKind::Tables: rows = run_tables(cfg); break;
        case ExperimentKind::Convergence: rows = run_convergence(cfg); break;
        case ExperimentKind::Heatmap: rows = run_heatmap(cfg); break;
    }
    write_experiment_outputs(cfg, rows);
    return rows;
}

}  // namespace gws
