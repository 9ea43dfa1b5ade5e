#pragma once

// JSON and CSV interchange: FiniteMMSpace documents, hierarchy and solver
// reports, couplings and point clouds. Floats are written with 17 significant
// digits so files round-trip bit-exactly.

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "gws/bounds.hpp"
#include "gws/mm_space.hpp"
#include "gws/sampling.hpp"
#include "gws/solvers.hpp"

namespace gws {

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace detail {

inline double json_real(const nlohmann::json& j) {
    if (j.is_string()) return std::stod(j.get<std::string>());
    return j.get<double>();
}

}  // namespace detail

// ----------------------------------------------------------------------------
// FiniteMMSpace JSON document
// ----------------------------------------------------------------------------

inline nlohmann::json mm_space_to_json(const FiniteMMSpace& X) {
    nlohmann::json j;
    const Eigen::Index n = X.n_points();
    j["n"] = n;
    auto& dist = j["dist"] = nlohmann::json::array();
    for (Eigen::Index i = 0; i < n; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index k = 0; k < n; ++k) row.push_back(X.dist(i, k));
        dist.push_back(std::move(row));
    }
    auto& w = j["weights"] = nlohmann::json::array();
    for (Eigen::Index i = 0; i < n; ++i) w.push_back(X.weights(i));
    if (X.coords) {
        auto& c = j["coords"] = nlohmann::json::array();
        for (Eigen::Index i = 0; i < n; ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (Eigen::Index d = 0; d < X.coords->cols(); ++d) row.push_back((*X.coords)(i, d));
            c.push_back(std::move(row));
        }
        j["metric"] = X.coord_metric == Metric::Geodesic ? "geodesic" : "euclidean";
    }
    return j;
}

inline FiniteMMSpace mm_space_from_json(const nlohmann::json& j) {
    const Eigen::Index n = j.at("n").get<Eigen::Index>();
    Eigen::MatrixXd dist(n, n);
    const auto& djson = j.at("dist");
    if (static_cast<Eigen::Index>(djson.size()) != n) {
        throw std::invalid_argument("mm_space_from_json: dist has wrong row count");
    }
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < n; ++k) dist(i, k) = detail::json_real(djson.at(i).at(k));
    Eigen::VectorXd weights(n);
    for (Eigen::Index i = 0; i < n; ++i) weights(i) = detail::json_real(j.at("weights").at(i));
    std::optional<Eigen::MatrixXd> coords;
    Metric metric = Metric::Euclidean;
    if (j.contains("coords")) {
        const auto& cjson = j.at("coords");
        const Eigen::Index d = cjson.at(0).size();
        Eigen::MatrixXd c(n, d);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index k = 0; k < d; ++k) c(i, k) = detail::json_real(cjson.at(i).at(k));
        coords = std::move(c);
        if (j.contains("metric") && j.at("metric").get<std::string>() == "geodesic") {
            metric = Metric::Geodesic;
        }
    }
    return make_mm_space(std::move(dist), std::move(weights), std::move(coords), metric);
}

inline void save_mm_space(const FiniteMMSpace& X, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_mm_space: cannot open " + path);
    out << mm_space_to_json(X).dump(2) << "\n";
}

inline FiniteMMSpace load_mm_space(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_mm_space: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return mm_space_from_json(j);
}

// ----------------------------------------------------------------------------
// Reports
// ----------------------------------------------------------------------------

inline nlohmann::json hierarchy_report_to_json(const HierarchyReport& r) {
    nlohmann::json j;
    j["p"] = r.pq.p;
    j["q"] = r.pq.q;
    j["dlb"] = r.dlb;
    j["slb"] = r.slb;
    j["tlb"] = r.tlb;
    if (r.upper) j["upper"] = *r.upper;
    j["ordering_ok"] = r.ordering_ok;
    if (r.limit_mode) j["limit_mode"] = true;
    return j;
}

inline nlohmann::json solver_report_to_json(const SolverReport& r, bool with_trace = false) {
    nlohmann::json j;
    j["value"] = r.value;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["seed"] = r.seed;
    if (with_trace) j["trace"] = r.objective_trace;
    return j;
}

// ----------------------------------------------------------------------------
// CSV
// ----------------------------------------------------------------------------

inline void save_coupling_csv(const Coupling& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_coupling_csv: cannot open " + path);
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
        for (Eigen::Index j = 0; j < c.cols(); ++j) {
            if (j) out << ",";
            out << format_double(c.gamma(i, j));
        }
        out << "\n";
    }
}

inline void save_point_cloud_csv(const PointCloud& cloud, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_point_cloud_csv: cannot open " + path);
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
        for (Eigen::Index d = 0; d < cloud.ambient_dim(); ++d) {
            if (d) out << ",";
            out << format_double(cloud.coords(i, d));
        }
        out << "\n";
    }
}

inline PointCloud load_point_cloud_csv(const std::string& path, bool on_sphere = true) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_point_cloud_csv: cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (!rows.empty() && rows.back().size() != row.size()) {
            throw std::runtime_error("load_point_cloud_csv: ragged rows");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("load_point_cloud_csv: empty file");
    PointCloud cloud;
    cloud.coords.resize(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t d = 0; d < rows[i].size(); ++d) cloud.coords(i, d) = rows[i][d];
    cloud.on_sphere = on_sphere;
    return cloud;
}

}  // namespace gws
