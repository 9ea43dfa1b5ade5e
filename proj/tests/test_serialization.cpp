#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "gws/rng.hpp"
#include "gws/serialization.hpp"

using namespace gws;

namespace {

FiniteMMSpace random_space(int n, Rng& rng) {
    Eigen::MatrixXd pts(n, 3);
    for (int i = 0; i < n; ++i)
        for (int d = 0; d < 3; ++d) pts(i, d) = rng.normal();
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) w(i) = 0.2 + rng.uniform();
    w /= w.sum();
    return space_from_points(pts, Metric::Euclidean, w);
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("mm-space JSON round trip preserves everything") {
    Rng rng(Seed{101});
    const FiniteMMSpace X = random_space(5, rng);
    const FiniteMMSpace back = mm_space_from_json(mm_space_to_json(X));
    REQUIRE((back.dist - X.dist).lpNorm<Eigen::Infinity>() == 0.0);
    REQUIRE((back.weights - X.weights).lpNorm<Eigen::Infinity>() == 0.0);
    REQUIRE(back.coords);
    REQUIRE((*back.coords - *X.coords).lpNorm<Eigen::Infinity>() == 0.0);

    const auto path = temp_file("gws_space.json");
    save_mm_space(X, path.string());
    const FiniteMMSpace loaded = load_mm_space(path.string());
    REQUIRE((loaded.dist - X.dist).lpNorm<Eigen::Infinity>() == 0.0);
    std::filesystem::remove(path);
}

TEST_CASE("mm-space JSON accepts reals as decimal strings") {
    nlohmann::json j;
    j["n"] = 2;
    j["dist"] = nlohmann::json::array(
        {nlohmann::json::array({"0", "1.5"}), nlohmann::json::array({"1.5", "0"})});
    j["weights"] = nlohmann::json::array({"0.5", 0.5});
    const FiniteMMSpace X = mm_space_from_json(j);
    REQUIRE(X.dist(0, 1) == 1.5);
    REQUIRE(X.weights(0) == 0.5);
}

TEST_CASE("hierarchy and solver report JSON shapes") {
    HierarchyReport r;
    r.pq = PqParams(4.0, 2.0);
    r.dlb = 0.1;
    r.slb = 0.2;
    r.tlb = 0.3;
    r.upper = 0.9;
    r.ordering_ok = true;
    const nlohmann::json j = hierarchy_report_to_json(r);
    REQUIRE(j.at("p") == 4.0);
    REQUIRE(j.at("dlb") == 0.1);
    REQUIRE(j.at("upper") == 0.9);
    REQUIRE(j.at("ordering_ok") == true);

    SolverReport rep;
    rep.value = 0.5;
    rep.iterations = 12;
    rep.converged = true;
    rep.seed = 42;
    rep.objective_trace = {1.0, 0.7, 0.5};
    const nlohmann::json js = solver_report_to_json(rep, true);
    REQUIRE(js.at("value") == 0.5);
    REQUIRE(js.at("trace").size() == 3);
    REQUIRE_FALSE(solver_report_to_json(rep).contains("trace"));
}

TEST_CASE("coupling and point cloud CSV round trips") {
    Rng rng(Seed{102});
    Eigen::VectorXd mu(2), nu(3);
    mu << 0.5, 0.5;
    nu << 0.25, 0.5, 0.25;
    const Coupling c = product_coupling(mu, nu);
    const auto cpath = temp_file("gws_coupling.csv");
    save_coupling_csv(c, cpath.string());
    const PointCloud as_matrix = load_point_cloud_csv(cpath.string(), false);
    REQUIRE((as_matrix.coords - c.gamma).lpNorm<Eigen::Infinity>() == 0.0);
    std::filesystem::remove(cpath);

    PointCloud cloud;
    cloud.coords.resize(4, 3);
    for (int i = 0; i < 4; ++i)
        for (int d = 0; d < 3; ++d) cloud.coords(i, d) = rng.normal();
    cloud.on_sphere = false;
    const auto ppath = temp_file("gws_cloud.csv");
    save_point_cloud_csv(cloud, ppath.string());
    const PointCloud loaded = load_point_cloud_csv(ppath.string(), false);
    REQUIRE((loaded.coords - cloud.coords).lpNorm<Eigen::Infinity>() == 0.0);
    std::filesystem::remove(ppath);
}

TEST_CASE("format_double survives a parse round trip at full precision") {
    Rng rng(Seed{103});
    for (int trial = 0; trial < 200; ++trial) {
        const double v = (rng.uniform() - 0.5) * std::pow(10.0, rng.uniform() * 20 - 10);
        REQUIRE(std::stod(format_double(v)) == v);
    }
}
