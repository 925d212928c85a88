#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "qconn/errors.hpp"
#include "qconn/harness.hpp"
#include "support.hpp"

using namespace qconn;
using namespace qconn::testing;

namespace {

RunConfig small_config() {
    RunConfig cfg;
    cfg.points = 2;
    cfg.pairs = 3;
    return cfg;
}

}  // namespace

TEST_CASE("grid parsing") {
    GridSpec g = parse_grid("0:1:3", 2);
    REQUIRE(g.axes.size() == 2);
    CHECK(g.axes[1] == std::vector<double>{0.0, 0.5, 1.0});
    GridSpec h = parse_grid("-1:1:2,0.5:0.5:1", 2);
    CHECK(h.axes[0] == std::vector<double>{-1.0, 1.0});
    CHECK(h.axes[1] == std::vector<double>{0.5});
    CHECK(parse_grid("0:1:0", 1).axes[0].empty());
    CHECK_THROWS_AS(parse_grid("0:1", 1), ConfigError);
    CHECK_THROWS_AS(parse_grid("0:1:2,0:1:2,0:1:2", 2), ConfigError);
    CHECK_THROWS_AS(parse_grid("a:1:2", 1), ConfigError);
    CHECK_THROWS_AS(parse_grid("0:1:-1", 1), ConfigError);
}

TEST_CASE("models load from presets and files") {
    CHECK(load_model("diag2").dim_hilbert() == 3);
    CHECK_THROWS_AS(load_model("missing"), ConfigError);
    auto dir = std::filesystem::temp_directory_path();
    auto good = dir / "qconn_model_good.json";
    auto bad = dir / "qconn_model_bad.json";
    std::ofstream(good) << model_to_json(preset_model("pauli2")).dump();
    std::ofstream(bad) << "{\"N\": 2, \"generators\": [";
    CHECK(load_model(good.string()).dim_param() == 2);
    CHECK_THROWS_AS(load_model(bad.string()), ConfigError);
    std::filesystem::remove(good);
    std::filesystem::remove(bad);
}

TEST_CASE("default and explicit parameter points") {
    RunConfig cfg;
    ExpFamilyModel m = preset_model("pauli3");
    CHECK(resolve_theta(cfg, m).size() == 3);
    cfg.theta = vec({0.1, 0.2});
    CHECK_THROWS_AS(resolve_theta(cfg, m), ConfigError);
}

TEST_CASE("verify report is complete and independent of the worker count") {
    RunConfig cfg = small_config();
    VerificationReport one = cmd_verify(cfg);
    cfg.workers = 4;
    VerificationReport four = cmd_verify(cfg);
    CHECK(one.to_json(false) == four.to_json(false));
    CHECK(one.all_pass());
    nlohmann::json j = one.to_json();
    CHECK(j.contains("timestamp"));
    CHECK_FALSE(one.to_json(false).contains("timestamp"));
    for (const auto& c : j["checks"]) {
        for (const char* key : {"check", "anchor", "theta", "residual", "tolerance", "pass"}) CHECK(c.contains(key));
        CHECK(c["pass"].get<bool>() == (c["residual"].get<double>() <= c["tolerance"].get<double>()));
    }
    CHECK(j["summary"]["total"].get<int>() == static_cast<int>(one.checks.size()));
    cfg.seed = 7;
    cfg.workers = 1;
    CHECK(cmd_verify(cfg).to_json(false) != one.to_json(false));
}

TEST_CASE("commuting models add the reduction check") {
    RunConfig cfg = small_config();
    cfg.model_source = "diag2";
    VerificationReport rep = cmd_verify(cfg);
    auto has = [&](const std::string& name) {
        return std::any_of(rep.checks.begin(), rep.checks.end(), [&](const auto& c) { return c.name == name; });
    };
    CHECK(has("commutative_reduction"));
    CHECK(rep.all_pass());
}

TEST_CASE("holonomy command") {
    RunConfig cfg;
    cfg.connection = "synthetic";
    nlohmann::json j = cmd_holonomy(cfg, 0, 1);
    CHECK(j["agree"].get<bool>());
    CHECK(j["formula_norm"].get<double>() > 1e-2);
    cfg.connection = "m";
    CHECK(cmd_holonomy(cfg, 0, 1)["formula_norm"].get<double>() < 1e-5);
    CHECK_THROWS_AS(cmd_holonomy(cfg, 0, 0), ConfigError);
    cfg.model_source = "sigmaz";
    CHECK_THROWS_AS(cmd_holonomy(cfg, 0, 1), ConfigError);
}

TEST_CASE("geodesic command writes a trace") {
    RunConfig cfg;
    cfg.horizon = 0.125;
    GeodesicRun run = cmd_geodesic(cfg, vec({1.0, 0.0}));
    CHECK(run.trace.states.size() == 9);
    std::string csv = geodesic_csv(run);
    CHECK(csv.rfind("t,theta_1,theta_2,thetadot_1,thetadot_2,tangent_length,residual_a\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);
    CHECK(run.report["conserved"].get<bool>());
    CHECK_THROWS_AS(cmd_geodesic(cfg, vec({1.0})), ConfigError);
}

TEST_CASE("scan flags degenerate rows and handles empty grids") {
    RunConfig cfg;
    cfg.model_source = "sigmaz";
    std::vector<ScanRow> rows = cmd_scan(cfg, parse_grid("-0.5:0.5:3", 1));
    REQUIRE(rows.size() == 3);
    CHECK_FALSE(rows[0].flagged);
    CHECK(rows[1].flagged);
    CHECK_FALSE(rows[2].flagged);
    CHECK(rows[0].g(0, 0) > 0.0);
    CHECK(rows[1].log_partition == doctest::Approx(std::log(2.0)));
    std::string csv = scan_csv(1, rows);
    CHECK(csv.rfind("theta_1,g_1_1,alpha,flagged,note\n", 0) == 0);

    cfg.model_source = "pauli2";
    std::vector<ScanRow> none = cmd_scan(cfg, parse_grid("0:1:0", 2));
    CHECK(none.empty());
    CHECK(scan_csv(2, none) == "theta_1,theta_2,g_1_1,g_1_2,g_2_1,g_2_2,H_1_2_norm,alpha,flagged,note\n");
    std::vector<ScanRow> grid = cmd_scan(cfg, parse_grid("0.2:0.4:2,0.1:0.3:2", 2));
    CHECK(grid.size() == 4);
    CHECK(grid[1].theta(1) == doctest::Approx(0.3));
    for (const auto& r : grid) CHECK(r.holonomy_norms[0] < 1e-5);
}
