#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qconn/geodesics.hpp"

namespace qconn {

struct RunConfig {
    std::string model_source = "pauli2";   // preset name or path to a model JSON file
    ParameterPoint theta;                    // empty: a generic default point
    std::string connection = "alpha";        // m, dual, alpha or synthetic
    double alpha = 0.0;
    double hbar = 1.0;
    double fd_step = kDefaultTolerances.fd_step;
    int samples = 64;
    std::uint64_t seed = 42;
    int workers = 1;
    int pairs = 20;                          // random operator pairs per point
    int points = 5;                          // random parameter points per check
    double horizon = 1.0;
    double geodesic_step = 1.0 / 64.0;
};

nlohmann::json config_to_json(const RunConfig& cfg);

ExpFamilyModel load_model(const std::string& source);

// Resolves the default point and validates sizes.
ParameterPoint resolve_theta(const RunConfig& cfg, const ExpFamilyModel& model);

struct CheckRecord {
    std::string name;
    std::string anchor;     // the property being checked, in words
    ParameterPoint theta;
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    nlohmann::json detail;
};

struct InfoRecord {
    std::string name;
    double value = 0.0;
    std::string note;
};

struct VerificationReport {
    std::string suite = "verify";
    std::vector<CheckRecord> checks;
    std::vector<InfoRecord> info;
    nlohmann::json config;
    std::string timestamp;

    int passed() const;
    int failed() const { return static_cast<int>(checks.size()) - passed(); }
    bool all_pass() const { return failed() == 0; }
    nlohmann::json to_json(bool with_timestamp = true) const;
};

VerificationReport cmd_verify(const RunConfig& cfg);

// Formula and loop estimates of H_pq with their discrepancy.
nlohmann::json cmd_holonomy(const RunConfig& cfg, Index p, Index q);

struct GeodesicRun {
    GeodesicTrace trace;
    GeodesicDiagnostics diagnostics;
    nlohmann::json report;
};

GeodesicRun cmd_geodesic(const RunConfig& cfg, const RealVector& velocity);
std::string geodesic_csv(const GeodesicRun& run);

struct GridSpec {
    std::vector<std::vector<double>> axes;   // one list of values per parameter
};

// "lo:hi:count" for every axis, comma separated; a single entry is used for all axes.
GridSpec parse_grid(const std::string& text, Index dim);

struct ScanRow {
    ParameterPoint theta;
    RealMatrix g;
    std::vector<double> holonomy_norms;   // |H_pq| for p < q
    double log_partition = 0.0;
    bool flagged = false;
    std::string note;
};

std::vector<ScanRow> cmd_scan(const RunConfig& cfg, const GridSpec& grid);
std::string scan_csv(Index dim, const std::vector<ScanRow>& rows);

}  // namespace qconn
