#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "qconn/errors.hpp"
#include "qconn/harness.hpp"

using namespace qconn;

namespace {

RealVector parse_vector(const std::string& text, const char* what) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            size_t used = 0;
            vals.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError(std::string(what) + ": cannot parse '" + item + "'");
        }
    }
    return Eigen::Map<RealVector>(vals.data(), static_cast<Index>(vals.size()));
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dual connections on exponential families of density matrices"};
    app.require_subcommand(1);
    app.fallthrough();

    RunConfig cfg;
    std::string theta_text, out_path;
    app.add_option("--model", cfg.model_source, "preset name or model JSON file");
    app.add_option("--theta", theta_text, "comma-separated parameter point");
    app.add_option("--connection", cfg.connection, "m, dual, alpha or synthetic")
        ->check(CLI::IsMember({"m", "dual", "alpha", "synthetic"}));
    app.add_option("--alpha", cfg.alpha, "alpha for the alpha-family connection");
    app.add_option("--hbar", cfg.hbar);
    app.add_option("--fd-step", cfg.fd_step, "finite-difference step");
    app.add_option("--samples", cfg.samples, "path samples");
    app.add_option("--seed", cfg.seed);
    app.add_option("--workers", cfg.workers)->check(CLI::PositiveNumber);
    app.add_option("--out", out_path, "output file (stdout if omitted)");

    auto* verify = app.add_subcommand("verify", "run the property checks and write a JSON report");
    verify->add_option("--pairs", cfg.pairs, "random operator pairs per point");
    verify->add_option("--points", cfg.points, "random parameter points per check");
    bool no_timestamp = false;
    verify->add_flag("--no-timestamp", no_timestamp);

    auto* holonomy = app.add_subcommand("holonomy", "estimate H_pq by formula and by loop transport");
    Index p = 0, q = 1;
    holonomy->add_option("--p", p);
    holonomy->add_option("--q", q);

    auto* geodesic = app.add_subcommand("geodesic", "integrate the connection geodesic and write a CSV trace");
    std::string velocity_text, report_path;
    geodesic->add_option("--velocity", velocity_text, "initial velocity")->required();
    geodesic->add_option("--horizon", cfg.horizon);
    geodesic->add_option("--step", cfg.geodesic_step);
    geodesic->add_option("--report", report_path, "JSON summary file (stderr if omitted)");

    auto* scan = app.add_subcommand("scan", "tabulate g, |H| and alpha over a grid");
    std::string grid_text;
    scan->add_option("--grid", grid_text, "lo:hi:count per axis, comma separated")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (!theta_text.empty()) cfg.theta = parse_vector(theta_text, "--theta");
        if (*verify) {
            VerificationReport rep = cmd_verify(cfg);
            emit(out_path, rep.to_json(!no_timestamp).dump(2) + "\n");
            std::cerr << rep.passed() << "/" << rep.checks.size() << " checks passed\n";
            return rep.all_pass() ? 0 : 1;
        }
        if (*holonomy) {
            nlohmann::json j = cmd_holonomy(cfg, p, q);
            emit(out_path, j.dump(2) + "\n");
            return 0;
        }
        if (*geodesic) {
            GeodesicRun run = cmd_geodesic(cfg, parse_vector(velocity_text, "--velocity"));
            emit(out_path, geodesic_csv(run));
            if (report_path.empty())
                std::cerr << run.report.dump(2) << "\n";
            else
                emit(report_path, run.report.dump(2) + "\n");
            return run.trace.truncated ? 1 : 0;
        }
        if (*scan) {
            ExpFamilyModel model = load_model(cfg.model_source);
            GridSpec grid = parse_grid(grid_text, model.dim_param());
            std::vector<ScanRow> rows = cmd_scan(cfg, grid);
            emit(out_path, scan_csv(model.dim_param(), rows));
            bool partial = std::any_of(rows.begin(), rows.end(), [](const ScanRow& r) { return r.flagged; });
            return partial ? 1 : 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
