// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "qconn/calculus.hpp"
#include "qconn/connections.hpp"
#include "qconn/geodesics.hpp"
#include "qconn/harness.hpp"
#include "qconn/metric_geometry.hpp"

using namespace qconn;

namespace {

struct Outcome {
    double residual;
    double tolerance;
    std::string extra;
};

struct Criterion {
    int id;
    std::string title;
    double time_limit;   // seconds, 0 for none
    std::function<Outcome()> run;
};

ComplexMatrix gaussian(std::mt19937_64& rng, Index n, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    ComplexMatrix m(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) m(i, j) = Complex(g(rng), g(rng)) / std::sqrt(2.0);
    return m;
}

RealVector point(double a, double b) { return (RealVector(2) << a, b).finished(); }

RealVector jitter(std::mt19937_64& rng, const RealVector& base, double r) {
    std::uniform_real_distribution<double> u(-r, r);
    RealVector out = base;
    for (Index k = 0; k < out.size(); ++k) out(k) += u(rng);
    return out;
}

// Everything built on the pauli2 family around one anchor.
struct Pauli2 {
    ExpFamilyModel model = preset_model("pauli2");
    RealVector theta = point(0.3, 0.5);
    FramePtr frame = std::make_shared<GaugeFrame>(model, theta);
    ConnectionPtr m = make_m_connection(frame);
    ConnectionPtr dual = make_dual_connection(frame);
    std::shared_ptr<SyntheticConnection> synthetic = SyntheticConnection::random(4, 2, 2024);
    double fd = kDefaultTolerances.fd_step;

    double pairing_scale(const RealVector& s, const ComplexMatrix& x, const ComplexMatrix& y) const {
        ComplexMatrix t = frame->metric(s).power(1.0);
        ComplexVector om = frame->omega(s);
        return std::max(1.0, (t * x * om).norm() * (t * y * om).norm());
    }

    // max over 5 segments x 20 pairs of |(Pi_a X, Pi_b Y)_t - (X, Y)_s| / scale
    double duality(const Connection& a, const Connection& b, std::mt19937_64& rng) const {
        double worst = 0.0;
        for (int k = 0; k < 5; ++k) {
            RealVector s = jitter(rng, theta, 0.25), t = jitter(rng, theta, 0.25);
            CurvePath path = CurvePath::segment(s, t);
            TransportOperator pa = a.transport(path, 0.0, 1.0), pb = b.transport(path, 0.0, 1.0);
            GnsContext cs = frame->context(s);
            MetricOperator ts = frame->metric(s);
            for (int j = 0; j < 20; ++j) {
                ComplexMatrix x = lift(gaussian(rng, 2)), y = lift(gaussian(rng, 2));
                Complex lhs = transported_pairing(*frame, pa, pb, x, y);
                worst = std::max(worst, std::abs(lhs - inner_product(cs, ts, x, y)) / pairing_scale(s, x, y));
            }
        }
        return worst;
    }
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::vector<Criterion> criteria(const Pauli2& env) {
    std::vector<Criterion> out;

    out.push_back({1, "duality identity (Pi X, Pi* Y)_t = (X, Y)_s", 10.0, [&] {
        std::mt19937_64 rng(101);
        return Outcome{env.duality(*env.m, *env.dual, rng), 1e-7, ""};
    }});

    out.push_back({2, "alpha-family duality and Pi_{-1} = Pi_1*", 30.0, [&] {
        std::mt19937_64 rng(102);
        double worst = 0.0;
        for (double a : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
            AlphaConnection pa(env.dual, env.frame, a), pb(env.dual, env.frame, -a);
            worst = std::max(worst, env.duality(pa, pb, rng));
        }
        auto one = std::make_shared<AlphaConnection>(env.dual, env.frame, 1.0);
        AlphaConnection minus_one(env.dual, env.frame, -1.0);
        DualConnection one_star(one, env.frame, false);
        double gap = 0.0;
        for (int k = 0; k < 5; ++k) {
            CurvePath path = CurvePath::segment(jitter(rng, env.theta, 0.25), jitter(rng, env.theta, 0.25));
            gap = std::max(gap, max_abs(minus_one.transport_matrix(path, 0.0, 1.0) -
                                        one_star.transport_matrix(path, 0.0, 1.0)));
        }
        // both parts share one line: residual relative to its own tolerance
        return Outcome{std::max(worst / 1e-7, gap / 1e-8), 1.0,
                       "pairing " + fmt("%.2e", worst) + " (tol 1e-7), |Pi_-1 - Pi_1*| " + fmt("%.2e", gap) + " (tol 1e-8)"};
    }});

    out.push_back({3, "adjoint formula T_s^-2 Pi^dagger T_t^2", 0.0, [&] {
        std::mt19937_64 rng(103);
        double worst = 0.0;
        for (const ConnectionPtr& c : {env.m, env.dual, make_alpha_connection(env.frame, 0.0)}) {
            for (int k = 0; k < 5; ++k) {
                RealVector s = jitter(rng, env.theta, 0.25), t = jitter(rng, env.theta, 0.25);
                ComplexMatrix pi = c->transport_matrix(CurvePath::segment(s, t), 0.0, 1.0);
                MetricOperator ts = env.frame->metric(s), tt = env.frame->metric(t);
                ComplexMatrix z = ts.power(-2.0) * pi.adjoint() * tt.power(2.0);
                ComplexVector os = env.frame->omega(s), ot = env.frame->omega(t);
                for (int j = 0; j < 20; ++j) {
                    ComplexMatrix x = lift(gaussian(rng, 2)), y = lift(gaussian(rng, 2));
                    Complex lhs = vector_pairing(tt, pi * x * os, y * ot);
                    Complex rhs = pulled_back_pairing(*env.frame, s, t, z, x, y);
                    ComplexMatrix tm = tt.power(1.0);
                    double sc = std::max(1.0, (tm * pi * x * os).norm() * (tm * y * ot).norm());
                    worst = std::max(worst, std::abs(lhs - rhs) / sc);
                }
            }
        }
        return Outcome{worst, 1e-7, ""};
    }});

    out.push_back({4, "product-form holonomy vanishes, synthetic holonomy visible", 0.0, [&] {
        std::mt19937_64 rng(104);
        VectorPotential am = vector_potential(*env.m, env.theta, env.fd);
        double hm = max_abs(holonomy_formula(*env.m, am, force_tensor(*env.m, env.theta, env.fd)).components[0][1]);
        std::vector<ComplexMatrix> parts;
        for (int k = 0; k < 3; ++k) parts.push_back(0.4 * gaussian(rng, 4));
        ProductFormConnection pf(
            [parts](const RealVector& x) {
                return ComplexMatrix(3.0 * ComplexMatrix::Identity(4, 4) + parts[0] + std::sin(x(0)) * parts[1] +
                                     std::sin(x(1)) * parts[2]);
            },
            4);
        VectorPotential ap = vector_potential(pf, env.theta, env.fd);
        double hp = max_abs(holonomy_formula(pf, ap, force_tensor(pf, env.theta, env.fd)).components[0][1]);
        VectorPotential as = vector_potential(*env.synthetic, env.theta, env.fd);
        double hs = max_abs(holonomy_formula(*env.synthetic, as, force_tensor(*env.synthetic, env.theta, env.fd)).components[0][1]);
        double r = std::max({hm / (10 * am.tolerance_unit()), hp / (10 * ap.tolerance_unit()),
                             100 * as.tolerance_unit() / hs});
        return Outcome{r, 1.0,
                       "|H| m " + fmt("%.2e", hm) + ", product " + fmt("%.2e", hp) + " (< 10 fd_tol), synthetic " +
                           fmt("%.2e", hs) + " (> 100 fd_tol = " + fmt("%.1e", 100 * as.tolerance_unit()) + ")"};
    }});

    out.push_back({5, "loop and formula holonomy estimators agree", 0.0, [&] {
        VectorPotential a = vector_potential(*env.synthetic, env.theta, env.fd);
        HolonomyTensor h = holonomy_formula(*env.synthetic, a, force_tensor(*env.synthetic, env.theta, env.fd));
        LoopEstimate loop = holonomy_loop(*env.synthetic, env.theta, 0, 1);
        return Outcome{max_abs(loop.value - h.components[0][1]), 50 * a.tolerance_unit(),
                       "|H_01| " + fmt("%.3f", max_abs(h.components[0][1]))};
    }});

    out.push_back({6, "curvature commutator i hbar [nabla_p, nabla_q] X = [H_pq, X]", 0.0, [&] {
        std::mt19937_64 rng(106);
        VectorPotential a = vector_potential(*env.synthetic, env.theta, env.fd);
        HolonomyTensor h = holonomy_formula(*env.synthetic, a, force_tensor(*env.synthetic, env.theta, env.fd));
        double worst = 0.0;
        for (int k = 0; k < 5; ++k) {
            ComplexMatrix x0 = gaussian(rng, 4), x1 = gaussian(rng, 4), x2 = gaussian(rng, 4);
            OperatorField field = [=](const RealVector& p) {
                return ComplexMatrix(x0 + std::sin(p(0)) * x1 + std::cos(2.0 * p(1)) * x2);
            };
            ComplexMatrix c = curvature_commutator(*env.synthetic, field, env.theta, 0, 1, env.fd);
            worst = std::max(worst, max_abs(kI * c - commutator(h.components[0][1], field(env.theta))));
        }
        return Outcome{worst, 100 * a.tolerance_unit(), ""};
    }});

    out.push_back({7, "dual conjugation of holonomy", 0.0, [&] {
        DualConnection syn_dual(env.synthetic, env.frame, false);
        ResidualReport r = dual_holonomy_conjugation(*env.synthetic, syn_dual, *env.frame, env.theta, env.fd);
        ResidualReport d = dual_holonomy_conjugation(*env.dual, *env.m, *env.frame, env.theta, env.fd);
        double hm = tensor_max(holonomy_formula(*env.m, env.theta, env.fd).components);
        double hd = tensor_max(holonomy_formula(*env.dual, env.theta, env.fd).components);
        double r2 = std::max({d.residual, hm, hd});
        return Outcome{std::max(r.residual / r.tolerance, r2 / d.tolerance), 1.0,
                       "synthetic " + fmt("%.2e", r.residual) + " (tol " + fmt("%.1e", r.tolerance) +
                           "), m/dual both vanish " + fmt("%.2e", r2) + " (tol " + fmt("%.1e", d.tolerance) + ")"};
    }});

    out.push_back({8, "dual potential relation", 0.0, [&] {
        std::mt19937_64 rng(108);
        double worst = 0.0;
        for (int k = 0; k < 5; ++k) {
            RealVector th = jitter(rng, env.theta, 0.25);
            ResidualReport r = dual_potential_relation(*env.m, *env.dual, *env.frame, th, env.fd);
            worst = std::max(worst, r.residual / r.tolerance);
        }
        DualConnection syn_dual(env.synthetic, env.frame, false);
        ResidualReport s = dual_potential_relation(*env.synthetic, syn_dual, *env.frame, env.theta, env.fd);
        return Outcome{std::max(worst, s.residual / s.tolerance), 1.0, "worst residual / (50 fd_tol)"};
    }});

    out.push_back({9, "Kubo transform identities and quadrature", 0.0, [&] {
        std::mt19937_64 rng(109);
        double worst = 0.0, quad_err = 0.0;
        for (const char* name : {"pauli2", "gellmann3"}) {
            ExpFamilyModel m = preset_model(name);
            RealVector th = RealVector::LinSpaced(m.dim_param(), 0.1, 0.5);
            DensityMatrix rho = density(m, th);
            const Index n = m.dim_hilbert();
            ComplexMatrix x = gaussian(rng, n), y = gaussian(rng, n);
            ComplexMatrix kx = kubo_transform(rho.hermitian(), x), ky = kubo_transform(rho.hermitian(), y);
            double sx = std::max(1.0, max_abs(x)), sxy = std::max(1.0, max_abs(x) * max_abs(y));
            worst = std::max({worst,
                              max_abs(kubo_transform(rho.hermitian(), ComplexMatrix::Identity(n, n)) - rho.matrix()),
                              max_abs(kubo_transform(rho.hermitian(), x.adjoint()) - kx.adjoint()) / sx,
                              std::abs((kx * y).trace() - (x * ky).trace()) / sxy,
                              std::abs(kx.trace() - (rho.matrix() * x).trace()) / sx});
            EigenSystem es = eig_hermitian(rho.hermitian());
            const int nodes = 2000;
            ComplexMatrix q = ComplexMatrix::Zero(n, n);
            for (int k = 0; k < nodes; ++k) {
                double u = static_cast<double>(k) / (nodes - 1), w = (k == 0 || k == nodes - 1) ? 0.5 : 1.0;
                q += w * matrix_function(es, [u](double v) { return std::pow(v, u); }).matrix() * x *
                     matrix_function(es, [u](double v) { return std::pow(v, 1.0 - u); }).matrix();
            }
            quad_err = std::max(quad_err, max_abs(q / double(nodes - 1) - kx) / sx);
        }
        return Outcome{std::max(worst / 1e-10, quad_err / 1e-7), 1.0,
                       "identities " + fmt("%.2e", worst) + " (tol 1e-10), quadrature " + fmt("%.2e", quad_err) + " (tol 1e-7)"};
    }});

    out.push_back({10, "GNS identity Tr rho B = (B (x) I Omega, Omega)", 0.0, [&] {
        std::mt19937_64 rng(110);
        double worst = 0.0;
        for (int k = 0; k < 5; ++k) {
            RealVector th = jitter(rng, env.theta, 0.25);
            GnsContext ctx = env.frame->context(th);
            ComplexMatrix rho = density(env.model, th).matrix();
            for (int j = 0; j < 20; ++j) {
                ComplexMatrix b = gaussian(rng, 2);
                worst = std::max(worst, std::abs((rho * b).trace() - ctx.omega.dot(lift(b) * ctx.omega)));
            }
        }
        return Outcome{worst, 1e-10, ""};
    }});

    out.push_back({11, "commuting generators: dual transport is the identity", 0.0, [&] {
        std::mt19937_64 rng(111);
        ExpFamilyModel diag = preset_model("diag2");
        RealVector base = point(0.2, -0.3);
        auto frame = std::make_shared<GaugeFrame>(diag, base);
        ConnectionPtr dual = make_dual_connection(frame);
        std::vector<CurvePath> paths;
        for (int k = 0; k < 3; ++k) {
            RealVector a = jitter(rng, base, 1.0), b = jitter(rng, base, 1.0), c = jitter(rng, base, 1.0);
            paths.push_back(CurvePath::segment(a, b));
            paths.push_back(CurvePath::composite({CurvePath::segment(a, b), CurvePath::segment(b, c)}));
        }
        paths.push_back(CurvePath::rectangle(base, 0, 1, 0.7, -0.4));
        paths.push_back(CurvePath::custom(
            [base](double t) { return RealVector(base + point(std::cos(6.0 * t), std::sin(6.0 * t))); },
            [](double t) { return point(-6.0 * std::sin(6.0 * t), 6.0 * std::cos(6.0 * t)); }));
        double worst = 0.0;
        for (const auto& p : paths)
            for (double t : {0.3, 1.0})
                worst = std::max(worst, max_abs(dual->transport_matrix(p, 0.0, t) - ComplexMatrix::Identity(9, 9)));
        return Outcome{worst, 1e-8, ""};
    }});

    out.push_back({12, "self-dual geodesic conserves g(thetadot, thetadot)", 300.0, [&] {
        RealVector th0 = point(0.2, 0.1);
        auto frame = std::make_shared<GaugeFrame>(env.model, th0);
        ConnectionPtr a0 = make_alpha_connection(frame, 0.0), m = make_m_connection(frame);
        GeodesicState init{th0, point(1.0, 0.0), 0.0};
        GeodesicTrace tr = integrate_geodesic(connection_geodesic_system(frame, a0), init, 1.0, 1.0 / 256);
        GeodesicTrace ctl = integrate_geodesic(connection_geodesic_system(frame, m), init, 1.0, 1.0 / 256);
        double expectation = 0.0;
        for (size_t k = 0; k < tr.states.size(); k += 16) {
            VectorPotential a = vector_potential(*a0, tr.states[k].theta);
            ComplexVector om = frame->omega(tr.states[k].theta);
            for (const auto& ap : a.components) expectation = std::max(expectation, std::abs(om.dot(ap * om)));
        }
        double drift = tr.truncated ? INFINITY : tr.relative_drift();
        double control = ctl.relative_drift();
        return Outcome{std::max(drift / 1e-4, control > 1e-2 ? 0.0 : INFINITY), 1.0,
                       "drift " + fmt("%.2e", drift) + " (tol 1e-4), m control " + fmt("%.3f", control) +
                           " (> 1e-2), max |(A_p Omega, Omega)| " + fmt("%.1e", expectation)};
    }});

    out.push_back({13, "metric tensor invariant under a U(1) gauge shift", 0.0, [&] {
        std::mt19937_64 rng(113);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        double worst = 0.0;
        for (const char* name : {"pauli2", "pauli_xy"}) {
            ExpFamilyModel model = preset_model(name);
            auto frame = std::make_shared<GaugeFrame>(model, env.theta);
            for (const ConnectionPtr& c : {make_alpha_connection(frame, 0.0), make_m_connection(frame)}) {
                double a1 = u(rng), a2 = u(rng), w1 = u(rng), w2 = u(rng);
                GaugeShiftedConnection shifted(c, [=](const RealVector& x) {
                    return a1 * std::sin(w1 * x(0) + x(1)) + a2 * std::cos(w2 * x(1));
                });
                RealMatrix g1 = metric_tensor(*frame, env.theta, vector_potential(*c, env.theta)).g;
                RealMatrix g2 = metric_tensor(*frame, env.theta, vector_potential(shifted, env.theta)).g;
                worst = std::max(worst, (g1 - g2).cwiseAbs().maxCoeff());
            }
        }
        return Outcome{worst, 1e-8, ""};
    }});

    out.push_back({14, "verify runs are reproducible", 0.0, [&] {
        RunConfig cfg;
        cfg.seed = 1234;
        nlohmann::json a = cmd_verify(cfg).to_json(false);
        cfg.workers = 4;
        nlohmann::json b = cmd_verify(cfg).to_json(false);
        return Outcome{a == b ? 0.0 : 1.0, 0.0, std::to_string(a["checks"].size()) + " checks compared"};
    }});

    return out;
}

}  // namespace

int main() {
    Pauli2 env;
    int failed = 0;
    for (const Criterion& c : criteria(env)) {
        auto start = std::chrono::steady_clock::now();
        Outcome o{INFINITY, 0.0, ""};
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.extra = std::string("error: ") + e.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        bool pass = o.residual <= o.tolerance && (c.time_limit <= 0.0 || secs < c.time_limit);
        failed += pass ? 0 : 1;
        std::printf("%s [%2d] %s: residual %.3e, tolerance %.1e, %.2fs%s%s\n", pass ? "PASS" : "FAIL", c.id,
                    c.title.c_str(), o.residual, o.tolerance, secs, o.extra.empty() ? "" : "; ",
                    o.extra.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of 14 criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
