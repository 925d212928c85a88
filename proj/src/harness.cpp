#include "qconn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "qconn/errors.hpp"

namespace qconn {

namespace {

std::vector<double> to_std(const RealVector& v) { return {v.data(), v.data() + v.size()}; }

std::string utc_timestamp() {
    std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

// Runs jobs[i] for every i on at most `workers` threads; results land by index.
template <typename Fn>
void run_indexed(size_t count, int workers, Fn&& fn) {
    size_t threads = std::clamp<size_t>(static_cast<size_t>(std::max(workers, 1)), 1, std::max<size_t>(count, 1));
    std::atomic<size_t> next{0};
    auto body = [&]() {
        for (size_t i = next++; i < count; i = next++) fn(i);
    };
    if (threads == 1) {
        body();
        return;
    }
    std::vector<std::thread> pool;
    for (size_t t = 0; t < threads; ++t) pool.emplace_back(body);
    for (auto& th : pool) th.join();
}

ComplexMatrix random_complex(std::mt19937_64& rng, Index rows, Index cols) {
    std::normal_distribution<double> g(0.0, 1.0);
    ComplexMatrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = Complex(g(rng), g(rng)) / std::sqrt(2.0);
    return m;
}

RealVector random_offset(std::mt19937_64& rng, Index n, double radius) {
    std::uniform_real_distribution<double> u(-radius, radius);
    RealVector v(n);
    for (Index i = 0; i < n; ++i) v(i) = u(rng);
    return v;
}

struct Suite {
    RunConfig cfg;
    ExpFamilyModel model;
    ParameterPoint theta;
    FramePtr frame;
    ConnectionPtr m;
    ConnectionPtr dual;
    ConnectionPtr alpha0;
    ConnectionPtr chosen;
    std::shared_ptr<SyntheticConnection> synthetic;
    double fd = 0.0;

    Index n() const { return model.dim_param(); }
    Index dim() const { return model.dim_hilbert() * model.dim_hilbert(); }
    ParameterPoint near(std::mt19937_64& rng) const { return theta + random_offset(rng, n(), 0.25); }
    ComplexMatrix lifted(std::mt19937_64& rng) const {
        return lift(random_complex(rng, model.dim_hilbert(), model.dim_hilbert()));
    }
};

struct Sink {
    std::vector<CheckRecord> checks;
    std::vector<InfoRecord> info;

    void check(const std::string& name, const std::string& anchor, const ParameterPoint& theta,
               double residual, double tolerance, nlohmann::json detail = nullptr) {
        checks.push_back({name, anchor, theta, residual, tolerance, residual <= tolerance,
                          std::move(detail)});
    }
    void note(const std::string& name, double value, const std::string& text) {
        info.push_back({name, value, text});
    }
};

struct Job {
    std::string name;
    std::function<void(const Suite&, std::mt19937_64&, Sink&)> run;
};

ConnectionPtr choose_connection(const RunConfig& cfg, FramePtr frame, const Suite& s) {
    if (cfg.connection == "synthetic") return s.synthetic;
    return make_density_connection(std::move(frame), cfg.connection, cfg.alpha, cfg.hbar);
}

Suite build_suite(const RunConfig& cfg) {
    if (!(cfg.fd_step >= kDefaultTolerances.min_fd_step)) throw ConfigError("fd-step underflows 1e-12");
    if (cfg.points < 1 || cfg.pairs < 1) throw ConfigError("points and pairs must be positive");
    Suite s{cfg, load_model(cfg.model_source), {}, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, cfg.fd_step};
    s.theta = resolve_theta(cfg, s.model);
    s.frame = std::make_shared<GaugeFrame>(s.model, s.theta);
    s.m = make_m_connection(s.frame, cfg.hbar);
    s.dual = std::make_shared<DualConnection>(s.m, s.frame, true);
    s.alpha0 = std::make_shared<AlphaConnection>(s.dual, s.frame, 0.0);
    s.synthetic = SyntheticConnection::random(s.dim(), s.n(), cfg.seed ^ 0x5eedULL, cfg.hbar);
    s.chosen = choose_connection(cfg, s.frame, s);
    return s;
}

// Distance of m from B (x) I, with B read off by the partial trace.
double lifted_factor_residual(const ComplexMatrix& m, Index n) {
    ComplexMatrix b = ComplexMatrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            for (Index k = 0; k < n; ++k) b(i, j) += m(i * n + k, j * n + k);
    b /= static_cast<double>(n);
    return max_abs(m - lift(b));
}

double pairing_scale(const GaugeFrame& frame, const ParameterPoint& s, const ComplexMatrix& x,
                     const ComplexMatrix& y) {
    MetricOperator t = frame.metric(s);
    ComplexVector om = frame.omega(s);
    ComplexMatrix tm = t.power(1.0);
    return std::max(1.0, (tm * x * om).norm() * (tm * y * om).norm());
}

// max relative |(Pi_a X, Pi_b Y)_t - (X,Y)_s| over random segments and operator pairs.
double duality_residual(const Suite& s, std::mt19937_64& rng, const Connection& a,
                        const Connection& b) {
    double worst = 0.0;
    for (int k = 0; k < s.cfg.points; ++k) {
        ParameterPoint ps = s.near(rng), pt = s.near(rng);
        CurvePath path = CurvePath::segment(ps, pt, s.cfg.samples);
        TransportOperator ta = a.transport(path, 0.0, 1.0);
        TransportOperator tb = b.transport(path, 0.0, 1.0);
        GnsContext cs = s.frame->context(ps);
        MetricOperator ts = s.frame->metric(ps);
        for (int j = 0; j < s.cfg.pairs; ++j) {
            ComplexMatrix x = s.lifted(rng), y = s.lifted(rng);
            Complex lhs = transported_pairing(*s.frame, ta, tb, x, y);
            Complex rhs = inner_product(cs, ts, x, y);
            worst = std::max(worst, std::abs(lhs - rhs) / pairing_scale(*s.frame, ps, x, y));
        }
    }
    return worst;
}

ComplexMatrix unitary_field(const GaugeFrame& frame, const ParameterPoint& theta) {
    GnsContext ctx = frame.context(theta);
    return kron(ctx.basis, ctx.basis);
}

double tensor_pairs_max(const OperatorTensor& t) {
    double m = 0.0;
    for (size_t p = 0; p < t.size(); ++p)
        for (size_t q = p + 1; q < t.size(); ++q) m = std::max(m, max_abs(t[p][q]));
    return m;
}

std::vector<Job> build_jobs(const Suite& suite) {
    std::vector<Job> jobs;
    const bool multi = suite.n() >= 2;

    jobs.push_back({"kubo", [](const Suite& s, std::mt19937_64& rng, Sink& out) {
        DensityMatrix rho = density(s.model, s.theta);
        const Index n = s.model.dim_hilbert();
        ComplexMatrix x = random_complex(rng, n, n), y = random_complex(rng, n, n);
        const HermitianMatrix& r = rho.hermitian();
        ComplexMatrix kx = kubo_transform(r, x), ky = kubo_transform(r, y);
        double scale = std::max(1.0, max_abs(x) * max_abs(y));
        out.check("kubo_identity_of_unit", "the Kubo transform of the identity is rho", s.theta,
                  max_abs(kubo_transform(r, ComplexMatrix::Identity(n, n)) - rho.matrix()), 1e-10);
        out.check("kubo_adjoint", "[X^dagger]^K equals ([X]^K)^dagger", s.theta,
                  max_abs(kubo_transform(r, x.adjoint()) - kx.adjoint()) / std::max(1.0, max_abs(x)), 1e-10);
        out.check("kubo_trace_symmetry", "Tr [X]^K Y equals Tr X [Y]^K", s.theta,
                  std::abs((kx * y).trace() - (x * ky).trace()) / scale, 1e-10);
        out.check("kubo_trace", "Tr [X]^K equals Tr rho X", s.theta,
                  std::abs(kx.trace() - (rho.matrix() * x).trace()) / std::max(1.0, max_abs(x)), 1e-10);
        EigenSystem es = eig_hermitian(r);
        const int nodes = 2000;
        ComplexMatrix quad = ComplexMatrix::Zero(n, n);
        for (int k = 0; k < nodes; ++k) {
            double u = static_cast<double>(k) / (nodes - 1);
            double w = (k == 0 || k == nodes - 1) ? 0.5 : 1.0;
            ComplexMatrix a = matrix_function(es, [u](double v) { return std::pow(v, u); }).matrix();
            ComplexMatrix b = matrix_function(es, [u](double v) { return std::pow(v, 1.0 - u); }).matrix();
            quad += w * a * x * b;
        }
        quad /= static_cast<double>(nodes - 1);
        out.check("kubo_quadrature", "closed-form Kubo transform matches trapezoid quadrature",
                  s.theta, max_abs(quad - kx) / std::max(1.0, max_abs(x)), 1e-7);
    }});

    jobs.push_back({"gns_identity", [](const Suite& s, std::mt19937_64& rng, Sink& out) {
        double worst = 0.0;
        for (int k = 0; k < s.cfg.points; ++k) {
            ParameterPoint p = k == 0 ? s.theta : s.near(rng);
            GnsContext ctx = s.frame->context(p);
            DensityMatrix rho = density(s.model, p);
            for (int j = 0; j < s.cfg.pairs; ++j) {
                ComplexMatrix b = random_complex(rng, s.model.dim_hilbert(), s.model.dim_hilbert());
                Complex lhs = (rho.matrix() * b).trace();
                Complex rhs = ctx.omega.dot(lift(b) * ctx.omega);
                worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, max_abs(b)));
            }
        }
        out.check("gns_identity", "Tr rho B equals the wave-vector expectation of B (x) I", s.theta,
                  worst, 1e-10);
    }});

    jobs.push_back({"duality", [](const Suite& s, std::mt19937_64& rng, Sink& out) {
        out.check("duality_pairing", "dual transport preserves the pairing: (Pi X, Pi* Y)_t = (X,Y)_s",
                  s.theta, duality_residual(s, rng, *s.m, *s.dual), 1e-7);
        out.check("self_duality_alpha0", "the alpha = 0 transport is self-dual", s.theta,
                  duality_residual(s, rng, *s.alpha0, *s.alpha0), 1e-7);
    }});

    jobs.push_back({"alpha_family", [](const Suite& s, std::mt19937_64& rng, Sink& out) {
        double worst = 0.0;
        for (double a : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
            AlphaConnection pa(s.dual, s.frame, a), pb(s.dual, s.frame, -a);
            worst = std::max(worst, duality_residual(s, rng, pa, pb));
        }
        out.check("alpha_duality", "Pi_alpha and Pi_{-alpha} are mutually dual", s.theta, worst, 1e-7);

        AlphaConnection minus_one(s.dual, s.frame, -1.0), one(s.dual, s.frame, 1.0);
        auto one_ptr = std::make_shared<AlphaConnection>(s.dual, s.frame, 1.0);
        DualConnection dual_of_one(one_ptr, s.frame, false);
        double w1 = 0.0, w2 = 0.0;
        for (int k = 0; k < s.cfg.points; ++k) {
            CurvePath path = CurvePath::segment(s.near(rng), s.near(rng), s.cfg.samples);
            ComplexMatrix pm = minus_one.transport_matrix(path, 0.0, 1.0);
            double sc = std::max(1.0, max_abs(pm));
            w1 = std::max(w1, std::max(max_abs(pm - dual_of_one.transport_matrix(path, 0.0, 1.0)),
                                       max_abs(pm - s.m->transport_matrix(path, 0.0, 1.0))) / sc);
            for (double a : {-0.5, 0.0, 0.5}) {
                AlphaConnection pa(s.dual, s.frame, a), pb(s.dual, s.frame, 2.0 - a);
                ComplexMatrix fwd = pa.transport_matrix(path, 0.0, 1.0);
                ComplexMatrix back = pb.transport_matrix(path, 1.0, 0.0);
                w2 = std::max(w2, max_abs(fwd.adjoint() - back) / std::max(1.0, max_abs(fwd)));
            }
        }
        out.check("alpha_minus_one_is_dual", "Pi_{-1} equals the dual of Pi_1 and the m-connection",
                  s.theta, w1, 1e-8);
        out.check("alpha_adjoint_reversal", "[Pi_alpha^t_s]^dagger equals Pi_{2-alpha}^s_t", s.theta,
                  w2, 1e-8);
    }});

    jobs.push_back({"adjoint", [](const Suite& s, std::mt19937_64& rng, Sink& out) {
        double worst = 0.0;
        for (const ConnectionPtr& c : {s.m, s.dual, s.alpha0}) {
            for (int k = 0; k < s.cfg.points; ++k) {
                ParameterPoint ps = s.near(rng), pt = s.near(rng);
                CurvePath path = CurvePath::segment(ps, pt, s.cfg.samples);
                ComplexMatrix pi = c->transport_matrix(path, 0.0, 1.0);
                MetricOperator ts = s.frame->metric(ps), tt = s.frame->metric(pt);
                ComplexMatrix z = ts.power(-2.0) * pi.adjoint() * tt.power(2.0);
                ComplexVector os = s.frame->omega(ps), ot = s.frame->omega(pt);
                for (int j = 0; j < s.cfg.pairs; ++j) {
                    ComplexMatrix x = s.lifted(rng), y = s.lifted(rng);
                    Complex lhs = vector_pairing(tt, pi * x * os, y * ot);
                    Complex rhs = pulled_back_pairing(*s.frame, ps, pt, z, x, y);
                    double sc = std::max(1.0, (tt.power(1.0) * pi * x * os).norm() *
                                                  (tt.power(1.0) * y * ot).norm());
                    worst = std::max(worst, std::abs(lhs - rhs) / sc);
                }
            }
        }
        out.check("adjoint_formula", "the adjoint of Pi is T_s^-2 Pi^dagger T_t^2 under the pairing",
                  s.theta, worst, 1e-7);
    }});

    jobs.push_back({"transport_structure", [](const Suite& s, std::mt19937_64& rng, Sink& out) {
        const Index n = s.model.dim_hilbert();
        double closure = 0.0, prop = 0.0, comp = 0.0, indep = 0.0, axioms = 0.0;
        for (int k = 0; k < s.cfg.points; ++k) {
            ParameterPoint a = s.near(rng), b = s.near(rng), c = s.near(rng);
            CurvePath ab = CurvePath::segment(a, b, s.cfg.samples);
            for (const ConnectionPtr& conn : {s.m, s.dual, s.alpha0}) {
                ComplexMatrix pi = conn->transport_matrix(ab, 0.0, 1.0);
                ComplexMatrix back = conn->transport_matrix(ab, 1.0, 0.0);
                ComplexMatrix id = ComplexMatrix::Identity(pi.rows(), pi.cols());
                axioms = std::max({axioms, max_abs(conn->transport_matrix(ab, 0.3, 0.3) - id),
                                   max_abs(back * pi - id)});
                ComplexMatrix x = lift(random_complex(rng, n, n));
                ComplexMatrix moved = lift_transport(conn->transport(ab, 0.0, 1.0), x);
                closure = std::max(closure, lifted_factor_residual(moved, n) / std::max(1.0, max_abs(moved)));
            }
            ComplexMatrix pm = s.m->transport_matrix(ab, 0.0, 1.0);
            ComplexMatrix pd = s.dual->transport_matrix(ab, 0.0, 1.0);
            ComplexMatrix ts2 = s.frame->metric(a).power(2.0), tt2 = s.frame->metric(b).power(2.0);
            prop = std::max(prop, max_abs(ts2 - pm.adjoint() * tt2 * pd) / std::max(1.0, max_abs(ts2)));
            ComplexMatrix direct = s.m->transport_matrix(CurvePath::segment(a, c), 0.0, 1.0);
            ComplexMatrix chained = s.m->transport_matrix(CurvePath::segment(b, c), 0.0, 1.0) * pm;
            comp = std::max(comp, max_abs(direct - chained) / std::max(1.0, max_abs(direct)));
            CurvePath bent = CurvePath::composite({CurvePath::segment(a, b), CurvePath::segment(b, c)});
            indep = std::max(indep, max_abs(s.m->transport_matrix(bent, 0.0, 1.0) - direct) /
                                        std::max(1.0, max_abs(direct)));
        }
        out.check("transport_axioms", "Pi^s_s = I and Pi^s_t Pi^t_s = I", s.theta, axioms, 1e-8);
        out.check("lifted_closure", "transport maps B (x) I to an operator of the same form", s.theta,
                  closure, 1e-8);
        out.check("metric_propagation", "T_s^2 = Pi^dagger T_t^2 Pi*", s.theta, prop, 1e-8);
        out.check("composition_law", "product-form transports compose", s.theta, comp, 1e-10);
        out.check("path_independence", "product-form transport depends on endpoints only", s.theta,
                  indep, 1e-9);
    }});

    jobs.push_back({"vector_potential", [](const Suite& s, std::mt19937_64& rng, Sink& out) {
        VectorPotential a = vector_potential(*s.chosen, s.theta, s.fd);
        RealVector v = random_offset(rng, s.n(), 1.0);
        ComplexMatrix combo = ComplexMatrix::Zero(s.dim(), s.dim());
        for (Index p = 0; p < s.n(); ++p) combo += v(p) * a.components[p];
        out.check("vector_potential_linearity", "the directional potential is linear in the direction",
                  s.theta, max_abs(directional_potential(*s.chosen, s.theta, v, s.fd) - combo),
                  10.0 * a.tolerance_unit());

        VectorPotential ad = vector_potential(*s.dual, s.theta, s.fd);
        double herm = 0.0;
        for (const auto& c : ad.components) herm = std::max(herm, max_abs(c - c.adjoint()));
        out.check("unitary_potential_hermitian", "a unitary connection has a Hermitian potential",
                  s.theta, herm, 5.0 * ad.tolerance_unit());

        auto schrodinger = [&](const Connection& c) {
            CurvePath path = CurvePath::segment(s.theta, s.near(rng), s.cfg.samples);
            const double t0 = 0.5;
            ComplexMatrix d = richardson_derivative(
                [&](double tau) { return ComplexMatrix(s.frame->omega(path.point(t0 + tau))); }, s.fd);
            VectorPotential at = vector_potential(c, path.point(t0), s.fd);
            RealVector vel = path.velocity(t0);
            ComplexVector rhs = ComplexVector::Zero(s.dim());
            ComplexVector om = s.frame->omega(path.point(t0));
            for (Index p = 0; p < s.n(); ++p) rhs += vel(p) * (at.components[p] * om);
            return std::pair{max_abs(kI * c.hbar() * d - ComplexMatrix(rhs)), at.tolerance_unit()};
        };
        auto [res_m, tol_m] = schrodinger(*s.m);
        out.check("schrodinger_m_connection", "the wave vector obeys i hbar dOmega/dt = A Omega",
                  s.theta, res_m, 10.0 * tol_m);
        out.note("schrodinger_defect_unitary_dual", schrodinger(*s.dual).first,
                 "the unitary dual does not carry Omega_s to Omega_t");
        out.note("schrodinger_defect_alpha0", schrodinger(*s.alpha0).first,
                 "the alpha = 0 transport does not carry Omega_s to Omega_t");
    }});

    if (multi) {
        jobs.push_back({"holonomy_product", [](const Suite& s, std::mt19937_64& rng, Sink& out) {
            VectorPotential am = vector_potential(*s.m, s.theta, s.fd);
            HolonomyTensor hm = holonomy_formula(*s.m, am, force_tensor(*s.m, s.theta, s.fd));
            out.check("holonomy_m_connection", "product-form connections have vanishing holonomy",
                      s.theta, tensor_pairs_max(hm.components), 10.0 * am.tolerance_unit());

            std::vector<ComplexMatrix> terms;
            for (Index k = 0; k <= s.n(); ++k) terms.push_back(0.4 * random_complex(rng, s.dim(), s.dim()));
            ProductFormConnection pf(
                [terms](const ParameterPoint& x) {
                    ComplexMatrix v = 3.0 * ComplexMatrix::Identity(terms[0].rows(), terms[0].cols()) + terms[0];
                    for (Index k = 0; k < x.size(); ++k) v += std::sin(x(k)) * terms[k + 1];
                    return v;
                },
                s.dim(), s.cfg.hbar);
            VectorPotential ap = vector_potential(pf, s.theta, s.fd);
            HolonomyTensor hp = holonomy_formula(pf, ap, force_tensor(pf, s.theta, s.fd));
            out.check("holonomy_random_product_form", "product-form connections have vanishing holonomy",
                      s.theta, tensor_pairs_max(hp.components), 10.0 * ap.tolerance_unit());
        }});

        jobs.push_back({"holonomy_synthetic", [](const Suite& s, std::mt19937_64&, Sink& out) {
            VectorPotential a = vector_potential(*s.synthetic, s.theta, s.fd);
            ForceTensor f = force_tensor(*s.synthetic, s.theta, s.fd);
            HolonomyTensor h = holonomy_formula(*s.synthetic, a, f);
            double tol = a.tolerance_unit();
            double norm = max_abs(h.components[0][1]);
            out.check("holonomy_sensitivity", "a non-product connection has visible holonomy",
                      s.theta, 100.0 * tol / std::max(norm, 1e-300), 1.0, {{"norm", norm}});
            double anti = 0.0;
            for (Index p = 0; p < s.n(); ++p)
                for (Index q = 0; q < s.n(); ++q)
                    anti = std::max(anti, max_abs(h.components[p][q] + h.components[q][p]));
            out.check("holonomy_antisymmetry", "H_pq = -H_qp", s.theta, anti, tol);

            double agree = 0.0;
            Index pairs = std::min<Index>(s.n(), 3);
            for (Index p = 0; p < pairs; ++p)
                for (Index q = p + 1; q < pairs; ++q) {
                    LoopEstimate loop = holonomy_loop(*s.synthetic, s.theta, p, q);
                    agree = std::max(agree, max_abs(loop.value - h.components[p][q]));
                }
            out.check("holonomy_estimator_agreement", "loop and formula estimates of H agree", s.theta,
                      agree, 50.0 * tol);

            OperatorField a0 = [&](const ParameterPoint& x) {
                return directional_potential(*s.synthetic, x, RealVector::Unit(s.n(), 0), s.fd);
            };
            OperatorField a1 = [&](const ParameterPoint& x) {
                return directional_potential(*s.synthetic, x, RealVector::Unit(s.n(), 1), s.fd);
            };
            ComplexMatrix lhs = covariant_derivative(a, a0, 1);
            ComplexMatrix rhs = partial_derivative(a1, s.theta, 0, s.fd) - h.components[1][0];
            out.check("covariant_derivative_of_potential", "nabla_q A_p = d_p A_q - H_qp", s.theta,
                      max_abs(lhs - rhs), 50.0 * tol);
        }});

        jobs.push_back({"curvature", [](const Suite& s, std::mt19937_64& rng, Sink& out) {
            VectorPotential a = vector_potential(*s.synthetic, s.theta, s.fd);
            HolonomyTensor h = holonomy_formula(*s.synthetic, a, force_tensor(*s.synthetic, s.theta, s.fd));
            double worst = 0.0;
            for (int k = 0; k < s.cfg.points; ++k) {
                std::vector<ComplexMatrix> parts;
                for (Index j = 0; j <= s.n(); ++j) parts.push_back(0.5 * random_complex(rng, s.dim(), s.dim()));
                OperatorField field = [parts](const ParameterPoint& x) {
                    ComplexMatrix v = parts[0];
                    for (Index j = 0; j < x.size(); ++j) v += std::sin(x(j)) * parts[j + 1];
                    return v;
                };
                ComplexMatrix c = curvature_commutator(*s.synthetic, field, s.theta, 0, 1, s.fd);
                worst = std::max(worst, max_abs(kI * s.cfg.hbar * c - commutator(h.components[0][1], field(s.theta))));
            }
            out.check("curvature_commutator", "i hbar [nabla_p, nabla_q] X = [H_pq, X]", s.theta, worst,
                      100.0 * a.tolerance_unit());
        }});

        jobs.push_back({"dual_holonomy", [](const Suite& s, std::mt19937_64&, Sink& out) {
            DualConnection syn_dual(s.synthetic, s.frame, false);
            ResidualReport r = dual_holonomy_conjugation(*s.synthetic, syn_dual, *s.frame, s.theta, s.fd);
            out.check("dual_holonomy_conjugation", "T H* T^-1 = T^-1 H T for a unitary connection",
                      s.theta, r.residual, r.tolerance);
            ResidualReport rd = dual_holonomy_conjugation(*s.dual, *s.m, *s.frame, s.theta, s.fd);
            VectorPotential am = vector_potential(*s.m, s.theta, s.fd);
            VectorPotential ad = vector_potential(*s.dual, s.theta, s.fd);
            double both = std::max(
                {rd.residual,
                 tensor_pairs_max(holonomy_formula(*s.m, am, force_tensor(*s.m, s.theta, s.fd)).components),
                 tensor_pairs_max(holonomy_formula(*s.dual, ad, force_tensor(*s.dual, s.theta, s.fd)).components)});
            out.check("dual_holonomy_both_vanish", "H and H* vanish together for the density connections",
                      s.theta, both, rd.tolerance);
        }});
    }

    jobs.push_back({"dual_potential", [](const Suite& s, std::mt19937_64& rng, Sink& out) {
        double worst = 0.0, tol = 0.0;
        for (int k = 0; k < s.cfg.points; ++k) {
            ParameterPoint p = k == 0 ? s.theta : s.near(rng);
            ResidualReport r = dual_potential_relation(*s.m, *s.dual, *s.frame, p, s.fd);
            worst = std::max(worst, r.residual);
            tol = std::max(tol, r.tolerance);
        }
        DualConnection syn_dual(s.synthetic, s.frame, false);
        ResidualReport r = dual_potential_relation(*s.synthetic, syn_dual, *s.frame, s.theta, s.fd);
        out.check("dual_potential_relation", "T A* T^-1 - T^-1 A^dagger T + i hbar T^-1 dT^2 T^-1 = 0",
                  s.theta, std::max(worst, r.residual), std::max(tol, r.tolerance));
    }});

    if (suite.model.commuting()) {
        jobs.push_back({"commutative", [](const Suite& s, std::mt19937_64& rng, Sink& out) {
            double worst = 0.0;
            for (int k = 0; k < s.cfg.points; ++k) {
                ParameterPoint a = s.near(rng), b = s.near(rng), c = s.near(rng);
                std::vector<CurvePath> paths{CurvePath::segment(a, b),
                                             CurvePath::composite({CurvePath::segment(a, b), CurvePath::segment(b, c)})};
                for (const auto& path : paths) {
                    ComplexMatrix pi = s.dual->transport_matrix(path, 0.0, 1.0);
                    worst = std::max(worst, max_abs(pi - ComplexMatrix::Identity(pi.rows(), pi.cols())));
                }
            }
            out.check("commutative_reduction", "for commuting generators the dual transport is the identity",
                      s.theta, worst, 1e-8);
        }});
    }

    jobs.push_back({"autoparallel", [](const Suite& s, std::mt19937_64& rng, Sink& out) {
        const double tol = kDefaultTolerances.autoparallel_tol;
        CurvePath path = CurvePath::segment(s.near(rng), s.near(rng), s.cfg.samples);
        const int samples = 9;
        out.check("autoparallel_identity", "the identity field is autoparallel", s.theta,
                  autoparallel_residual(*s.m, [&](const ParameterPoint&) {
                      return ComplexMatrix(ComplexMatrix::Identity(s.dim(), s.dim()));
                  }, path, samples), tol);

        auto product = std::static_pointer_cast<const ProductFormConnection>(s.m);
        ComplexMatrix a = random_complex(rng, s.dim(), s.dim());
        OperatorField xm = [&, a](const ParameterPoint& x) {
            ComplexMatrix v = product->field()(x);
            return ComplexMatrix(v * a * checked_inverse(v));
        };
        out.check("autoparallel_product_form", "V A V^-1 is autoparallel for a product-form connection",
                  s.theta, autoparallel_residual(*s.m, xm, path, samples), tol);

        ComplexMatrix b1 = random_complex(rng, s.dim(), s.dim()), b2 = random_complex(rng, s.dim(), s.dim());
        auto field_of = [&](const ComplexMatrix& b) -> OperatorField {
            return [&, b](const ParameterPoint& x) {
                ComplexMatrix w = unitary_field(*s.frame, x);
                return ComplexMatrix(w * b * w.adjoint());
            };
        };
        OperatorField x1 = field_of(b1), x2 = field_of(b2);
        double alpha = s.cfg.connection == "alpha" ? s.cfg.alpha : 0.0;
        AlphaConnection pa(s.dual, s.frame, alpha);
        OperatorField conj = [&](const ParameterPoint& x) {
            MetricOperator t = s.frame->metric(x);
            return ComplexMatrix(t.power(-(1.0 - alpha)) * x1(x) * t.power(1.0 - alpha));
        };
        out.check("autoparallel_alpha_conjugation",
                  "T^-(1-alpha) X T^(1-alpha) is autoparallel for Pi_alpha when X is for Pi_1", s.theta,
                  autoparallel_residual(pa, conj, path, samples), tol);
        double alg = std::max(
            autoparallel_residual(*s.dual, [&](const ParameterPoint& x) { return ComplexMatrix(x1(x) * x2(x)); }, path, samples),
            autoparallel_residual(*s.dual, [&](const ParameterPoint& x) { return ComplexMatrix(x1(x) + x2(x)); }, path, samples));
        out.check("autoparallel_algebra", "products and sums of autoparallel fields are autoparallel",
                  s.theta, alg, 2.0 * tol);
        out.check("autoparallel_adjoint", "adjoints of autoparallel fields are autoparallel for a unitary connection",
                  s.theta,
                  autoparallel_residual(*s.dual, [&](const ParameterPoint& x) { return ComplexMatrix(x1(x).adjoint()); }, path, samples),
                  tol);

        double nab = 0.0;
        for (double t : {0.25, 0.5, 0.75}) {
            ParameterPoint x = path.point(t);
            RealVector v = path.velocity(t);
            VectorPotential am = vector_potential(*s.m, x, s.fd);
            ComplexMatrix total = ComplexMatrix::Zero(s.dim(), s.dim());
            for (Index p = 0; p < s.n(); ++p) total += v(p) * covariant_derivative(am, xm, p);
            nab = std::max(nab, max_abs(total) / std::max(1.0, max_abs(xm(x))));
        }
        out.check("autoparallel_covariant_derivative", "an autoparallel field has zero covariant derivative",
                  s.theta, nab, 10.0 * tol);
    }});

    jobs.push_back({"metric", [](const Suite& s, std::mt19937_64& rng, Sink& out) {
        VectorPotential a = vector_potential(*s.chosen, s.theta, s.fd);
        MetricTensor g = metric_tensor(*s.frame, s.theta, a);
        out.check("metric_positive", "g is symmetric positive semidefinite", s.theta,
                  std::max(0.0, -g.min_eigenvalue), 1e-10, {{"min_eigenvalue", g.min_eigenvalue}});

        RealVector amp = random_offset(rng, s.n(), 1.0), freq = random_offset(rng, s.n(), 2.0),
                   phase = random_offset(rng, s.n(), 3.0);
        GaugeShiftedConnection shifted(s.chosen, [=](const ParameterPoint& x) {
            double v = 0.0;
            for (Index k = 0; k < x.size(); ++k) v += amp(k) * std::sin(freq(k) * x(k) + phase(k));
            return v;
        });
        MetricTensor g2 = metric_tensor(*s.frame, s.theta, vector_potential(shifted, s.theta, s.fd));
        out.check("u1_gauge_invariance", "g is unchanged by a scalar gauge shift of the potential",
                  s.theta, (g.g - g2.g).cwiseAbs().maxCoeff(), 1e-8);

        RealMatrix bkm = bkm_metric(s.model, s.theta);
        out.note("metric_min_eigenvalue", g.min_eigenvalue, "smallest eigenvalue of g at theta");
        out.note("bkm_difference", (g.g - bkm).cwiseAbs().maxCoeff(),
                 "max |g - Kubo-Mori metric|, informational");
        if (!g.degenerate) {
            ChristoffelSymbols c = christoffel(*s.frame, *s.chosen, s.theta, s.fd);
            out.check("christoffel_orthogonality",
                      "the part of D_q(A_p Omega) not spanned by the tangent vectors is orthogonal to them",
                      s.theta, c.orthogonality_residual, 1e-6);
        }

        GnsContext ctx = s.frame->context(s.theta);
        MetricOperator t = s.frame->metric(s.theta);
        out.note("normalization_defect", (t.power(1.0) * ctx.omega - ctx.omega).norm(),
                 "|T Omega - Omega|; T = rho^-1/4 (x) I does not fix Omega");
        ComplexMatrix id = ComplexMatrix::Identity(s.dim(), s.dim());
        out.note("identity_pairing", inner_product(ctx, t, id, id).real(), "(I, I)_theta = sum_i sqrt(p_i)");
    }});

    jobs.push_back({"geodesic", [](const Suite& s, std::mt19937_64&, Sink& out) {
        GeodesicSystem sys = connection_geodesic_system(s.frame, s.alpha0, s.fd);
        GeodesicState init{s.theta, RealVector::Unit(s.n(), 0), 0.0};
        GeodesicTrace trace = integrate_geodesic(sys, init, s.cfg.horizon, s.cfg.geodesic_step);
        GeodesicDiagnostics diag = geodesic_diagnostics(*s.alpha0, s.frame.get(), trace, s.fd);
        nlohmann::json detail = {{"steps", trace.states.size() - 1},
                                 {"truncated", trace.truncated},
                                 {"max_expectation", diag.max_expectation}};
        const double hypothesis_tol = 1e-6 * diag.scale;
        if (trace.truncated) {
            out.check("geodesic_conservation", "g(thetadot, thetadot) is constant along a self-dual geodesic",
                      s.theta, std::numeric_limits<double>::max(), 1e-4, detail);
        } else if (diag.max_expectation <= hypothesis_tol) {
            out.check("geodesic_conservation", "g(thetadot, thetadot) is constant along a self-dual geodesic",
                      s.theta, trace.relative_drift(), 1e-4, detail);
        } else {
            out.note("geodesic_drift_without_hypothesis", trace.relative_drift(),
                     "expectations (A_p Omega, Omega) do not vanish; conservation is not expected");
        }
        out.note("geodesic_max_expectation", diag.max_expectation, "max |(A_p Omega, Omega)| along the trace");
        out.note("geodesic_residual_a", diag.drift_a, "drift of gammadot.A along the trace");
        out.note("geodesic_residual_b", diag.residual_b, "residual of dA_p/dt = (i/hbar)[A_p, gammadot.A]");
        out.note("geodesic_residual_c", diag.residual_c, "residual of the exponential formal solution");
        GeodesicTrace control =
            integrate_geodesic(connection_geodesic_system(s.frame, s.m, s.fd), init, s.cfg.horizon, s.cfg.geodesic_step);
        out.note("geodesic_m_control_drift", control.relative_drift(),
                 "tangent-length drift of the m-connection on the same initial data");
    }});

    return jobs;
}

}  // namespace

nlohmann::json config_to_json(const RunConfig& cfg) {
    return {{"model", cfg.model_source},
            {"theta", to_std(cfg.theta)},
            {"connection", cfg.connection},
            {"alpha", cfg.alpha},
            {"hbar", cfg.hbar},
            {"fd_step", cfg.fd_step},
            {"samples", cfg.samples},
            {"seed", cfg.seed},
            {"pairs", cfg.pairs},
            {"points", cfg.points},
            {"horizon", cfg.horizon},
            {"geodesic_step", cfg.geodesic_step}};
}

ExpFamilyModel load_model(const std::string& source) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (fs::is_regular_file(source, ec)) {
        std::ifstream in(source);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(source + ": " + e.what());
        }
        try {
            return model_from_json(j);
        } catch (const ConfigError& e) {
            throw ConfigError(source + ": " + e.what());
        }
    }
    auto names = preset_names();
    if (std::find(names.begin(), names.end(), source) != names.end()) return preset_model(source);
    std::string all;
    for (const auto& nm : names) all += (all.empty() ? "" : ", ") + nm;
    throw ConfigError("model '" + source + "' is neither a readable file nor a preset (" + all + ")");
}

ParameterPoint resolve_theta(const RunConfig& cfg, const ExpFamilyModel& model) {
    if (cfg.theta.size() == 0) {
        ParameterPoint t(model.dim_param());
        for (Index k = 0; k < t.size(); ++k) t(k) = 0.3 + 0.2 * static_cast<double>(k);
        return t;
    }
    model.check_point(cfg.theta);
    return cfg.theta;
}

int VerificationReport::passed() const {
    return static_cast<int>(std::count_if(checks.begin(), checks.end(), [](const auto& c) { return c.pass; }));
}

nlohmann::json VerificationReport::to_json(bool with_timestamp) const {
    nlohmann::json j;
    j["suite"] = suite;
    j["config"] = config;
    j["checks"] = nlohmann::json::array();
    for (const auto& c : checks) {
        nlohmann::json r = {{"check", c.name},      {"anchor", c.anchor},     {"theta", to_std(c.theta)},
                            {"residual", c.residual}, {"tolerance", c.tolerance}, {"pass", c.pass}};
        if (!c.detail.is_null()) r["detail"] = c.detail;
        j["checks"].push_back(r);
    }
    j["info"] = nlohmann::json::array();
    for (const auto& i : info) j["info"].push_back({{"name", i.name}, {"value", i.value}, {"note", i.note}});
    j["summary"] = {{"total", checks.size()}, {"passed", passed()}, {"failed", failed()}};
    if (with_timestamp) j["timestamp"] = timestamp;
    return j;
}

VerificationReport cmd_verify(const RunConfig& cfg) {
    Suite suite = build_suite(cfg);
    std::vector<Job> jobs = build_jobs(suite);
    std::vector<Sink> sinks(jobs.size());
    run_indexed(jobs.size(), cfg.workers, [&](size_t i) {
        std::seed_seq seq{static_cast<std::uint64_t>(cfg.seed), static_cast<std::uint64_t>(i)};
        std::mt19937_64 rng(seq);
        try {
            jobs[i].run(suite, rng, sinks[i]);
        } catch (const NumericalError& e) {
            sinks[i].check(jobs[i].name, "numerical failure while running the check", suite.theta,
                           std::numeric_limits<double>::max(), 0.0, {{"error", e.what()}});
        }
    });
    VerificationReport rep;
    rep.config = config_to_json(cfg);
    rep.config["theta"] = to_std(suite.theta);
    for (auto& s : sinks) {
        rep.checks.insert(rep.checks.end(), s.checks.begin(), s.checks.end());
        rep.info.insert(rep.info.end(), s.info.begin(), s.info.end());
    }
    rep.timestamp = utc_timestamp();
    return rep;
}

nlohmann::json cmd_holonomy(const RunConfig& cfg, Index p, Index q) {
    Suite s = build_suite(cfg);
    if (s.n() < 2) throw ConfigError("holonomy requires n >= 2 parameters");
    if (p < 0 || q < 0 || p >= s.n() || q >= s.n() || p == q)
        throw ConfigError("holonomy indices p, q must be distinct and in range");
    VectorPotential a = vector_potential(*s.chosen, s.theta, s.fd);
    HolonomyTensor h = holonomy_formula(*s.chosen, a, force_tensor(*s.chosen, s.theta, s.fd));
    LoopEstimate loop = holonomy_loop(*s.chosen, s.theta, p, q);
    double tol = 50.0 * a.tolerance_unit();
    double gap = max_abs(loop.value - h.components[p][q]);
    nlohmann::json j;
    j["config"] = config_to_json(cfg);
    j["config"]["theta"] = to_std(s.theta);
    j["connection"] = s.chosen->kind();
    j["p"] = p;
    j["q"] = q;
    j["formula_norm"] = max_abs(h.components[p][q]);
    j["loop_norm"] = max_abs(loop.value);
    j["discrepancy"] = gap;
    j["tolerance"] = tol;
    j["agree"] = gap <= tol;
    j["loop_steps"] = loop.s_values;
    j["loop_increments"] = loop.increments;
    j["formula"] = matrix_to_json(h.components[p][q]);
    j["loop"] = matrix_to_json(loop.value);
    return j;
}

GeodesicRun cmd_geodesic(const RunConfig& cfg, const RealVector& velocity) {
    Suite s = build_suite(cfg);
    if (velocity.size() != s.n()) throw ConfigError("velocity must have one entry per parameter");
    GeodesicSystem sys = connection_geodesic_system(s.frame, s.chosen, s.fd);
    if (!velocity.isZero(0.0)) {
        MetricTensor g = metric_tensor(*s.frame, s.theta, vector_potential(*s.chosen, s.theta, s.fd));
        if (g.degenerate) g.inverse();
    }
    GeodesicRun run;
    run.trace = integrate_geodesic(sys, {s.theta, velocity, 0.0}, cfg.horizon, cfg.geodesic_step);
    run.diagnostics = geodesic_diagnostics(*s.chosen, s.frame.get(), run.trace, s.fd);
    double drift = run.trace.relative_drift();
    run.report = {{"config", config_to_json(cfg)},
                  {"connection", s.chosen->kind()},
                  {"states", run.trace.states.size()},
                  {"truncated", run.trace.truncated},
                  {"failure", run.trace.failure},
                  {"relative_drift", drift},
                  {"conserved", drift < 1e-4},
                  {"max_expectation", run.diagnostics.max_expectation},
                  {"residual_a", run.diagnostics.drift_a},
                  {"residual_b", run.diagnostics.residual_b},
                  {"residual_c", run.diagnostics.residual_c}};
    run.report["config"]["theta"] = to_std(s.theta);
    return run;
}

std::string geodesic_csv(const GeodesicRun& run) {
    std::ostringstream os;
    os << std::setprecision(17);
    const Index n = run.trace.states.empty() ? 0 : run.trace.states.front().theta.size();
    os << "t";
    for (Index i = 1; i <= n; ++i) os << ",theta_" << i;
    for (Index i = 1; i <= n; ++i) os << ",thetadot_" << i;
    os << ",tangent_length,residual_a\n";
    for (size_t k = 0; k < run.trace.states.size(); ++k) {
        const auto& st = run.trace.states[k];
        os << st.time;
        for (Index i = 0; i < n; ++i) os << "," << st.theta(i);
        for (Index i = 0; i < n; ++i) os << "," << st.velocity(i);
        os << "," << run.trace.tangent_length[k] << ","
           << (k < run.diagnostics.residual_a.size() ? run.diagnostics.residual_a[k] : 0.0) << "\n";
    }
    return os.str();
}

GridSpec parse_grid(const std::string& text, Index dim) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    if (parts.size() != 1 && static_cast<Index>(parts.size()) != dim)
        throw ConfigError("grid: expected one 'lo:hi:count' entry or one per parameter");
    GridSpec g;
    for (Index k = 0; k < dim; ++k) {
        const std::string& spec = parts.size() == 1 ? parts[0] : parts[k];
        double lo = 0.0, hi = 0.0;
        long count = 0;
        char c1 = 0, c2 = 0;
        std::istringstream is(spec);
        if (!(is >> lo >> c1 >> hi >> c2 >> count) || c1 != ':' || c2 != ':' || count < 0 || !is.eof())
            throw ConfigError("grid: cannot parse '" + spec + "' as lo:hi:count");
        std::vector<double> axis;
        for (long i = 0; i < count; ++i)
            axis.push_back(count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1));
        g.axes.push_back(axis);
    }
    return g;
}

std::vector<ScanRow> cmd_scan(const RunConfig& cfg, const GridSpec& grid) {
    ExpFamilyModel model = load_model(cfg.model_source);
    const Index n = model.dim_param();
    if (static_cast<Index>(grid.axes.size()) != n) throw ConfigError("grid dimension does not match the model");
    size_t total = 1;
    for (const auto& ax : grid.axes) total *= ax.size();
    std::vector<ScanRow> rows(total);
    auto synthetic = SyntheticConnection::random(model.dim_hilbert() * model.dim_hilbert(), n,
                                                 cfg.seed ^ 0x5eedULL, cfg.hbar);
    run_indexed(total, cfg.workers, [&](size_t idx) {
        ScanRow& row = rows[idx];
        row.theta.resize(n);
        size_t rest = idx;
        for (Index k = n - 1; k >= 0; --k) {
            const auto& ax = grid.axes[k];
            row.theta(k) = ax[rest % ax.size()];
            rest /= ax.size();
        }
        row.g = RealMatrix::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
        row.holonomy_norms.assign(n * (n - 1) / 2, std::numeric_limits<double>::quiet_NaN());
        row.log_partition = log_partition(model, row.theta);
        try {
            auto frame = std::make_shared<GaugeFrame>(model, row.theta);
            const GnsContext& anchor = frame->anchor();
            if (anchor.min_gap <= std::max(frame->options().degeneracy_guard, 10.0 * cfg.fd_step)) {
                row.flagged = true;
                row.note = "near-degenerate spectrum";
                return;
            }
            ConnectionPtr conn = cfg.connection == "synthetic"
                                     ? ConnectionPtr(synthetic)
                                     : make_density_connection(frame, cfg.connection, cfg.alpha, cfg.hbar);
            VectorPotential a = vector_potential(*conn, row.theta, cfg.fd_step);
            row.g = metric_tensor(*frame, row.theta, a).g;
            if (n >= 2) {
                HolonomyTensor h = holonomy_formula(*conn, a, force_tensor(*conn, row.theta, cfg.fd_step));
                size_t c = 0;
                for (Index p = 0; p < n; ++p)
                    for (Index q = p + 1; q < n; ++q) row.holonomy_norms[c++] = max_abs(h.components[p][q]);
            }
        } catch (const NumericalError& e) {
            row.flagged = true;
            row.note = e.what();
        }
    });
    return rows;
}

std::string scan_csv(Index dim, const std::vector<ScanRow>& rows) {
    std::ostringstream os;
    os << std::setprecision(17);
    for (Index i = 1; i <= dim; ++i) os << (i > 1 ? "," : "") << "theta_" << i;
    for (Index p = 1; p <= dim; ++p)
        for (Index q = 1; q <= dim; ++q) os << ",g_" << p << "_" << q;
    for (Index p = 1; p <= dim; ++p)
        for (Index q = p + 1; q <= dim; ++q) os << ",H_" << p << "_" << q << "_norm";
    os << ",alpha,flagged,note\n";
    for (const auto& r : rows) {
        for (Index i = 0; i < dim; ++i) os << (i ? "," : "") << r.theta(i);
        for (Index p = 0; p < dim; ++p)
            for (Index q = 0; q < dim; ++q) os << "," << r.g(p, q);
        for (double h : r.holonomy_norms) os << "," << h;
        std::string note = r.note;
        std::replace(note.begin(), note.end(), '"', '\'');
        os << "," << r.log_partition << "," << (r.flagged ? 1 : 0) << ",\"" << note << "\"\n";
    }
    return os.str();
}

}  // namespace qconn
