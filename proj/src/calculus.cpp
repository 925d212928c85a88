#include "qconn/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qconn/errors.hpp"

namespace qconn {

namespace {

void check_step(double h) {
    if (!(h >= kDefaultTolerances.min_fd_step)) {
        std::ostringstream os;
        os << "fd_step " << h << " underflows the minimum " << kDefaultTolerances.min_fd_step;
        throw ConfigError(os.str());
    }
}

void check_index(const ParameterPoint& theta, Index p) {
    if (p < 0 || p >= theta.size()) throw ConfigError("parameter index out of range");
}

}  // namespace

double VectorPotential::scale() const {
    double m = 0.0;
    for (const auto& a : components) m = std::max(m, max_abs(a));
    return 1.0 + m;
}

nlohmann::json report_to_json(const ResidualReport& r) {
    return {{"check", r.check},
            {"theta", std::vector<double>(r.theta.data(), r.theta.data() + r.theta.size())},
            {"residual", r.residual},
            {"tolerance", r.tolerance},
            {"pass", r.pass}};
}

double tensor_max(const OperatorTensor& t) {
    double m = 0.0;
    for (const auto& row : t)
        for (const auto& x : row) m = std::max(m, max_abs(x));
    return m;
}

ComplexMatrix richardson_derivative(const std::function<ComplexMatrix(double)>& f, double h) {
    check_step(h);
    ComplexMatrix d1 = (f(h) - f(-h)) / (2.0 * h);
    ComplexMatrix d2 = (f(0.5 * h) - f(-0.5 * h)) / h;
    return (4.0 * d2 - d1) / 3.0;
}

ComplexMatrix directional_potential(const Connection& conn, const ParameterPoint& theta,
                                    const RealVector& v, double fd_step) {
    CurvePath line = CurvePath::segment(theta, theta + v);
    return kI * conn.hbar() *
           richardson_derivative([&](double t) { return conn.transport_matrix(line, 0.0, t); },
                                 fd_step);
}

VectorPotential vector_potential(const Connection& conn, const ParameterPoint& theta,
                                 double fd_step) {
    VectorPotential a;
    a.theta = theta;
    a.hbar = conn.hbar();
    a.fd_step = fd_step;
    for (Index p = 0; p < theta.size(); ++p)
        a.components.push_back(
            directional_potential(conn, theta, RealVector::Unit(theta.size(), p), fd_step));
    return a;
}

ComplexMatrix partial_derivative(const OperatorField& field, const ParameterPoint& theta, Index p,
                                 double fd_step) {
    check_index(theta, p);
    RealVector e = RealVector::Unit(theta.size(), p);
    return richardson_derivative([&](double t) { return field(theta + t * e); }, fd_step);
}

ComplexMatrix covariant_derivative(const VectorPotential& a, const OperatorField& field, Index p) {
    check_index(a.theta, p);
    ComplexMatrix x = field(a.theta);
    return partial_derivative(field, a.theta, p, a.fd_step) +
           (kI / a.hbar) * commutator(a.components[p], x);
}

ComplexMatrix covariant_derivative(const Connection& conn, const OperatorField& field,
                                   const ParameterPoint& theta, Index p, double fd_step) {
    check_index(theta, p);
    ComplexMatrix ap =
        directional_potential(conn, theta, RealVector::Unit(theta.size(), p), fd_step);
    return partial_derivative(field, theta, p, fd_step) +
           (kI / conn.hbar()) * commutator(ap, field(theta));
}

ForceTensor force_tensor(const Connection& conn, const ParameterPoint& theta, double fd_step) {
    const Index n = theta.size();
    // dA[q][p] = d_q A_p
    std::vector<std::vector<ComplexMatrix>> da(n);
    for (Index q = 0; q < n; ++q) {
        RealVector e = RealVector::Unit(n, q);
        auto shifted = [&](double t) {
            VectorPotential a = vector_potential(conn, theta + t * e, fd_step);
            ComplexMatrix stacked(conn.dim() * n, conn.dim());
            for (Index p = 0; p < n; ++p) stacked.middleRows(p * conn.dim(), conn.dim()) = a.components[p];
            return stacked;
        };
        ComplexMatrix d = richardson_derivative(shifted, fd_step);
        for (Index p = 0; p < n; ++p) da[q].push_back(d.middleRows(p * conn.dim(), conn.dim()));
    }
    ForceTensor f;
    f.theta = theta;
    f.components.assign(n, std::vector<ComplexMatrix>(n));
    for (Index p = 0; p < n; ++p)
        for (Index q = 0; q < n; ++q) f.components[p][q] = da[q][p] - da[p][q];
    return f;
}

HolonomyTensor holonomy_formula(const Connection& conn, const VectorPotential& a,
                                const ForceTensor& f) {
    const Index n = a.theta.size();
    HolonomyTensor h;
    h.theta = a.theta;
    h.estimator = "formula";
    h.components.assign(n, std::vector<ComplexMatrix>(n));
    for (Index p = 0; p < n; ++p)
        for (Index q = 0; q < n; ++q)
            h.components[p][q] = f.components[p][q] -
                                 (kI / conn.hbar()) * commutator(a.components[p], a.components[q]);
    return h;
}

HolonomyTensor holonomy_formula(const Connection& conn, const ParameterPoint& theta,
                                double fd_step) {
    return holonomy_formula(conn, vector_potential(conn, theta, fd_step),
                            force_tensor(conn, theta, fd_step));
}

ComplexMatrix loop_operator(const Connection& conn, const ParameterPoint& theta, Index p, Index q,
                            double s, double t) {
    check_index(theta, p);
    check_index(theta, q);
    const Index n = theta.size();
    RealVector ep = RealVector::Unit(n, p), eq = RealVector::Unit(n, q);
    ComplexMatrix l1 = conn.transport_matrix(CurvePath::coordinate_line(theta, p), s, 0.0);
    ComplexMatrix l2 = conn.transport_matrix(CurvePath::coordinate_line(theta + s * ep, q), t, 0.0);
    ComplexMatrix l3 = conn.transport_matrix(CurvePath::coordinate_line(theta + t * eq, p), 0.0, s);
    ComplexMatrix l4 = conn.transport_matrix(CurvePath::coordinate_line(theta, q), 0.0, t);
    return l1 * l2 * l3 * l4;
}

constexpr double kLoopSettleTol = 1e-7;
constexpr size_t kLoopMaxLevels = 8;

std::vector<double> default_loop_steps() { return {0.04, 0.02, 0.01, 0.005}; }

LoopEstimate holonomy_loop(const Connection& conn, const ParameterPoint& theta, Index p, Index q,
                           const std::vector<double>& s_steps) {
    if (s_steps.size() < 2) throw ConfigError("holonomy loop needs at least two step sizes");
    for (size_t k = 1; k < s_steps.size(); ++k)
        if (std::abs(s_steps[k] - 0.5 * s_steps[k - 1]) > 1e-15 * s_steps[0])
            throw ConfigError("holonomy loop steps must halve successively");
    const Index d = conn.dim();
    const ComplexMatrix id = ComplexMatrix::Identity(d, d);
    std::vector<std::vector<ComplexMatrix>> table;
    LoopEstimate out;
    out.s_values = s_steps;
    // extra halvings until the extrapolation settles
    auto settled = [&]() {
        return !out.increments.empty() &&
               out.increments.back() <= kLoopSettleTol * (1.0 + max_abs(table.back().back()));
    };
    for (size_t k = 0; k < out.s_values.size() || (!settled() && k < kLoopMaxLevels); ++k) {
        if (k == out.s_values.size()) out.s_values.push_back(0.5 * out.s_values.back());
        double s = out.s_values[k];
        table.emplace_back();
        ComplexMatrix mixed = loop_operator(conn, theta, p, q, s, s) -
                              loop_operator(conn, theta, p, q, s, 0.0) -
                              loop_operator(conn, theta, p, q, 0.0, s) + id;
        table[k].push_back(kI * conn.hbar() * mixed / (s * s));
        for (size_t j = 1; j <= k; ++j) {
            double w = std::pow(2.0, static_cast<double>(j));
            table[k].push_back((w * table[k][j - 1] - table[k - 1][j - 1]) / (w - 1.0));
        }
        if (k > 0) out.increments.push_back(max_abs(table[k][k] - table[k - 1][k - 1]));
    }
    out.value = table.back().back();
    double scale = 1.0 + max_abs(out.value);
    if (out.increments.size() >= 2 && out.increments.back() > out.increments.front() &&
        out.increments.back() > 1e-6 * scale) {
        std::ostringstream os;
        os << "holonomy loop extrapolation diverges; increments";
        for (double x : out.increments) os << " " << x;
        throw ConvergenceError(os.str());
    }
    return out;
}

ComplexMatrix curvature_commutator(const Connection& conn, const OperatorField& field,
                                   const ParameterPoint& theta, Index p, Index q, double fd_step) {
    auto nabla = [&](Index outer, Index inner) {
        OperatorField first = [&, inner](const ParameterPoint& x) {
            return covariant_derivative(conn, field, x, inner, fd_step);
        };
        return covariant_derivative(conn, first, theta, outer, fd_step);
    };
    return nabla(p, q) - nabla(q, p);
}

ResidualReport dual_potential_relation(const Connection& conn, const Connection& dual,
                                       const GaugeFrame& frame, const ParameterPoint& theta,
                                       double fd_step) {
    VectorPotential a = vector_potential(conn, theta, fd_step);
    VectorPotential as = vector_potential(dual, theta, fd_step);
    MetricOperator t0 = frame.metric(theta);
    ComplexMatrix t = t0.power(1.0), tinv = t0.power(-1.0);
    double worst = 0.0;
    for (Index p = 0; p < theta.size(); ++p) {
        ComplexMatrix dt2 = partial_derivative(
            [&](const ParameterPoint& x) { return frame.metric(x).power(2.0); }, theta, p, fd_step);
        ComplexMatrix r = t * as.components[p] * tinv - tinv * a.components[p].adjoint() * t +
                          kI * conn.hbar() * tinv * dt2 * tinv;
        worst = std::max(worst, max_abs(r));
    }
    ResidualReport rep{"dual_potential_relation", theta, worst,
                       50.0 * fd_tol(fd_step, std::max(a.scale(), as.scale())), false};
    rep.pass = rep.residual <= rep.tolerance;
    return rep;
}

ResidualReport dual_holonomy_conjugation(const Connection& conn, const Connection& dual,
                                         const GaugeFrame& frame, const ParameterPoint& theta,
                                         double fd_step) {
    VectorPotential a = vector_potential(conn, theta, fd_step);
    VectorPotential as = vector_potential(dual, theta, fd_step);
    HolonomyTensor h = holonomy_formula(conn, a, force_tensor(conn, theta, fd_step));
    HolonomyTensor hs = holonomy_formula(dual, as, force_tensor(dual, theta, fd_step));
    MetricOperator t0 = frame.metric(theta);
    ComplexMatrix t = t0.power(1.0), tinv = t0.power(-1.0);
    double worst = 0.0;
    for (Index p = 0; p < theta.size(); ++p)
        for (Index q = 0; q < theta.size(); ++q)
            worst = std::max(worst, max_abs(t * hs.components[p][q] * tinv -
                                            tinv * h.components[p][q] * t));
    ResidualReport rep{"dual_holonomy_conjugation", theta, worst,
                       50.0 * fd_tol(fd_step, std::max(a.scale(), as.scale())), false};
    rep.pass = rep.residual <= rep.tolerance;
    return rep;
}

}  // namespace qconn
