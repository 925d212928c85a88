#include "qconn/geodesics.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "qconn/errors.hpp"

namespace qconn {

namespace {

RealVector acceleration(const ChristoffelSymbols& c, const RealVector& v) {
    RealVector acc = RealVector::Zero(c.n);
    for (Index r = 0; r < c.n; ++r)
        for (Index q = 0; q < c.n; ++q)
            for (Index p = 0; p < c.n; ++p) acc(r) -= c.upper(r, q, p) * v(q) * v(p);
    return acc;
}

ComplexMatrix contract(const RealVector& v, const std::vector<ComplexMatrix>& a) {
    ComplexMatrix out = ComplexMatrix::Zero(a.front().rows(), a.front().cols());
    for (size_t p = 0; p < a.size(); ++p) out += v(static_cast<Index>(p)) * a[p];
    return out;
}

}  // namespace

GeodesicSystem connection_geodesic_system(FramePtr frame, ConnectionPtr conn, double fd_step) {
    GeodesicSystem sys;
    sys.kind = conn->kind();
    sys.christoffel = [frame, conn, fd_step](const ParameterPoint& theta) {
        return christoffel(*frame, *conn, theta, fd_step, true);
    };
    sys.metric = [frame, conn, fd_step](const ParameterPoint& theta) {
        return metric_tensor(*frame, theta, vector_potential(*conn, theta, fd_step)).g;
    };
    return sys;
}

double GeodesicTrace::relative_drift() const {
    if (tangent_length.empty() || tangent_length.front() == 0.0) return 0.0;
    double l0 = tangent_length.front(), worst = 0.0;
    for (double l : tangent_length) worst = std::max(worst, std::abs(l - l0));
    return worst / std::abs(l0);
}

GeodesicState geodesic_step(const GeodesicSystem& system, const GeodesicState& state, double step) {
    auto rhs = [&](const RealVector& x, const RealVector& v) {
        ChristoffelSymbols c = system.christoffel(x);
        if (!c.raised) throw DegenerateMetricError("Christoffel symbols could not be raised");
        return acceleration(c, v);
    };
    const RealVector& x0 = state.theta;
    const RealVector& v0 = state.velocity;
    RealVector k1x = v0, k1v = rhs(x0, v0);
    RealVector k2x = v0 + 0.5 * step * k1v, k2v = rhs(x0 + 0.5 * step * k1x, k2x);
    RealVector k3x = v0 + 0.5 * step * k2v, k3v = rhs(x0 + 0.5 * step * k2x, k3x);
    RealVector k4x = v0 + step * k3v, k4v = rhs(x0 + step * k3x, k4x);
    GeodesicState out;
    out.theta = x0 + step / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    out.velocity = v0 + step / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    out.time = state.time + step;
    if (!out.theta.allFinite() || !out.velocity.allFinite())
        throw ConsistencyError("geodesic step produced non-finite values");
    return out;
}

GeodesicTrace integrate_geodesic(const GeodesicSystem& system, const GeodesicState& initial,
                                 double horizon, double step) {
    if (!(step > 0.0) || !(horizon >= 0.0)) throw ConfigError("geodesic step and horizon must be positive");
    GeodesicTrace trace;
    trace.step = step;
    trace.kind = system.kind;
    auto record = [&](const GeodesicState& s) {
        RealMatrix g = system.metric(s.theta);
        trace.states.push_back(s);
        trace.tangent_length.push_back(s.velocity.dot(g * s.velocity));
    };
    record(initial);
    if (initial.velocity.isZero(0.0)) return trace;

    const long steps = static_cast<long>(std::ceil(horizon / step - 1e-9));
    GeodesicState cur = initial;
    for (long k = 1; k <= steps; ++k) {
        try {
            cur = geodesic_step(system, cur, step);
            cur.time = initial.time + static_cast<double>(k) * step;
            record(cur);
        } catch (const NumericalError& e) {
            trace.truncated = true;
            trace.failure = e.what();
            break;
        }
    }
    return trace;
}

double autoparallel_residual(const Connection& conn, const OperatorField& field,
                             const CurvePath& path, int sample_count) {
    if (sample_count < 2) throw ConfigError("autoparallel check needs at least two samples");
    std::vector<double> ts(sample_count);
    std::vector<ComplexMatrix> xs(sample_count);
    double scale = 1.0;
    for (int i = 0; i < sample_count; ++i) {
        ts[i] = static_cast<double>(i) / (sample_count - 1);
        xs[i] = field(path.point(ts[i]));
        scale = std::max(scale, max_abs(xs[i]));
    }
    double worst = 0.0;
    auto check = [&](int i, int j) {
        ComplexMatrix pi = conn.transport_matrix(path, ts[i], ts[j]);
        double s = scale * std::max(1.0, max_abs(pi));
        worst = std::max(worst, max_abs(pi * xs[i] - xs[j] * pi) / s);
    };
    for (int i = 1; i < sample_count; ++i) {
        check(0, i);
        if (i + 1 < sample_count) check(i, i + 1);
    }
    return worst;
}

GeodesicDiagnostics geodesic_diagnostics(const Connection& conn, const GaugeFrame* frame,
                                         const GeodesicTrace& trace, double fd_step) {
    GeodesicDiagnostics d;
    const size_t m = trace.states.size();
    if (m == 0) return d;
    std::vector<std::vector<ComplexMatrix>> a(m);
    for (size_t k = 0; k < m; ++k) {
        VectorPotential vp = vector_potential(conn, trace.states[k].theta, fd_step);
        d.scale = std::max(d.scale, vp.scale());
        a[k] = vp.components;
        if (frame != nullptr) {
            ComplexVector om = frame->omega(trace.states[k].theta);
            for (const auto& ap : a[k])
                d.max_expectation = std::max(d.max_expectation, std::abs(om.dot(ap * om)));
        }
    }
    const double hbar = conn.hbar();
    ComplexMatrix h0 = contract(trace.states[0].velocity, a[0]);
    for (size_t k = 0; k < m; ++k) {
        double r = max_abs(contract(trace.states[k].velocity, a[k]) - h0);
        d.residual_a.push_back(r);
        d.drift_a = std::max(d.drift_a, r);
    }
    for (size_t k = 1; k + 1 < m; ++k) {
        ComplexMatrix hk = contract(trace.states[k].velocity, a[k]);
        for (size_t p = 0; p < a[k].size(); ++p) {
            ComplexMatrix dadt = (a[k + 1][p] - a[k - 1][p]) / (2.0 * trace.step);
            d.residual_b = std::max(d.residual_b,
                                    max_abs(dadt - (kI / hbar) * commutator(a[k][p], hk)));
        }
    }
    for (size_t k = 0; k < m; ++k) {
        double t = trace.states[k].time - trace.states[0].time;
        ComplexMatrix fwd = ComplexMatrix((-kI * t / hbar) * h0).exp();
        ComplexMatrix back = ComplexMatrix((kI * t / hbar) * h0).exp();
        for (size_t p = 0; p < a[k].size(); ++p)
            d.residual_c = std::max(d.residual_c, max_abs(a[k][p] - fwd * a[0][p] * back));
    }
    return d;
}

}  // namespace qconn
