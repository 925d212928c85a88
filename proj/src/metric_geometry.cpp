#include "qconn/metric_geometry.hpp"

#include <cmath>
#include <sstream>

#include "qconn/errors.hpp"

namespace qconn {

Complex inner_product(const GnsContext& gns, const MetricOperator& t, const ComplexMatrix& x,
                      const ComplexMatrix& y) {
    return vector_pairing(t, x * gns.omega, y * gns.omega);
}

Complex vector_pairing(const MetricOperator& t, const ComplexVector& u, const ComplexVector& v) {
    ComplexMatrix tm = t.power(1.0);
    return (tm * v).dot(tm * u);
}

Complex transported_pairing(const GaugeFrame& frame, const TransportOperator& pi_x,
                            const TransportOperator& pi_y, const ComplexMatrix& x,
                            const ComplexMatrix& y) {
    ParameterPoint s_point = pi_x.path.point(pi_x.s);
    ParameterPoint t_point = pi_x.path.point(pi_x.t);
    ComplexVector omega = frame.omega(s_point);
    return vector_pairing(frame.metric(t_point), pi_x.matrix * x * omega,
                          pi_y.matrix * y * omega);
}

Complex pulled_back_pairing(const GaugeFrame& frame, const ParameterPoint& s_point,
                            const ParameterPoint& t_point, const ComplexMatrix& z,
                            const ComplexMatrix& x, const ComplexMatrix& y) {
    return vector_pairing(frame.metric(s_point), x * frame.omega(s_point),
                          z * y * frame.omega(t_point));
}

ReducedPairing::ReducedPairing(const MetricOperator& t, const ComplexVector& omega)
    : t_(t.power(1.0)), t_omega_(t_ * omega), norm2_(t_omega_.squaredNorm()) {}

double ReducedPairing::operator()(const ComplexVector& u, const ComplexVector& v) const {
    ComplexVector tu = t_ * u, tv = t_ * v;
    double uo = t_omega_.dot(tu).real();
    double vo = t_omega_.dot(tv).real();
    return tv.dot(tu).real() - uo * vo / norm2_;
}

RealMatrix MetricTensor::inverse() const {
    if (degenerate) {
        std::ostringstream os;
        os << "metric tensor is degenerate (min eigenvalue " << min_eigenvalue << ")";
        throw DegenerateMetricError(os.str());
    }
    return g.inverse();
}

MetricTensor metric_tensor(const GaugeFrame& frame, const ParameterPoint& theta,
                           const VectorPotential& a, double g_floor) {
    const Index n = static_cast<Index>(a.components.size());
    GnsContext ctx = frame.context(theta);
    ReducedPairing red(frame.metric(theta), ctx.omega);
    std::vector<ComplexVector> xi;
    for (const auto& ap : a.components) xi.push_back(ap * ctx.omega);
    MetricTensor m;
    m.theta = theta;
    m.g.resize(n, n);
    for (Index p = 0; p < n; ++p)
        for (Index q = 0; q < n; ++q) m.g(p, q) = red(xi[p], xi[q]);
    m.g = 0.5 * (m.g + m.g.transpose()).eval();
    m.min_eigenvalue = Eigen::SelfAdjointEigenSolver<RealMatrix>(m.g).eigenvalues()(0);
    m.degenerate = !(m.min_eigenvalue >= g_floor);
    return m;
}

ChristoffelSymbols christoffel(const GaugeFrame& frame, const Connection& conn,
                               const ParameterPoint& theta, double fd_step, bool raise) {
    const Index n = theta.size();
    const Index d = conn.dim();
    VectorPotential a = vector_potential(conn, theta, fd_step);
    GnsContext ctx = frame.context(theta);
    ReducedPairing red(frame.metric(theta), ctx.omega);

    // Columns are the tangent wave vectors A_p Omega.
    auto wave_vectors = [&](const ParameterPoint& x) {
        VectorPotential ax = vector_potential(conn, x, fd_step);
        ComplexVector om = frame.omega(x);
        ComplexMatrix out(d, n);
        for (Index p = 0; p < n; ++p) out.col(p) = ax.components[p] * om;
        return out;
    };
    ComplexMatrix xi(d, n);
    for (Index p = 0; p < n; ++p) xi.col(p) = a.components[p] * ctx.omega;

    // dxi[q] column p = D_q xi_p
    std::vector<ComplexMatrix> dxi(n);
    for (Index q = 0; q < n; ++q) {
        RealVector e = RealVector::Unit(n, q);
        dxi[q] = richardson_derivative([&](double t) { return wave_vectors(theta + t * e); }, fd_step) +
                 (kI / conn.hbar()) * a.components[q] * xi;
    }

    ChristoffelSymbols c;
    c.n = n;
    c.theta = theta;
    c.metric = metric_tensor(frame, theta, a);
    c.gamma_lower.assign(n * n * n, 0.0);
    for (Index q = 0; q < n; ++q)
        for (Index p = 0; p < n; ++p)
            for (Index r = 0; r < n; ++r)
                c.gamma_lower[(q * n + p) * n + r] = red(dxi[q].col(p), xi.col(r));
    if (!raise) return c;

    RealMatrix ginv = c.metric.inverse();
    c.gamma_upper.assign(n * n * n, 0.0);
    for (Index r = 0; r < n; ++r)
        for (Index q = 0; q < n; ++q)
            for (Index p = 0; p < n; ++p) {
                double v = 0.0;
                for (Index s = 0; s < n; ++s) v += ginv(r, s) * c.lower(q, p, s);
                c.gamma_upper[(r * n + q) * n + p] = v;
            }
    c.raised = true;

    double worst = 0.0;
    for (Index q = 0; q < n; ++q)
        for (Index p = 0; p < n; ++p) {
            ComplexVector rest = dxi[q].col(p);
            for (Index r = 0; r < n; ++r) rest -= c.upper(r, q, p) * xi.col(r);
            for (Index s = 0; s < n; ++s) worst = std::max(worst, std::abs(red(rest, xi.col(s))));
        }
    c.orthogonality_residual = worst;
    return c;
}

RealMatrix bkm_metric(const ExpFamilyModel& model, const ParameterPoint& theta) {
    DensityMatrix rho = density(model, theta);
    const Index n = model.dim_param();
    const Index dim = model.dim_hilbert();
    std::vector<ComplexMatrix> centred;
    for (const auto& e : model.generators()) {
        double mean = (rho.matrix() * e.matrix()).trace().real();
        centred.push_back(e.matrix() - mean * ComplexMatrix::Identity(dim, dim));
    }
    RealMatrix g(n, n);
    for (Index p = 0; p < n; ++p) {
        ComplexMatrix k = kubo_transform(rho.hermitian(), centred[p]);
        for (Index q = 0; q < n; ++q) g(p, q) = (k * centred[q]).trace().real();
    }
    return 0.5 * (g + g.transpose());
}

}  // namespace qconn
