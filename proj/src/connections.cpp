#include "qconn/connections.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "qconn/errors.hpp"

namespace qconn {

Connection::Connection(Index dim, double hbar) : dim_(dim), hbar_(hbar) {
    if (!(hbar > 0.0)) throw ConfigError("hbar must be positive");
}

TransportOperator Connection::transport(const CurvePath& path, double s, double t) const {
    return {transport_matrix(path, s, t), path, s, t, kind()};
}

ProductFormConnection::ProductFormConnection(MatrixField v, Index dim, double hbar,
                                             std::string kind, bool unitary)
    : Connection(dim, hbar), v_(std::move(v)), kind_(std::move(kind)), unitary_(unitary) {}

ComplexMatrix ProductFormConnection::transport_matrix(const CurvePath& path, double s,
                                                      double t) const {
    if (s == t) return ComplexMatrix::Identity(dim(), dim());
    ComplexMatrix vs = v_(path.point(s));
    ComplexMatrix vt = v_(path.point(t));
    if (vs.rows() != dim() || vt.rows() != dim())
        throw ConfigError("product-form field returned a matrix of the wrong size");
    if (unitary_) return vt * vs.adjoint();
    try {
        return vt * checked_inverse(vs);
    } catch (const InversionError& e) {
        throw InversionError(std::string("product-form field V(gamma_s): ") + e.what());
    }
}

ComplexMatrix m_connection_field(const GaugeFrame& frame, const ParameterPoint& theta) {
    GnsContext ctx = frame.context(theta);
    ComplexMatrix left = ctx.basis * ctx.probs.cwiseSqrt().cast<Complex>().asDiagonal();
    return kron(left, ctx.basis);
}

ConnectionPtr make_m_connection(FramePtr frame, double hbar) {
    Index n = frame->model().dim_hilbert();
    return std::make_shared<ProductFormConnection>(
        [frame](const ParameterPoint& theta) { return m_connection_field(*frame, theta); }, n * n,
        hbar, "m_connection", false);
}

DualConnection::DualConnection(ConnectionPtr base, FramePtr frame, bool unitary)
    : Connection(base->dim(), base->hbar()),
      base_(std::move(base)),
      frame_(std::move(frame)),
      unitary_(unitary) {
    Index n = frame_->model().dim_hilbert();
    if (base_->dim() != n * n) throw ConfigError("dual connection: dimension mismatch with frame");
}

ComplexMatrix DualConnection::transport_matrix(const CurvePath& path, double s, double t) const {
    if (s == t) return ComplexMatrix::Identity(dim(), dim());
    ComplexMatrix back = base_->transport_matrix(path, t, s);
    MetricOperator ts = frame_->metric(path.point(s));
    MetricOperator tt = frame_->metric(path.point(t));
    return tt.power(-2.0) * back.adjoint() * ts.power(2.0);
}

AlphaConnection::AlphaConnection(ConnectionPtr unitary_base, FramePtr frame, double alpha)
    : Connection(unitary_base->dim(), unitary_base->hbar()),
      base_(std::move(unitary_base)),
      frame_(std::move(frame)),
      alpha_(alpha) {
    if (!base_->unitary()) throw ConfigError("alpha family needs a unitary base connection");
    if (!std::isfinite(alpha)) throw ConfigError("alpha must be finite");
}

std::string AlphaConnection::kind() const {
    std::ostringstream os;
    os << "alpha(" << alpha_ << ")";
    return os.str();
}

ComplexMatrix AlphaConnection::transport_matrix(const CurvePath& path, double s, double t) const {
    if (s == t) return ComplexMatrix::Identity(dim(), dim());
    ComplexMatrix pi1 = base_->transport_matrix(path, s, t);
    if (alpha_ == 1.0) return pi1;
    double lam = 1.0 - alpha_;
    MetricOperator ts = frame_->metric(path.point(s));
    MetricOperator tt = frame_->metric(path.point(t));
    return tt.power(-lam) * pi1 * ts.power(lam);
}

SyntheticConnection::SyntheticConnection(GeneratorField field, Index dim, double hbar,
                                         double steps_per_unit, int min_steps)
    : Connection(dim, hbar),
      field_(std::move(field)),
      steps_per_unit_(steps_per_unit),
      min_steps_(min_steps) {}

std::shared_ptr<SyntheticConnection> SyntheticConnection::random(Index dim, Index n_params,
                                                                 std::uint64_t seed, double hbar,
                                                                 double scale) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto herm = [&]() {
        ComplexMatrix m(dim, dim);
        for (Index i = 0; i < dim; ++i)
            for (Index j = 0; j < dim; ++j) m(i, j) = Complex(gauss(rng), gauss(rng));
        return ComplexMatrix(0.5 * scale * (m + m.adjoint()));
    };
    std::vector<ComplexMatrix> b(n_params);
    std::vector<std::vector<ComplexMatrix>> c(n_params, std::vector<ComplexMatrix>(n_params));
    for (Index p = 0; p < n_params; ++p) {
        b[p] = herm();
        for (Index k = 0; k < n_params; ++k) c[p][k] = herm();
    }
    GeneratorField field = [b, c](const ParameterPoint& theta) {
        std::vector<ComplexMatrix> out(b.size());
        for (size_t p = 0; p < b.size(); ++p) {
            out[p] = b[p];
            for (size_t k = 0; k < b.size(); ++k) out[p] += std::sin(theta(k)) * c[p][k];
        }
        return out;
    };
    return std::make_shared<SyntheticConnection>(field, dim, hbar);
}

ComplexMatrix SyntheticConnection::integrate(const CurvePath& path, double a, double b) const {
    const double c1 = 0.5 - std::sqrt(3.0) / 6.0, c2 = 0.5 + std::sqrt(3.0) / 6.0;
    double span = std::abs(b - a);
    double speed = std::max(path.velocity(a).norm(), path.velocity(0.5 * (a + b)).norm());
    int steps = std::max(min_steps_, static_cast<int>(std::ceil(steps_per_unit_ * span * speed)));
    double h = (b - a) / steps;
    auto generator = [&](double tau) {
        RealVector v = path.velocity(tau);
        std::vector<ComplexMatrix> a_p = field_(path.point(tau));
        ComplexMatrix m = ComplexMatrix::Zero(dim(), dim());
        for (size_t p = 0; p < a_p.size(); ++p) m += v(static_cast<Index>(p)) * a_p[p];
        return ComplexMatrix((-kI / hbar()) * m);
    };
    ComplexMatrix pi = ComplexMatrix::Identity(dim(), dim());
    for (int k = 0; k < steps; ++k) {
        double tau = a + k * h;
        ComplexMatrix m1 = generator(tau + c1 * h);
        ComplexMatrix m2 = generator(tau + c2 * h);
        ComplexMatrix omega = 0.5 * h * (m1 + m2) + (std::sqrt(3.0) / 12.0) * h * h * commutator(m2, m1);
        // omega is anti-Hermitian: exp(omega) = exp(-i (i omega)).
        pi = unitary_exp(HermitianMatrix::symmetrized(kI * omega), 1.0) * pi;
    }
    return pi;
}

ComplexMatrix SyntheticConnection::transport_matrix(const CurvePath& path, double s,
                                                    double t) const {
    if (s == t) return ComplexMatrix::Identity(dim(), dim());
    std::vector<double> cuts{s};
    std::vector<double> br = path.breakpoints();
    if (t < s) std::reverse(br.begin(), br.end());
    for (double x : br)
        if ((x - s) * (x - t) < 0.0) cuts.push_back(x);
    cuts.push_back(t);
    ComplexMatrix pi = ComplexMatrix::Identity(dim(), dim());
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        // Evaluate each leg strictly inside its own parameter range.
        double a = cuts[i], b = cuts[i + 1];
        pi = integrate(path, a, b) * pi;
    }
    return pi;
}

GaugeShiftedConnection::GaugeShiftedConnection(ConnectionPtr base,
                                               std::function<double(const ParameterPoint&)> phi)
    : Connection(base->dim(), base->hbar()), base_(std::move(base)), phi_(std::move(phi)) {}

ComplexMatrix GaugeShiftedConnection::transport_matrix(const CurvePath& path, double s,
                                                       double t) const {
    double dphi = phi_(path.point(t)) - phi_(path.point(s));
    return std::exp(kI * dphi) * base_->transport_matrix(path, s, t);
}

ConnectionPtr make_dual_connection(FramePtr frame, double hbar) {
    return std::make_shared<DualConnection>(make_m_connection(frame, hbar), frame, true);
}

ConnectionPtr make_alpha_connection(FramePtr frame, double alpha, double hbar) {
    return std::make_shared<AlphaConnection>(make_dual_connection(frame, hbar), frame, alpha);
}

ConnectionPtr make_density_connection(FramePtr frame, const std::string& kind, double alpha,
                                      double hbar) {
    if (kind == "m") return make_m_connection(frame, hbar);
    if (kind == "dual") return make_dual_connection(frame, hbar);
    if (kind == "alpha") return make_alpha_connection(frame, alpha, hbar);
    throw ConfigError("unknown connection kind '" + kind + "' (expected m, dual or alpha)");
}

ComplexMatrix lift_transport(const TransportOperator& pi, const ComplexMatrix& x) {
    return pi.matrix * x * checked_inverse(pi.matrix);
}

}  // namespace qconn
