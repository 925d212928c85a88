#include "qconn/gns.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "qconn/errors.hpp"

namespace qconn {

namespace {

std::string format_point(const ParameterPoint& theta) {
    std::ostringstream os;
    os << std::setprecision(17) << "(";
    for (Index i = 0; i < theta.size(); ++i) os << (i ? "," : "") << theta(i);
    os << ")";
    return os.str();
}

// Inverse square root of a small Hermitian positive matrix.
ComplexMatrix inv_sqrt(const ComplexMatrix& m) {
    EigenSystem es = eig_hermitian(HermitianMatrix::symmetrized(m));
    RealVector d = es.eigenvalues;
    for (Index i = 0; i < d.size(); ++i) {
        if (d(i) <= 1e-14) throw ContinuationLostError("degenerate cluster lost its continuation");
        d(i) = 1.0 / std::sqrt(d(i));
    }
    return es.eigenvectors * d.cast<Complex>().asDiagonal() * es.eigenvectors.adjoint();
}

void fix_phase(ComplexMatrix& basis, Index col, Index pivot) {
    Complex c = basis(pivot, col);
    basis.col(col) *= std::conj(c) / std::abs(c);
    basis(pivot, col) = std::abs(basis(pivot, col));
}

}  // namespace

ComplexVector assemble_omega(const RealVector& probs, const ComplexMatrix& basis) {
    Index n = probs.size();
    ComplexVector omega = ComplexVector::Zero(n * n);
    for (Index i = 0; i < n; ++i) {
        ComplexVector psi = basis.col(i);
        omega += std::sqrt(probs(i)) * kron(psi, psi);
    }
    return omega;
}

ComplexMatrix lift(const ComplexMatrix& b) {
    return kron(b, ComplexMatrix::Identity(b.rows(), b.rows()));
}

GnsContext gns_context(const ExpFamilyModel& model, const ParameterPoint& theta,
                       const GnsContext* continuation, const GnsOptions& opts) {
    DensityMatrix rho = density(model, theta);
    EigenSystem es = eig_hermitian(rho.hermitian());
    const Index n = es.eigenvalues.size();
    const RealVector& ev = es.eigenvalues;

    GnsContext ctx;
    ctx.theta = theta;
    ctx.probs.resize(n);
    ctx.basis.resize(n, n);
    ctx.min_gap = INFINITY;
    Index gap_at = 0;
    for (Index i = 0; i + 1 < n; ++i) {
        if (ev(i + 1) - ev(i) < ctx.min_gap) {
            ctx.min_gap = ev(i + 1) - ev(i);
            gap_at = i;
        }
    }
    if (n == 1) ctx.min_gap = 0.0;

    if (continuation == nullptr) {
        if (n > 1 && ctx.min_gap <= opts.degeneracy_guard) {
            std::ostringstream os;
            os << std::setprecision(17) << "near-degenerate spectrum at theta="
               << format_point(theta) << ": eigenvalues " << ev(gap_at) << " and "
               << ev(gap_at + 1) << " collide; supply a continuation anchor";
            throw DegeneracyError(os.str());
        }
        ctx.pivots.resize(n);
        ctx.min_pivot = INFINITY;
        for (Index i = 0; i < n; ++i) {
            ctx.probs(i) = ev(n - 1 - i);
            ctx.basis.col(i) = es.eigenvectors.col(n - 1 - i);
            Index piv = 0;
            ctx.basis.col(i).cwiseAbs().maxCoeff(&piv);
            ctx.pivots[i] = piv;
            ctx.min_pivot = std::min(ctx.min_pivot, std::abs(ctx.basis(piv, i)));
            fix_phase(ctx.basis, i, piv);
        }
        ctx.reference_tag = "anchor" + format_point(theta);
        ctx.omega = assemble_omega(ctx.probs, ctx.basis);
        return ctx;
    }

    const GnsContext& cont = *continuation;
    if (cont.dim() != n) throw ConfigError("continuation context has the wrong dimension");
    ComplexMatrix u = es.eigenvectors;

    // Rotate each degenerate cluster onto the continuation columns it best represents.
    Index start = 0;
    while (start < n) {
        Index stop = start + 1;
        while (stop < n && ev(stop) - ev(stop - 1) <= opts.degeneracy_guard) ++stop;
        Index k = stop - start;
        if (k > 1) {
            ComplexMatrix e = u.middleCols(start, k);
            RealVector weight = (e.adjoint() * cont.basis).colwise().squaredNorm().transpose();
            std::vector<Index> order(n);
            for (Index j = 0; j < n; ++j) order[j] = j;
            std::stable_sort(order.begin(), order.end(),
                             [&](Index a, Index b) { return weight(a) > weight(b); });
            ComplexMatrix cs(n, k);
            for (Index j = 0; j < k; ++j) cs.col(j) = cont.basis.col(order[j]);
            ComplexMatrix m = e.adjoint() * cs;
            u.middleCols(start, k) = e * m * inv_sqrt(m.adjoint() * m);
        }
        start = stop;
    }

    RealMatrix overlap = (cont.basis.adjoint() * u).cwiseAbs2();
    std::vector<bool> used(n, false);
    ctx.pivots = cont.pivots;
    ctx.min_pivot = INFINITY;
    for (Index j = 0; j < n; ++j) {
        Index best = 0;
        double w = overlap.row(j).maxCoeff(&best);
        if (w < opts.overlap_threshold || used[best]) {
            std::ostringstream os;
            os << std::setprecision(6) << "basis continuation lost at theta="
               << format_point(theta) << " (label " << j << ", max |overlap|^2 = " << w
               << "); use a smaller path step";
            throw ContinuationLostError(os.str());
        }
        used[best] = true;
        ctx.probs(j) = ev(best);
        ctx.basis.col(j) = u.col(best);
        double mag = std::abs(ctx.basis(ctx.pivots[j], j));
        ctx.min_pivot = std::min(ctx.min_pivot, mag);
        if (mag < opts.pivot_floor) {
            std::ostringstream os;
            os << "gauge pivot of label " << j << " vanishes at theta=" << format_point(theta);
            throw ContinuationLostError(os.str());
        }
        fix_phase(ctx.basis, j, ctx.pivots[j]);
    }
    ctx.reference_tag = cont.reference_tag;
    ctx.omega = assemble_omega(ctx.probs, ctx.basis);
    return ctx;
}

MetricOperator::MetricOperator(ParameterPoint theta, RealVector probs, ComplexMatrix basis)
    : theta_(std::move(theta)), probs_(std::move(probs)), basis_(std::move(basis)) {
    if (probs_.minCoeff() <= 0.0)
        throw SpectrumDomainError("metric operator needs a strictly positive density");
}

ComplexMatrix MetricOperator::power(double lambda) const {
    RealVector d = probs_.array().pow(-lambda / 4.0);
    return lift(basis_ * d.cast<Complex>().asDiagonal() * basis_.adjoint());
}

MetricOperator metric_operator(const ExpFamilyModel& model, const ParameterPoint& theta,
                               const GnsContext& gns) {
    model.check_point(theta);
    return MetricOperator(theta, gns.probs, gns.basis);
}

GaugeFrame::GaugeFrame(ExpFamilyModel model, const ParameterPoint& anchor_theta, GnsOptions opts)
    : model_(std::move(model)), opts_(opts), anchor_(gns_context(model_, anchor_theta, nullptr, opts_)) {}

GnsContext GaugeFrame::context(const ParameterPoint& theta) const {
    try {
        return gns_context(model_, theta, &anchor_, opts_);
    } catch (const ContinuationLostError&) {
        if (opts_.max_bisections < 1) throw;
    }
    // Chain along the straight segment from the anchor, halving the step on failure.
    const ParameterPoint& a = anchor_.theta;
    GnsContext current = anchor_;
    double u = 0.0, step = 0.5;
    int bisections = 1;
    while (u < 1.0) {
        double next = std::min(1.0, u + step);
        try {
            current = gns_context(model_, a + next * (theta - a), &current, opts_);
            u = next;
        } catch (const ContinuationLostError& e) {
            if (++bisections > opts_.max_bisections)
                throw ContinuationLostError(std::string(e.what()) +
                                            " (step halving exhausted)");
            step *= 0.5;
        }
    }
    return current;
}

MetricOperator GaugeFrame::metric(const ParameterPoint& theta) const {
    EigenSystem es = eig_hermitian(density(model_, theta).hermitian());
    return MetricOperator(theta, es.eigenvalues, es.eigenvectors);
}

nlohmann::json context_to_json(const GnsContext& ctx) {
    nlohmann::json j;
    j["theta"] = std::vector<double>(ctx.theta.data(), ctx.theta.data() + ctx.theta.size());
    j["probs"] = std::vector<double>(ctx.probs.data(), ctx.probs.data() + ctx.probs.size());
    j["basis"] = matrix_to_json(ctx.basis);
    j["pivots"] = ctx.pivots;
    j["reference_tag"] = ctx.reference_tag;
    return j;
}

GnsContext context_from_json(const nlohmann::json& j) {
    GnsContext ctx;
    try {
        auto theta = j.at("theta").get<std::vector<double>>();
        auto probs = j.at("probs").get<std::vector<double>>();
        ctx.theta = Eigen::Map<RealVector>(theta.data(), static_cast<Index>(theta.size()));
        ctx.probs = Eigen::Map<RealVector>(probs.data(), static_cast<Index>(probs.size()));
        ctx.basis = matrix_from_json(j.at("basis"), "context.basis");
        ctx.pivots = j.at("pivots").get<std::vector<Index>>();
        ctx.reference_tag = j.value("reference_tag", std::string{});
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("context: ") + e.what());
    }
    if (ctx.basis.rows() != ctx.probs.size() || ctx.basis.cols() != ctx.probs.size() ||
        static_cast<Index>(ctx.pivots.size()) != ctx.probs.size())
        throw ConfigError("context: inconsistent sizes");
    ctx.omega = assemble_omega(ctx.probs, ctx.basis);
    return ctx;
}

}  // namespace qconn
