#include "qconn/matrix_kernel.hpp"

#include <cmath>
#include <sstream>

#include "qconn/errors.hpp"

namespace qconn {

void require_finite(const ComplexMatrix& a, const std::string& what) {
    if (!a.allFinite()) throw ConsistencyError(what + ": non-finite entry");
}

double max_abs(const ComplexMatrix& a) {
    return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) {
    return a * b - b * a;
}

HermitianMatrix::HermitianMatrix(const ComplexMatrix& a, double tol) {
    if (a.rows() != a.cols()) {
        std::ostringstream os;
        os << "Hermitian matrix must be square, got " << a.rows() << "x" << a.cols();
        throw ConfigError(os.str());
    }
    require_finite(a, "HermitianMatrix");
    double defect = max_abs(a - a.adjoint());
    if (defect > tol) {
        std::ostringstream os;
        os << "matrix is not Hermitian: max|A - A^dagger| = " << defect;
        throw ConfigError(os.str());
    }
    m_ = 0.5 * (a + a.adjoint());
}

HermitianMatrix HermitianMatrix::symmetrized(const ComplexMatrix& a) {
    HermitianMatrix h;
    h.m_ = 0.5 * (a + a.adjoint());
    return h;
}

EigenSystem eig_hermitian(const HermitianMatrix& a) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(a.matrix());
    if (solver.info() != Eigen::Success) {
        std::ostringstream os;
        os << "Hermitian eigensolver failed to converge (max|A| = " << max_abs(a.matrix())
           << ", dim " << a.dim() << ")";
        throw EigenSolverError(os.str());
    }
    return {solver.eigenvalues(), solver.eigenvectors(), a.dim()};
}

HermitianMatrix matrix_function(const EigenSystem& es, const std::function<double(double)>& f,
                                const std::string& name) {
    RealVector fv(es.eigenvalues.size());
    for (Index i = 0; i < fv.size(); ++i) {
        fv(i) = f(es.eigenvalues(i));
        if (!std::isfinite(fv(i))) {
            std::ostringstream os;
            os.precision(17);
            os << name << " undefined at eigenvalue " << es.eigenvalues(i);
            throw SpectrumDomainError(os.str());
        }
    }
    const ComplexMatrix& u = es.eigenvectors;
    return HermitianMatrix::symmetrized(u * fv.cast<Complex>().asDiagonal() * u.adjoint());
}

HermitianMatrix matrix_function(const HermitianMatrix& a, const std::function<double(double)>& f,
                                const std::string& name) {
    return matrix_function(eig_hermitian(a), f, name);
}

HermitianMatrix matrix_power(const HermitianMatrix& a, double p, double pd_floor) {
    EigenSystem es = eig_hermitian(a);
    if (es.eigenvalues(0) <= pd_floor) {
        std::ostringstream os;
        os.precision(17);
        os << "matrix power requires a positive definite matrix, min eigenvalue "
           << es.eigenvalues(0);
        throw SpectrumDomainError(os.str());
    }
    return matrix_function(es, [p](double x) { return std::pow(x, p); }, "power");
}

ComplexMatrix unitary_exp(const HermitianMatrix& h, double t) {
    EigenSystem es = eig_hermitian(h);
    ComplexVector phases(es.eigenvalues.size());
    for (Index i = 0; i < phases.size(); ++i) phases(i) = std::exp(-kI * t * es.eigenvalues(i));
    return es.eigenvectors * phases.asDiagonal() * es.eigenvectors.adjoint();
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

ComplexMatrix kubo_transform(const HermitianMatrix& rho, const ComplexMatrix& x, double kubo_tol,
                             double pd_floor) {
    EigenSystem es = eig_hermitian(rho);
    if (es.eigenvalues(0) <= pd_floor) {
        std::ostringstream os;
        os.precision(17);
        os << "Kubo transform requires positive definite rho, min eigenvalue "
           << es.eigenvalues(0);
        throw SpectrumDomainError(os.str());
    }
    const ComplexMatrix& u = es.eigenvectors;
    const RealVector& p = es.eigenvalues;
    ComplexMatrix xt = u.adjoint() * x * u;
    for (Index i = 0; i < p.size(); ++i) {
        for (Index j = 0; j < p.size(); ++j) {
            double li = std::log(p(i)), lj = std::log(p(j));
            double w = std::abs(li - lj) > kubo_tol ? (p(i) - p(j)) / (li - lj) : p(i);
            xt(i, j) *= w;
        }
    }
    return u * xt * u.adjoint();
}

ComplexMatrix checked_inverse(const ComplexMatrix& a, double cond_limit) {
    if (a.rows() != a.cols()) throw InversionError("cannot invert a non-square matrix");
    Eigen::JacobiSVD<ComplexMatrix> svd(a);
    const RealVector& sv = svd.singularValues();
    double smax = sv(0), smin = sv(sv.size() - 1);
    if (!(smin > 0.0) || smax / smin > cond_limit) {
        std::ostringstream os;
        os << "matrix is numerically singular (condition number "
           << (smin > 0.0 ? smax / smin : INFINITY) << ")";
        throw InversionError(os.str());
    }
    return a.partialPivLu().inverse();
}

}  // namespace qconn
