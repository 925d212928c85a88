#pragma once

#include <complex>
#include <functional>
#include <string>

#include <Eigen/Dense>

#include "qconn/tolerances.hpp"

namespace qconn {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr Complex kI{0.0, 1.0};

// Throws ConsistencyError naming `what` if any entry is NaN or infinite.
void require_finite(const ComplexMatrix& a, const std::string& what);

// Largest absolute entry.
double max_abs(const ComplexMatrix& a);

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b);

// Square matrix validated as Hermitian and stored as (A + A^dagger)/2.
class HermitianMatrix {
public:
    HermitianMatrix() = default;
    explicit HermitianMatrix(const ComplexMatrix& a,
                             double tol = kDefaultTolerances.hermitian_tol);

    // Skips the tolerance check; used for results that are Hermitian by construction.
    static HermitianMatrix symmetrized(const ComplexMatrix& a);

    const ComplexMatrix& matrix() const { return m_; }
    Index dim() const { return m_.rows(); }

private:
    ComplexMatrix m_;
};

struct EigenSystem {
    RealVector eigenvalues;       // ascending
    ComplexMatrix eigenvectors;   // columns
    Index source_dim = 0;
};

EigenSystem eig_hermitian(const HermitianMatrix& a);

// U diag(f(lambda)) U^dagger. A non-finite f value is a SpectrumDomainError.
HermitianMatrix matrix_function(const HermitianMatrix& a,
                                const std::function<double(double)>& f,
                                const std::string& name = "f");

// Same, reusing an existing eigendecomposition.
HermitianMatrix matrix_function(const EigenSystem& es,
                                const std::function<double(double)>& f,
                                const std::string& name = "f");

// a^p for strictly positive a.
HermitianMatrix matrix_power(const HermitianMatrix& a, double p,
                             double pd_floor = kDefaultTolerances.pd_floor);

// exp(-i t h) for Hermitian h.
ComplexMatrix unitary_exp(const HermitianMatrix& h, double t);

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

// [X]^K = int_0^1 rho^u X rho^{1-u} du, closed form in the eigenbasis of rho.
ComplexMatrix kubo_transform(const HermitianMatrix& rho, const ComplexMatrix& x,
                             double kubo_tol = kDefaultTolerances.kubo_degeneracy_tol,
                             double pd_floor = kDefaultTolerances.pd_floor);

// Inverse with a condition-number guard; InversionError beyond cond_limit.
ComplexMatrix checked_inverse(const ComplexMatrix& a, double cond_limit = 1e12);

}  // namespace qconn
