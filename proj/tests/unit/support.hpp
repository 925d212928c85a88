#pragma once

#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "qconn/matrix_kernel.hpp"

namespace qconn::testing {

inline ComplexMatrix random_matrix(std::mt19937_64& rng, Index n, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    ComplexMatrix m(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) m(i, j) = Complex(g(rng), g(rng));
    return m;
}

inline ComplexMatrix random_hermitian(std::mt19937_64& rng, Index n, double scale = 1.0) {
    ComplexMatrix m = random_matrix(rng, n, scale);
    return 0.5 * (m + m.adjoint());
}

// Dense oracles through Eigen's general matrix functions.
inline ComplexMatrix expm(const ComplexMatrix& a) { return a.exp(); }
inline ComplexMatrix logm(const ComplexMatrix& a) { return a.log(); }

inline ComplexMatrix pauli_x() { return (ComplexMatrix(2, 2) << 0, 1, 1, 0).finished(); }
inline ComplexMatrix pauli_y() { return (ComplexMatrix(2, 2) << 0, Complex(0, -1), Complex(0, 1), 0).finished(); }
inline ComplexMatrix pauli_z() { return (ComplexMatrix(2, 2) << 1, 0, 0, -1).finished(); }

inline RealVector vec(std::initializer_list<double> xs) {
    RealVector v(static_cast<Index>(xs.size()));
    Index k = 0;
    for (double x : xs) v(k++) = x;
    return v;
}

}  // namespace qconn::testing
