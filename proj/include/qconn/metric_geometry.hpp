#pragma once

#include <vector>

#include "qconn/calculus.hpp"

namespace qconn {

// (X, Y)_theta = <T X Omega, T Y Omega>, linear in X, conjugate-linear in Y.
Complex inner_product(const GnsContext& gns, const MetricOperator& t, const ComplexMatrix& x,
                      const ComplexMatrix& y);

// <T u, T v>, linear in u.
Complex vector_pairing(const MetricOperator& t, const ComplexVector& u, const ComplexVector& v);

// <T_t Pi_x X Omega_s, T_t Pi_y Y Omega_s>: the pairing of transported tangent
// operators, evaluated on the transported wave vector. Both transports must
// share the same path and endpoints.
Complex transported_pairing(const GaugeFrame& frame, const TransportOperator& pi_x,
                            const TransportOperator& pi_y, const ComplexMatrix& x,
                            const ComplexMatrix& y);

// <T_s X Omega_s, T_s Z Y Omega_t> with Z mapping the fibre at t back to s.
Complex pulled_back_pairing(const GaugeFrame& frame, const ParameterPoint& s_point,
                            const ParameterPoint& t_point, const ComplexMatrix& z,
                            const ComplexMatrix& x, const ComplexMatrix& y);

// Real pairing with the direction of Omega projected out:
// Re<Tu,Tv> - Re<Tu,T Omega> Re<Tv,T Omega> / |T Omega|^2.
class ReducedPairing {
public:
    ReducedPairing(const MetricOperator& t, const ComplexVector& omega);
    double operator()(const ComplexVector& u, const ComplexVector& v) const;

private:
    ComplexMatrix t_;
    ComplexVector t_omega_;
    double norm2_;
};

struct MetricTensor {
    RealMatrix g;
    ParameterPoint theta;
    double min_eigenvalue = 0.0;
    bool degenerate = false;

    // DegenerateMetricError when flagged.
    RealMatrix inverse() const;
};

// g_pq from the reduced pairing of the tangent wave vectors A_p Omega.
MetricTensor metric_tensor(const GaugeFrame& frame, const ParameterPoint& theta,
                           const VectorPotential& a, double g_floor = kDefaultTolerances.g_floor);

struct ChristoffelSymbols {
    Index n = 0;
    ParameterPoint theta;
    std::vector<double> gamma_lower;   // (q, p, r) -> Gamma_{qp,r}
    std::vector<double> gamma_upper;   // (r, q, p) -> Gamma^r_{qp}
    bool raised = false;
    double orthogonality_residual = 0.0;
    MetricTensor metric;

    double lower(Index q, Index p, Index r) const { return gamma_lower[(q * n + p) * n + r]; }
    double upper(Index r, Index q, Index p) const { return gamma_upper[(r * n + q) * n + p]; }
};

// Gamma_{qp,r} = <D_q (A_p Omega), A_r Omega>_red with
// D_q xi = d_q xi + (i/hbar) A_q xi, raised with g when it is non-degenerate.
ChristoffelSymbols christoffel(const GaugeFrame& frame, const Connection& conn,
                               const ParameterPoint& theta,
                               double fd_step = kDefaultTolerances.fd_step, bool raise = true);

// Kubo-Mori metric d_p d_q alpha(theta), for comparison only.
RealMatrix bkm_metric(const ExpFamilyModel& model, const ParameterPoint& theta);

}  // namespace qconn
