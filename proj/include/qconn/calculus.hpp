#pragma once

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qconn/connections.hpp"

namespace qconn {

using OperatorField = std::function<ComplexMatrix(const ParameterPoint&)>;
using OperatorTensor = std::vector<std::vector<ComplexMatrix>>;

struct VectorPotential {
    std::vector<ComplexMatrix> components;
    ParameterPoint theta;
    double hbar = 1.0;
    double fd_step = kDefaultTolerances.fd_step;

    // 1 + max_p max|A_p|, the constant C in fd_tol.
    double scale() const;
    double tolerance_unit() const { return fd_tol(fd_step, scale()); }
};

struct ForceTensor {
    OperatorTensor components;
    ParameterPoint theta;
};

struct HolonomyTensor {
    OperatorTensor components;
    ParameterPoint theta;
    std::string estimator;
};

struct LoopEstimate {
    ComplexMatrix value;
    std::vector<double> s_values;
    std::vector<double> increments;   // change of the diagonal Richardson entries
};

struct ResidualReport {
    std::string check;
    ParameterPoint theta;
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

nlohmann::json report_to_json(const ResidualReport& r);

// Central difference of f at 0 with one Richardson level: (4 D(h/2) - D(h)) / 3.
ComplexMatrix richardson_derivative(const std::function<ComplexMatrix(double)>& f, double h);

// i hbar d/dt Pi(theta + t v)^t_0 at t = 0.
ComplexMatrix directional_potential(const Connection& conn, const ParameterPoint& theta,
                                    const RealVector& v, double fd_step = kDefaultTolerances.fd_step);

VectorPotential vector_potential(const Connection& conn, const ParameterPoint& theta,
                                 double fd_step = kDefaultTolerances.fd_step);

ComplexMatrix partial_derivative(const OperatorField& field, const ParameterPoint& theta, Index p,
                                 double fd_step = kDefaultTolerances.fd_step);

// nabla_p X = d_p X + (i/hbar)[A_p, X]
ComplexMatrix covariant_derivative(const VectorPotential& a, const OperatorField& field, Index p);
ComplexMatrix covariant_derivative(const Connection& conn, const OperatorField& field,
                                   const ParameterPoint& theta, Index p,
                                   double fd_step = kDefaultTolerances.fd_step);

// F_pq = d_q A_p - d_p A_q
ForceTensor force_tensor(const Connection& conn, const ParameterPoint& theta,
                         double fd_step = kDefaultTolerances.fd_step);

// H_pq = F_pq - (i/hbar)[A_p, A_q]
HolonomyTensor holonomy_formula(const Connection& conn, const ParameterPoint& theta,
                                double fd_step = kDefaultTolerances.fd_step);
HolonomyTensor holonomy_formula(const Connection& conn, const VectorPotential& a,
                                const ForceTensor& f);

// L(s,t) = Pi(gp^theta)^0_s Pi(gq^{theta+s e_p})^0_t Pi(gp^{theta+t e_q})^s_0 Pi(gq^theta)^t_0
ComplexMatrix loop_operator(const Connection& conn, const ParameterPoint& theta, Index p, Index q,
                            double s, double t);

std::vector<double> default_loop_steps();

// i hbar [L(s,s) - L(s,0) - L(0,s) + L(0,0)] / s^2, Richardson-extrapolated over s_steps.
LoopEstimate holonomy_loop(const Connection& conn, const ParameterPoint& theta, Index p, Index q,
                           const std::vector<double>& s_steps = default_loop_steps());

// (nabla_p nabla_q - nabla_q nabla_p) X
ComplexMatrix curvature_commutator(const Connection& conn, const OperatorField& field,
                                   const ParameterPoint& theta, Index p, Index q,
                                   double fd_step = kDefaultTolerances.fd_step);

// max_p |T A*_p T^{-1} - T^{-1} A_p^dagger T + i hbar T^{-1} (d_p T^2) T^{-1}|
ResidualReport dual_potential_relation(const Connection& conn, const Connection& dual,
                                       const GaugeFrame& frame, const ParameterPoint& theta,
                                       double fd_step = kDefaultTolerances.fd_step);

// max_pq |T H*_pq T^{-1} - T^{-1} H_pq T|
ResidualReport dual_holonomy_conjugation(const Connection& conn, const Connection& dual,
                                         const GaugeFrame& frame, const ParameterPoint& theta,
                                         double fd_step = kDefaultTolerances.fd_step);

double tensor_max(const OperatorTensor& t);

}  // namespace qconn
