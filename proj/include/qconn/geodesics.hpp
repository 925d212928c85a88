#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qconn/metric_geometry.hpp"

namespace qconn {

struct GeodesicState {
    ParameterPoint theta;
    RealVector velocity;
    double time = 0.0;
};

// Supplies Gamma^r_{qp} and g_pq along the integration.
struct GeodesicSystem {
    std::function<ChristoffelSymbols(const ParameterPoint&)> christoffel;
    std::function<RealMatrix(const ParameterPoint&)> metric;
    std::string kind;
};

GeodesicSystem connection_geodesic_system(FramePtr frame, ConnectionPtr conn,
                                          double fd_step = kDefaultTolerances.fd_step);

struct GeodesicTrace {
    std::vector<GeodesicState> states;
    std::vector<double> tangent_length;   // g_pq thetadot^p thetadot^q
    double step = 0.0;
    std::string kind;
    bool truncated = false;
    std::string failure;

    // max_t |L(t) - L(0)| / L(0); zero for a zero-length tangent.
    double relative_drift() const;
};

// One classical Runge-Kutta step of thetaddot^s = -Gamma^s_{pq} thetadot^p thetadot^q.
GeodesicState geodesic_step(const GeodesicSystem& system, const GeodesicState& state, double step);

// Fixed-step integration; on a numerical failure the trace is truncated and flagged.
GeodesicTrace integrate_geodesic(const GeodesicSystem& system, const GeodesicState& initial,
                                 double horizon, double step);

// max over sampled (s, t) of |Pi^t_s X(gamma_s) - X(gamma_t) Pi^t_s| / scale.
double autoparallel_residual(const Connection& conn, const OperatorField& field,
                             const CurvePath& path, int sample_count);

struct GeodesicDiagnostics {
    std::vector<double> residual_a;   // per state: |gammadot.A(t) - gammadot.A(0)|
    double drift_a = 0.0;
    double residual_b = 0.0;          // dA_p/dt against (i/hbar)[A_p, gammadot.A]
    double residual_c = 0.0;          // A_p(t) against exp(-i t H/hbar) A_p(0) exp(i t H/hbar)
    double max_expectation = -1.0;    // max |(A_p Omega, Omega)|, -1 when no frame is given
    double scale = 1.0;
};

GeodesicDiagnostics geodesic_diagnostics(const Connection& conn, const GaugeFrame* frame,
                                         const GeodesicTrace& trace,
                                         double fd_step = kDefaultTolerances.fd_step);

}  // namespace qconn
