#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "qconn/gns.hpp"
#include "qconn/paths.hpp"

namespace qconn {

struct TransportOperator {
    ComplexMatrix matrix;
    CurvePath path;
    double s = 0.0;
    double t = 0.0;
    std::string connection_kind;
};

// Provider of parallel transport operators Pi(gamma)^t_s on C^dim.
class Connection {
public:
    Connection(Index dim, double hbar);
    virtual ~Connection() = default;

    virtual std::string kind() const = 0;
    virtual bool unitary() const { return false; }
    virtual ComplexMatrix transport_matrix(const CurvePath& path, double s, double t) const = 0;

    TransportOperator transport(const CurvePath& path, double s, double t) const;

    Index dim() const { return dim_; }
    double hbar() const { return hbar_; }

private:
    Index dim_;
    double hbar_;
};

using ConnectionPtr = std::shared_ptr<const Connection>;
using FramePtr = std::shared_ptr<const GaugeFrame>;
using MatrixField = std::function<ComplexMatrix(const ParameterPoint&)>;

// Pi^t_s = V(gamma_t) V(gamma_s)^{-1}
class ProductFormConnection : public Connection {
public:
    ProductFormConnection(MatrixField v, Index dim, double hbar = 1.0,
                          std::string kind = "product_form", bool unitary = false);

    std::string kind() const override { return kind_; }
    bool unitary() const override { return unitary_; }
    ComplexMatrix transport_matrix(const CurvePath& path, double s, double t) const override;
    const MatrixField& field() const { return v_; }

private:
    MatrixField v_;
    std::string kind_;
    bool unitary_;
};

// (rho^{1/2} W) (x) W in the frame's gauge, W having columns psi_i.
ComplexMatrix m_connection_field(const GaugeFrame& frame, const ParameterPoint& theta);

ConnectionPtr make_m_connection(FramePtr frame, double hbar = 1.0);

// Pi*^t_s = T_t^{-2} [Pi^s_t]^dagger T_s^2
class DualConnection : public Connection {
public:
    DualConnection(ConnectionPtr base, FramePtr frame, bool unitary);

    std::string kind() const override { return unitary_ ? "unitary_dual" : "dual"; }
    bool unitary() const override { return unitary_; }
    ComplexMatrix transport_matrix(const CurvePath& path, double s, double t) const override;
    const ConnectionPtr& base() const { return base_; }

private:
    ConnectionPtr base_;
    FramePtr frame_;
    bool unitary_;
};

// Pi_alpha^t_s = T_t^{-(1-alpha)} Pi_1^t_s T_s^{1-alpha} for a unitary Pi_1.
class AlphaConnection : public Connection {
public:
    AlphaConnection(ConnectionPtr unitary_base, FramePtr frame, double alpha);

    std::string kind() const override;
    bool unitary() const override { return alpha_ == 1.0; }
    ComplexMatrix transport_matrix(const CurvePath& path, double s, double t) const override;
    double alpha() const { return alpha_; }

private:
    ConnectionPtr base_;
    FramePtr frame_;
    double alpha_;
};

using GeneratorField = std::function<std::vector<ComplexMatrix>(const ParameterPoint&)>;

// Transport obtained by integrating i hbar dPi/dt = gammadot^p A_p(gamma) Pi
// with a fourth-order Magnus scheme. A_p must be Hermitian.
class SyntheticConnection : public Connection {
public:
    SyntheticConnection(GeneratorField field, Index dim, double hbar = 1.0,
                        double steps_per_unit = 64.0, int min_steps = 8);

    // A_p(theta) = B_p + sum_k sin(theta^k) C_pk with seeded Hermitian B, C.
    static std::shared_ptr<SyntheticConnection> random(Index dim, Index n_params,
                                                       std::uint64_t seed, double hbar = 1.0,
                                                       double scale = 0.5);

    std::string kind() const override { return "synthetic"; }
    bool unitary() const override { return true; }
    ComplexMatrix transport_matrix(const CurvePath& path, double s, double t) const override;
    std::vector<ComplexMatrix> generators(const ParameterPoint& theta) const { return field_(theta); }

private:
    ComplexMatrix integrate(const CurvePath& path, double a, double b) const;

    GeneratorField field_;
    double steps_per_unit_;
    int min_steps_;
};

// Pi'^t_s = exp(i (phi(gamma_t) - phi(gamma_s))) Pi^t_s, so A_p -> A_p - hbar d_p phi.
class GaugeShiftedConnection : public Connection {
public:
    GaugeShiftedConnection(ConnectionPtr base, std::function<double(const ParameterPoint&)> phi);

    std::string kind() const override { return base_->kind() + "+u1"; }
    bool unitary() const override { return base_->unitary(); }
    ComplexMatrix transport_matrix(const CurvePath& path, double s, double t) const override;

private:
    ConnectionPtr base_;
    std::function<double(const ParameterPoint&)> phi_;
};

ConnectionPtr make_dual_connection(FramePtr frame, double hbar = 1.0);
ConnectionPtr make_alpha_connection(FramePtr frame, double alpha, double hbar = 1.0);
// kind: "m", "dual" or "alpha"
ConnectionPtr make_density_connection(FramePtr frame, const std::string& kind, double alpha,
                                      double hbar = 1.0);

// Pi X Pi^{-1}
ComplexMatrix lift_transport(const TransportOperator& pi, const ComplexMatrix& x);

}  // namespace qconn
