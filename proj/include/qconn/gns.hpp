#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qconn/exp_family.hpp"

namespace qconn {

// Eigen-data of rho_theta in a fixed gauge, with the wave vector
// Omega = sum_i sqrt(p_i) psi_i (x) psi_i.
struct GnsContext {
    ParameterPoint theta;
    RealVector probs;
    ComplexMatrix basis;            // columns psi_i
    ComplexVector omega;            // length N^2
    std::vector<Index> pivots;      // per label, the entry kept real positive
    std::string reference_tag;
    double min_gap = 0.0;           // smallest spacing of the spectrum
    double min_pivot = 0.0;         // smallest |pivot entry| before phase fixing

    Index dim() const { return probs.size(); }
};

struct GnsOptions {
    double degeneracy_guard = kDefaultTolerances.degeneracy_guard;
    double overlap_threshold = kDefaultTolerances.overlap_threshold;
    double pivot_floor = kDefaultTolerances.pivot_floor;
    int max_bisections = kDefaultTolerances.max_bisections;
};

// Without a continuation the spectrum must be separated by the degeneracy guard;
// labels then follow descending eigenvalues. With a continuation, labels follow
// maximal overlap and the phase of each column is fixed at the continuation's pivot.
GnsContext gns_context(const ExpFamilyModel& model, const ParameterPoint& theta,
                       const GnsContext* continuation = nullptr, const GnsOptions& opts = {});

ComplexVector assemble_omega(const RealVector& probs, const ComplexMatrix& basis);

// B (x) I
ComplexMatrix lift(const ComplexMatrix& b);

// T = rho^{-1/4} (x) I, stored through the spectral data of rho.
class MetricOperator {
public:
    MetricOperator(ParameterPoint theta, RealVector probs, ComplexMatrix basis);

    const ParameterPoint& theta() const { return theta_; }
    // T^lambda = rho^{-lambda/4} (x) I
    ComplexMatrix power(double lambda) const;
    HermitianMatrix t_matrix() const { return HermitianMatrix::symmetrized(power(1.0)); }
    ComplexMatrix inverse() const { return power(-1.0); }
    Index dim() const { return basis_.rows() * basis_.rows(); }

private:
    ParameterPoint theta_;
    RealVector probs_;
    ComplexMatrix basis_;
};

MetricOperator metric_operator(const ExpFamilyModel& model, const ParameterPoint& theta,
                               const GnsContext& gns);

// Gauge frame: one anchor context from which every other context is continued.
// The result at a given theta does not depend on the path used to reach it.
class GaugeFrame {
public:
    GaugeFrame(ExpFamilyModel model, const ParameterPoint& anchor_theta, GnsOptions opts = {});

    const ExpFamilyModel& model() const { return model_; }
    const GnsContext& anchor() const { return anchor_; }
    const GnsOptions& options() const { return opts_; }

    GnsContext context(const ParameterPoint& theta) const;
    ComplexVector omega(const ParameterPoint& theta) const { return context(theta).omega; }
    // Gauge independent; computed from rho directly.
    MetricOperator metric(const ParameterPoint& theta) const;

private:
    ExpFamilyModel model_;
    GnsOptions opts_;
    GnsContext anchor_;
};

nlohmann::json context_to_json(const GnsContext& ctx);
GnsContext context_from_json(const nlohmann::json& j);

}  // namespace qconn
