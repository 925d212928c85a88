#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qconn/matrix_kernel.hpp"

namespace qconn {

using ParameterPoint = RealVector;

// Strictly positive, unit-trace Hermitian matrix.
class DensityMatrix {
public:
    explicit DensityMatrix(HermitianMatrix rho, double pd_floor = kDefaultTolerances.pd_floor);

    const HermitianMatrix& hermitian() const { return rho_; }
    const ComplexMatrix& matrix() const { return rho_.matrix(); }
    Index dim() const { return rho_.dim(); }

private:
    HermitianMatrix rho_;
};

struct ParameterBox {
    RealVector lower;
    RealVector upper;
};

// rho_theta = exp(theta^k E_k - alpha(theta)).
class ExpFamilyModel {
public:
    ExpFamilyModel(std::vector<HermitianMatrix> generators, std::string preset = {},
                   std::optional<ParameterBox> domain_hint = std::nullopt);

    Index dim_hilbert() const { return dim_hilbert_; }
    Index dim_param() const { return static_cast<Index>(generators_.size()); }
    const std::vector<HermitianMatrix>& generators() const { return generators_; }
    const std::string& preset() const { return preset_; }
    const std::optional<ParameterBox>& domain_hint() const { return domain_hint_; }

    // theta^k E_k
    HermitianMatrix hamiltonian(const ParameterPoint& theta) const;

    // True when all generators commute pairwise.
    bool commuting(double tol = 1e-12) const;

    void check_point(const ParameterPoint& theta) const;

private:
    std::vector<HermitianMatrix> generators_;
    std::string preset_;
    std::optional<ParameterBox> domain_hint_;
    Index dim_hilbert_ = 0;
};

std::vector<std::string> preset_names();
ExpFamilyModel preset_model(const std::string& name);

double log_partition(const ExpFamilyModel& model, const ParameterPoint& theta);
DensityMatrix density(const ExpFamilyModel& model, const ParameterPoint& theta);

struct PerturbedPath {
    std::function<DensityMatrix(double)> rho;
    std::function<double(double)> zeta;
};

// t -> exp(theta^k E_k + t X - alpha(theta) - zeta_X(t)).
PerturbedPath perturbed_path(const ExpFamilyModel& model, const ParameterPoint& theta,
                             const HermitianMatrix& x);

// [X]^K - Tr(rho X) rho
ComplexMatrix tangent(const ExpFamilyModel& model, const ParameterPoint& theta,
                      const HermitianMatrix& x);

nlohmann::json matrix_to_json(const ComplexMatrix& m);
ComplexMatrix matrix_from_json(const nlohmann::json& j, const std::string& where);

nlohmann::json model_to_json(const ExpFamilyModel& model);
ExpFamilyModel model_from_json(const nlohmann::json& j);

}  // namespace qconn
