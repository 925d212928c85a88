#include "qconn/exp_family.hpp"

#include <cmath>
#include <sstream>

#include "qconn/errors.hpp"

namespace qconn {

namespace {

ComplexMatrix from_rows(std::initializer_list<std::initializer_list<Complex>> rows) {
    ComplexMatrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
    Index i = 0;
    for (const auto& r : rows) {
        Index j = 0;
        for (const Complex& v : r) m(i, j++) = v;
        ++i;
    }
    return m;
}

std::vector<HermitianMatrix> pauli(bool x, bool y, bool z) {
    std::vector<HermitianMatrix> out;
    if (x) out.emplace_back(from_rows({{0.0, 1.0}, {1.0, 0.0}}));
    if (y) out.emplace_back(from_rows({{0.0, -kI}, {kI, 0.0}}));
    if (z) out.emplace_back(from_rows({{1.0, 0.0}, {0.0, -1.0}}));
    return out;
}

std::vector<HermitianMatrix> gell_mann() {
    std::vector<HermitianMatrix> out;
    auto unit = [](Index r, Index c) {
        ComplexMatrix m = ComplexMatrix::Zero(3, 3);
        m(r, c) = 1.0;
        return m;
    };
    for (Index a = 0; a < 3; ++a) {
        for (Index b = a + 1; b < 3; ++b) {
            out.emplace_back(unit(a, b) + unit(b, a));
            out.emplace_back(-kI * unit(a, b) + kI * unit(b, a));
        }
    }
    out.emplace_back(unit(0, 0) - unit(1, 1));
    out.emplace_back((unit(0, 0) + unit(1, 1) - 2.0 * unit(2, 2)) / std::sqrt(3.0));
    return out;
}

std::vector<HermitianMatrix> diagonal_pair() {
    ComplexMatrix a = ComplexMatrix::Zero(3, 3), b = ComplexMatrix::Zero(3, 3);
    a.diagonal() << 1.0, -1.0, 0.0;
    b.diagonal() << 1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0), -2.0 / std::sqrt(3.0);
    return {HermitianMatrix(a), HermitianMatrix(b)};
}

}  // namespace

DensityMatrix::DensityMatrix(HermitianMatrix rho, double pd_floor) : rho_(std::move(rho)) {
    double tr = rho_.matrix().trace().real();
    if (std::abs(tr - 1.0) > 1e-10) {
        std::ostringstream os;
        os.precision(17);
        os << "density matrix trace " << tr << " differs from 1";
        throw ConsistencyError(os.str());
    }
    double lmin = eig_hermitian(rho_).eigenvalues(0);
    if (lmin <= pd_floor) {
        std::ostringstream os;
        os.precision(17);
        os << "density matrix not positive definite, min eigenvalue " << lmin;
        throw ConsistencyError(os.str());
    }
}

ExpFamilyModel::ExpFamilyModel(std::vector<HermitianMatrix> generators, std::string preset,
                               std::optional<ParameterBox> domain_hint)
    : generators_(std::move(generators)),
      preset_(std::move(preset)),
      domain_hint_(std::move(domain_hint)) {
    if (generators_.empty()) throw ConfigError("model needs at least one generator");
    dim_hilbert_ = generators_.front().dim();
    for (const auto& g : generators_) {
        if (g.dim() != dim_hilbert_) throw ConfigError("generators must share one dimension");
    }
    // Hilbert-Schmidt Gram matrix must be nonsingular.
    Index n = dim_param();
    RealMatrix gram(n, n);
    for (Index a = 0; a < n; ++a)
        for (Index b = 0; b < n; ++b)
            gram(a, b) = (generators_[a].matrix().adjoint() * generators_[b].matrix()).trace().real();
    double lmin = Eigen::SelfAdjointEigenSolver<RealMatrix>(gram).eigenvalues()(0);
    if (lmin <= 1e-10) {
        std::ostringstream os;
        os << "generators are linearly dependent (Gram min eigenvalue " << lmin << ")";
        throw ConfigError(os.str());
    }
    if (domain_hint_ && (domain_hint_->lower.size() != n || domain_hint_->upper.size() != n))
        throw ConfigError("domain hint dimension does not match the number of generators");
}

HermitianMatrix ExpFamilyModel::hamiltonian(const ParameterPoint& theta) const {
    check_point(theta);
    ComplexMatrix h = ComplexMatrix::Zero(dim_hilbert_, dim_hilbert_);
    for (Index k = 0; k < dim_param(); ++k) h += theta(k) * generators_[k].matrix();
    return HermitianMatrix::symmetrized(h);
}

bool ExpFamilyModel::commuting(double tol) const {
    for (size_t a = 0; a < generators_.size(); ++a)
        for (size_t b = a + 1; b < generators_.size(); ++b)
            if (max_abs(commutator(generators_[a].matrix(), generators_[b].matrix())) > tol)
                return false;
    return true;
}

void ExpFamilyModel::check_point(const ParameterPoint& theta) const {
    if (theta.size() != dim_param()) {
        std::ostringstream os;
        os << "parameter point has " << theta.size() << " entries, model expects "
           << dim_param();
        throw ConfigError(os.str());
    }
    if (!theta.allFinite()) throw ConfigError("parameter point has non-finite entries");
}

std::vector<std::string> preset_names() {
    return {"sigmaz", "pauli2", "pauli_xy", "pauli3", "diag2", "gellmann3"};
}

ExpFamilyModel preset_model(const std::string& name) {
    if (name == "sigmaz") return ExpFamilyModel(pauli(false, false, true), name);
    if (name == "pauli2") return ExpFamilyModel(pauli(true, false, true), name);
    if (name == "pauli_xy") return ExpFamilyModel(pauli(true, true, false), name);
    if (name == "pauli3") return ExpFamilyModel(pauli(true, true, true), name);
    if (name == "diag2") return ExpFamilyModel(diagonal_pair(), name);
    if (name == "gellmann3") return ExpFamilyModel(gell_mann(), name);
    throw ConfigError("unknown preset '" + name + "'");
}

double log_partition(const ExpFamilyModel& model, const ParameterPoint& theta) {
    RealVector ev = eig_hermitian(model.hamiltonian(theta)).eigenvalues;
    double top = ev.maxCoeff();
    return top + std::log((ev.array() - top).exp().sum());
}

DensityMatrix density(const ExpFamilyModel& model, const ParameterPoint& theta) {
    EigenSystem es = eig_hermitian(model.hamiltonian(theta));
    double top = es.eigenvalues.maxCoeff();
    double alpha = top + std::log((es.eigenvalues.array() - top).exp().sum());
    return DensityMatrix(
        matrix_function(es, [alpha](double x) { return std::exp(x - alpha); }, "exp"));
}

PerturbedPath perturbed_path(const ExpFamilyModel& model, const ParameterPoint& theta,
                             const HermitianMatrix& x) {
    if (x.dim() != model.dim_hilbert()) throw ConfigError("perturbation has wrong dimension");
    HermitianMatrix h = model.hamiltonian(theta);
    double alpha = log_partition(model, theta);
    auto shifted = [h, x](double t) {
        return HermitianMatrix::symmetrized(h.matrix() + t * x.matrix());
    };
    auto log_tr_exp = [](const EigenSystem& es) {
        double top = es.eigenvalues.maxCoeff();
        return top + std::log((es.eigenvalues.array() - top).exp().sum());
    };
    PerturbedPath out;
    out.zeta = [shifted, alpha, log_tr_exp](double t) {
        return log_tr_exp(eig_hermitian(shifted(t))) - alpha;
    };
    out.rho = [shifted, log_tr_exp](double t) {
        EigenSystem es = eig_hermitian(shifted(t));
        double norm = log_tr_exp(es);
        return DensityMatrix(
            matrix_function(es, [norm](double v) { return std::exp(v - norm); }, "exp"));
    };
    return out;
}

ComplexMatrix tangent(const ExpFamilyModel& model, const ParameterPoint& theta,
                      const HermitianMatrix& x) {
    if (x.dim() != model.dim_hilbert()) throw ConfigError("tangent direction has wrong dimension");
    DensityMatrix rho = density(model, theta);
    Complex mean = (rho.matrix() * x.matrix()).trace();
    return kubo_transform(rho.hermitian(), x.matrix()) - mean.real() * rho.matrix();
}

nlohmann::json matrix_to_json(const ComplexMatrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
        rows.push_back(row);
    }
    return rows;
}

ComplexMatrix matrix_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a non-empty matrix");
    Index rows = static_cast<Index>(j.size());
    if (!j[0].is_array()) throw ConfigError(where + ": expected rows");
    Index cols = static_cast<Index>(j[0].size());
    ComplexMatrix m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        const auto& row = j[r];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols)
            throw ConfigError(where + ": row " + std::to_string(r) + " has the wrong length");
        for (Index c = 0; c < cols; ++c) {
            const auto& e = row[c];
            std::string at = where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]";
            if (e.is_number()) {
                m(r, c) = e.get<double>();
            } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
                m(r, c) = Complex(e[0].get<double>(), e[1].get<double>());
            } else {
                throw ConfigError(at + ": expected [re, im]");
            }
        }
    }
    return m;
}

nlohmann::json model_to_json(const ExpFamilyModel& model) {
    nlohmann::json j;
    j["N"] = model.dim_hilbert();
    j["generators"] = nlohmann::json::array();
    for (const auto& g : model.generators()) j["generators"].push_back(matrix_to_json(g.matrix()));
    if (!model.preset().empty()) j["preset"] = model.preset();
    return j;
}

ExpFamilyModel model_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("model: expected a JSON object");
    if (j.contains("generators")) {
        if (!j.contains("N") || !j["N"].is_number_integer())
            throw ConfigError("model.N: expected an integer");
        Index n = j["N"].get<Index>();
        const auto& gens = j["generators"];
        if (!gens.is_array() || gens.empty())
            throw ConfigError("model.generators: expected a non-empty array");
        std::vector<HermitianMatrix> out;
        for (size_t k = 0; k < gens.size(); ++k) {
            std::string where = "model.generators[" + std::to_string(k) + "]";
            ComplexMatrix m = matrix_from_json(gens[k], where);
            if (m.rows() != n || m.cols() != n)
                throw ConfigError(where + ": expected " + std::to_string(n) + "x" +
                                  std::to_string(n));
            try {
                out.emplace_back(m);
            } catch (const ConfigError& e) {
                throw ConfigError(where + ": " + e.what());
            }
        }
        std::string preset = j.value("preset", std::string{});
        return ExpFamilyModel(std::move(out), preset);
    }
    if (j.contains("preset") && j["preset"].is_string())
        return preset_model(j["preset"].get<std::string>());
    throw ConfigError("model: needs 'generators' or 'preset'");
}

}  // namespace qconn
