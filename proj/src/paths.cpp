#include "qconn/paths.hpp"

#include <cmath>

#include "qconn/errors.hpp"

namespace qconn {

CurvePath CurvePath::segment(const ParameterPoint& from, const ParameterPoint& to, int samples) {
    if (from.size() != to.size()) throw ConfigError("segment endpoints differ in dimension");
    CurvePath c;
    c.kind_ = Kind::segment;
    c.samples_ = samples;
    RealVector d = to - from;
    c.point_ = [from, d](double t) -> ParameterPoint { return from + t * d; };
    c.velocity_ = [d](double) -> RealVector { return d; };
    return c;
}

CurvePath CurvePath::coordinate_line(const ParameterPoint& base, Index p, int samples) {
    if (p < 0 || p >= base.size()) throw ConfigError("coordinate index out of range");
    CurvePath c = segment(base, base + RealVector::Unit(base.size(), p), samples);
    c.kind_ = Kind::coordinate_line;
    c.coordinate_ = p;
    return c;
}

CurvePath CurvePath::composite(std::vector<CurvePath> legs) {
    if (legs.empty()) throw ConfigError("composite path needs at least one leg");
    const double k = static_cast<double>(legs.size());
    CurvePath c;
    c.kind_ = Kind::composite;
    c.samples_ = 0;
    for (const auto& l : legs) c.samples_ += l.samples();
    auto locate = [k](double t) {
        double u = t * k;
        double idx = std::floor(u);
        if (idx < 0) idx = 0;
        if (idx > k - 1) idx = k - 1;
        return std::pair<size_t, double>{static_cast<size_t>(idx), u - idx};
    };
    c.point_ = [legs, locate](double t) {
        auto [i, u] = locate(t);
        return legs[i].point(u);
    };
    c.velocity_ = [legs, locate, k](double t) -> RealVector {
        auto [i, u] = locate(t);
        return k * legs[i].velocity(u);
    };
    c.legs_ = std::move(legs);
    return c;
}

CurvePath CurvePath::rectangle(const ParameterPoint& base, Index p, Index q, double s, double t,
                               int samples) {
    if (p < 0 || q < 0 || p >= base.size() || q >= base.size() || p == q)
        throw ConfigError("rectangle needs two distinct coordinate indices");
    RealVector a = base, b = base, cc = base, d = base;
    b(p) += s;
    cc(p) += s;
    cc(q) += t;
    d(q) += t;
    std::vector<CurvePath> legs{segment(a, b, samples), segment(b, cc, samples),
                                segment(cc, d, samples), segment(d, a, samples)};
    for (auto& l : legs) l.kind_ = Kind::rectangle_leg;
    return composite(std::move(legs));
}

CurvePath CurvePath::custom(std::function<ParameterPoint(double)> point,
                            std::function<RealVector(double)> velocity, int samples) {
    CurvePath c;
    c.kind_ = Kind::segment;
    c.samples_ = samples;
    c.point_ = std::move(point);
    c.velocity_ = std::move(velocity);
    return c;
}

ParameterPoint CurvePath::point(double t) const { return point_(t); }

RealVector CurvePath::velocity(double t) const { return velocity_(t); }

std::vector<double> CurvePath::breakpoints() const {
    std::vector<double> out;
    for (size_t i = 1; i < legs_.size(); ++i)
        out.push_back(static_cast<double>(i) / static_cast<double>(legs_.size()));
    return out;
}

namespace {

RealVector vec_from_json(const nlohmann::json& j, const std::string& where, Index dim) {
    if (!j.is_array()) throw ConfigError(where + ": expected an array");
    if (static_cast<Index>(j.size()) != dim)
        throw ConfigError(where + ": expected " + std::to_string(dim) + " entries");
    RealVector v(dim);
    for (Index i = 0; i < dim; ++i) {
        if (!j[i].is_number()) throw ConfigError(where + ": entries must be numbers");
        v(i) = j[i].get<double>();
    }
    return v;
}

}  // namespace

CurvePath path_from_json(const nlohmann::json& j, Index dim) {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
        throw ConfigError("path: expected an object with a string 'kind'");
    std::string kind = j["kind"].get<std::string>();
    int samples = j.value("samples", 64);
    if (samples <= 0) throw ConfigError("path.samples must be positive");
    if (!j.contains("from")) throw ConfigError("path.from is required");
    RealVector from = vec_from_json(j["from"], "path.from", dim);
    if (kind == "segment") {
        if (!j.contains("to")) throw ConfigError("path.to is required for a segment");
        return CurvePath::segment(from, vec_from_json(j["to"], "path.to", dim), samples);
    }
    if (kind == "coordinate_line") {
        if (!j.contains("p") || !j["p"].is_number_integer())
            throw ConfigError("path.p must be an integer");
        return CurvePath::coordinate_line(from, j["p"].get<Index>(), samples);
    }
    if (kind == "rectangle") {
        if (!j.contains("p") || !j.contains("q") || !j.contains("size"))
            throw ConfigError("rectangle path needs p, q and size");
        RealVector size = vec_from_json(j["size"], "path.size", 2);
        return CurvePath::rectangle(from, j["p"].get<Index>(), j["q"].get<Index>(), size(0),
                                    size(1), samples);
    }
    throw ConfigError("path.kind '" + kind + "' is not one of segment, coordinate_line, rectangle");
}

}  // namespace qconn
