#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <nlohmann/json.hpp>

#include "qconn/exp_family.hpp"

namespace qconn {

// A smooth curve t -> theta(t). Segments and coordinate lines extend linearly
// beyond [0, 1]; composites split [0, 1] evenly among their legs.
class CurvePath {
public:
    enum class Kind { segment, coordinate_line, composite, rectangle_leg };

    static CurvePath segment(const ParameterPoint& from, const ParameterPoint& to, int samples = 64);
    // t -> base + t e_p
    static CurvePath coordinate_line(const ParameterPoint& base, Index p, int samples = 64);
    static CurvePath composite(std::vector<CurvePath> legs);
    // Closed loop base -> base + s e_p -> base + s e_p + t e_q -> base + t e_q -> base.
    static CurvePath rectangle(const ParameterPoint& base, Index p, Index q, double s, double t,
                               int samples = 64);
    static CurvePath custom(std::function<ParameterPoint(double)> point,
                            std::function<RealVector(double)> velocity, int samples = 64);

    Kind kind() const { return kind_; }
    int samples() const { return samples_; }
    Index coordinate() const { return coordinate_; }
    Index dim() const { return point(0.0).size(); }

    ParameterPoint point(double t) const;
    RealVector velocity(double t) const;

    // Parameter values in (0, 1) where the velocity may jump.
    std::vector<double> breakpoints() const;
    const std::vector<CurvePath>& legs() const { return legs_; }

private:
    Kind kind_ = Kind::segment;
    int samples_ = 64;
    Index coordinate_ = -1;
    std::function<ParameterPoint(double)> point_;
    std::function<RealVector(double)> velocity_;
    std::vector<CurvePath> legs_;
};

// { "kind": "segment"|"coordinate_line"|"rectangle", "from": [..], "to": [..] | "p": int,
//   "q": int, "size": [s, t], "samples": int }
CurvePath path_from_json(const nlohmann::json& j, Index dim);

}  // namespace qconn
