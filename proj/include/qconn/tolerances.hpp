#pragma once

namespace qconn {

// Every threshold used by the library lives here.
struct Tolerances {
    double hermitian_tol = 1e-12;
    double pd_floor = 1e-12;
    double kubo_degeneracy_tol = 1e-9;
    double degeneracy_guard = 1e-8;
    double overlap_threshold = 0.5;
    double pivot_floor = 1e-8;
    int max_bisections = 20;
    double g_floor = 1e-10;
    double autoparallel_tol = 1e-7;
    double fd_step = 1e-4;
    double diag_tol = 1e-4;
    double min_fd_step = 1e-12;
};

inline constexpr Tolerances kDefaultTolerances{};

// Finite-difference tolerance unit: max(1e-6, C h^2).
inline double fd_tol(double fd_step, double scale = 1.0) {
    double v = scale * fd_step * fd_step;
    return v > 1e-6 ? v : 1e-6;
}

}  // namespace qconn
