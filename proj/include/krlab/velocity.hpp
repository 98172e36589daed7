#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "krlab/grid.hpp"
#include "krlab/quadrature.hpp"

namespace krlab {

/// Time-dependent velocity field on the unit box, with the analytic metadata
/// the estimates need: sup norm, Lipschitz bound, Sobolev seminorm of the
/// gradient, and the sup of the negative part of the divergence.
struct VelocityField {
    std::string name;
    int dim = 1;
    std::function<Point(double, Point)> value;
    std::function<double(double, Point)> divergence;
    bool divergence_free = false;
    bool autonomous = true;
    /// Constant in time between consecutive breakpoints (true for the whole
    /// catalog); lets the solver reuse face-flux tables within a segment.
    bool piecewise_autonomous = true;
    /// u . nu = 0 on the boundary of the unit box;
    /// fields without it are only admissible on periodic grids.
    bool tangential = true;

    std::function<double(double)> sup_norm;             // ||u(t)||_inf
    std::function<double(double)> lip_bound;            // ||grad u(t)||_inf
    std::function<double(double, double)> sobolev_seminorm;  // (t,p) -> (avg |grad u|^p)^(1/p)
    std::function<double(double)> neg_div_sup;          // ||(div u)^-(t)||_inf
    /// Next time > t at which the field switches regime (inf if none). Solvers
    /// cap steps here so that time quadratures never straddle a discontinuity.
    std::function<double(double)> next_breakpoint = [](double) {
        return std::numeric_limits<double>::infinity();
    };
};

namespace detail {

/// avg of |cos(2 pi s)|^p over one period; smooth pieces integrated separately.
inline double abs_cos_p_mean(double p) {
    auto f = [p](double s) { return std::pow(std::abs(std::cos(2.0 * std::numbers::pi * s)), p); };
    double total = 0.0;
    for (int q = 0; q < 4; ++q) total += gauss5_composite(f, 0.25 * q, 0.25 * (q + 1), 8);
    return total;
}
inline double abs_sin_p_mean(double p) { return abs_cos_p_mean(p); }

inline double require_param(const std::map<std::string, double>& params, const std::string& key) {
    auto it = params.find(key);
    if (it == params.end())
        throw std::invalid_argument("builtin_velocity: missing parameter '" + key + "'");
    return it->second;
}
inline double param_or(const std::map<std::string, double>& params, const std::string& key,
                       double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

}  // namespace detail

inline std::vector<std::pair<std::string, std::string>> list_builtin_fields() {
    return {
        {"zero", "u = 0"},
        {"constant", "u = (cx, cy); params cx, cy (default 0)"},
        {"oscillating", "1D u(x) = sin(2 pi k x)/(2 pi k); param k"},
        {"rigid_rotation", "rotation about (0.5, 0.5); param omega"},
        {"shear_x", "u = (A sin(2 pi m y), 0); params amplitude, m"},
        {"shear_y", "u = (0, A sin(2 pi m x)); params amplitude, m"},
        {"alternating_shear", "shear_x / shear_y alternating every half period; "
                              "params amplitude, m, period"},
    };
}

inline VelocityField builtin_velocity(const std::string& name,
                                      const std::map<std::string, double>& params = {}) {
    using detail::param_or;
    using detail::require_param;
    const double two_pi = 2.0 * std::numbers::pi;
    VelocityField f;
    f.name = name;

    if (name == "zero") {
        f.dim = 2;
        f.value = [](double, Point) { return Point{0.0, 0.0}; };
        f.divergence = [](double, Point) { return 0.0; };
        f.divergence_free = true;
        f.sup_norm = [](double) { return 0.0; };
        f.lip_bound = [](double) { return 0.0; };
        f.sobolev_seminorm = [](double, double) { return 0.0; };
        f.neg_div_sup = [](double) { return 0.0; };
        return f;
    }
    if (name == "constant") {
        const double cx = param_or(params, "cx", 0.0);
        const double cy = param_or(params, "cy", 0.0);
        f.dim = 2;
        f.value = [cx, cy](double, Point) { return Point{cx, cy}; };
        f.divergence = [](double, Point) { return 0.0; };
        f.divergence_free = true;
        f.tangential = (cx == 0.0 && cy == 0.0);  // admissible on periodic grids otherwise
        const double s = std::hypot(cx, cy);
        f.sup_norm = [s](double) { return s; };
        f.lip_bound = [](double) { return 0.0; };
        f.sobolev_seminorm = [](double, double) { return 0.0; };
        f.neg_div_sup = [](double) { return 0.0; };
        return f;
    }
    if (name == "oscillating") {
        const double k = require_param(params, "k");
        if (k < 1.0 || k != std::floor(k))
            throw std::invalid_argument("builtin_velocity: oscillating requires integer k >= 1");
        f.dim = 1;
        f.value = [k, two_pi](double, Point p) {
            return Point{std::sin(two_pi * k * p[0]) / (two_pi * k), 0.0};
        };
        f.divergence = [k, two_pi](double, Point p) { return std::cos(two_pi * k * p[0]); };
        f.sup_norm = [k, two_pi](double) { return 1.0 / (two_pi * k); };
        f.lip_bound = [](double) { return 1.0; };
        f.sobolev_seminorm = [](double, double p) {
            return std::pow(detail::abs_cos_p_mean(p), 1.0 / p);
        };
        f.neg_div_sup = [](double) { return 1.0; };  // min cos = -1
        return f;
    }
    if (name == "rigid_rotation") {
        const double omega = require_param(params, "omega");
        f.dim = 2;
        f.value = [omega](double, Point p) {
            return Point{-omega * (p[1] - 0.5), omega * (p[0] - 0.5)};
        };
        f.divergence = [](double, Point) { return 0.0; };
        f.divergence_free = true;
        f.tangential = false;  // corners of the box are not invariant
        f.sup_norm = [omega](double) { return std::abs(omega) * std::numbers::sqrt2 * 0.5; };
        f.lip_bound = [omega](double) { return std::abs(omega); };
        f.sobolev_seminorm = [omega](double, double) {
            return std::abs(omega) * std::numbers::sqrt2;
        };
        f.neg_div_sup = [](double) { return 0.0; };
        return f;
    }
    if (name == "shear_x" || name == "shear_y") {
        const double amp = require_param(params, "amplitude");
        const double m = require_param(params, "m");
        if (m < 1.0 || m != std::floor(m))
            throw std::invalid_argument("builtin_velocity: shear requires integer m >= 1");
        const bool along_x = (name == "shear_x");
        f.dim = 2;
        f.value = [amp, m, two_pi, along_x](double, Point p) {
            const double v = amp * std::sin(two_pi * m * p[along_x ? 1 : 0]);
            return along_x ? Point{v, 0.0} : Point{0.0, v};
        };
        f.divergence = [](double, Point) { return 0.0; };
        f.divergence_free = true;
        f.tangential = false;  // requires periodic wrap on the transverse axis
        f.sup_norm = [amp](double) { return std::abs(amp); };
        f.lip_bound = [amp, m, two_pi](double) { return std::abs(amp) * two_pi * m; };
        f.sobolev_seminorm = [amp, m, two_pi](double, double p) {
            return std::abs(amp) * two_pi * m * std::pow(detail::abs_cos_p_mean(p), 1.0 / p);
        };
        f.neg_div_sup = [](double) { return 0.0; };
        return f;
    }
    if (name == "alternating_shear") {
        const double amp = require_param(params, "amplitude");
        const double m = require_param(params, "m");
        const double period = require_param(params, "period");
        if (period <= 0.0)
            throw std::invalid_argument("builtin_velocity: alternating_shear needs period > 0");
        if (m < 1.0 || m != std::floor(m))
            throw std::invalid_argument("builtin_velocity: shear requires integer m >= 1");
        auto phase_x = [period](double t) {
            const double s = t - period * std::floor(t / period);
            return s < 0.5 * period;
        };
        f.dim = 2;
        f.autonomous = false;
        f.value = [amp, m, two_pi, phase_x](double t, Point p) {
            if (phase_x(t)) return Point{amp * std::sin(two_pi * m * p[1]), 0.0};
            return Point{0.0, amp * std::sin(two_pi * m * p[0])};
        };
        f.divergence = [](double, Point) { return 0.0; };
        f.divergence_free = true;
        f.tangential = false;
        f.sup_norm = [amp](double) { return std::abs(amp); };
        f.lip_bound = [amp, m, two_pi](double) { return std::abs(amp) * two_pi * m; };
        f.sobolev_seminorm = [amp, m, two_pi](double, double p) {
            return std::abs(amp) * two_pi * m * std::pow(detail::abs_cos_p_mean(p), 1.0 / p);
        };
        f.neg_div_sup = [](double) { return 0.0; };
        f.next_breakpoint = [period](double t) {
            const double half = 0.5 * period;
            double n = std::floor(t / half) + 1.0;
            double b = n * half;
            if (b <= t + 1e-14 * std::max(1.0, std::abs(t))) b += half;
            return b;
        };
        return f;
    }
    throw std::invalid_argument("builtin_velocity: unknown field '" + name + "'");
}

/// Volume-averaged L^p distance of two fields at time t, by composite tensor
/// Gauss quadrature on a panels^dim lattice over the unit box. p = inf samples.
inline double field_lp_distance(const VelocityField& u, const VelocityField& v, double t, double p,
                                int panels = 64) {
    auto diff = [&](Point x) {
        Point a = u.value(t, x), b = v.value(t, x);
        return std::hypot(a[0] - b[0], a[1] - b[1]);
    };
    const int dim = std::max(u.dim, v.dim);
    if (std::isinf(p)) {
        double m = 0.0;
        const int n = panels * 2;
        for (int i = 0; i < n; ++i) {
            if (dim == 1) {
                m = std::max(m, diff({(i + 0.5) / n, 0.0}));
            } else {
                for (int j = 0; j < n; ++j) m = std::max(m, diff({(i + 0.5) / n, (j + 0.5) / n}));
            }
        }
        return m;
    }
    double acc = 0.0;
    if (dim == 1) {
        acc = gauss5_composite([&](double x) { return std::pow(diff({x, 0.0}), p); }, 0.0, 1.0,
                               panels);
    } else {
        acc = gauss5_composite(
            [&](double x) {
                return gauss5_composite([&](double y) { return std::pow(diff({x, y}), p); }, 0.0,
                                        1.0, panels);
            },
            0.0, 1.0, panels);
    }
    return std::pow(acc, 1.0 / p);
}

}  // namespace krlab
