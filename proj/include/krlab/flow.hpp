#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "krlab/grid.hpp"
#include "krlab/velocity.hpp"

namespace krlab {

struct flow_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flow map of dx/dt = u(t, x) by the classical 4th-order one-step method
/// with fixed step size (steps additionally capped at field breakpoints, so
/// each step integrates a smooth-in-time field).
class FlowMap {
public:
    FlowMap(VelocityField field, double dt, bool bounded = true,
            std::array<double, 2> extent = {1.0, 1.0})
        : field_(std::move(field)), dt_(dt), bounded_(bounded && field_.tangential),
          extent_(extent) {
        if (!(dt > 0.0)) throw std::invalid_argument("FlowMap: dt must be positive");
    }

    const VelocityField& field() const { return field_; }
    double dt() const { return dt_; }

    Point flow(Point x0, double t) const { return flow_between(x0, 0.0, t).position; }

    /// Position and accumulated log-Jacobian exponent int div u(s, phi(s)) ds.
    struct State {
        Point position;
        double log_jacobian = 0.0;
    };

    State flow_between(Point x, double t0, double t1) const {
        if (t1 < t0) throw std::invalid_argument("FlowMap: backward integration not supported");
        State s{x, 0.0};
        double t = t0;
        while (t < t1 - 1e-15 * std::max(1.0, t1)) {
            double step = std::min(dt_, t1 - t);
            const double bp = field_.next_breakpoint(t);
            if (bp > t && bp - t < step) step = bp - t;
            rk4_step(s, t, step);
            t += step;
            if (bounded_) enforce_domain(s.position);
        }
        return s;
    }

private:
    void rk4_step(State& s, double t, double h) const {
        auto rhs = [&](double tt, const Point& p, double& ddiv) -> Point {
            ddiv = field_.divergence(tt, p);
            return field_.value(tt, p);
        };
        double d1, d2, d3, d4;
        const Point& x = s.position;
        Point k1 = rhs(t, x, d1);
        Point x2{x[0] + 0.5 * h * k1[0], x[1] + 0.5 * h * k1[1]};
        Point k2 = rhs(t + 0.5 * h, x2, d2);
        Point x3{x[0] + 0.5 * h * k2[0], x[1] + 0.5 * h * k2[1]};
        Point k3 = rhs(t + 0.5 * h, x3, d3);
        Point x4{x[0] + h * k3[0], x[1] + h * k3[1]};
        Point k4 = rhs(t + h, x4, d4);
        s.position = {x[0] + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
                      x[1] + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])};
        s.log_jacobian += h / 6.0 * (d1 + 2 * d2 + 2 * d3 + d4);
    }

    void enforce_domain(Point& p) const {
        constexpr double tol = 1e-8;
        for (int a = 0; a < field_.dim; ++a) {
            if (p[a] < -tol || p[a] > extent_[a] + tol)
                throw flow_error("FlowMap: trajectory left the domain (non-tangential field "
                                 "or too-large dt)");
            p[a] = std::clamp(p[a], 0.0, extent_[a]);
        }
    }

    VelocityField field_;
    double dt_;
    bool bounded_;
    std::array<double, 2> extent_;
};

struct JacobianResult {
    double jacobian;     // exp of the time quadrature of div u along the flow
    double lower_bound;  // Lambda = exp(-int ||(div u)^-||_inf dt)
};

inline JacobianResult jacobian_along_flow(const FlowMap& fm, Point x0, double t) {
    auto s = fm.flow_between(x0, 0.0, t);
    // Lambda by composite midpoint over the same step partition.
    const int n = std::max(1, static_cast<int>(std::ceil(t / fm.dt())));
    double acc = 0.0;
    const double h = t / n;
    for (int i = 0; i < n; ++i) acc += h * fm.field().neg_div_sup((i + 0.5) * h);
    return {std::exp(s.log_jacobian), std::exp(-acc)};
}

inline double two_particle_log_ratio(const FlowMap& fm, Point x, Point y, double t) {
    const double d0 = std::hypot(x[0] - y[0], x[1] - y[1]);
    if (d0 == 0.0) throw std::invalid_argument("two_particle_log_ratio: coincident points");
    Point a = fm.flow(x, t);
    Point b = fm.flow(y, t);
    return std::log(std::hypot(a[0] - b[0], a[1] - b[1]) / d0);
}

/// Equi-spaced lattice of initial points in the unit box (default 64 in 1D,
/// 32^2 in 2D), used to realize the averaged spatial integrals empirically.
inline std::vector<Point> lattice_points(int dim, int per_axis = 0) {
    if (per_axis == 0) per_axis = (dim == 1) ? 64 : 32;
    if (per_axis * (dim == 2 ? per_axis : 1) < 16)
        throw std::invalid_argument("lattice_points: need at least 16 samples");
    std::vector<Point> pts;
    if (dim == 1) {
        pts.reserve(per_axis);
        for (int i = 0; i < per_axis; ++i) pts.push_back({(i + 0.5) / per_axis, 0.0});
    } else {
        pts.reserve(static_cast<size_t>(per_axis) * per_axis);
        for (int j = 0; j < per_axis; ++j)
            for (int i = 0; i < per_axis; ++i)
                pts.push_back({(i + 0.5) / per_axis, (j + 0.5) / per_axis});
    }
    return pts;
}

struct TwoFlowDistance {
    double delta;            // delta_k(t) = int ||u - u_k||_{L^p} dt
    double mean_log;         // ensemble mean of log(|phi - phi_k| / delta + 1)
    double gradient_budget;  // int ||grad u||_{L^p} dt + 1 (right-hand side scale)
};

/// Empirical version of the two-flow logarithmic distance: delta_k(t) by
/// composite-midpoint time quadrature of the spatially averaged L^p field
/// distance, and the lattice mean of log(|phi(t,x) - phi_k(t,x)|/delta + 1).
inline TwoFlowDistance two_flow_log_distance(const FlowMap& fu, const FlowMap& fk,
                                             const std::vector<Point>& ensemble, double t,
                                             double p) {
    if (ensemble.size() < 16)
        throw std::invalid_argument("two_flow_log_distance: sample count must be >= 16");
    if (!(p >= 1.0)) throw std::invalid_argument("two_flow_log_distance: p must be >= 1");
    const int n = std::max(1, static_cast<int>(std::ceil(t / fu.dt())));
    const double h = t / n;
    double delta = 0.0;
    for (int i = 0; i < n; ++i)
        delta += h * field_lp_distance(fu.field(), fk.field(), (i + 0.5) * h, p);
    double grad = 0.0;
    for (int i = 0; i < n; ++i)
        grad += h * fu.field().sobolev_seminorm((i + 0.5) * h, p);

    double mean = 0.0;
    bool any_sep = false;
    for (const Point& x : ensemble) {
        Point a = fu.flow(x, t);
        Point b = fk.flow(x, t);
        const double d = std::hypot(a[0] - b[0], a[1] - b[1]);
        if (d > 0.0) any_sep = true;
        if (delta > 0.0) {
            mean += std::log(d / delta + 1.0);
        } else if (d > 0.0) {
            throw std::runtime_error(
                "two_flow_log_distance: degenerate distance (delta = 0, trajectories differ)");
        }
        // 0/0 -> 0 when both flows coincide exactly
    }
    (void)any_sep;
    mean /= static_cast<double>(ensemble.size());
    return {delta, mean, grad + 1.0};
}

}  // namespace krlab
