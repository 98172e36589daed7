#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "krlab/grid.hpp"
#include "krlab/quadrature.hpp"
#include "krlab/velocity.hpp"

namespace krlab {

struct stability_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Net flows u_KL for one time step: for every cell K and axis a, the
/// face/time average of u . nu across the high-side face of K. Low-side
/// values follow by antisymmetry u_LK = -u_KL.
struct FluxTable {
    Grid grid;
    double t0 = 0.0;
    double dt = 0.0;
    // flux[axis][cell] = u_{K,L} with L the high-side neighbor along axis;
    // zero (and unused) where that face is a non-periodic boundary.
    std::array<std::vector<double>, 2> flux;

    double high_flux(int cell, int axis) const { return flux[axis][cell]; }
};

/// Largest dt with int_t^{t+dt} ||u||_inf <= lambda * h, capped at the
/// remaining time and at the field's next breakpoint; for u = 0 the step
/// falls back to min(h, remaining).
inline double cfl_step(const VelocityField& u, const Grid& grid, double t_current,
                       double lambda = 0.45,
                       double remaining = std::numeric_limits<double>::infinity()) {
    if (!(lambda > 0.0 && lambda <= 1.0))
        throw std::invalid_argument("cfl_step: lambda must be in (0, 1]");
    const double h = grid.h();
    const double sup = u.sup_norm(t_current);
    double dt = (sup > 0.0) ? lambda * h / sup : h;
    dt = std::min(dt, remaining);
    const double bp = u.next_breakpoint(t_current);
    if (std::isfinite(bp) && bp > t_current) dt = std::min(dt, bp - t_current);
    return dt;
}

/// Face/time averages of u . nu by 5-point Gauss in space and 3-point Gauss
/// in time (exact in time for piecewise-autonomous catalog fields).
inline FluxTable face_fluxes(const VelocityField& u, const Grid& grid, double t0, double dt) {
    FluxTable table{grid, t0, dt, {}};
    const int nc = grid.num_cells();
    for (int a = 0; a < grid.dim(); ++a) table.flux[a].assign(nc, 0.0);

    auto face_average = [&](int cell, int axis) {
        // Normal component of u averaged over the face and the time step.
        const auto mi = grid.multi_index(cell);
        const double xf = (mi[axis] + 1) * grid.h(axis);
        const int other = 1 - axis;
        auto space_avg = [&](double t) {
            if (grid.dim() == 1) return u.value(t, {xf, 0.0})[0];
            const double y0 = mi[other] * grid.h(other);
            const double y1 = y0 + grid.h(other);
            auto integrand = [&](double y) {
                Point p;
                p[axis] = xf;
                p[other] = y;
                return u.value(t, p)[axis];
            };
            return gauss5(integrand, y0, y1) / grid.h(other);
        };
        return gauss3(space_avg, t0, t0 + dt) / dt;
    };

    for (int a = 0; a < grid.dim(); ++a) {
        for (int cell = 0; cell < nc; ++cell) {
            if (grid.neighbor(cell, a, 1) < 0) continue;
            table.flux[a][cell] = face_average(cell, a);
        }
    }
    return table;
}

/// One explicit upwind step. Mass is conserved identically (face flux added
/// to one cell is subtracted from the other); a violated per-cell outflow
/// budget raises stability_error.
inline CellField upwind_step(const CellField& in, const FluxTable& table) {
    if (!in.grid.same_layout(table.grid)) throw std::invalid_argument("upwind_step: grid mismatch");
    const Grid& g = in.grid;
    const double dt = table.dt;
    CellField out = in;
    out.time = in.time + dt;
    std::vector<double> outflow(in.values.size(), 0.0);

    for (int a = 0; a < g.dim(); ++a) {
        const double rate = dt * g.face_area(a) / g.cell_volume();
        for (int k = 0; k < g.num_cells(); ++k) {
            const int l = g.neighbor(k, a, 1);
            if (l < 0) continue;
            const double q = table.flux[a][k];
            const double qp = std::max(q, 0.0);
            const double qm = std::max(-q, 0.0);
            const double transfer = rate * (qp * in.values[k] - qm * in.values[l]);
            out.values[k] -= transfer;
            out.values[l] += transfer;
            outflow[k] += rate * qp;
            outflow[l] += rate * qm;
        }
    }
    for (double o : outflow)
        if (o > 1.0 + 1e-12)
            throw stability_error("upwind_step: CFL violated (per-cell outflow factor > 1)");
    return out;
}

struct SolveReport {
    CellField final_field;
    std::vector<double> times;
    std::vector<double> mass;
    std::vector<double> l1, l2, linf;
    std::vector<double> entropy;  // NaN where data has negative values
    std::vector<double> min_value, max_value;
    std::vector<CellField> snapshots;       // at the requested snapshot times
    std::vector<double> snapshot_times;
    double tv_time_integral = 0.0;  // int int |grad rho| (diffusive solver only)

    double mass_drift() const {
        if (mass.empty()) return 0.0;
        double lo = mass.front(), hi = mass.front();
        for (double m : mass) {
            lo = std::min(lo, m);
            hi = std::max(hi, m);
        }
        const double scale = std::max({std::abs(mass.front()), 1e-30});
        return (hi - lo) / scale;
    }
};

namespace detail {

inline void record_state(SolveReport& rep, const CellField& f, double t) {
    rep.times.push_back(t);
    rep.mass.push_back(f.total_mass());
    rep.l1.push_back(lq_norm(f, 1.0));
    rep.l2.push_back(lq_norm(f, 2.0));
    rep.linf.push_back(lq_norm(f, std::numeric_limits<double>::infinity()));
    rep.min_value.push_back(f.min_value());
    rep.max_value.push_back(f.max_value());
    rep.entropy.push_back(f.min_value() >= 0.0 ? krlab::entropy(f)
                                               : std::numeric_limits<double>::quiet_NaN());
}

inline void check_boundary_compatibility(const VelocityField& u, const Grid& g,
                                         const char* who) {
    if (u.tangential) return;
    for (int a = 0; a < g.dim(); ++a)
        if (!g.periodic(a))
            throw std::invalid_argument(std::string(who) +
                                        ": non-tangential field needs a periodic grid");
}

inline double total_variation(const CellField& f) {
    const Grid& g = f.grid;
    double tv = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
        const double area = g.face_area(a);
        for (int k = 0; k < g.num_cells(); ++k) {
            const int l = g.neighbor(k, a, 1);
            if (l < 0) continue;
            tv += area * std::abs(f.values[l] - f.values[k]);
        }
    }
    return tv / g.domain_volume();
}

}  // namespace detail

/// Explicit upwind finite volume solve up to time T (final partial step
/// allowed). Flux tables are reused while the field stays within one
/// breakpoint segment and the step size does not change.
inline SolveReport solve_upwind(const VelocityField& u, const CellField& initial, double T,
                                double lambda = 0.45, std::vector<double> snapshot_times = {}) {
    if (!(T > 0.0)) throw std::invalid_argument("solve_upwind: T must be positive");
    detail::check_boundary_compatibility(u, initial.grid, "solve_upwind");
    std::sort(snapshot_times.begin(), snapshot_times.end());
    size_t next_snap = 0;

    SolveReport rep{initial};
    CellField state = initial;
    double t = initial.time;
    detail::record_state(rep, state, t);
    while (next_snap < snapshot_times.size() && snapshot_times[next_snap] <= t + 1e-14) {
        rep.snapshots.push_back(state);
        rep.snapshot_times.push_back(snapshot_times[next_snap++]);
    }

    std::optional<FluxTable> cached;
    while (t < T - 1e-14 * std::max(1.0, T)) {
        double dt = cfl_step(u, initial.grid, t, lambda, T - t);
        if (next_snap < snapshot_times.size() && snapshot_times[next_snap] > t)
            dt = std::min(dt, snapshot_times[next_snap] - t);
        const bool reusable = cached && u.piecewise_autonomous &&
                              std::abs(cached->dt - dt) < 1e-15 &&
                              u.next_breakpoint(cached->t0) == u.next_breakpoint(t);
        if (!reusable) cached = face_fluxes(u, initial.grid, t, dt);
        cached->t0 = t;
        cached->dt = dt;
        state = upwind_step(state, *cached);
        t += dt;
        state.time = t;
        detail::record_state(rep, state, t);
        while (next_snap < snapshot_times.size() && snapshot_times[next_snap] <= t + 1e-12) {
            rep.snapshots.push_back(state);
            rep.snapshot_times.push_back(snapshot_times[next_snap++]);
        }
    }
    rep.final_field = state;
    return rep;
}

/// Operator-split explicit solver for the advection-diffusion equation with
/// no-flux (Neumann) boundaries: upwind advection, then centered-difference
/// diffusion. Step size obeys both the CFL and the parabolic limit.
inline SolveReport solve_advection_diffusion(const VelocityField& u, double kappa,
                                             const CellField& initial, double T,
                                             double lambda = 0.45, double lambda_diff = 0.9) {
    if (!(kappa > 0.0)) throw std::invalid_argument("solve_advection_diffusion: kappa must be > 0");
    if (!(T > 0.0)) throw std::invalid_argument("solve_advection_diffusion: T must be positive");
    if (initial.min_value() < 0.0)
        throw std::invalid_argument("solve_advection_diffusion: initial data must be nonnegative");
    detail::check_boundary_compatibility(u, initial.grid, "solve_advection_diffusion");

    const Grid& g = initial.grid;
    const double hmin = g.h_min();
    const double dt_diff = lambda_diff * hmin * hmin / (2.0 * g.dim() * kappa);

    SolveReport rep{initial};
    CellField state = initial;
    double t = initial.time;
    detail::record_state(rep, state, t);

    std::optional<FluxTable> cached;
    while (t < T - 1e-14 * std::max(1.0, T)) {
        double dt = std::min(cfl_step(u, g, t, lambda, T - t), dt_diff);
        const bool reusable = cached && u.piecewise_autonomous &&
                              std::abs(cached->dt - dt) < 1e-15 &&
                              u.next_breakpoint(cached->t0) == u.next_breakpoint(t);
        if (!reusable) cached = face_fluxes(u, g, t, dt);
        cached->t0 = t;
        cached->dt = dt;
        state = upwind_step(state, *cached);

        // Conservative explicit diffusion; Neumann boundaries carry no flux.
        CellField next = state;
        for (int a = 0; a < g.dim(); ++a) {
            const double coeff = kappa * dt * g.face_area(a) / (g.cell_volume() * g.h(a));
            for (int k = 0; k < g.num_cells(); ++k) {
                const int l = g.neighbor(k, a, 1);
                if (l < 0) continue;
                const double fl = coeff * (state.values[l] - state.values[k]);
                next.values[k] += fl;
                next.values[l] -= fl;
            }
        }
        rep.tv_time_integral += dt * detail::total_variation(next);
        state = std::move(next);
        t += dt;
        state.time = t;
        detail::record_state(rep, state, t);
    }
    rep.final_field = state;
    return rep;
}

}  // namespace krlab
