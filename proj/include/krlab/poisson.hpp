#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "krlab/grid.hpp"

namespace krlab {

enum class PoissonBoundary { Periodic, Neumann };

namespace detail {

/// Matrix-free 5-point (3-point in 1D) discrete Laplacian, negated: y = -L x.
class NegLaplacian {
public:
    NegLaplacian(const Grid& g, PoissonBoundary bc) : g_(g), bc_(bc) {}

    void apply(const std::vector<double>& x, std::vector<double>& y) const {
        std::fill(y.begin(), y.end(), 0.0);
        for (int a = 0; a < g_.dim(); ++a) {
            const double inv_h2 = 1.0 / (g_.h(a) * g_.h(a));
            for (int k = 0; k < g_.num_cells(); ++k) {
                const int l = neighbor(k, a, 1);
                if (l < 0) continue;
                const double d = (x[l] - x[k]) * inv_h2;
                y[k] -= d;
                y[l] += d;
            }
        }
    }

    int neighbor(int k, int axis, int side) const {
        auto mi = g_.multi_index(k);
        int c = mi[axis] + (side == 0 ? -1 : 1);
        if (c < 0 || c >= g_.cells(axis)) {
            if (bc_ == PoissonBoundary::Neumann) return -1;
            c = (c + g_.cells(axis)) % g_.cells(axis);
        }
        mi[axis] = c;
        return g_.index(mi[0], mi[1]);
    }

private:
    const Grid& g_;
    PoissonBoundary bc_;
};

inline void project_zero_mean(std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= v.size();
    for (double& x : v) x -= mean;
}

}  // namespace detail

/// Solves the discrete Poisson problem -Lap psi = rho (zero-mean rho) by
/// conjugate gradients on the mean-free subspace.
inline std::vector<double> solve_poisson(const CellField& rho, PoissonBoundary bc,
                                         double rel_tol = 1e-10) {
    const int n = rho.grid.num_cells();
    detail::NegLaplacian op(rho.grid, bc);
    std::vector<double> rhs = rho.values;
    detail::project_zero_mean(rhs);

    std::vector<double> psi(n, 0.0), r = rhs, p = rhs, Ap(n);
    double rr = 0.0;
    for (double x : r) rr += x * x;
    const double rr0 = rr;
    if (rr0 == 0.0) return psi;
    const int max_iter = 20 * n + 200;
    for (int it = 0; it < max_iter && rr > rel_tol * rel_tol * rr0; ++it) {
        op.apply(p, Ap);
        double pAp = 0.0;
        for (int k = 0; k < n; ++k) pAp += p[k] * Ap[k];
        const double alpha = rr / pAp;
        for (int k = 0; k < n; ++k) {
            psi[k] += alpha * p[k];
            r[k] -= alpha * Ap[k];
        }
        double rr_new = 0.0;
        for (double x : r) rr_new += x * x;
        const double beta = rr_new / rr;
        rr = rr_new;
        for (int k = 0; k < n; ++k) p[k] = r[k] + beta * p[k];
    }
    detail::project_zero_mean(psi);
    return psi;
}

/// |grad^{-1} rho|_{L^2}: volume-averaged L^2 norm of grad psi (face
/// differences) for the Poisson solution -Lap psi = rho.
inline double neg_sobolev(const CellField& rho, PoissonBoundary bc) {
    const double l1 = lq_norm(rho, 1.0);
    if (std::abs(rho.total_mass()) > 1e-9 * std::max(l1 * rho.grid.domain_volume(), 1e-30))
        throw std::invalid_argument("neg_sobolev: field must have zero mean");
    auto psi = solve_poisson(rho, bc);
    const Grid& g = rho.grid;
    detail::NegLaplacian op(g, bc);
    double acc = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
        for (int k = 0; k < g.num_cells(); ++k) {
            const int l = op.neighbor(k, a, 1);
            if (l < 0) continue;
            const double grad = (psi[l] - psi[k]) / g.h(a);
            acc += grad * grad * g.cell_volume();
        }
    }
    return std::sqrt(acc / g.domain_volume());
}

/// |grad rho|_BV for a two-phase field (values exactly +-1):
/// 2 * (area of faces separating opposite signs) / |Omega|.
inline double bv_seminorm(const CellField& rho) {
    for (double v : rho.values)
        if (v != 1.0 && v != -1.0)
            throw std::invalid_argument("bv_seminorm: field is not two-phase (+-1)");
    const Grid& g = rho.grid;
    double interface = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
        for (int k = 0; k < g.num_cells(); ++k) {
            const int l = g.neighbor(k, a, 1);
            if (l < 0) continue;
            if (rho.values[k] != rho.values[l]) interface += g.face_area(a);
        }
    }
    return 2.0 * interface / g.domain_volume();
}

/// sign(rho) as a two-phase field (zeros counted as the positive phase).
inline CellField sign_field(const CellField& rho) {
    CellField out = rho;
    for (double& v : out.values) v = (v >= 0.0) ? 1.0 : -1.0;
    return out;
}

}  // namespace krlab
