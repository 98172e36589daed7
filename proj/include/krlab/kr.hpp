#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "krlab/measure.hpp"
#include "krlab/network_simplex.hpp"

namespace krlab {

struct convergence_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct KRResult {
    double value = 0.0;  // D_delta, normalized by the domain volume
    double delta = 0.0;
    TransportPlan plan;
    double dual_gap = 0.0;      // exact solver: certified <= 1e-9; entropic: reported
    double plan_cost = 0.0;     // un-normalized sum pi_ij c_ij
    double plan_mass = 0.0;
    bool ill_conditioned = false;  // delta below 1e-6 of the support spacing
};

namespace detail {

inline double point_distance(const Point& a, const Point& b, const Point& wrap = {0.0, 0.0}) {
    double d[2];
    for (int ax = 0; ax < 2; ++ax) {
        d[ax] = std::abs(a[ax] - b[ax]);
        if (wrap[ax] > 0.0) d[ax] = std::min(d[ax], wrap[ax] - d[ax]);
    }
    return std::hypot(d[0], d[1]);
}

/// Dense log-cost matrix c_ij = log(|x_i - y_j|/delta + 1); also reports the
/// smallest support distance, used for the conditioning flag.
inline std::vector<double> kr_cost_matrix(const DiscreteMeasure& pos, const DiscreteMeasure& neg,
                                          double delta, double& min_dist) {
    const size_t n = pos.size(), m = neg.size();
    std::vector<double> c(n * m);
    min_dist = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < m; ++j) {
            const double d = point_distance(pos.points[i], neg.points[j], pos.wrap);
            min_dist = std::min(min_dist, d);
            c[i * m + j] = std::log1p(d / delta);
        }
    return c;
}

inline void check_kr_inputs(const DiscreteMeasure& pos, const DiscreteMeasure& neg, double delta,
                            double domain_volume) {
    if (!(delta > 0.0)) throw std::invalid_argument("kr: delta must be positive");
    if (!(domain_volume > 0.0)) throw std::invalid_argument("kr: domain volume must be positive");
    const double mp = pos.total_mass(), mn = neg.total_mass();
    if (std::abs(mp - mn) > 1e-9 * std::max({mp, mn, 1e-30}))
        throw unbalanced_error("kr: marginals are not balanced");
    if (pos.wrap != neg.wrap)
        throw std::invalid_argument("kr: marginals disagree on domain periodicity");
}

}  // namespace detail

/// Exact Kantorovich-Rubinstein distance with logarithmic cost, by the
/// transportation network simplex. D_delta = (optimal cost) / |Omega|.
inline KRResult kr_exact(const DiscreteMeasure& pos, const DiscreteMeasure& neg, double delta,
                         double domain_volume) {
    detail::check_kr_inputs(pos, neg, delta, domain_volume);
    KRResult res;
    res.delta = delta;
    if (pos.empty() && neg.empty()) return res;  // identical configurations
    if (pos.empty() != neg.empty())
        throw unbalanced_error("kr_exact: one marginal is empty, the other is not");
    const size_t n = pos.size(), m = neg.size();
    if (n * m > 4'000'000)
        throw std::length_error("kr_exact: support too large (n*m > 4e6); use kr_entropic");

    double min_dist;
    auto cost = detail::kr_cost_matrix(pos, neg, delta, min_dist);
    res.ill_conditioned = delta < 1e-6 * min_dist;

    TransportationSimplex simplex(pos.weights, neg.weights, std::move(cost));
    auto sol = simplex.solve();
    res.plan = std::move(sol.plan);
    res.plan_cost = sol.cost;
    res.plan_mass = pos.total_mass();
    res.value = sol.cost / domain_volume;
    const double scale = std::max(1.0, std::abs(sol.cost));
    res.dual_gap = std::max(std::abs(sol.cost - sol.dual_value) / scale,
                            sol.dual_violation * res.plan_mass / scale);
    return res;
}

namespace detail {

inline double logsumexp(const double* vals, size_t n) {
    double mx = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < n; ++i) mx = std::max(mx, vals[i]);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += std::exp(vals[i] - mx);
    return mx + std::log(s);
}

/// Round a (near-feasible) dense plan onto the transportation polytope:
/// shrink rows, then columns, then distribute the missing mass rank-one.
inline void round_to_feasible(std::vector<double>& pi, const std::vector<double>& a,
                              const std::vector<double>& b) {
    const size_t n = a.size(), m = b.size();
    std::vector<double> rows(n, 0.0), cols(m, 0.0);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < m; ++j) rows[i] += pi[i * m + j];
    for (size_t i = 0; i < n; ++i) {
        const double s = rows[i] > a[i] ? a[i] / rows[i] : 1.0;
        if (s < 1.0)
            for (size_t j = 0; j < m; ++j) pi[i * m + j] *= s;
    }
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < m; ++j) cols[j] += pi[i * m + j];
    for (size_t j = 0; j < m; ++j) {
        const double s = cols[j] > b[j] ? b[j] / cols[j] : 1.0;
        if (s < 1.0)
            for (size_t i = 0; i < n; ++i) pi[i * m + j] *= s;
    }
    std::fill(rows.begin(), rows.end(), 0.0);
    std::fill(cols.begin(), cols.end(), 0.0);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < m; ++j) {
            rows[i] += pi[i * m + j];
            cols[j] += pi[i * m + j];
        }
    double missing = 0.0;
    for (size_t i = 0; i < n; ++i) missing += a[i] - rows[i];
    if (missing > 0.0) {
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < m; ++j)
                pi[i * m + j] += (a[i] - rows[i]) * (b[j] - cols[j]) / missing;
    }
}

}  // namespace detail

/// Entropic (Sinkhorn) approximation of D_delta in the log domain, with the
/// returned plan rounded onto the transportation polytope. The reported gap
/// is primal(rounded plan) minus the certified dual lower bound.
inline KRResult kr_entropic(const DiscreteMeasure& pos, const DiscreteMeasure& neg, double delta,
                            double epsilon, int max_iter, double domain_volume,
                            double marginal_tol = 1e-9) {
    detail::check_kr_inputs(pos, neg, delta, domain_volume);
    if (!(epsilon > 0.0)) throw std::invalid_argument("kr_entropic: epsilon must be positive");
    KRResult res;
    res.delta = delta;
    if (pos.empty() && neg.empty()) return res;
    const size_t n = pos.size(), m = neg.size();
    if (n * m > 4'000'000)
        throw std::length_error("kr_entropic: dense support too large (n*m > 4e6)");

    double min_dist;
    auto c = detail::kr_cost_matrix(pos, neg, delta, min_dist);
    res.ill_conditioned = delta < 1e-6 * min_dist;
    const std::vector<double>& a = pos.weights;
    std::vector<double> b = neg.weights;
    {
        const double s = pos.total_mass() / neg.total_mass();
        for (double& w : b) w *= s;
    }

    std::vector<double> f(n, 0.0), g(m, 0.0), buf(std::max(n, m));
    double residual = std::numeric_limits<double>::infinity();
    const double mass = pos.total_mass();
    // warm start through a halving epsilon schedule; only the target stage
    // counts toward convergence
    double cost_scale = 0.0;
    for (double v : c) cost_scale = std::max(cost_scale, std::abs(v));
    std::vector<double> schedule;
    for (double e = std::max(epsilon, cost_scale / 4); e > epsilon * 1.0001; e *= 0.5)
        schedule.push_back(e);
    schedule.push_back(epsilon);

    int spent = 0;
    for (double eps : schedule) {
        const bool final_stage = (eps == epsilon);
        const int budget = final_stage ? (max_iter - spent)
                                       : std::min(50, std::max(0, max_iter - spent));
        for (int it = 0; it < budget; ++it) {
            ++spent;
            for (size_t i = 0; i < n; ++i) {
                for (size_t j = 0; j < m; ++j) buf[j] = (g[j] - c[i * m + j]) / eps;
                f[i] = eps * (std::log(a[i]) - detail::logsumexp(buf.data(), m));
            }
            for (size_t j = 0; j < m; ++j) {
                for (size_t i = 0; i < n; ++i) buf[i] = (f[i] - c[i * m + j]) / eps;
                g[j] = eps * (std::log(b[j]) - detail::logsumexp(buf.data(), n));
            }
            // row sums are exact right after the f-update; measure column error
            // via the row residual of the updated pair
            residual = 0.0;
            for (size_t i = 0; i < n; ++i) {
                double rs = 0.0;
                for (size_t j = 0; j < m; ++j) rs += std::exp((f[i] + g[j] - c[i * m + j]) / eps);
                residual += std::abs(rs - a[i]);
            }
            if (residual <= marginal_tol * mass) break;
        }
    }
    if (residual > marginal_tol * mass)
        throw convergence_error("kr_entropic: no convergence after " + std::to_string(max_iter) +
                                " iterations (marginal residual " + std::to_string(residual) + ")");

    std::vector<double> pi(n * m);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < m; ++j)
            pi[i * m + j] = std::exp((f[i] + g[j] - c[i * m + j]) / epsilon);
    detail::round_to_feasible(pi, a, b);

    res.plan.n_sources = n;
    res.plan.n_targets = m;
    double primal = 0.0;
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < m; ++j) {
            const double w = pi[i * m + j];
            primal += w * c[i * m + j];
            if (w > 1e-15 * mass)
                res.plan.entries.push_back({static_cast<int>(i), static_cast<int>(j), w});
        }
    // certified dual lower bound via the c-transform of f
    double dual = 0.0;
    for (size_t i = 0; i < n; ++i) dual += f[i] * a[i];
    for (size_t j = 0; j < m; ++j) {
        double best = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < n; ++i) best = std::min(best, c[i * m + j] - f[i]);
        dual += best * b[j];
    }
    res.plan_cost = primal;
    res.plan_mass = mass;
    res.value = primal / domain_volume;
    res.dual_gap = (primal - dual) / std::max(1.0, std::abs(primal));
    return res;
}

enum class MixingNormalization {
    MassAveraged,    // exponent divided by the plan mass: M scales as a length
    VolumeAveraged,  // exponent divided by |Omega| (literal averaged integral)
};

struct MixingScaleResult {
    double value = 0.0;        // M(rho)
    double exponent = 0.0;     // normalized integral of log|x-y| under the plan
    double plan_mass = 0.0;
    bool exact = true;         // false when the scaled entropic path was used
    double upper_lower_gap = 0.0;  // entropic path: bracket width on the exponent
};

namespace detail {

struct ScaledSinkhornOptions {
    double eps_final = 0.02;
    double eps_start = 0.16;
    int iters_per_stage = 50;
    double marginal_tol = 2e-5;  // relative L1 marginal error
};

/// Stabilized Sinkhorn with epsilon scaling and a single-precision kernel,
/// for supports too large for the exact solver. Costs are recomputed from the
/// positions on every kernel rebuild, so memory stays at one float per pair.
/// Returns the rounded-plan (upper) estimate of the mass-averaged exponent
/// together with a dual lower bound.
inline std::pair<double, double> scaled_sinkhorn_log_exponent(const DiscreteMeasure& pos,
                                                              const DiscreteMeasure& neg,
                                                              const ScaledSinkhornOptions& opt) {
    const size_t n = pos.size(), m = neg.size();
    const std::vector<double>& a = pos.weights;
    std::vector<double> b = neg.weights;
    {
        const double s = pos.total_mass() / neg.total_mass();
        for (double& w : b) w *= s;
    }
    const double mass = pos.total_mass();

    // cache the cost matrix once; kernel rebuilds and the final rounding pass
    // all read from it (memory: two floats per pair)
    std::vector<float> C(n * m);
    for (size_t i = 0; i < n; ++i) {
        float* row = C.data() + i * m;
        for (size_t j = 0; j < m; ++j)
            row[j] = static_cast<float>(std::log(
                std::max(point_distance(pos.points[i], neg.points[j], pos.wrap), 1e-300)));
    }
    auto cost = [&](size_t i, size_t j) { return static_cast<double>(C[i * m + j]); };

    std::vector<float> K(n * m);
    std::vector<double> f(n, 0.0), g(m, 0.0), u(n, 1.0), v(m, 1.0), rs(n), cs(m);

    auto rebuild = [&](double eps) {
        for (size_t i = 0; i < n; ++i) {
            const float fi = static_cast<float>(f[i]);
            const float inv_eps = static_cast<float>(1.0 / eps);
            float* row = K.data() + i * m;
            const float* crow = C.data() + i * m;
            for (size_t j = 0; j < m; ++j) {
                const float e = (fi + static_cast<float>(g[j]) - crow[j]) * inv_eps;
                row[j] = std::exp(std::min(e, 30.0f));
            }
        }
        std::fill(u.begin(), u.end(), 1.0);
        std::fill(v.begin(), v.end(), 1.0);
    };
    auto absorb = [&](double eps) {
        for (size_t i = 0; i < n; ++i) f[i] += eps * std::log(u[i]);
        for (size_t j = 0; j < m; ++j) g[j] += eps * std::log(v[j]);
        rebuild(eps);
    };

    std::vector<double> schedule;
    for (double e = opt.eps_start; e > opt.eps_final * 1.0001; e *= 0.5) schedule.push_back(e);
    schedule.push_back(opt.eps_final);

    for (double eps : schedule) {
        rebuild(eps);
        for (int it = 0; it < opt.iters_per_stage; ++it) {
            for (size_t i = 0; i < n; ++i) {
                const float* row = K.data() + i * m;
                double s = 0.0;
                for (size_t j = 0; j < m; ++j) s += static_cast<double>(row[j]) * v[j];
                u[i] = (s > 0.0) ? a[i] / s : 1e30;
            }
            for (size_t j = 0; j < m; ++j) cs[j] = 0.0;
            for (size_t i = 0; i < n; ++i) {
                const float* row = K.data() + i * m;
                const double ui = u[i];
                for (size_t j = 0; j < m; ++j) cs[j] += ui * static_cast<double>(row[j]);
            }
            // column residual of the current plan (u, K, v_old), then update v
            double err = 0.0;
            for (size_t j = 0; j < m; ++j) {
                err += std::abs(cs[j] * v[j] - b[j]);
                v[j] = (cs[j] > 0.0) ? b[j] / cs[j] : 1e30;
            }
            double umax = 0.0;
            for (size_t i = 0; i < n; ++i) umax = std::max(umax, std::abs(std::log(u[i])));
            for (size_t j = 0; j < m; ++j) umax = std::max(umax, std::abs(std::log(v[j])));
            if (umax > 20.0) absorb(eps);
            if (err <= opt.marginal_tol * mass && it > 2) break;
        }
        absorb(eps);
    }

    // Rounded-plan exponent (upper bound on the optimum): plan = diag(u) K
    // diag(v) with duals absorbed (u = v = 1 after absorb), rescaled onto the
    // polytope row- then column-wise, remainder rank-one.
    const double eps = opt.eps_final;
    std::vector<double> rscale(n, 1.0), cscale(m, 1.0);
    for (size_t i = 0; i < n; ++i) {
        double s = 0.0;
        const float* row = K.data() + i * m;
        for (size_t j = 0; j < m; ++j) s += static_cast<double>(row[j]);
        rscale[i] = (s > a[i] && s > 0.0) ? a[i] / s : 1.0;
        rs[i] = s * rscale[i];
    }
    for (size_t j = 0; j < m; ++j) cs[j] = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const float* row = K.data() + i * m;
        for (size_t j = 0; j < m; ++j) cs[j] += rscale[i] * static_cast<double>(row[j]);
    }
    for (size_t j = 0; j < m; ++j) cscale[j] = (cs[j] > b[j] && cs[j] > 0.0) ? b[j] / cs[j] : 1.0;

    double plan_cost = 0.0;
    std::fill(rs.begin(), rs.end(), 0.0);
    for (size_t j = 0; j < m; ++j) cs[j] = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const float* row = K.data() + i * m;
        for (size_t j = 0; j < m; ++j) {
            const double w = rscale[i] * cscale[j] * static_cast<double>(row[j]);
            plan_cost += w * cost(i, j);
            rs[i] += w;
            cs[j] += w;
        }
    }
    double missing = 0.0;
    for (size_t i = 0; i < n; ++i) missing += a[i] - rs[i];
    if (missing > 1e-15 * mass) {
        double cross = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double da = a[i] - rs[i];
            if (da <= 0.0) continue;
            for (size_t j = 0; j < m; ++j) {
                const double db = b[j] - cs[j];
                if (db > 0.0) cross += da * db * cost(i, j);
            }
        }
        plan_cost += cross / missing;
    }

    // Dual lower bound via the c-transform of f.
    double dual = 0.0;
    for (size_t i = 0; i < n; ++i) dual += f[i] * a[i];
    for (size_t j = 0; j < m; ++j) {
        double best = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < n; ++i) best = std::min(best, cost(i, j) - f[i]);
        dual += best * b[j];
    }
    (void)eps;
    return {plan_cost / mass, dual / mass};
}

}  // namespace detail

/// Mixing scale M(rho): exponential of the optimal-plan average of log|x-y|
/// between the positive and negative parts of a zero-mean field. Exact for
/// supports with n*m below `exact_limit`, scaled entropic transport beyond.
inline MixingScaleResult mixing_scale(const CellField& rho,
                                      MixingNormalization norm = MixingNormalization::MassAveraged,
                                      size_t exact_limit = 4'000'000) {
    const double l1 = lq_norm(rho, 1.0) * rho.grid.domain_volume();
    if (l1 <= 0.0) throw std::domain_error("mixing_scale: field is identically zero (M undefined)");
    if (std::abs(rho.total_mass()) > 1e-9 * l1)
        throw std::invalid_argument("mixing_scale: field must have zero mean");

    CellField zero(rho.grid, 0.0, rho.time);
    auto [pos, neg] = split_difference(rho, zero);
    MixingScaleResult out;
    out.plan_mass = pos.total_mass();
    const double denom =
        (norm == MixingNormalization::MassAveraged) ? out.plan_mass : rho.grid.domain_volume();

    if (pos.size() * neg.size() <= exact_limit) {
        const size_t n = pos.size(), m = neg.size();
        std::vector<double> c(n * m);
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < m; ++j)
                c[i * m + j] =
                    std::log(detail::point_distance(pos.points[i], neg.points[j], pos.wrap));
        TransportationSimplex simplex(pos.weights, neg.weights, std::move(c));
        auto sol = simplex.solve();
        out.exponent = sol.cost / denom;
        out.exact = true;
    } else {
        auto [upper, lower] = detail::scaled_sinkhorn_log_exponent(pos, neg, {});
        // mass-averaged bracket; rescale if the volume normalization is asked
        const double factor = out.plan_mass / denom;
        out.exponent = upper * factor;
        out.upper_lower_gap = (upper - lower) * factor;
        out.exact = false;
    }
    out.value = std::exp(out.exponent);
    return out;
}

}  // namespace krlab
