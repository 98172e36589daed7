#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "krlab/flow.hpp"
#include "krlab/kr.hpp"
#include "krlab/poisson.hpp"
#include "krlab/solver.hpp"

namespace krlab {

struct ValidationResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

namespace detail {

/// Minimal-cost transportation plan by exhaustive vertex enumeration: every
/// vertex of the transportation polytope is supported on a spanning tree of
/// the bipartite source/target graph, so we enumerate all (n+m-1)-cell
/// subsets, keep the acyclic ones, solve each tree by leaf elimination and
/// take the cheapest feasible solution. (The northwest-corner rule over
/// row/column permutations is NOT enough: it only reaches staircase supports,
/// where a row may branch downward at a single column.) Oracle for tiny
/// instances (n, m <= 4): at most C(16,7) = 11440 subsets.
inline double brute_force_transport_cost(const std::vector<double>& a, const std::vector<double>& b,
                                         const std::vector<double>& c) {
    const int n = static_cast<int>(a.size()), m = static_cast<int>(b.size());
    const int cells = n * m, k = n + m - 1;
    std::vector<int> pick(k);
    std::vector<int> parent(n + m);
    std::vector<int> deg(n + m);
    std::vector<double> rem(n + m);
    std::vector<char> in_tree(cells);
    auto find = [&](int v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    };
    double best = std::numeric_limits<double>::infinity();

    // lexicographic enumeration of all k-subsets of the n*m cells
    for (int i = 0; i < k; ++i) pick[i] = i;
    while (true) {
        // acyclicity check: rows are nodes 0..n-1, columns n..n+m-1
        for (int v = 0; v < n + m; ++v) parent[v] = v;
        bool acyclic = true;
        for (int e = 0; e < k && acyclic; ++e) {
            const int r = find(pick[e] / m), s = find(n + pick[e] % m);
            if (r == s)
                acyclic = false;
            else
                parent[r] = s;
        }
        if (acyclic) {
            // unique flow on the tree: peel degree-1 nodes, assigning each
            // leaf's remaining mass to its single incident edge
            std::fill(in_tree.begin(), in_tree.end(), 0);
            std::fill(deg.begin(), deg.end(), 0);
            for (int e = 0; e < k; ++e) {
                in_tree[pick[e]] = 1;
                ++deg[pick[e] / m];
                ++deg[n + pick[e] % m];
            }
            for (int i = 0; i < n; ++i) rem[i] = a[i];
            for (int j = 0; j < m; ++j) rem[n + j] = b[j];
            double cost = 0.0;
            bool feasible = true;
            for (int peeled = 0; peeled < k && feasible; ++peeled) {
                int leaf = -1;
                for (int v = 0; v < n + m; ++v)
                    if (deg[v] == 1) { leaf = v; break; }
                // k edges on n+m nodes, acyclic -> a leaf always exists
                int cell = -1;
                if (leaf < n) {
                    for (int j = 0; j < m; ++j)
                        if (in_tree[leaf * m + j]) { cell = leaf * m + j; break; }
                } else {
                    for (int i = 0; i < n; ++i)
                        if (in_tree[i * m + (leaf - n)]) { cell = i * m + (leaf - n); break; }
                }
                const double x = rem[leaf];
                if (x < -1e-12) feasible = false;
                cost += std::max(x, 0.0) * c[cell];
                const int other = (leaf < n) ? n + cell % m : cell / m;
                rem[other] -= x;
                rem[leaf] = 0.0;
                in_tree[cell] = 0;
                --deg[leaf];
                --deg[other];
            }
            if (feasible) best = std::min(best, cost);
        }
        // advance to the next subset
        int i = k - 1;
        while (i >= 0 && pick[i] == cells - k + i) --i;
        if (i < 0) break;
        ++pick[i];
        for (int j = i + 1; j < k; ++j) pick[j] = pick[j - 1] + 1;
    }
    return best;
}

inline DiscreteMeasure random_support(std::mt19937& rng, int npoints, double total) {
    std::uniform_real_distribution<double> xd(0.0, 1.0), wd(0.1, 1.0);
    DiscreteMeasure m;
    std::vector<double> w(npoints);
    double sum = 0.0;
    for (double& wi : w) sum += (wi = wd(rng));
    for (int i = 0; i < npoints; ++i) m.push({xd(rng), xd(rng)}, w[i] * total / sum);
    return m;
}

}  // namespace detail

/// kr_exact against exhaustive vertex enumeration on tiny random instances.
inline ValidationResult check_ot_oracle(int instances, std::mt19937& rng) {
    double worst = 0.0;
    for (int trial = 0; trial < instances; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 4);
        const int m = 1 + static_cast<int>(rng() % 4);
        auto a = detail::random_support(rng, n, 1.0);
        auto b = detail::random_support(rng, m, 1.0);
        const double delta = 0.05;
        double min_dist;
        auto c = detail::kr_cost_matrix(a, b, delta, min_dist);
        const double oracle = detail::brute_force_transport_cost(a.weights, b.weights, c);
        const double solver = kr_exact(a, b, delta, 1.0).plan_cost;
        worst = std::max(worst, std::abs(solver - oracle));
    }
    return {"ot_exact_vs_enumeration", worst <= 1e-9,
            "max deviation " + std::to_string(worst) + " over " + std::to_string(instances) +
                " instances"};
}

inline ValidationResult check_metric_axioms(int triples, std::mt19937& rng) {
    const double delta = 0.1;
    int violations = 0;
    for (int trial = 0; trial < triples; ++trial) {
        const int n = 5 + static_cast<int>(rng() % 26);
        auto a = detail::random_support(rng, n, 1.0);
        auto b = detail::random_support(rng, n, 1.0);
        auto c = detail::random_support(rng, n, 1.0);
        const double ab = kr_exact(a, b, delta, 1.0).value;
        const double ba = kr_exact(b, a, delta, 1.0).value;
        const double bc = kr_exact(b, c, delta, 1.0).value;
        const double ac = kr_exact(a, c, delta, 1.0).value;
        if (std::abs(ab - ba) > 1e-9) ++violations;
        if (ac > ab + bc + 1e-9) ++violations;
        if (kr_exact(a, a, delta, 1.0).value > 1e-9) ++violations;
    }
    return {"kr_metric_axioms", violations == 0,
            std::to_string(violations) + " violations over " + std::to_string(triples) + " triples"};
}

inline ValidationResult check_entropic_agreement(int instances, std::mt19937& rng) {
    double worst = 0.0;
    for (int trial = 0; trial < instances; ++trial) {
        const int n = 100 + static_cast<int>(rng() % 101);
        auto a = detail::random_support(rng, n, 1.0);
        auto b = detail::random_support(rng, n, 1.0);
        auto exact = kr_exact(a, b, 0.1, 1.0);
        // epsilon at 1e-3 of the cost scale log(1 + diam/delta)
        const double eps = 1e-3 * std::log(1.0 + std::numbers::sqrt2 / 0.1);
        auto ent = kr_entropic(a, b, 0.1, eps, 30000, 1.0, 4e-4);
        worst = std::max(worst, std::abs(ent.value - exact.value));
    }
    return {"entropic_vs_exact", worst <= 1e-3,
            "max |entropic - exact| = " + std::to_string(worst) + " over " +
                std::to_string(instances) + " instances"};
}

inline ValidationResult check_mass_conservation(int steps) {
    Grid g = make_grid_1d(1.0, 64, true);
    auto u = builtin_velocity("constant", {{"cx", 1.0}});
    FluxTable table = face_fluxes(u, g, 0.0, cfl_step(u, g, 0.0));
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> dist(0.0, 2.0);
    CellField rho(g);
    for (double& v : rho.values) v = dist(rng);
    const double m0 = rho.total_mass();
    for (int i = 0; i < steps; ++i) rho = upwind_step(rho, table);
    const double drift = std::abs(rho.total_mass() - m0) / std::abs(m0);
    return {"mass_conservation", drift <= 1e-12,
            "relative drift " + std::to_string(drift) + " over " + std::to_string(steps) + " steps"};
}

inline ValidationResult check_monotonicity() {
    Grid g = make_grid_2d(1.0, 1.0, 32, 32, true, true);
    auto u = builtin_velocity("alternating_shear",
                              {{"amplitude", 1.0}, {"m", 1.0}, {"period", 1.0}});
    CellField rho = cell_average([](Point p) { return (p[0] < 0.5) ? 1.0 : 0.0; }, g);
    auto rep = solve_upwind(u, rho, 2.0);
    int violations = 0;
    for (size_t i = 0; i < rep.times.size(); ++i) {
        if (rep.min_value[i] < rep.min_value[0] - 1e-13) ++violations;
        if (rep.max_value[i] > rep.max_value[0] + 1e-13) ++violations;
    }
    return {"upwind_monotonicity", violations == 0,
            std::to_string(violations) + " min/max excursions"};
}

inline ValidationResult check_lq_bound() {
    Grid g = make_grid_1d(1.0, 128);
    auto u = builtin_velocity("oscillating", {{"k", 4.0}});
    auto rep = solve_upwind(u, CellField(g, 1.0), 1.0);
    int violations = 0;
    for (size_t i = 0; i < rep.times.size(); ++i)
        if (rep.l2[i] > std::exp(0.5 * rep.times[i]) * rep.l2[0] * (1 + 1e-10)) ++violations;
    return {"lq_growth_bound", violations == 0, std::to_string(violations) + " excursions (q = 2)"};
}

inline ValidationResult check_entropy_decay() {
    Grid g = make_grid_1d(1.0, 128);
    CellField rho = cell_average(
        [](Point p) { return 1.0 + 0.9 * std::cos(std::numbers::pi * p[0]); }, g);
    auto rep = solve_advection_diffusion(builtin_velocity("zero"), 0.05, rho, 0.5);
    int violations = 0;
    for (size_t i = 1; i < rep.entropy.size(); ++i)
        if (rep.entropy[i] > rep.entropy[i - 1] + 1e-12) ++violations;
    return {"diffusive_entropy_decay", violations == 0,
            std::to_string(violations) + " entropy increases"};
}

inline ValidationResult check_neumann_decay() {
    const int n = 256;
    Grid g = make_grid_1d(1.0, n);
    const double kappa = 0.05, T = 0.5;
    CellField rho = cell_average(
        [](Point p) { return 1.0 + 0.5 * std::cos(std::numbers::pi * p[0]); }, g);
    auto rep = solve_advection_diffusion(builtin_velocity("zero"), kappa, rho, T);
    double amp = 0.0;
    for (int k = 0; k < n; ++k)
        amp += rep.final_field.values[k] * std::cos(std::numbers::pi * g.cell_center(k)[0]) *
               g.cell_volume();
    amp *= 2.0;
    const double expected = 0.5 * std::exp(-kappa * std::numbers::pi * std::numbers::pi * T);
    const double rel = std::abs(amp - expected) / expected;
    return {"neumann_eigenmode_decay", rel <= 0.02, "relative error " + std::to_string(rel)};
}

inline ValidationResult check_gronwall(int pairs_per_field, std::mt19937& rng) {
    std::uniform_real_distribution<double> xd(0.1, 0.9);
    const double t = 0.5;
    int violations = 0;
    for (const char* name : {"rigid_rotation", "shear_x", "shear_y", "oscillating"}) {
        std::map<std::string, double> params{{"omega", 1.0}, {"amplitude", 0.7}, {"m", 1.0},
                                             {"k", 2.0}};
        auto u = builtin_velocity(name, params);
        FlowMap fm(u, 1e-3);
        const double budget = t * u.lip_bound(0.0);
        for (int i = 0; i < pairs_per_field; ++i) {
            Point x{xd(rng), xd(rng)}, y{xd(rng), xd(rng)};
            if (x == y) continue;
            const double r = two_particle_log_ratio(fm, x, y, t);
            if (r < -budget - 1e-9 || r > budget + 1e-9) ++violations;
        }
    }
    return {"gronwall_sandwich", violations == 0,
            std::to_string(violations) + " violations (" + std::to_string(pairs_per_field) +
                " pairs per field)"};
}

inline ValidationResult check_oscillating_flow() {
    const int k = 3;
    FlowMap fm(builtin_velocity("oscillating", {{"k", static_cast<double>(k)}}), 1e-3);
    double worst = 0.0;
    for (double x0 : {0.03, 0.11, 0.27, 0.52, 0.81}) {
        const double t = 1.0;
        const double phi = fm.flow({x0, 0.0}, t)[0];
        const double lhs = std::tan(std::numbers::pi * k * phi);
        const double rhs = std::exp(t) * std::tan(std::numbers::pi * k * x0);
        worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
    }
    return {"oscillating_flow_closed_form", worst <= 1e-6, "max deviation " + std::to_string(worst)};
}

inline ValidationResult check_jacobian() {
    FlowMap fm(builtin_velocity("oscillating", {{"k", 2.0}}), 5e-4);
    const double x0 = 1.0 / 8.0, t = 1.0, h = 1e-5;
    const double j = jacobian_along_flow(fm, {x0, 0.0}, t).jacobian;
    const double fd =
        (fm.flow({x0 + h, 0.0}, t)[0] - fm.flow({x0 - h, 0.0}, t)[0]) / (2 * h);
    const double rel = std::abs(j - fd) / std::abs(fd);
    return {"jacobian_vs_finite_difference", rel <= 1e-4, "relative error " + std::to_string(rel)};
}

/// Full invariant suite; `quick` shrinks the randomized sample counts.
inline std::vector<ValidationResult> run_validation(bool quick) {
    std::mt19937 rng(2024);
    std::vector<ValidationResult> out;
    out.push_back(check_ot_oracle(quick ? 20 : 200, rng));
    out.push_back(check_metric_axioms(quick ? 50 : 500, rng));
    out.push_back(check_entropic_agreement(quick ? 3 : 50, rng));
    out.push_back(check_mass_conservation(quick ? 1000 : 10000));
    out.push_back(check_monotonicity());
    out.push_back(check_lq_bound());
    out.push_back(check_entropy_decay());
    out.push_back(check_neumann_decay());
    out.push_back(check_gronwall(quick ? 100 : 1000, rng));
    out.push_back(check_oscillating_flow());
    out.push_back(check_jacobian());
    return out;
}

}  // namespace krlab
