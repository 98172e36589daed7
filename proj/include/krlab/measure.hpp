#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "krlab/grid.hpp"

namespace krlab {

struct unbalanced_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Weighted support points (cell centers); zero-weight points are pruned.
/// `wrap` carries the domain period per axis (0 = not periodic), so distances
/// between support points respect the torus geometry of the originating grid.
struct DiscreteMeasure {
    std::vector<Point> points;
    std::vector<double> weights;
    Point wrap = {0.0, 0.0};

    void push(Point p, double w) {
        if (w < 0.0) throw std::invalid_argument("DiscreteMeasure: negative weight");
        if (w == 0.0) return;
        points.push_back(p);
        weights.push_back(w);
    }
    size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    double total_mass() const {
        double m = 0.0;
        for (double w : weights) m += w;
        return m;
    }
};

/// Sparse coupling between two discrete measures.
struct TransportPlan {
    struct Entry {
        int source;
        int target;
        double mass;
    };
    std::vector<Entry> entries;
    size_t n_sources = 0;
    size_t n_targets = 0;

    std::vector<double> row_sums() const {
        std::vector<double> r(n_sources, 0.0);
        for (const auto& e : entries) r[e.source] += e.mass;
        return r;
    }
    std::vector<double> col_sums() const {
        std::vector<double> c(n_targets, 0.0);
        for (const auto& e : entries) c[e.target] += e.mass;
        return c;
    }
    double total_mass() const {
        double m = 0.0;
        for (const auto& e : entries) m += e.mass;
        return m;
    }
};

/// Positive/negative parts of rho1 - rho2 as point masses at cell centers.
/// The smaller side is rescaled (relative change <= 1e-10) so both parts
/// carry exactly equal mass.
inline std::pair<DiscreteMeasure, DiscreteMeasure> split_difference(const CellField& rho1,
                                                                    const CellField& rho2) {
    if (!rho1.grid.same_layout(rho2.grid))
        throw std::invalid_argument("split_difference: fields live on different grids");
    const double m1 = rho1.total_mass();
    const double m2 = rho2.total_mass();
    const double scale = std::max({std::abs(m1), std::abs(m2), rho1.grid.domain_volume()});
    if (std::abs(m1 - m2) > 1e-10 * scale)
        throw unbalanced_error("split_difference: total masses differ beyond tolerance");

    const double vol = rho1.grid.cell_volume();
    DiscreteMeasure pos, neg;
    for (int a = 0; a < rho1.grid.dim(); ++a)
        if (rho1.grid.periodic(a)) pos.wrap[a] = neg.wrap[a] = rho1.grid.extent(a);
    for (int k = 0; k < rho1.grid.num_cells(); ++k) {
        const double d = (rho1.values[k] - rho2.values[k]) * vol;
        if (d > 0.0)
            pos.push(rho1.grid.cell_center(k), d);
        else if (d < 0.0)
            neg.push(rho1.grid.cell_center(k), -d);
    }
    const double mp = pos.total_mass();
    const double mn = neg.total_mass();
    if (mp > 0.0 && mn > 0.0 && mp != mn) {
        DiscreteMeasure& small = (mp < mn) ? pos : neg;
        const double factor = std::max(mp, mn) / std::min(mp, mn);
        for (double& w : small.weights) w *= factor;
    }
    return {std::move(pos), std::move(neg)};
}

/// Full marginals of a field (every cell mass, all nonnegative values required
/// to be so). Used for the transshipment identity check.
inline DiscreteMeasure as_measure(const CellField& f) {
    DiscreteMeasure m;
    for (int a = 0; a < f.grid.dim(); ++a)
        if (f.grid.periodic(a)) m.wrap[a] = f.grid.extent(a);
    const double vol = f.grid.cell_volume();
    for (int k = 0; k < f.grid.num_cells(); ++k) {
        if (f.values[k] < 0.0) throw std::invalid_argument("as_measure: negative cell value");
        m.push(f.grid.cell_center(k), f.values[k] * vol);
    }
    return m;
}

}  // namespace krlab
