#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "krlab/quadrature.hpp"

namespace krlab {

/// A point in the (at most two-dimensional) domain. 1D uses component 0 only.
using Point = std::array<double, 2>;

/// Tensor tessellation of a rectangular box [0, extent_0] x [0, extent_1]
/// into congruent rectangular cells. Axes may individually be periodic
/// (torus variant); non-periodic axes carry no-flux boundary faces.
class Grid {
public:
    Grid(int dim, std::array<double, 2> extent, std::array<int, 2> cells,
         std::array<bool, 2> periodic = {false, false})
        : dim_(dim), extent_(extent), cells_(cells), periodic_(periodic) {
        if (dim != 1 && dim != 2) throw std::invalid_argument("Grid: dim must be 1 or 2");
        for (int a = dim; a < 2; ++a) {
            extent_[a] = 1.0;
            cells_[a] = 1;
            periodic_[a] = false;
        }
        for (int a = 0; a < dim; ++a) {
            if (!(extent_[a] > 0.0)) throw std::invalid_argument("Grid: extent must be positive");
            if (cells_[a] < 1) throw std::invalid_argument("Grid: need at least one cell per axis");
            h_[a] = extent_[a] / cells_[a];
        }
        h_[1] = (dim == 2) ? h_[1] : h_[0];
        hmax_ = *std::max_element(h_.begin(), h_.begin() + dim);
        const double hmin = *std::min_element(h_.begin(), h_.begin() + dim);
        // Regularity h_i >= c*h with c = 0.5; rejects degenerate anisotropy.
        if (hmin < regularity_constant() * hmax_)
            throw std::invalid_argument("Grid: anisotropy violates regularity h_i >= 0.5*h");
        volume_ = 1.0;
        for (int a = 0; a < dim; ++a) volume_ *= extent_[a];
    }

    static constexpr double regularity_constant() { return 0.5; }

    int dim() const { return dim_; }
    double extent(int axis) const { return extent_[axis]; }
    int cells(int axis) const { return cells_[axis]; }
    int num_cells() const { return cells_[0] * (dim_ == 2 ? cells_[1] : 1); }
    double h(int axis) const { return h_[axis]; }
    double h() const { return hmax_; }
    double h_min() const { return dim_ == 2 ? std::min(h_[0], h_[1]) : h_[0]; }
    bool periodic(int axis) const { return periodic_[axis]; }
    double domain_volume() const { return volume_; }

    double cell_volume() const {
        double v = 1.0;
        for (int a = 0; a < dim_; ++a) v *= h_[a];
        return v;
    }
    /// Area of a face orthogonal to `axis` (length of the face in 2D, 1 in 1D).
    double face_area(int axis) const { return cell_volume() / h_[axis]; }

    int index(int i, int j = 0) const { return i + cells_[0] * j; }
    std::array<int, 2> multi_index(int idx) const { return {idx % cells_[0], idx / cells_[0]}; }

    Point cell_center(int idx) const {
        auto [i, j] = multi_index(idx);
        Point p{(i + 0.5) * h_[0], 0.0};
        if (dim_ == 2) p[1] = (j + 0.5) * h_[1];
        return p;
    }
    std::array<double, 2> cell_bounds(int idx, int axis) const {
        auto mi = multi_index(idx);
        return {mi[axis] * h_[axis], (mi[axis] + 1) * h_[axis]};
    }

    /// Index of the neighbor across the face on `side` (0 = low, 1 = high) of
    /// `axis`, or -1 at a non-periodic boundary.
    int neighbor(int idx, int axis, int side) const {
        auto mi = multi_index(idx);
        int c = mi[axis] + (side == 0 ? -1 : 1);
        if (c < 0 || c >= cells_[axis]) {
            if (!periodic_[axis]) return -1;
            c = (c + cells_[axis]) % cells_[axis];
        }
        mi[axis] = c;
        return index(mi[0], mi[1]);
    }

    bool same_layout(const Grid& o) const {
        return dim_ == o.dim_ && cells_ == o.cells_ && extent_ == o.extent_ &&
               periodic_ == o.periodic_;
    }

    bool contains(const Point& p, double tol = 0.0) const {
        for (int a = 0; a < dim_; ++a)
            if (p[a] < -tol || p[a] > extent_[a] + tol) return false;
        return true;
    }

private:
    int dim_;
    std::array<double, 2> extent_;
    std::array<int, 2> cells_;
    std::array<bool, 2> periodic_;
    std::array<double, 2> h_{};
    double hmax_ = 0.0;
    double volume_ = 0.0;
};

inline Grid make_grid(std::array<double, 2> extent, std::array<int, 2> cells, int dim,
                      std::array<bool, 2> periodic = {false, false}) {
    return Grid(dim, extent, cells, periodic);
}
inline Grid make_grid_1d(double extent, int cells, bool periodic = false) {
    return Grid(1, {extent, 1.0}, {cells, 1}, {periodic, false});
}
inline Grid make_grid_2d(double ex, double ey, int nx, int ny, bool periodic_x = false,
                         bool periodic_y = false) {
    return Grid(2, {ex, ey}, {nx, ny}, {periodic_x, periodic_y});
}

/// Piecewise-constant density: one value per cell, stamped with a time.
struct CellField {
    Grid grid;
    std::vector<double> values;
    double time = 0.0;

    CellField(Grid g, double fill = 0.0, double t = 0.0)
        : grid(std::move(g)), values(static_cast<size_t>(grid.num_cells()), fill), time(t) {}
    CellField(Grid g, std::vector<double> v, double t = 0.0)
        : grid(std::move(g)), values(std::move(v)), time(t) {
        if (static_cast<int>(values.size()) != grid.num_cells())
            throw std::invalid_argument("CellField: value count does not match grid");
    }

    double total_mass() const {
        const double vol = grid.cell_volume();
        double m = 0.0;
        for (double v : values) m += v;
        return m * vol;
    }
    double min_value() const { return *std::min_element(values.begin(), values.end()); }
    double max_value() const { return *std::max_element(values.begin(), values.end()); }
};

/// Volume-averaged L^q norm, (avg |rho|^q)^(1/q); q = infinity gives max |rho|.
inline double lq_norm(const CellField& f, double q) {
    if (!(q >= 1.0)) throw std::invalid_argument("lq_norm: q must be >= 1");
    if (std::isinf(q)) {
        double m = 0.0;
        for (double v : f.values) m = std::max(m, std::abs(v));
        return m;
    }
    double s = 0.0;
    for (double v : f.values) s += std::pow(std::abs(v), q);
    return std::pow(s / f.values.size(), 1.0 / q);
}

/// Entropy H(rho) = avg rho log rho with the convention 0*log 0 = 0.
inline double entropy(const CellField& f) {
    double s = 0.0;
    for (double v : f.values) {
        if (v < 0.0) throw std::domain_error("entropy: negative cell value");
        if (v > 0.0) s += v * std::log(v);
    }
    return s / f.values.size();
}

/// Volume-averaged L^1 distance between two fields on the same grid.
inline double l1_distance(const CellField& a, const CellField& b) {
    if (!a.grid.same_layout(b.grid)) throw std::invalid_argument("l1_distance: grid mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) s += std::abs(a.values[i] - b.values[i]);
    return s / a.values.size();
}

/// Cell averages of a pointwise density via tensor 5-point Gauss quadrature.
inline CellField cell_average(const std::function<double(Point)>& density, const Grid& grid,
                              double time = 0.0) {
    CellField out(grid, 0.0, time);
    const auto& xi = GaussLegendre5::nodes;
    const auto& wi = GaussLegendre5::weights;
    for (int idx = 0; idx < grid.num_cells(); ++idx) {
        const Point c = grid.cell_center(idx);
        double acc = 0.0;
        if (grid.dim() == 1) {
            for (int a = 0; a < 5; ++a)
                acc += wi[a] * density({c[0] + 0.5 * grid.h(0) * xi[a], 0.0});
            acc *= 0.5;  // reference-interval half-width
        } else {
            for (int a = 0; a < 5; ++a)
                for (int b = 0; b < 5; ++b)
                    acc += wi[a] * wi[b] *
                           density({c[0] + 0.5 * grid.h(0) * xi[a],
                                    c[1] + 0.5 * grid.h(1) * xi[b]});
            acc *= 0.25;
        }
        if (!std::isfinite(acc))
            throw std::runtime_error("cell_average: non-finite density value in cell " +
                                     std::to_string(idx));
        out.values[idx] = acc;
    }
    return out;
}

}  // namespace krlab
