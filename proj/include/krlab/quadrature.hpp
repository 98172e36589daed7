#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace krlab {

/// 5-point Gauss-Legendre rule on [-1, 1]; exact for polynomials up to degree 9.
struct GaussLegendre5 {
    static constexpr int n = 5;
    static constexpr std::array<double, 5> nodes = {
        -0.9061798459386639928, -0.5384693101056830910, 0.0,
        0.5384693101056830910, 0.9061798459386639928};
    static constexpr std::array<double, 5> weights = {
        0.2369268850561890875, 0.4786286704993664680, 0.5688888888888888889,
        0.4786286704993664680, 0.2369268850561890875};
};

/// Integral of f over [a, b] with a single 5-point Gauss panel.
template <class F>
double gauss5(F&& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < GaussLegendre5::n; ++i)
        s += GaussLegendre5::weights[i] * f(mid + half * GaussLegendre5::nodes[i]);
    return s * half;
}

/// Composite 5-point Gauss over [a, b] split into `panels` equal panels.
template <class F>
double gauss5_composite(F&& f, double a, double b, int panels) {
    if (panels < 1) throw std::invalid_argument("gauss5_composite: panels must be >= 1");
    const double dw = (b - a) / panels;
    double s = 0.0;
    for (int p = 0; p < panels; ++p) s += gauss5(f, a + p * dw, a + (p + 1) * dw);
    return s;
}

/// 3-point Gauss rule on [a, b], used for time averages of face fluxes.
template <class F>
double gauss3(F&& f, double a, double b) {
    static const double x = std::sqrt(3.0 / 5.0);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    return half * ((5.0 / 9.0) * f(mid - half * x) + (8.0 / 9.0) * f(mid) +
                   (5.0 / 9.0) * f(mid + half * x));
}

}  // namespace krlab
