#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace krlab {

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // max |fit - data| in log space
};

/// Least-squares fit of log(value) against log(parameter).
inline RateFit fit_rate(const std::vector<std::pair<double, double>>& pairs) {
    if (pairs.size() < 3) throw std::invalid_argument("fit_rate: need at least 3 pairs");
    std::vector<double> xs, ys;
    for (auto [p, v] : pairs) {
        if (!(p > 0.0) || !(v > 0.0))
            throw std::invalid_argument("fit_rate: parameters and values must be positive");
        xs.push_back(std::log(p));
        ys.push_back(std::log(v));
    }
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("fit_rate: degenerate parameter list");
    RateFit fit;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    for (size_t i = 0; i < xs.size(); ++i)
        fit.residual = std::max(fit.residual, std::abs(fit.intercept + fit.slope * xs[i] - ys[i]));
    return fit;
}

/// Least-squares line y = slope * x + intercept on raw (not log) pairs, with
/// the same max-deviation residual. Used for log M against the gradient budget.
inline RateFit fit_line(const std::vector<std::pair<double, double>>& pairs) {
    if (pairs.size() < 3) throw std::invalid_argument("fit_line: need at least 3 pairs");
    const double n = static_cast<double>(pairs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [x, y] : pairs) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
    RateFit fit;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    for (auto [x, y] : pairs)
        fit.residual = std::max(fit.residual, std::abs(fit.intercept + fit.slope * x - y));
    return fit;
}

}  // namespace krlab
