#include <cmath>
#include <random>

#include "doctest.h"
#include "krlab/ratefit.hpp"

using namespace krlab;

TEST_CASE("fit_rate recovers exact power laws") {
    std::vector<std::pair<double, double>> pairs;
    for (double h : {1.0 / 64, 1.0 / 128, 1.0 / 256, 1.0 / 512})
        pairs.push_back({h, 3.0 * std::sqrt(h)});
    auto fit = fit_rate(pairs);
    CHECK(fit.slope == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::exp(fit.intercept) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(fit.residual <= 1e-12);
}

TEST_CASE("fit_rate: residual is the max log-space deviation") {
    std::vector<std::pair<double, double>> pairs = {
        {1.0, 1.0}, {0.5, 0.5}, {0.25, 0.25 * std::exp(0.1)}};
    auto fit = fit_rate(pairs);
    CHECK(fit.residual > 0.0);
    CHECK(fit.residual < 0.1);  // least squares spreads the bump
    // perturbing one point moves the max deviation up
    auto clean = fit_rate({{1.0, 1.0}, {0.5, 0.5}, {0.25, 0.25}});
    CHECK(clean.residual <= 1e-14);
}

TEST_CASE("fit_rate input validation") {
    CHECK_THROWS_AS(fit_rate({{1.0, 1.0}, {0.5, 0.5}}), std::invalid_argument);
    CHECK_THROWS_AS(fit_rate({{1.0, 1.0}, {0.5, 0.5}, {0.25, 0.0}}), std::invalid_argument);
    CHECK_THROWS_AS(fit_rate({{1.0, 1.0}, {-0.5, 0.5}, {0.25, 0.1}}), std::invalid_argument);
}

TEST_CASE("fit_line recovers an affine trend in raw coordinates") {
    std::vector<std::pair<double, double>> pairs;
    for (double x : {0.0, 1.0, 2.0, 3.0, 4.0}) pairs.push_back({x, -0.7 * x + 2.0});
    auto fit = fit_line(pairs);
    CHECK(fit.slope == doctest::Approx(-0.7).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit.residual <= 1e-12);
}

TEST_CASE("fit_line tolerates negative ordinates") {
    auto fit = fit_line({{0.0, -1.0}, {1.0, -2.0}, {2.0, -3.0}});
    CHECK(fit.slope == doctest::Approx(-1.0).epsilon(1e-12));
}
