#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "krlab/grid.hpp"

using namespace krlab;

TEST_CASE("make_grid: uniform 1D subdivision") {
    Grid g = make_grid_1d(1.0, 4);
    CHECK(g.h() == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(g.cell_volume() == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(g.num_cells() == 4);
    CHECK(g.face_area(0) == doctest::Approx(1.0));
}

TEST_CASE("make_grid: anisotropic 2D, h is the maximal edge length") {
    Grid g = make_grid_2d(1.0, 2.0, 4, 4);
    CHECK(g.h(0) == doctest::Approx(0.25));
    CHECK(g.h(1) == doctest::Approx(0.5));
    CHECK(g.h() == doctest::Approx(0.5));
    CHECK(g.cell_volume() == doctest::Approx(0.125));
    CHECK(g.face_area(0) == doctest::Approx(0.5));
    CHECK(g.face_area(1) == doctest::Approx(0.25));
}

TEST_CASE("make_grid: degenerate anisotropy rejected") {
    CHECK_THROWS_AS(make_grid_2d(1.0, 1.0, 4, 64), std::invalid_argument);
    CHECK_THROWS_AS(make_grid_1d(0.0, 4), std::invalid_argument);
    CHECK_THROWS_AS(make_grid_1d(-1.0, 4), std::invalid_argument);
    CHECK_THROWS_AS(make_grid_1d(1.0, 0), std::invalid_argument);
}

TEST_CASE("cell_average: constants, linear, odd symmetry") {
    Grid g1 = make_grid_1d(1.0, 8);
    auto ones = cell_average([](Point) { return 1.0; }, g1);
    for (double v : ones.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));

    Grid g2 = make_grid_1d(1.0, 2);
    auto lin = cell_average([](Point p) { return p[0]; }, g2);
    CHECK(lin.values[0] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(lin.values[1] == doctest::Approx(0.75).epsilon(1e-14));

    auto sine = cell_average([](Point p) { return std::sin(2 * std::numbers::pi * p[0]); }, g1);
    CHECK(std::abs(sine.total_mass()) < 1e-12);
}

TEST_CASE("cell_average: exact on polynomials of degree <= 4 per axis") {
    Grid g = make_grid_2d(1.0, 1.0, 3, 3);
    auto f = [](Point p) {
        const double x = p[0], y = p[1];
        return (x * x * x * x - 2 * x * x + 1) * (3 * y * y * y * y + y);
    };
    auto avg = cell_average(f, g);
    // exact antiderivative: int x^4-2x^2+1 = 1/5 - 2/3 + 1, int 3y^4+y = 3/5 + 1/2
    const double exact_mass = (1.0 / 5 - 2.0 / 3 + 1) * (3.0 / 5 + 0.5);
    CHECK(avg.total_mass() == doctest::Approx(exact_mass).epsilon(1e-12));
}

TEST_CASE("cell_average: non-finite density rejected") {
    Grid g = make_grid_1d(1.0, 2);
    CHECK_THROWS_AS(cell_average([](Point p) { return 1.0 / (p[0] - p[0]); }, g),
                    std::runtime_error);
}

TEST_CASE("lq_norm and entropy on hand-checked fixtures") {
    Grid g = make_grid_1d(1.0, 2);
    CellField ones(g, 1.0);
    CHECK(entropy(ones) == doctest::Approx(0.0));
    CHECK(lq_norm(ones, 1.0) == doctest::Approx(1.0));
    CHECK(lq_norm(ones, 2.0) == doctest::Approx(1.0));
    CHECK(lq_norm(ones, std::numeric_limits<double>::infinity()) == doctest::Approx(1.0));

    CellField spike(g, std::vector<double>{2.0, 0.0});
    CHECK(entropy(spike) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    CellField two(g, std::vector<double>{3.0, 1.0});
    CHECK(lq_norm(two, 2.0) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));

    CellField neg(g, std::vector<double>{-1.0, 1.0});
    CHECK_THROWS_AS(entropy(neg), std::domain_error);
}

TEST_CASE("lq_norm is monotone in q") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> dist(0.0, 3.0);
    Grid g = make_grid_1d(1.0, 32);
    for (int trial = 0; trial < 100; ++trial) {
        CellField f(g);
        for (double& v : f.values) v = dist(rng);
        const double l1 = lq_norm(f, 1.0);
        const double l2 = lq_norm(f, 2.0);
        const double li = lq_norm(f, std::numeric_limits<double>::infinity());
        CHECK(l1 <= l2 + 1e-12);
        CHECK(l2 <= li + 1e-12);
    }
}

TEST_CASE("total mass matches direct summation") {
    Grid g = make_grid_2d(1.0, 2.0, 8, 8);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    CellField f(g);
    double direct = 0.0;
    for (double& v : f.values) {
        v = dist(rng);
        direct += v * g.cell_volume();
    }
    CHECK(f.total_mass() == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("periodic neighbor wrap") {
    Grid g = make_grid_1d(1.0, 4, true);
    CHECK(g.neighbor(3, 0, 1) == 0);
    CHECK(g.neighbor(0, 0, 0) == 3);
    Grid gb = make_grid_1d(1.0, 4, false);
    CHECK(gb.neighbor(3, 0, 1) == -1);
}
