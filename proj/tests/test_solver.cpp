#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "krlab/solver.hpp"

using namespace krlab;
namespace nums = std::numbers;

TEST_CASE("cfl_step on the oscillating field") {
    auto u = builtin_velocity("oscillating", {{"k", 4.0}});
    Grid g = make_grid_1d(1.0, 64);
    // lambda * h / sup = 0.45 * (1/64) * 8 pi
    CHECK(cfl_step(u, g, 0.0) == doctest::Approx(0.45 * 8 * nums::pi / 64).epsilon(1e-12));
    CHECK(cfl_step(u, g, 0.0, 0.45, 0.01) == doctest::Approx(0.01));
    CHECK_THROWS_AS(cfl_step(u, g, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(cfl_step(u, g, 0.0, 1.5), std::invalid_argument);

    // zero field falls back to h
    CHECK(cfl_step(builtin_velocity("zero"), g, 0.0) == doctest::Approx(g.h()));

    // breakpoints cap the step
    auto alt = builtin_velocity("alternating_shear",
                                {{"amplitude", 1.0}, {"m", 1.0}, {"period", 0.1}});
    Grid g2 = make_grid_2d(1.0, 1.0, 8, 8, true, true);
    CHECK(cfl_step(alt, g2, 0.04) <= doctest::Approx(0.01));
}

TEST_CASE("upwind_step: three-cell shift by hand") {
    Grid g = make_grid_1d(1.0, 3, true);
    auto u = builtin_velocity("constant", {{"cx", 1.0}});
    FluxTable table = face_fluxes(u, g, 0.0, 1.0 / 6.0);
    CellField rho(g, std::vector<double>{1.0, 0.0, 0.0});
    CellField next = upwind_step(rho, table);
    CHECK(next.values[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(next.values[1] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(next.values[2] == doctest::Approx(0.0));
    CHECK(next.time == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("upwind_step: CFL violation raises stability_error") {
    Grid g = make_grid_1d(1.0, 4, true);
    auto u = builtin_velocity("constant", {{"cx", 1.0}});
    FluxTable table = face_fluxes(u, g, 0.0, 0.5);  // dt/h = 2 > 1
    CellField rho(g, 1.0);
    CHECK_THROWS_AS(upwind_step(rho, table), stability_error);
}

TEST_CASE("upwind_step: exact mass conservation on random data") {
    Grid g = make_grid_2d(1.0, 1.0, 16, 16, true, true);
    auto u = builtin_velocity("shear_x", {{"amplitude", 1.0}, {"m", 2.0}});
    FluxTable table = face_fluxes(u, g, 0.0, cfl_step(u, g, 0.0));
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    CellField rho(g);
    for (double& v : rho.values) v = dist(rng);
    const double m0 = rho.total_mass();
    for (int n = 0; n < 50; ++n) rho = upwind_step(rho, table);
    CHECK(std::abs(rho.total_mass() - m0) < 1e-12);
}

TEST_CASE("monotonicity for divergence-free drivers") {
    Grid g = make_grid_2d(1.0, 1.0, 16, 16, true, true);
    auto u = builtin_velocity("alternating_shear",
                              {{"amplitude", 1.0}, {"m", 1.0}, {"period", 1.0}});
    CellField rho = cell_average(
        [](Point p) { return (p[0] < 0.5) ? 1.0 : 0.0; }, g);
    auto rep = solve_upwind(u, rho, 2.0);
    for (size_t i = 0; i < rep.times.size(); ++i) {
        CHECK(rep.min_value[i] >= rep.min_value[0] - 1e-13);
        CHECK(rep.max_value[i] <= rep.max_value[0] + 1e-13);
    }
    CHECK(rep.mass_drift() < 1e-12);
    CHECK(rep.final_field.min_value() >= -1e-13);
}

TEST_CASE("solve_upwind: unit Courant number is an exact shift") {
    Grid g = make_grid_1d(1.0, 64, true);
    auto u = builtin_velocity("constant", {{"cx", 1.0}});
    CellField rho = cell_average([](Point p) { return (p[0] < 0.25) ? 1.0 : 0.0; }, g);
    auto rep = solve_upwind(u, rho, 0.5, 1.0);
    // after T = 0.5 the profile shifted by exactly 32 cells
    double err = 0.0;
    for (int k = 0; k < 64; ++k)
        err += std::abs(rep.final_field.values[(k + 32) % 64] - rho.values[k]) * g.cell_volume();
    CHECK(err < 1e-12);
}

TEST_CASE("solve_upwind: snapshots land at the requested times") {
    Grid g = make_grid_1d(1.0, 32, true);
    auto u = builtin_velocity("constant", {{"cx", 1.0}});
    CellField rho(g, 1.0);
    auto rep = solve_upwind(u, rho, 1.0, 0.5, {0.0, 0.25, 1.0});
    REQUIRE(rep.snapshots.size() == 3);
    CHECK(rep.snapshot_times[0] == 0.0);
    CHECK(rep.snapshots[1].time == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(rep.snapshots[2].time == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("solve_upwind: boundary compatibility enforced") {
    Grid g = make_grid_1d(1.0, 8, false);
    auto u = builtin_velocity("constant", {{"cx", 1.0}});
    CellField rho(g, 1.0);
    CHECK_THROWS_AS(solve_upwind(u, rho, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(solve_upwind(u, rho, -1.0), std::invalid_argument);
}

TEST_CASE("solve_upwind: Lq growth bound for the compressible field") {
    // ||rho(t)||_2 <= exp((1 - 1/2) t sup (div u)^-) ||rho0||_2
    Grid g = make_grid_1d(1.0, 128);
    auto u = builtin_velocity("oscillating", {{"k", 4.0}});
    CellField rho(g, 1.0);
    auto rep = solve_upwind(u, rho, 1.0);
    for (size_t i = 0; i < rep.times.size(); ++i) {
        CHECK(rep.l2[i] <= std::exp(0.5 * rep.times[i]) * rep.l2[0] * (1 + 1e-10));
        CHECK(rep.min_value[i] >= 0.0);
    }
    CHECK(rep.mass_drift() < 1e-12);
}

TEST_CASE("solve_upwind: identical reruns are bitwise identical") {
    Grid g = make_grid_2d(1.0, 1.0, 16, 16, true, true);
    auto u = builtin_velocity("alternating_shear",
                              {{"amplitude", 0.8}, {"m", 2.0}, {"period", 0.5}});
    CellField rho = cell_average([](Point p) { return std::cos(2 * nums::pi * p[0]); }, g);
    auto a = solve_upwind(u, rho, 1.3);
    auto b = solve_upwind(u, rho, 1.3);
    REQUIRE(a.final_field.values.size() == b.final_field.values.size());
    for (size_t i = 0; i < a.final_field.values.size(); ++i)
        CHECK(a.final_field.values[i] == b.final_field.values[i]);
}

TEST_CASE("advection-diffusion: argument validation") {
    Grid g = make_grid_1d(1.0, 8);
    CellField rho(g, 1.0);
    auto u = builtin_velocity("zero");
    CHECK_THROWS_AS(solve_advection_diffusion(u, 0.0, rho, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(solve_advection_diffusion(u, -1.0, rho, 1.0), std::invalid_argument);
    CellField neg(g, std::vector<double>(8, -1.0));
    CHECK_THROWS_AS(solve_advection_diffusion(u, 0.1, neg, 1.0), std::invalid_argument);
}

TEST_CASE("advection-diffusion: Neumann eigenmode decay within 2%") {
    const int n = 256;
    Grid g = make_grid_1d(1.0, n);
    const double kappa = 0.05, T = 0.5;
    CellField rho = cell_average(
        [](Point p) { return 1.0 + 0.5 * std::cos(nums::pi * p[0]); }, g);
    auto rep = solve_advection_diffusion(builtin_velocity("zero"), kappa, rho, T);
    // amplitude measured by projection onto the first Neumann mode
    auto amplitude = [&](const CellField& f) {
        double s = 0.0;
        for (int k = 0; k < n; ++k)
            s += f.values[k] * std::cos(nums::pi * g.cell_center(k)[0]) * g.cell_volume();
        return 2.0 * s;
    };
    const double expected = 0.5 * std::exp(-kappa * nums::pi * nums::pi * T);
    CHECK(amplitude(rep.final_field) == doctest::Approx(expected).epsilon(0.02));
    CHECK(rep.mass_drift() < 1e-12);
    // entropy is non-increasing under pure diffusion
    for (size_t i = 1; i < rep.entropy.size(); ++i)
        CHECK(rep.entropy[i] <= rep.entropy[i - 1] + 1e-12);
    CHECK(rep.tv_time_integral > 0.0);
}

TEST_CASE("advection-diffusion converges to the pure upwind solve as kappa -> 0") {
    Grid g = make_grid_1d(1.0, 64);
    auto u = builtin_velocity("oscillating", {{"k", 4.0}});
    CellField rho = cell_average(
        [](Point p) { return 1.0 + std::cos(2 * nums::pi * p[0]); }, g);
    auto ref = solve_upwind(u, rho, 0.5);
    double prev = std::numeric_limits<double>::infinity();
    for (double kappa : {1e-2, 1e-3, 1e-4}) {
        auto rep = solve_advection_diffusion(u, kappa, rho, 0.5);
        const double err = l1_distance(rep.final_field, ref.final_field);
        CHECK(err < prev);
        prev = err;
    }
    CHECK(prev < 1e-2);
}
