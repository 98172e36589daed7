#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "krlab/flow.hpp"

using namespace krlab;
namespace nums = std::numbers;

namespace {

/// 1D field u(x) = x; trajectories x0 e^t, divergence 1. Test-only fixture.
VelocityField linear_1d() {
    VelocityField f;
    f.name = "linear";
    f.dim = 1;
    f.value = [](double, Point p) { return Point{p[0], 0.0}; };
    f.divergence = [](double, Point) { return 1.0; };
    f.tangential = false;  // integrate unbounded
    f.sup_norm = [](double) { return 1.0; };
    f.lip_bound = [](double) { return 1.0; };
    f.sobolev_seminorm = [](double, double) { return 1.0; };
    f.neg_div_sup = [](double) { return 0.0; };
    return f;
}

}  // namespace

TEST_CASE("zero field: identity flow") {
    FlowMap fm(builtin_velocity("zero"), 0.1);
    Point x = fm.flow({0.3, 0.7}, 5.0);
    CHECK(x[0] == 0.3);
    CHECK(x[1] == 0.7);
}

TEST_CASE("rigid rotation: quarter turn") {
    FlowMap fm(builtin_velocity("rigid_rotation", {{"omega", nums::pi / 2}}), 1e-3);
    Point x = fm.flow({1.0, 0.5}, 1.0);
    CHECK(x[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(x[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("oscillating flow: tan(pi k phi) = e^t tan(pi k x)") {
    const double k = 3.0;
    FlowMap fm(builtin_velocity("oscillating", {{"k", k}}), 1e-3);
    for (double x0 : {0.03, 0.11, 0.27, 0.52, 0.81}) {
        const double t = 1.0;
        const double phi = fm.flow({x0, 0.0}, t)[0];
        const double lhs = std::tan(nums::pi * k * phi);
        const double rhs = std::exp(t) * std::tan(nums::pi * k * x0);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
    }
}

TEST_CASE("integrator order at least 3.5 on the rotation field") {
    auto exact = [](Point x0, double omega, double t) {
        const double c = std::cos(omega * t), s = std::sin(omega * t);
        const double dx = x0[0] - 0.5, dy = x0[1] - 0.5;
        return Point{0.5 + c * dx - s * dy, 0.5 + s * dx + c * dy};
    };
    const double omega = 1.2, t = 1.0;
    auto u = builtin_velocity("rigid_rotation", {{"omega", omega}});
    Point x0{0.8, 0.55};
    Point ref = exact(x0, omega, t);
    auto err = [&](double dt) {
        Point x = FlowMap(u, dt).flow(x0, t);
        return std::hypot(x[0] - ref[0], x[1] - ref[1]);
    };
    const double e1 = err(0.05), e2 = err(0.025);
    CHECK(std::log2(e1 / e2) >= 3.5);
}

TEST_CASE("jacobian: divergence-free gives J = 1, linear field gives e") {
    FlowMap rot(builtin_velocity("rigid_rotation", {{"omega", 0.9}}), 1e-3);
    auto jr = jacobian_along_flow(rot, {0.7, 0.6}, 1.0);
    CHECK(jr.jacobian == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(jr.lower_bound == doctest::Approx(1.0));

    FlowMap lin(linear_1d(), 1e-3);
    auto jl = jacobian_along_flow(lin, {0.1, 0.0}, 1.0);
    CHECK(jl.jacobian == doctest::Approx(std::exp(1.0)).epsilon(1e-8));
    CHECK(jl.lower_bound == doctest::Approx(1.0));
}

TEST_CASE("jacobian equals the finite-difference flow derivative") {
    FlowMap fm(builtin_velocity("oscillating", {{"k", 2.0}}), 5e-4);
    const double x0 = 1.0 / 8.0, t = 1.0, h = 1e-5;
    const double j = jacobian_along_flow(fm, {x0, 0.0}, t).jacobian;
    const double fd =
        (fm.flow({x0 + h, 0.0}, t)[0] - fm.flow({x0 - h, 0.0}, t)[0]) / (2 * h);
    CHECK(j == doctest::Approx(fd).epsilon(1e-5));
    // J >= Lambda
    auto jr = jacobian_along_flow(fm, {x0, 0.0}, t);
    CHECK(jr.jacobian >= jr.lower_bound - 1e-10);
}

TEST_CASE("two-particle log ratio") {
    FlowMap zero(builtin_velocity("zero"), 0.1);
    CHECK(two_particle_log_ratio(zero, {0.1, 0.0}, {0.9, 0.0}, 2.0) == 0.0);
    CHECK_THROWS_AS(two_particle_log_ratio(zero, {0.1, 0.0}, {0.1, 0.0}, 1.0),
                    std::invalid_argument);

    FlowMap rot(builtin_velocity("rigid_rotation", {{"omega", 0.8}}), 1e-3);
    CHECK(std::abs(two_particle_log_ratio(rot, {0.3, 0.4}, {0.6, 0.7}, 1.0)) < 1e-6);

    FlowMap lin(linear_1d(), 1e-4);
    CHECK(two_particle_log_ratio(lin, {0.05, 0.0}, {0.2, 0.0}, 1.0) ==
          doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("semigroup property for autonomous catalog fields") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> xd(0.2, 0.8), td(0.0, 1.0);
    for (const char* name : {"rigid_rotation", "oscillating"}) {
        std::map<std::string, double> params{{"omega", 1.1}, {"k", 2.0}};
        FlowMap fm(builtin_velocity(name, params), 1e-3);
        for (int i = 0; i < 100; ++i) {
            Point x{xd(rng), xd(rng)};
            const double s = td(rng), t = td(rng);
            Point a = fm.flow(x, t + s);
            Point b = fm.flow_between(fm.flow(x, t), t, t + s).position;
            CHECK(std::hypot(a[0] - b[0], a[1] - b[1]) < 1e-6);
        }
    }
}

TEST_CASE("Gronwall sandwich on catalog Lipschitz fields") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> xd(0.1, 0.9);
    const double t = 0.5;
    for (const char* name : {"rigid_rotation", "shear_x", "oscillating"}) {
        std::map<std::string, double> params{{"omega", 1.0}, {"amplitude", 0.5}, {"m", 1.0},
                                             {"k", 2.0}};
        auto u = builtin_velocity(name, params);
        FlowMap fm(u, 1e-3);
        const double budget = t * u.lip_bound(0.0);
        for (int i = 0; i < 200; ++i) {
            Point x{xd(rng), xd(rng)}, y{xd(rng), xd(rng)};
            if (x == y) continue;
            const double r = two_particle_log_ratio(fm, x, y, t);
            CHECK(r >= -budget - 1e-9);
            CHECK(r <= budget + 1e-9);
        }
    }
}

TEST_CASE("two-flow log distance: identical flows and constant shift") {
    auto zero = builtin_velocity("zero");
    FlowMap fz(zero, 0.01);
    auto pts = lattice_points(1);

    SUBCASE("identical flows give zero") {
        auto r = two_flow_log_distance(fz, FlowMap(zero, 0.01), pts, 1.0, 2.0);
        CHECK(r.delta == 0.0);
        CHECK(r.mean_log == 0.0);
    }
    SUBCASE("constant field: exact cancellation gives log 2") {
        FlowMap fc(builtin_velocity("constant", {{"cx", 0.1}}), 0.01);
        auto r = two_flow_log_distance(fz, fc, pts, 1.0, 2.0);
        CHECK(r.delta == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(r.mean_log == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    }
}

TEST_CASE("two-flow log distance: self-convergence under dt halving") {
    auto zero = builtin_velocity("zero");
    auto osc = builtin_velocity("oscillating", {{"k", 8.0}});
    auto pts = lattice_points(1, 64);
    auto run = [&](double dt) {
        return two_flow_log_distance(FlowMap(zero, dt), FlowMap(osc, dt), pts, 1.0, 2.0).mean_log;
    };
    CHECK(run(1e-2) == doctest::Approx(run(5e-3)).epsilon(1e-4));
}

TEST_CASE("ensembles below 16 samples rejected") {
    CHECK_THROWS_AS(lattice_points(1, 8), std::invalid_argument);
}
