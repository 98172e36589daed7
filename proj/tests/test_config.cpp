#include <string>

#include "doctest.h"
#include "krlab/config.hpp"

using namespace krlab;

static const std::string minimal = "[study]\nname = oscillating\nk_list = 4,8\n";

TEST_CASE("minimal config materializes every default") {
    auto parsed = parse_config(minimal);
    CHECK(parsed.cfg.study == "oscillating");
    CHECK(parsed.cfg.p == doctest::Approx(2.0));
    CHECK(parsed.cfg.t_final == doctest::Approx(1.0));
    CHECK(parsed.cfg.lambda == doctest::Approx(0.45));
    CHECK(parsed.cfg.delta0 == doctest::Approx(0.1));
    CHECK(parsed.cfg.k_values == std::vector<double>{4.0, 8.0});
    CHECK(parsed.echo.at("study.p") == "2");
    CHECK(parsed.echo.at("study.lambda") == "0.45");
    CHECK(parsed.echo.count("study.k_list") == 1);
}

TEST_CASE("misspelled key is rejected with line number and nearest match") {
    const std::string text = "[study]\nname = diffusion\nkapa_list = 1e-2,1e-3\n";
    try {
        parse_config(text);
        FAIL("expected config_error");
    } catch (const config_error& e) {
        CHECK(e.line == 3);
        CHECK(std::string(e.what()).find("kappa_list") != std::string::npos);
    }
}

TEST_CASE("unknown section and key outside section are rejected") {
    CHECK_THROWS_AS(parse_config("[studyy]\nname = mixing\n"), config_error);
    CHECK_THROWS_AS(parse_config("name = mixing\n"), config_error);
    CHECK_THROWS_AS(parse_config("[study\nname = mixing\n"), config_error);
}

TEST_CASE("duplicate keys are rejected") {
    const std::string text = "[study]\nname = oscillating\nk_list = 4\nk_list = 8\n";
    try {
        parse_config(text);
        FAIL("expected config_error");
    } catch (const config_error& e) {
        CHECK(e.line == 4);
    }
}

TEST_CASE("non-dyadic h list is rejected at parse time") {
    const std::string good = "[study]\nname = upwind\nh_list = 0.03125,0.015625\n";
    CHECK_NOTHROW(parse_config(good));
    const std::string bad = "[study]\nname = upwind\nh_list = 0.01,0.02\n";
    CHECK_THROWS_AS(parse_config(bad), config_error);
}

TEST_CASE("list monotonicity, p and lambda ranges are enforced") {
    CHECK_THROWS_AS(parse_config("[study]\nname = oscillating\nk_list = 8,4,8\n"), config_error);
    CHECK_THROWS_AS(parse_config(minimal + "p = 1\n"), config_error);
    CHECK_THROWS_AS(parse_config(minimal + "lambda = 1.5\n"), config_error);
    CHECK_THROWS_AS(parse_config(minimal + "lambda = 0\n"), config_error);
}

TEST_CASE("resolution must be a power of two; 0 means derived") {
    CHECK_THROWS_AS(parse_config(minimal + "[grid]\nresolution = 100\n"), config_error);
    CHECK(parse_config(minimal + "[grid]\nresolution = 256\n").cfg.resolution == 256);
    CHECK(parse_config(minimal + "[grid]\nresolution = 0\n").cfg.resolution == 0);
}

TEST_CASE("overrides replace file values and are validated") {
    auto parsed = parse_config(minimal, {{"study.p", "3"}, {"study.k_list", "2,4,8"}});
    CHECK(parsed.cfg.p == doctest::Approx(3.0));
    CHECK(parsed.cfg.k_values.size() == 3);
    CHECK_THROWS_AS(parse_config(minimal, {{"study.pp", "3"}}), config_error);
    CHECK_THROWS_AS(parse_config(minimal, {{"p", "3"}}), config_error);
}

TEST_CASE("per-study defaults: diffusion, mixing, lagrangian") {
    auto d = parse_config("[study]\nname = diffusion\nkappa_list = 1e-3,1e-2\n");
    CHECK(d.cfg.field_name == "oscillating");
    CHECK(d.cfg.field_params.at("k") == doctest::Approx(4.0));
    CHECK(d.cfg.resolution == 1024);

    auto m = parse_config("[study]\nname = mixing\n");
    CHECK(m.cfg.field_name == "alternating_shear");
    CHECK(m.cfg.resolution == 128);
    CHECK(m.cfg.t_final == doctest::Approx(8.0));
    CHECK(m.cfg.output_times == std::vector<double>{0.0, 2.0, 4.0, 6.0, 8.0});

    auto l = parse_config("[study]\nname = lagrangian\n");
    CHECK(l.cfg.field_name == "zero");
    CHECK(l.cfg.field_name_b == "oscillating");
    CHECK(l.cfg.field_params_b.at("k") == doctest::Approx(8.0));
}

TEST_CASE("comments and blank lines are ignored") {
    const std::string text =
        "# leading comment\n\n[study]\n  name = oscillating  # trailing\n\nk_list = 4 # why not\n";
    CHECK(parse_config(text).cfg.k_values == std::vector<double>{4.0});
}

TEST_CASE("emit/parse round-trip is the identity on the echo") {
    for (const std::string text :
         {minimal, std::string("[study]\nname = mixing\nnormalization = volume\n"),
          std::string("[study]\nname = upwind\nh_list = 0.0625,0.03125\nt = 0.25\n"
                      "[field]\nname = constant\ncx = 1\n[output]\ndir = /tmp/x\n")}) {
        auto first = parse_config(text);
        auto second = parse_config(emit_config(first.echo));
        CHECK(second.echo == first.echo);
    }
}

TEST_CASE("unknown study name reports its own line") {
    try {
        parse_config("[study]\nname = osillating\n");
        FAIL("expected config_error");
    } catch (const config_error& e) {
        CHECK(e.line == 2);
    }
}
