#include <doctest.h>

#include <cmath>
#include <string>

#include "nzsg/error.hpp"
#include "nzsg/rng.hpp"
#include "nzsg/scenarios.hpp"
#include "nzsg/validate.hpp"

using namespace nzsg;

TEST_CASE("every built-in scenario validates under its declared structure") {
    for (const auto& info : builtin_names()) {
        CAPTURE(info.name);
        const GameSpec spec = builtin_scenario(info.name);
        const ValidationReport r = validate_spec(spec, {1000, 1, 10.0, 1e6});
        CHECK(r.ok());
        CHECK(r.samples_used == 1000);
        CHECK(r.ellipticity_margin > 0.0);
    }
}

TEST_CASE("case2 validation flags") {
    const ValidationReport r = validate_spec(builtin_scenario("case2-bangbang"), {1000, 1, 10.0, 1e6});
    CHECK(r.ellipticity_ok);
    CHECK(r.boundedness_ok);
    CHECK(r.growth_ok);
    CHECK(r.structure_ok);
    CHECK(r.ellipticity_margin > 0.0);
}

TEST_CASE("heat oracle has a = I") {
    const ValidationReport r = validate_spec(builtin_scenario("heat-oracle"));
    CHECK(r.ellipticity_lower == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r.ellipticity_upper == doctest::Approx(1.0).epsilon(1e-15));
    const ValidationReport r2 = validate_spec(builtin_scenario("heat-oracle", 2));
    CHECK(r2.ellipticity_lower == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r2.ellipticity_upper == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("validation is deterministic in the seed") {
    const GameSpec spec = builtin_scenario("case1-continuous");
    CHECK(format_report(validate_spec(spec, {500, 9, 10.0, 1e6})) ==
          format_report(validate_spec(spec, {500, 9, 10.0, 1e6})));
}

TEST_CASE("singular sigma is rejected with the point") {
    ScenarioDefinition d = builtin_definition("case1-continuous");
    d.sigma = {"0"};
    const GameSpec spec = make_spec(d);
    try {
        validate_spec(spec);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("sigma not invertible at (t,x)=") != std::string::npos);
    }
}

TEST_CASE("NaN coefficient is rejected") {
    ScenarioDefinition d = builtin_definition("case1-continuous");
    d.g1 = "sqrt(x1)";
    const GameSpec spec = make_spec(d);
    CHECK_THROWS_AS(validate_spec(spec), Error);
}

TEST_CASE("mislabelled structure fails the structure flag") {
    ScenarioDefinition d = builtin_definition("case1-continuous");
    d.h1 = "-u1^2 + u1*u2";
    const ValidationReport r = validate_spec(make_spec(d));
    CHECK_FALSE(r.structure_ok);
    CHECK_FALSE(r.ok());
}

TEST_CASE("unbounded data fails boundedness but passes for affine-unbounded") {
    const ValidationReport r = validate_spec(builtin_scenario("case3-unbounded"));
    CHECK_FALSE(r.boundedness_ok);
    CHECK_FALSE(r.boundedness_required);
    CHECK(r.ok());
    ScenarioDefinition d = builtin_definition("case2-bangbang");
    d.g1 = "x1^2";
    CHECK_FALSE(validate_spec(make_spec(d)).ok());
}

TEST_CASE("unknown scenario lists the available names") {
    try {
        builtin_scenario("case9");
        FAIL("expected DomainError");
    } catch (const DomainError& e) {
        const std::string msg = e.what();
        for (const auto& info : builtin_names()) CHECK(msg.find(std::string(info.name)) != std::string::npos);
    }
}

TEST_CASE("case1 feedback formula") {
    const GameSpec spec = builtin_scenario("case1-continuous");
    REQUIRE(spec.feedback_closed_form);
    const auto& fb = *spec.feedback_closed_form;
    for (double p : {-10.0, -4.0, -1.0, 0.0, 0.5, 3.0}) {
        CHECK(fb.player1(0.3, {0.2, 0.0}, {p, 0.0}, {0.0, 0.0}, 0.0) == std::min(std::max(-p / 2.0, 0.0), 1.0));
    }
    CHECK(spec.control_set[0].lower == 0.0);
    CHECK(spec.control_set[0].upper == 1.0);
    CHECK(spec.control_set[1].lower == -1.0);
    CHECK(spec.control_set[1].upper == 1.0);
}

TEST_CASE("case2 feedback is the Heaviside of the switching argument") {
    const GameSpec spec = builtin_scenario("case2-bangbang");
    const auto& fb = *spec.feedback_closed_form;
    for (int i = 0; i < 200; ++i) {
        const double x = 10.0 * rng::uniform(5, i, 0) - 5.0;
        const double p = 4.0 * rng::uniform(5, i, 1) - 2.0;
        const Vec xv{x, 0.0};
        const double f1 = spec.drift(0.0, xv, 1.0, 0.0)[0] - spec.drift(0.0, xv, 0.0, 0.0)[0];
        const double h1 = spec.running(1, 0.0, xv, 1.0, 0.0) - spec.running(1, 0.0, xv, 0.0, 0.0);
        const double eta = p * f1 + h1;
        const double expected = eta > 0 ? 1.0 : (eta < 0 ? 0.0 : 0.5);
        CHECK(fb.player1(0.0, xv, {p, 0.0}, {0.0, 0.0}, 0.0) == expected);
    }
}

TEST_CASE("heat oracle has zero drift and a = I") {
    const GameSpec spec = builtin_scenario("heat-oracle");
    const DiffusionMatrixField a(1, spec.sigma);
    for (double x : {-3.0, 0.0, 2.5}) {
        CHECK(spec.drift(0.5, {x, 0}, 0.3, 0.7)[0] == 0.0);
        CHECK(a.a(0.5, {x, 0})[0][0] == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("diffusion matrix is exactly symmetric") {
    const SigmaFn sigma = [](double t, const Vec& x) {
        return Mat{Vec{1.0 + 0.3 * std::sin(x[0]), 0.2 * t}, Vec{0.1 * x[1], 1.5 + 0.1 * std::cos(x[1])}};
    };
    const DiffusionMatrixField a(2, sigma);
    for (int i = 0; i < 500; ++i) {
        const Vec x{6.0 * rng::uniform(8, i, 0) - 3.0, 6.0 * rng::uniform(8, i, 1) - 3.0};
        const Mat m = a.a(rng::uniform(8, i, 2), x);
        CHECK(m[0][1] == m[1][0]);
        const Mat s = sigma(0.0, x);
        (void)s;
    }
}

TEST_CASE("eigen range of a symmetric 2x2 matrix") {
    const auto b = DiffusionMatrixField::eigen_range(Mat{Vec{2.0, 1.0}, Vec{1.0, 2.0}}, 2);
    CHECK(b.lower == doctest::Approx(1.0));
    CHECK(b.upper == doctest::Approx(3.0));
}

TEST_CASE("separated structure: mixed control differences vanish") {
    for (const char* name : {"case1-continuous", "case2-bangbang"}) {
        const GameSpec spec = builtin_scenario(name);
        for (int i = 0; i < 300; ++i) {
            const Vec x{8.0 * rng::uniform(4, i, 0) - 4.0, 0.0};
            const double t = rng::uniform(4, i, 1);
            const auto& s1 = spec.control_set[0];
            const auto& s2 = spec.control_set[1];
            const double u1 = s1.lower + (s1.upper - s1.lower) * rng::uniform(4, i, 2);
            const double u2 = s2.lower + (s2.upper - s2.lower) * rng::uniform(4, i, 3);
            const double v2 = s2.lower + (s2.upper - s2.lower) * rng::uniform(4, i, 4);
            CHECK(spec.running(1, t, x, u1, u2) - spec.running(1, t, x, u1, v2) == 0.0);
        }
    }
}

TEST_CASE("control set helpers") {
    const ControlSet s = ControlSet::interval(-1.0, 1.0, 5);
    CHECK(s.grid() == std::vector<double>{-1.0, -0.5, 0.0, 0.5, 1.0});
    CHECK(s.midpoint() == 0.0);
    CHECK(s.clamp(3.0) == 1.0);
    CHECK(s.contains(1.0));
    CHECK_FALSE(s.contains(1.1));
    CHECK_THROWS_AS(ControlSet::interval(1.0, 0.0).check(), DomainError);
}

TEST_CASE("structure names round trip") {
    for (Structure s : {Structure::General, Structure::Separated, Structure::AffineBangBang, Structure::AffineUnbounded})
        CHECK(parse_structure(to_string(s)) == s);
    CHECK_THROWS_AS(parse_structure("convex"), DomainError);
}
