#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "nzsg/error.hpp"
#include "nzsg/parabolic.hpp"
#include "nzsg/scenarios.hpp"

using namespace nzsg;

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

Grid heat_grid(int nodes, int steps) { return Grid{1, kHalfPi, nodes, steps, 1.0}; }

struct LinearData {
    std::vector<Vec> drift;
    std::vector<double> source;
    std::vector<double> terminal;
};

LinearData zero_data(const Grid& g) {
    const std::size_t n = g.node_count() * g.levels();
    return {std::vector<Vec>(n, Vec{}), std::vector<double>(n, 0.0), std::vector<double>(g.node_count(), 0.0)};
}

DiffusionMatrixField unit_diffusion(int dim) {
    return DiffusionMatrixField(dim, [dim](double, const Vec&) {
        Mat m{};
        for (int d = 0; d < dim; ++d) m[d][d] = std::numbers::sqrt2;
        return m;
    });
}

double heat_error(int nodes, int steps) {
    const Grid g = heat_grid(nodes, steps);
    LinearData d = zero_data(g);
    for (std::size_t i = 0; i < g.node_count(); ++i) d.terminal[i] = std::cos(g.node(i)[0]);
    const ScalarField f = linear_parabolic_solve(g, unit_diffusion(1), d.drift, d.source, d.terminal);
    double err = 0.0;
    for (int k = 0; k < g.levels(); ++k)
        for (std::size_t i = 0; i < g.node_count(); ++i)
            err = std::max(err, std::abs(f.at(g, k, i) - std::exp(-g.s(k)) * std::cos(g.node(i)[0])));
    return err;
}

}  // namespace

TEST_CASE("heat oracle is reproduced to first order") {
    const double e1 = heat_error(201, 1000);
    const double e2 = heat_error(401, 2000);
    const double e3 = heat_error(801, 4000);
    CHECK(e1 < 1e-3);
    CHECK(e1 / e2 >= 1.8);
    CHECK(e2 / e3 >= 1.8);
}

TEST_CASE("initial and boundary data are exact") {
    const Grid g = heat_grid(41, 50);
    LinearData d = zero_data(g);
    for (std::size_t i = 0; i < g.node_count(); ++i) d.terminal[i] = std::cos(g.node(i)[0]) + 0.25;
    const ScalarField f = linear_parabolic_solve(g, unit_diffusion(1), d.drift, d.source, d.terminal);
    for (std::size_t i = 0; i < g.node_count(); ++i) CHECK(f.at(g, 0, i) == d.terminal[i]);
    for (int k = 0; k < g.levels(); ++k) {
        CHECK(f.at(g, k, 0) == d.terminal[0]);
        CHECK(f.at(g, k, g.node_count() - 1) == d.terminal[g.node_count() - 1]);
    }
}

TEST_CASE("constant data is preserved") {
    const Grid g{1, 3.0, 61, 40, 1.0};
    LinearData d = zero_data(g);
    for (auto& b : d.drift) b = Vec{0.7, 0.0};
    std::fill(d.terminal.begin(), d.terminal.end(), 2.5);
    const ScalarField f = linear_parabolic_solve(g, unit_diffusion(1), d.drift, d.source, d.terminal);
    for (double v : f.values) CHECK(v == doctest::Approx(2.5).epsilon(1e-13));
}

TEST_CASE("nonnegative data gives a nonnegative solution") {
    const Grid g{1, 3.0, 61, 60, 1.0};
    LinearData d = zero_data(g);
    for (std::size_t k = 0; k < d.drift.size(); ++k) d.drift[k] = Vec{std::sin(0.3 * static_cast<double>(k)), 0.0};
    for (std::size_t i = 0; i < g.node_count(); ++i) d.terminal[i] = std::max(0.0, 1.0 - std::abs(g.node(i)[0]));
    const ScalarField f = linear_parabolic_solve(g, unit_diffusion(1), d.drift, d.source, d.terminal);
    for (double v : f.values) CHECK(v >= -1e-15);
}

TEST_CASE("ordered data gives ordered solutions") {
    const Grid g{1, 3.0, 61, 60, 1.0};
    LinearData lo = zero_data(g);
    for (std::size_t k = 0; k < lo.drift.size(); ++k) lo.drift[k] = Vec{0.5 * std::cos(0.1 * static_cast<double>(k)), 0};
    for (std::size_t i = 0; i < g.node_count(); ++i) lo.terminal[i] = std::sin(g.node(i)[0]);
    LinearData hi = lo;
    for (auto& t : hi.terminal) t += 0.1;
    for (auto& c : hi.source) c += 0.05;
    const auto diff = unit_diffusion(1);
    const ScalarField a = linear_parabolic_solve(g, diff, lo.drift, lo.source, lo.terminal);
    const ScalarField b = linear_parabolic_solve(g, diff, hi.drift, hi.source, hi.terminal);
    for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(b.values[i] >= a.values[i]);
}

TEST_CASE("CFL violation names the node") {
    const Grid g{1, 1.0, 21, 1, 1.0};
    LinearData d = zero_data(g);
    for (auto& b : d.drift) b = Vec{5.0, 0.0};
    try {
        linear_parabolic_solve(g, unit_diffusion(1), d.drift, d.source, d.terminal);
        FAIL("expected CflError");
    } catch (const CflError& e) {
        CHECK(std::string(e.what()).find("x=") != std::string::npos);
    }
}

TEST_CASE("gradients match differences of the values") {
    const Grid g = heat_grid(101, 100);
    LinearData d = zero_data(g);
    for (std::size_t i = 0; i < g.node_count(); ++i) d.terminal[i] = std::cos(g.node(i)[0]);
    const ScalarField f = linear_parabolic_solve(g, unit_diffusion(1), d.drift, d.source, d.terminal);
    const double h = g.spacing();
    for (int k = 0; k < g.levels(); k += 25)
        for (std::size_t i = 1; i + 1 < g.node_count(); ++i)
            CHECK(f.grad(g, k, i)[0] ==
                  doctest::Approx((f.at(g, k, i + 1) - f.at(g, k, i - 1)) / (2 * h)).epsilon(1e-12));
}

TEST_CASE("Picard on the heat oracle stops after two iterations") {
    const GameSpec spec = builtin_scenario("heat-oracle");
    const Grid g = heat_grid(201, 1000);
    auto [field, diag] = picard_solve(spec, g, FeedbackResolver::default_for(spec), {1e-6, 100, {}, 2});
    CHECK(diag.converged);
    CHECK(diag.iterations_used == 2);
    CHECK(std::abs(field.payoff(1, 0.0, {0, 0}) - std::exp(-1.0)) < 1e-3);
    CHECK(std::abs(field.payoff(2, 0.0, {0, 0}) - std::exp(-1.0)) < 1e-3);
    CHECK(diag.residual.sup < 1e-8);
    CHECK(diag.max_principle_margin >= 0.0);
}

TEST_CASE("2D heat oracle") {
    const GameSpec spec = builtin_scenario("heat-oracle", 2);
    const Grid g{2, kHalfPi, 41, 100, 1.0};
    auto [field, diag] = picard_solve(spec, g, FeedbackResolver::default_for(spec), {1e-6, 100, {}, 2});
    CHECK(diag.converged);
    double err = 0.0;
    for (int k = 0; k < g.levels(); k += 10)
        for (std::size_t i = 0; i < g.node_count(); ++i) {
            const Vec x = g.node(i);
            err = std::max(err, std::abs(field.player(1).at(g, k, i) -
                                         std::exp(-2.0 * g.s(k)) * std::cos(x[0]) * std::cos(x[1])));
        }
    CHECK(err < 5e-3);
}

TEST_CASE("linear oracle is exact") {
    const GameSpec spec = builtin_scenario("linear-oracle");
    const Grid g{1, 4.0, 81, 100, 1.0};
    auto [field, diag] = picard_solve(spec, g, FeedbackResolver::default_for(spec), {});
    CHECK(diag.converged);
    for (int k = 0; k < g.levels(); ++k)
        for (std::size_t i = 0; i < g.node_count(); ++i)
            CHECK(field.player(1).at(g, k, i) == doctest::Approx(g.node(i)[0]).epsilon(1e-12).scale(1.0));
    CHECK(diag.residual.sup < 1e-10);
    CHECK(std::isnan(diag.max_principle_margin));
    CHECK_THROWS_AS(max_principle_check(spec, field), DomainError);
}

TEST_CASE("case1 converges with a small residual and respects the maximum principle") {
    const GameSpec spec = builtin_scenario("case1-continuous");
    const Grid g{1, 4.0, 161, 200, 1.0};
    auto [field, diag] = picard_solve(spec, g, FeedbackResolver::default_for(spec), {1e-5, 100, {}, 2});
    CHECK(diag.converged);
    CHECK(diag.iterations_used <= 20);
    CHECK(diag.max_principle_margin >= 0.0);
    CHECK(max_principle_check(spec, field) == diag.max_principle_margin);
    // One more step from the converged iterate stays within tolerance.
    const ValueField next = picard_step(spec, field, FeedbackResolver::default_for(spec), 2);
    double change = 0.0;
    for (int i = 1; i <= 2; ++i)
        for (std::size_t j = 0; j < next.player(i).values.size(); ++j)
            change = std::max(change, std::abs(next.player(i).values[j] - field.player(i).values[j]));
    CHECK(change <= 1e-5);
}

TEST_CASE("case2 runs the epsilon schedule with warm starts") {
    const GameSpec spec = builtin_scenario("case2-bangbang");
    const Grid g{1, 4.0, 81, 100, 1.0};
    PicardOptions opts{1e-5, 200, {0.5, 0.25, 0.125, 0.0625}, 2};
    auto [field, diag] = picard_solve(spec, g, FeedbackResolver::default_for(spec), opts);
    CHECK(diag.converged);
    REQUIRE(!diag.epsilon_schedule.empty());
    CHECK(diag.epsilon_schedule.front() == 0.5);
    CHECK(diag.stage_iterations.size() == diag.epsilon_schedule.size());
    CHECK(diag.stage_differences.size() + 1 == diag.epsilon_schedule.size());
    CHECK(field.smoothing_epsilon() == diag.epsilon_schedule.back());
    int total = 0;
    for (int n : diag.stage_iterations) total += n;
    CHECK(total == diag.iterations_used);
    CHECK(diag.max_principle_margin >= 0.0);
}

TEST_CASE("Picard reports non-convergence when the iteration cap is hit") {
    const GameSpec spec = builtin_scenario("case1-continuous");
    const Grid g{1, 4.0, 81, 100, 1.0};
    auto [field, diag] = picard_solve(spec, g, FeedbackResolver::default_for(spec), {1e-14, 2, {}, 1});
    CHECK_FALSE(diag.converged);
    CHECK(diag.iterations_used == 2);
}

TEST_CASE("single-radius expanding solve matches a plain solve") {
    const GameSpec spec = builtin_scenario("case1-continuous");
    const Grid g{1, 4.0, 81, 100, 1.0};
    const auto resolver = FeedbackResolver::default_for(spec);
    auto [plain, d1] = picard_solve(spec, g, resolver, {1e-6, 100, {}, 1});
    auto [field, report] = expanding_domain_solve(spec, g, {4.0}, resolver, {1e-6, 100, {}, 1});
    CHECK(report.core_differences.empty());
    CHECK(report.core_radius == 2.0);
    CHECK(field.player(1).values == plain.player(1).values);
}

TEST_CASE("expanding domains shrink the core difference for case1") {
    const GameSpec spec = builtin_scenario("case1-continuous");
    const Grid g{1, 4.0, 81, 100, 1.0};
    auto [field, report] =
        expanding_domain_solve(spec, g, {4.0, 6.0, 8.0}, FeedbackResolver::default_for(spec), {1e-6, 100, {}, 2});
    REQUIRE(report.core_differences.size() == 2);
    CHECK(report.fields.back().grid().radius == 8.0);
    CHECK(report.fields.back().grid().nodes_per_axis == 161);
    for (int i = 0; i < 2; ++i) CHECK(report.core_differences[1][i] < report.core_differences[0][i]);
}

TEST_CASE("expanding radii must be multiples of the spacing") {
    const GameSpec spec = builtin_scenario("case1-continuous");
    const Grid g{1, 4.0, 81, 100, 1.0};
    CHECK_THROWS_AS(expanding_domain_solve(spec, g, {4.0, 6.03}, FeedbackResolver::default_for(spec), {}),
                    DomainError);
}

TEST_CASE("maximum principle margin of constant data") {
    ScenarioDefinition d;
    d.sigma = {"1"};
    d.drift = {"0"};
    d.h1 = "0";
    d.h2 = "0";
    d.g1 = "5";
    d.g2 = "5";
    d.structure = Structure::Separated;
    const GameSpec spec = make_spec(d);
    const Grid g{1, 2.0, 41, 20, 1.0};
    auto [field, diag] = picard_solve(spec, g, FeedbackResolver::default_for(spec), {});
    CHECK(diag.max_principle_margin == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("growth constants of simple fields") {
    const GameSpec linear = builtin_scenario("linear-oracle");
    const Grid g{1, 4.0, 81, 10, 1.0};
    const ValueField v0 = initial_iterate(linear, g);
    const GrowthFit fit = growth_check(linear, v0);
    // |x| / (1 + |x|) is largest at the box edge.
    CHECK(fit.c1 == doctest::Approx(4.0 / 5.0));
    CHECK(fit.c() == fit.c1);
}

TEST_CASE("initial iterate is constant in s") {
    const GameSpec spec = builtin_scenario("case2-bangbang");
    const Grid g{1, 4.0, 41, 10, 1.0};
    const ValueField v = initial_iterate(spec, g);
    for (int k = 0; k < g.levels(); ++k)
        for (std::size_t i = 0; i < g.node_count(); ++i)
            CHECK(v.player(2).at(g, k, i) == spec.terminal(2, g.node(i)));
}
