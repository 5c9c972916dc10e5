#include "nzsg/scenarios.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "nzsg/error.hpp"
#include "nzsg/heaviside.hpp"

namespace nzsg {

namespace {

constexpr std::array<ScenarioInfo, 5> kBuiltins{{
    {"case1-continuous", "bounded data, continuous feedbacks clamp(-p1/2,0,1), clamp(-p2/4,-1,1)"},
    {"case2-bangbang", "bounded affine data, Heaviside feedbacks on U1 = U2 = [0,1]"},
    {"case3-unbounded", "linear-growth affine drift, quadratic terminal payoffs (beta = 2)"},
    {"heat-oracle", "zero drift and payoffs, sigma = sqrt(2) I, g = cos(x1); exact e^{-s} cos(x1)"},
    {"linear-oracle", "zero drift and payoffs, constant sigma, g = x1; exact V = x1"},
}};

std::string unknown_name_message(std::string_view name) {
    std::string msg = "unknown scenario '" + std::string(name) + "'; available:";
    for (const auto& s : kBuiltins) {
        msg += ' ';
        msg += s.name;
    }
    return msg;
}

Mat scalar_sigma(double s, int dim) {
    Mat m{};
    for (int d = 0; d < dim; ++d) m[d][d] = s;
    return m;
}

// Coefficients of the built-in games, shared by the native closures and
// mirrored verbatim in the expression-language definitions below.
namespace case2 {
double f1(const Vec& x) { return 1.0 + 0.5 * std::sin(x[0]); }
double f2(const Vec& x) { return -1.0 + 0.5 * std::cos(x[0]); }
constexpr double kH1 = -0.2;
constexpr double kH2 = -0.2;
}  // namespace case2

namespace case3 {
double f1(const Vec& x) { return 1.0 + 0.1 * x[0]; }
double f2(const Vec& x) { return 1.0 - 0.1 * x[0]; }
double phi(const Vec& x) { return 0.5 * x[0]; }
}  // namespace case3

GameSpec case1_continuous() {
    GameSpec s;
    s.name = "case1-continuous";
    s.description = std::string(kBuiltins[0].summary);
    s.dim = 1;
    s.horizon = 1.0;
    s.sigma = [](double, const Vec&) { return scalar_sigma(1.0, 1); };
    s.drift = [](double, const Vec& x, double u1, double u2) { return Vec{std::sin(x[0]) - u1 - u2, 0.0}; };
    s.running_payoff = {
        [](double, const Vec&, double u1, double) { return -u1 * u1; },
        [](double, const Vec&, double, double u2) { return -2.0 * u2 * u2; },
    };
    s.terminal_payoff = {
        [](const Vec& x) { return std::cos(x[0]); },
        [](const Vec& x) { return std::sin(x[0]); },
    };
    s.control_set = {ControlSet::interval(0.0, 1.0), ControlSet::interval(-1.0, 1.0)};
    s.structure = Structure::Separated;
    s.growth_exponent = 1.0;
    s.feedback_closed_form = ClosedFormFeedback{
        [](double, const Vec&, const Vec& p1, const Vec&, double) { return std::clamp(-p1[0] / 2.0, 0.0, 1.0); },
        [](double, const Vec&, const Vec&, const Vec& p2, double) { return std::clamp(-p2[0] / 4.0, -1.0, 1.0); },
    };
    return s;
}

GameSpec case2_bangbang() {
    GameSpec s;
    s.name = "case2-bangbang";
    s.description = std::string(kBuiltins[1].summary);
    s.dim = 1;
    s.horizon = 1.0;
    s.sigma = [](double, const Vec&) { return scalar_sigma(1.0, 1); };
    s.drift = [](double, const Vec& x, double u1, double u2) {
        return Vec{case2::f1(x) * u1 + case2::f2(x) * u2, 0.0};
    };
    s.running_payoff = {
        [](double, const Vec&, double u1, double) { return case2::kH1 * u1; },
        [](double, const Vec&, double, double u2) { return case2::kH2 * u2; },
    };
    s.terminal_payoff = {
        [](const Vec& x) { return std::tanh(x[0]); },
        [](const Vec& x) { return -std::tanh(x[0]); },
    };
    s.control_set = {ControlSet::interval(0.0, 1.0), ControlSet::interval(0.0, 1.0)};
    s.structure = Structure::AffineBangBang;
    s.growth_exponent = 1.0;
    s.feedback_closed_form = ClosedFormFeedback{
        [](double, const Vec& x, const Vec& p1, const Vec&, double eps) {
            return smoothed_heaviside(p1[0] * case2::f1(x) + case2::kH1, eps);
        },
        [](double, const Vec& x, const Vec&, const Vec& p2, double eps) {
            return smoothed_heaviside(p2[0] * case2::f2(x) + case2::kH2, eps);
        },
    };
    return s;
}

GameSpec case3_unbounded() {
    GameSpec s;
    s.name = "case3-unbounded";
    s.description = std::string(kBuiltins[2].summary);
    s.dim = 1;
    s.horizon = 1.0;
    s.sigma = [](double, const Vec&) { return scalar_sigma(1.0, 1); };
    s.drift = [](double, const Vec& x, double u1, double u2) {
        return Vec{case3::f1(x) * u1 + case3::f2(x) * u2 + case3::phi(x), 0.0};
    };
    s.running_payoff = {
        [](double, const Vec&, double, double) { return 0.0; },
        [](double, const Vec&, double, double) { return 0.0; },
    };
    s.terminal_payoff = {
        [](const Vec& x) { return x[0] * x[0]; },
        [](const Vec& x) { return x[0] * x[0]; },
    };
    s.control_set = {ControlSet::interval(0.0, 1.0), ControlSet::interval(0.0, 1.0)};
    s.structure = Structure::AffineUnbounded;
    s.growth_exponent = 2.0;
    s.feedback_closed_form = ClosedFormFeedback{
        [](double, const Vec& x, const Vec& p1, const Vec&, double eps) {
            return smoothed_heaviside(p1[0] * case3::f1(x), eps);
        },
        [](double, const Vec& x, const Vec&, const Vec& p2, double eps) {
            return smoothed_heaviside(p2[0] * case3::f2(x), eps);
        },
    };
    return s;
}

ClosedFormFeedback zero_feedback() {
    return {[](double, const Vec&, const Vec&, const Vec&, double) { return 0.0; },
            [](double, const Vec&, const Vec&, const Vec&, double) { return 0.0; }};
}

GameSpec oracle_base(int dim) {
    if (dim < 1 || dim > kMaxDim) throw DomainError("unsupported dimension " + std::to_string(dim));
    GameSpec s;
    s.dim = dim;
    s.horizon = 1.0;
    s.drift = [](double, const Vec&, double, double) { return Vec{}; };
    s.running_payoff = {
        [](double, const Vec&, double, double) { return 0.0; },
        [](double, const Vec&, double, double) { return 0.0; },
    };
    s.control_set = {ControlSet::interval(0.0, 1.0), ControlSet::interval(0.0, 1.0)};
    s.feedback_closed_form = zero_feedback();
    return s;
}

GameSpec heat_oracle(int dim) {
    GameSpec s = oracle_base(dim);
    s.name = "heat-oracle";
    s.description = std::string(kBuiltins[3].summary);
    s.sigma = [dim](double, const Vec&) { return scalar_sigma(std::numbers::sqrt2, dim); };
    // In 2-D the product cos(x1) cos(x2) keeps the separable exact solution
    // compatible with Dirichlet data on [-pi/2, pi/2]^2.
    TerminalFn g = dim == 1 ? TerminalFn([](const Vec& x) { return std::cos(x[0]); })
                            : TerminalFn([](const Vec& x) { return std::cos(x[0]) * std::cos(x[1]); });
    s.terminal_payoff = {g, g};
    s.structure = Structure::Separated;
    s.growth_exponent = 1.0;
    return s;
}

GameSpec linear_oracle(int dim) {
    GameSpec s = oracle_base(dim);
    s.name = "linear-oracle";
    s.description = std::string(kBuiltins[4].summary);
    s.sigma = [dim](double, const Vec&) { return scalar_sigma(1.0, dim); };
    s.terminal_payoff = {[](const Vec& x) { return x[0]; }, [](const Vec& x) { return x[0]; }};
    s.structure = Structure::AffineUnbounded;
    s.growth_exponent = 1.0;
    return s;
}

std::string var_x(int d) { return "x" + std::to_string(d + 1); }

ScenarioDefinition oracle_definition(int dim) {
    ScenarioDefinition def;
    def.dim = dim;
    def.horizon = 1.0;
    def.drift.assign(static_cast<std::size_t>(dim), "0");
    def.h1 = "0";
    def.h2 = "0";
    def.u1 = {0.0, 1.0};
    def.u2 = {0.0, 1.0};
    def.feedback1 = "0";
    def.feedback2 = "0";
    return def;
}

std::vector<std::string> diagonal_sigma(const std::string& entry, int dim) {
    std::vector<std::string> out;
    for (int h = 0; h < dim; ++h)
        for (int k = 0; k < dim; ++k) out.push_back(h == k ? entry : "0");
    return out;
}

// Evaluates an expression against a fixed-capacity slot buffer.
class Compiled {
public:
    explicit Compiled(Expr e) : expr_(std::move(e)) {}
    template <std::size_t K>
    double operator()(const std::array<double, K>& slots) const {
        return expr_.evaluate(std::span<const double>(slots.data(), expr_.declared().size()));
    }

private:
    Expr expr_;
};

// Slot layout for coefficient expressions: t, x1..xN, u1, u2.
std::array<double, 5> coeff_slots(double t, const Vec& x, double u1, double u2, int dim) {
    std::array<double, 5> s{};
    s[0] = t;
    for (int d = 0; d < dim; ++d) s[1 + d] = x[d];
    s[1 + dim] = u1;
    s[2 + dim] = u2;
    return s;
}

}  // namespace

std::vector<std::string> coefficient_variables(int dim) {
    std::vector<std::string> v{"t"};
    for (int d = 0; d < dim; ++d) v.push_back(var_x(d));
    v.push_back("u1");
    v.push_back("u2");
    return v;
}

std::vector<std::string> terminal_variables(int dim) {
    std::vector<std::string> v;
    for (int d = 0; d < dim; ++d) v.push_back(var_x(d));
    return v;
}

std::vector<std::string> feedback_variables(int dim) {
    std::vector<std::string> v{"t"};
    for (int d = 0; d < dim; ++d) v.push_back(var_x(d));
    if (dim == 1) {
        v.push_back("p1");
        v.push_back("p2");
    } else {
        for (int i = 1; i <= 2; ++i)
            for (int d = 1; d <= dim; ++d) v.push_back("p" + std::to_string(i) + "_" + std::to_string(d));
    }
    v.push_back("eps");
    return v;
}

GameSpec make_spec(const ScenarioDefinition& def) {
    const int n = def.dim;
    if (n < 1 || n > kMaxDim) throw DomainError("unsupported dimension " + std::to_string(n) + " (supported: 1, 2)");
    if (!(def.horizon > 0.0)) throw DomainError("horizon must be positive");
    if (def.sigma.size() != static_cast<std::size_t>(n * n))
        throw DomainError("sigma needs " + std::to_string(n * n) + " entries");
    if (def.drift.size() != static_cast<std::size_t>(n))
        throw DomainError("drift needs " + std::to_string(n) + " components");
    if (!(def.growth_exponent >= 1.0)) throw DomainError("growth exponent must be >= 1");

    const auto coeff_vars = coefficient_variables(n);
    const auto term_vars = terminal_variables(n);

    std::vector<Compiled> sigma;
    for (const auto& s : def.sigma) sigma.emplace_back(parse(s, coeff_vars));
    std::vector<Compiled> drift;
    for (const auto& s : def.drift) drift.emplace_back(parse(s, coeff_vars));
    const Compiled h1(parse(def.h1, coeff_vars));
    const Compiled h2(parse(def.h2, coeff_vars));
    const Compiled g1(parse(def.g1, term_vars));
    const Compiled g2(parse(def.g2, term_vars));

    GameSpec spec;
    spec.name = def.name;
    spec.description = def.description;
    spec.dim = n;
    spec.horizon = def.horizon;
    spec.structure = def.structure;
    spec.growth_exponent = def.growth_exponent;
    spec.sigma = [sigma, n](double t, const Vec& x) {
        const auto slots = coeff_slots(t, x, 0.0, 0.0, n);
        Mat m{};
        for (int h = 0; h < n; ++h)
            for (int k = 0; k < n; ++k) m[h][k] = sigma[static_cast<std::size_t>(h * n + k)](slots);
        return m;
    };
    spec.drift = [drift, n](double t, const Vec& x, double u1, double u2) {
        const auto slots = coeff_slots(t, x, u1, u2, n);
        Vec f{};
        for (int d = 0; d < n; ++d) f[d] = drift[static_cast<std::size_t>(d)](slots);
        return f;
    };
    spec.running_payoff = {
        [h1, n](double t, const Vec& x, double u1, double u2) { return h1(coeff_slots(t, x, u1, u2, n)); },
        [h2, n](double t, const Vec& x, double u1, double u2) { return h2(coeff_slots(t, x, u1, u2, n)); },
    };
    spec.terminal_payoff = {
        [g1](const Vec& x) { return g1(std::array<double, 2>{x[0], x[1]}); },
        [g2](const Vec& x) { return g2(std::array<double, 2>{x[0], x[1]}); },
    };
    spec.control_set = {ControlSet::interval(def.u1.first, def.u1.second, def.control_grid_points),
                        ControlSet::interval(def.u2.first, def.u2.second, def.control_grid_points)};

    if (def.feedback1.has_value() != def.feedback2.has_value())
        throw DomainError("closed-form feedback must be given for both players or neither");
    if (def.feedback1) {
        const auto fb_vars = feedback_variables(n);
        const Compiled fb1(parse(*def.feedback1, fb_vars));
        const Compiled fb2(parse(*def.feedback2, fb_vars));
        auto slots_for = [n](double t, const Vec& x, const Vec& p1, const Vec& p2, double eps) {
            std::array<double, 8> s{};
            std::size_t i = 0;
            s[i++] = t;
            for (int d = 0; d < n; ++d) s[i++] = x[d];
            for (int d = 0; d < n; ++d) s[i++] = p1[d];
            for (int d = 0; d < n; ++d) s[i++] = p2[d];
            s[i++] = eps;
            return s;
        };
        spec.feedback_closed_form = ClosedFormFeedback{
            [fb1, slots_for](double t, const Vec& x, const Vec& p1, const Vec& p2, double eps) {
                return fb1(slots_for(t, x, p1, p2, eps));
            },
            [fb2, slots_for](double t, const Vec& x, const Vec& p1, const Vec& p2, double eps) {
                return fb2(slots_for(t, x, p1, p2, eps));
            },
        };
    }
    return spec;
}

std::span<const ScenarioInfo> builtin_names() { return kBuiltins; }

GameSpec builtin_scenario(std::string_view name, int dim) {
    const bool oracle = name == "heat-oracle" || name == "linear-oracle";
    if (!oracle && dim != 1 && (name == "case1-continuous" || name == "case2-bangbang" || name == "case3-unbounded"))
        throw DomainError("scenario '" + std::string(name) + "' is one-dimensional");
    if (name == "case1-continuous") return case1_continuous();
    if (name == "case2-bangbang") return case2_bangbang();
    if (name == "case3-unbounded") return case3_unbounded();
    if (name == "heat-oracle") return heat_oracle(dim);
    if (name == "linear-oracle") return linear_oracle(dim);
    throw DomainError(unknown_name_message(name));
}

ScenarioDefinition builtin_definition(std::string_view name, int dim) {
    ScenarioDefinition def;
    if (name == "case1-continuous" && dim == 1) {
        def.sigma = {"1"};
        def.drift = {"sin(x1) - u1 - u2"};
        def.h1 = "-u1^2";
        def.h2 = "-2*u2^2";
        def.g1 = "cos(x1)";
        def.g2 = "sin(x1)";
        def.u1 = {0.0, 1.0};
        def.u2 = {-1.0, 1.0};
        def.structure = Structure::Separated;
        def.feedback1 = "clamp(-p1/2, 0, 1)";
        def.feedback2 = "clamp(-p2/4, -1, 1)";
    } else if (name == "case2-bangbang" && dim == 1) {
        def.sigma = {"1"};
        def.drift = {"(1 + 0.5*sin(x1))*u1 + (-1 + 0.5*cos(x1))*u2"};
        def.h1 = "-0.2*u1";
        def.h2 = "-0.2*u2";
        def.g1 = "tanh(x1)";
        def.g2 = "-tanh(x1)";
        def.structure = Structure::AffineBangBang;
        def.feedback1 = "heav_eps(p1*(1 + 0.5*sin(x1)) - 0.2, eps)";
        def.feedback2 = "heav_eps(p2*(-1 + 0.5*cos(x1)) - 0.2, eps)";
    } else if (name == "case3-unbounded" && dim == 1) {
        def.sigma = {"1"};
        def.drift = {"(1 + 0.1*x1)*u1 + (1 - 0.1*x1)*u2 + 0.5*x1"};
        def.h1 = "0";
        def.h2 = "0";
        def.g1 = "x1^2";
        def.g2 = "x1^2";
        def.structure = Structure::AffineUnbounded;
        def.growth_exponent = 2.0;
        def.feedback1 = "heav_eps(p1*(1 + 0.1*x1), eps)";
        def.feedback2 = "heav_eps(p2*(1 - 0.1*x1), eps)";
    } else if (name == "heat-oracle") {
        def = oracle_definition(dim);
        def.sigma = diagonal_sigma("sqrt(2)", dim);
        def.g1 = dim == 1 ? "cos(x1)" : "cos(x1)*cos(x2)";
        def.g2 = def.g1;
        def.structure = Structure::Separated;
    } else if (name == "linear-oracle") {
        def = oracle_definition(dim);
        def.sigma = diagonal_sigma("1", dim);
        def.g1 = "x1";
        def.g2 = "x1";
        def.structure = Structure::AffineUnbounded;
    } else {
        (void)builtin_scenario(name, dim);  // raises the descriptive error
        throw DomainError(unknown_name_message(name));
    }
    def.name = std::string(name);
    for (const auto& s : kBuiltins)
        if (s.name == name) def.description = std::string(s.summary);
    return def;
}

}  // namespace nzsg
