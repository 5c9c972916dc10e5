#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nzsg/expr.hpp"
#include "nzsg/game.hpp"

namespace nzsg {

/// Textual game description with coefficient bodies in the expression
/// language. Variable scopes:
///
///   sigma, drift, h1, h2 : t, x1..xN, u1, u2      (sigma ignores u)
///   g1, g2               : x1..xN
///   feedback1/2          : t, x1..xN, gradient names, eps
///
/// Gradient names are p1, p2 for N = 1 and p1_1, p1_2, p2_1, p2_2 for N = 2.
struct ScenarioDefinition {
    std::string name = "custom";
    std::string description;
    int dim = 1;
    double horizon = 1.0;
    Structure structure = Structure::General;
    double growth_exponent = 1.0;
    std::vector<std::string> sigma;   // N*N entries, row-major
    std::vector<std::string> drift;   // N entries
    std::string h1, h2;
    std::string g1, g2;
    std::pair<double, double> u1{0.0, 1.0};
    std::pair<double, double> u2{0.0, 1.0};
    int control_grid_points = 33;
    std::optional<std::string> feedback1, feedback2;
};

/// Variable names in scope for the running-coefficient expressions.
std::vector<std::string> coefficient_variables(int dim);
std::vector<std::string> terminal_variables(int dim);
std::vector<std::string> feedback_variables(int dim);

/// Compiles a definition into a GameSpec. Throws ParseError / DomainError.
GameSpec make_spec(const ScenarioDefinition& def);

struct ScenarioInfo {
    std::string_view name;
    std::string_view summary;
};

/// Registered built-in scenarios, in a stable order.
std::span<const ScenarioInfo> builtin_names();

/// Natively implemented built-in game. `dim` may be 2 only for the oracle
/// scenarios. Throws DomainError listing the available names for an unknown
/// name.
GameSpec builtin_scenario(std::string_view name, int dim = 1);

/// The same built-in game written in the expression language.
ScenarioDefinition builtin_definition(std::string_view name, int dim = 1);

}  // namespace nzsg
