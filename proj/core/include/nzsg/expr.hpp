#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nzsg {

/// Parsed scalar coefficient expression.
///
/// Grammar (lowest to highest precedence):
///
///     expr    := expr ('+' | '-') expr
///              | expr ('*' | '/') expr
///              | '-' expr
///              | expr '^' constant          (right-associative)
///              | number | name | name '(' args ')' | '(' expr ')'
///
/// The right operand of '^' must be a constant integer or half-integer.
/// Functions: sin cos exp abs sqrt tanh sign (1 argument), min max heav_eps
/// (2), clamp (3).
///
/// Variables are resolved against the declared list passed to parse(); each
/// reference is bound to a slot index so evaluation against a dense value
/// array needs no lookups. Instances are immutable and cheap to copy.
class Expr {
public:
    enum class Kind { Number, Variable, Negate, Add, Sub, Mul, Div, Pow, Call };
    enum class Func { Sin, Cos, Exp, Abs, Min, Max, Clamp, HeavEps, Sign, Sqrt, Tanh };

    struct Node {
        Kind kind = Kind::Number;
        double value = 0.0;       // Number; exponent for Pow
        int slot = -1;            // Variable
        Func func = Func::Sin;    // Call
        std::size_t offset = 0;   // byte offset of the token that produced the node
        std::vector<int> children;
    };

    Expr() = default;

    /// Value with variables taken from `slots`, ordered as the declared list.
    double evaluate(std::span<const double> slots) const;
    /// Value with variables looked up by name. Throws EvalError when a
    /// referenced variable has no binding.
    double evaluate(const std::map<std::string, double>& bindings) const;

    /// Names of all referenced variables.
    std::set<std::string> free_vars() const;

    /// Fully parenthesised source text that re-parses to the same tree.
    std::string to_string() const;

    const std::vector<std::string>& declared() const { return impl_->declared; }
    const std::string& source() const { return impl_->source; }
    bool empty() const { return impl_ == nullptr; }

    /// Structural equality: same shape, literals, variable names and functions.
    friend bool operator==(const Expr& a, const Expr& b);

private:
    struct Impl {
        std::vector<Node> nodes;
        int root = -1;
        std::vector<std::string> declared;
        std::string source;
    };
    std::shared_ptr<const Impl> impl_;

    double eval_node(int index, std::span<const double> slots) const;
    void print_node(int index, std::string& out) const;

    friend Expr parse(std::string_view text, const std::vector<std::string>& declared_vars);
};

/// Parses `text` with the given variable names in scope. Throws ParseError
/// carrying the byte offset of the offending token.
Expr parse(std::string_view text, const std::vector<std::string>& declared_vars);

}  // namespace nzsg
