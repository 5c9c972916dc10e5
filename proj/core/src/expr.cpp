#include "nzsg/expr.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <functional>

#include "nzsg/error.hpp"
#include "nzsg/heaviside.hpp"

namespace nzsg {

namespace {

struct FuncInfo {
    std::string_view name;
    Expr::Func func;
    int arity;
};

constexpr std::array<FuncInfo, 11> kFunctions{{
    {"sin", Expr::Func::Sin, 1},
    {"cos", Expr::Func::Cos, 1},
    {"exp", Expr::Func::Exp, 1},
    {"abs", Expr::Func::Abs, 1},
    {"min", Expr::Func::Min, 2},
    {"max", Expr::Func::Max, 2},
    {"clamp", Expr::Func::Clamp, 3},
    {"heav_eps", Expr::Func::HeavEps, 2},
    {"sign", Expr::Func::Sign, 1},
    {"sqrt", Expr::Func::Sqrt, 1},
    {"tanh", Expr::Func::Tanh, 1},
}};

const FuncInfo* find_function(std::string_view name) {
    for (const auto& f : kFunctions)
        if (f.name == name) return &f;
    return nullptr;
}

const FuncInfo& function_info(Expr::Func func) {
    for (const auto& f : kFunctions)
        if (f.func == func) return f;
    return kFunctions[0];
}

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

struct Token {
    Tok kind;
    std::size_t offset;
    std::string_view text;
    double number = 0.0;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) { advance(); }

    const Token& peek() const { return current_; }

    Token next() {
        Token t = current_;
        advance();
        return t;
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;
    Token current_{Tok::End, 0, {}};

    static bool ident_start(char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
    }
    static bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
    static bool digit(char c) { return c >= '0' && c <= '9'; }

    void advance() {
        while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' ||
                                      src_[pos_] == '\r'))
            ++pos_;
        const std::size_t start = pos_;
        if (pos_ >= src_.size()) {
            current_ = {Tok::End, start, {}};
            return;
        }
        const char c = src_[pos_];
        if (digit(c) || (c == '.' && pos_ + 1 < src_.size() && digit(src_[pos_ + 1]))) {
            std::size_t end = pos_;
            while (end < src_.size() && digit(src_[end])) ++end;
            if (end < src_.size() && src_[end] == '.') {
                ++end;
                while (end < src_.size() && digit(src_[end])) ++end;
            }
            if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
                std::size_t exp = end + 1;
                if (exp < src_.size() && (src_[exp] == '+' || src_[exp] == '-')) ++exp;
                if (exp < src_.size() && digit(src_[exp])) {
                    end = exp;
                    while (end < src_.size() && digit(src_[end])) ++end;
                } else {
                    throw ParseError("malformed number exponent", exp);
                }
            }
            double value = 0.0;
            const auto res = std::from_chars(src_.data() + start, src_.data() + end, value);
            if (res.ec != std::errc() || res.ptr != src_.data() + end)
                throw ParseError("malformed number", start);
            current_ = {Tok::Number, start, src_.substr(start, end - start), value};
            pos_ = end;
            return;
        }
        if (ident_start(c)) {
            std::size_t end = pos_;
            while (end < src_.size() && ident_char(src_[end])) ++end;
            current_ = {Tok::Ident, start, src_.substr(start, end - start)};
            pos_ = end;
            return;
        }
        Tok kind;
        switch (c) {
            case '+': kind = Tok::Plus; break;
            case '-': kind = Tok::Minus; break;
            case '*': kind = Tok::Star; break;
            case '/': kind = Tok::Slash; break;
            case '^': kind = Tok::Caret; break;
            case '(': kind = Tok::LParen; break;
            case ')': kind = Tok::RParen; break;
            case ',': kind = Tok::Comma; break;
            default: throw ParseError(std::string("unexpected character '") + c + "'", start);
        }
        current_ = {kind, start, src_.substr(start, 1)};
        ++pos_;
    }
};

// Binding powers.
constexpr int kAdditive = 10;
constexpr int kMultiplicative = 20;
constexpr int kUnary = 30;
constexpr int kPower = 40;

class Parser {
public:
    Parser(std::string_view text, const std::vector<std::string>& declared)
        : lex_(text), declared_(declared) {}

    std::vector<Expr::Node> nodes;

    int parse_all() {
        const int root = parse_expr(0);
        if (lex_.peek().kind != Tok::End) throw ParseError("unexpected token '" + std::string(lex_.peek().text) + "'",
                                                           lex_.peek().offset);
        return root;
    }

private:
    Lexer lex_;
    const std::vector<std::string>& declared_;

    int add(Expr::Node n) {
        nodes.push_back(std::move(n));
        return static_cast<int>(nodes.size()) - 1;
    }

    static int infix_power(Tok t) {
        switch (t) {
            case Tok::Plus:
            case Tok::Minus: return kAdditive;
            case Tok::Star:
            case Tok::Slash: return kMultiplicative;
            case Tok::Caret: return kPower;
            default: return -1;
        }
    }

    int parse_expr(int min_power) {
        int lhs = parse_prefix();
        for (;;) {
            const Token& op = lex_.peek();
            const int power = infix_power(op.kind);
            if (power < 0 || power <= min_power) break;
            const Token tok = lex_.next();
            if (tok.kind == Tok::Caret) {
                // right-associative: the right operand binds at one less
                const int rhs = parse_expr(kPower - 1);
                lhs = make_power(lhs, rhs, tok.offset);
                continue;
            }
            const int rhs = parse_expr(power);
            Expr::Kind kind = Expr::Kind::Add;
            switch (tok.kind) {
                case Tok::Plus: kind = Expr::Kind::Add; break;
                case Tok::Minus: kind = Expr::Kind::Sub; break;
                case Tok::Star: kind = Expr::Kind::Mul; break;
                case Tok::Slash: kind = Expr::Kind::Div; break;
                default: break;
            }
            Expr::Node n; n.kind = kind;
            n.offset = tok.offset;
            n.children = {lhs, rhs};
            lhs = add(std::move(n));
        }
        return lhs;
    }

    // Literal numbers, their negations and powers of those (so 2^3 folds
    // inside a right-associative chain).
    bool constant_value(int idx, double& out) const {
        const Expr::Node& e = nodes[idx];
        switch (e.kind) {
            case Expr::Kind::Number: out = e.value; return true;
            case Expr::Kind::Negate:
                if (!constant_value(e.children[0], out)) return false;
                out = -out;
                return true;
            case Expr::Kind::Pow: {
                double base = 0.0;
                if (!constant_value(e.children[0], base)) return false;
                out = std::pow(base, e.value);
                return std::isfinite(out);
            }
            default: return false;
        }
    }

    int make_power(int base, int exponent, std::size_t offset) {
        double value = 0.0;
        const Expr::Node& e = nodes[exponent];
        if (!constant_value(exponent, value)) throw ParseError("exponent must be a constant", e.offset);
        if (std::floor(2.0 * value) != 2.0 * value || std::abs(value) > 64.0)
            throw ParseError("exponent must be an integer or half-integer", e.offset);
        Expr::Node n; n.kind = Expr::Kind::Pow;
        n.value = value;
        n.offset = offset;
        n.children = {base, exponent};
        return add(std::move(n));
    }

    int parse_prefix() {
        const Token tok = lex_.next();
        switch (tok.kind) {
            case Tok::Number: {
                Expr::Node n; n.kind = Expr::Kind::Number;
                n.value = tok.number;
                n.offset = tok.offset;
                return add(std::move(n));
            }
            case Tok::Minus: {
                const int operand = parse_expr(kUnary);
                Expr::Node n; n.kind = Expr::Kind::Negate;
                n.offset = tok.offset;
                n.children = {operand};
                return add(std::move(n));
            }
            case Tok::LParen: {
                const int inner = parse_expr(0);
                expect(Tok::RParen, "expected ')'");
                return inner;
            }
            case Tok::Ident: return parse_identifier(tok);
            case Tok::End: throw ParseError("expected expression", tok.offset);
            default: throw ParseError("expected expression, found '" + std::string(tok.text) + "'", tok.offset);
        }
    }

    int parse_identifier(const Token& tok) {
        if (lex_.peek().kind == Tok::LParen) {
            const FuncInfo* info = find_function(tok.text);
            if (info == nullptr) throw ParseError("unknown function '" + std::string(tok.text) + "'", tok.offset);
            lex_.next();
            std::vector<int> args;
            if (lex_.peek().kind != Tok::RParen) {
                args.push_back(parse_expr(0));
                while (lex_.peek().kind == Tok::Comma) {
                    lex_.next();
                    args.push_back(parse_expr(0));
                }
            }
            expect(Tok::RParen, "expected ')' or ','");
            if (static_cast<int>(args.size()) != info->arity)
                throw ParseError("function '" + std::string(info->name) + "' expects " +
                                     std::to_string(info->arity) + " argument(s), got " +
                                     std::to_string(args.size()),
                                 tok.offset);
            Expr::Node n; n.kind = Expr::Kind::Call;
            n.func = info->func;
            n.offset = tok.offset;
            n.children = std::move(args);
            return add(std::move(n));
        }
        if (find_function(tok.text) != nullptr)
            throw ParseError("expected '(' after function '" + std::string(tok.text) + "'", lex_.peek().offset);
        const auto it = std::find(declared_.begin(), declared_.end(), tok.text);
        if (it == declared_.end()) throw ParseError("unknown identifier '" + std::string(tok.text) + "'", tok.offset);
        Expr::Node n; n.kind = Expr::Kind::Variable;
        n.slot = static_cast<int>(it - declared_.begin());
        n.offset = tok.offset;
        return add(std::move(n));
    }

    void expect(Tok kind, const char* message) {
        const Token& t = lex_.peek();
        if (t.kind != kind) throw ParseError(message, t.offset);
        lex_.next();
    }
};

double integer_power(double base, int n) {
    double result = 1.0;
    double b = base;
    unsigned m = static_cast<unsigned>(n < 0 ? -n : n);
    while (m) {
        if (m & 1u) result *= b;
        b *= b;
        m >>= 1u;
    }
    return n < 0 ? 1.0 / result : result;
}

void append_number(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

}  // namespace

Expr parse(std::string_view text, const std::vector<std::string>& declared_vars) {
    Parser parser(text, declared_vars);
    const int root = parser.parse_all();
    auto impl = std::make_shared<Expr::Impl>();
    impl->nodes = std::move(parser.nodes);
    impl->root = root;
    impl->declared = declared_vars;
    impl->source = std::string(text);
    Expr e;
    e.impl_ = std::move(impl);
    return e;
}

double Expr::evaluate(std::span<const double> slots) const {
    if (!impl_) throw EvalError("empty expression", 0);
    if (slots.size() < impl_->declared.size()) throw EvalError("missing bindings", 0);
    return eval_node(impl_->root, slots);
}

double Expr::evaluate(const std::map<std::string, double>& bindings) const {
    if (!impl_) throw EvalError("empty expression", 0);
    std::vector<double> slots(impl_->declared.size(), std::nan(""));
    std::vector<bool> bound(impl_->declared.size(), false);
    for (std::size_t i = 0; i < impl_->declared.size(); ++i) {
        const auto it = bindings.find(impl_->declared[i]);
        if (it != bindings.end()) {
            slots[i] = it->second;
            bound[i] = true;
        }
    }
    for (const auto& n : impl_->nodes)
        if (n.kind == Kind::Variable && !bound[n.slot])
            throw EvalError("no binding for variable '" + impl_->declared[n.slot] + "'", n.offset);
    return eval_node(impl_->root, slots);
}

double Expr::eval_node(int index, std::span<const double> slots) const {
    const Node& n = impl_->nodes[index];
    switch (n.kind) {
        case Kind::Number: return n.value;
        case Kind::Variable: return slots[n.slot];
        case Kind::Negate: return -eval_node(n.children[0], slots);
        case Kind::Add: return eval_node(n.children[0], slots) + eval_node(n.children[1], slots);
        case Kind::Sub: return eval_node(n.children[0], slots) - eval_node(n.children[1], slots);
        case Kind::Mul: return eval_node(n.children[0], slots) * eval_node(n.children[1], slots);
        case Kind::Div: {
            const double num = eval_node(n.children[0], slots);
            const double den = eval_node(n.children[1], slots);
            if (den == 0.0) throw EvalError("division by zero", n.offset);
            return num / den;
        }
        case Kind::Pow: {
            const double base = eval_node(n.children[0], slots);
            const double whole = std::trunc(n.value);
            if (whole == n.value) {
                if (base == 0.0 && n.value < 0) throw EvalError("division by zero", n.offset);
                return integer_power(base, static_cast<int>(whole));
            }
            if (base < 0.0) throw EvalError("half-integer power of a negative number", n.offset);
            if (base == 0.0 && n.value < 0) throw EvalError("division by zero", n.offset);
            return std::pow(base, n.value);
        }
        case Kind::Call: {
            const double a = eval_node(n.children[0], slots);
            switch (n.func) {
                case Func::Sin: return std::sin(a);
                case Func::Cos: return std::cos(a);
                case Func::Exp: return std::exp(a);
                case Func::Abs: return std::abs(a);
                case Func::Tanh: return std::tanh(a);
                case Func::Sign: return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0);
                case Func::Sqrt:
                    if (a < 0.0) throw EvalError("sqrt of a negative number", n.offset);
                    return std::sqrt(a);
                case Func::Min: return std::min(a, eval_node(n.children[1], slots));
                case Func::Max: return std::max(a, eval_node(n.children[1], slots));
                case Func::HeavEps: {
                    const double eps = eval_node(n.children[1], slots);
                    try {
                        return smoothed_heaviside(a, eps);
                    } catch (const DomainError& e) {
                        throw EvalError(e.what(), n.offset);
                    }
                }
                case Func::Clamp: {
                    const double lo = eval_node(n.children[1], slots);
                    const double hi = eval_node(n.children[2], slots);
                    if (lo > hi) throw EvalError("clamp with lower bound above upper bound", n.offset);
                    return std::min(std::max(a, lo), hi);
                }
            }
        }
    }
    return 0.0;
}

std::set<std::string> Expr::free_vars() const {
    std::set<std::string> out;
    if (!impl_) return out;
    for (const auto& n : impl_->nodes)
        if (n.kind == Kind::Variable) out.insert(impl_->declared[n.slot]);
    return out;
}

void Expr::print_node(int index, std::string& out) const {
    const Node& n = impl_->nodes[index];
    auto binary = [&](const char* op) {
        out += '(';
        print_node(n.children[0], out);
        out += op;
        print_node(n.children[1], out);
        out += ')';
    };
    switch (n.kind) {
        case Kind::Number: append_number(out, n.value); break;
        case Kind::Variable: out += impl_->declared[n.slot]; break;
        case Kind::Negate:
            out += "(-";
            print_node(n.children[0], out);
            out += ')';
            break;
        case Kind::Add: binary(" + "); break;
        case Kind::Sub: binary(" - "); break;
        case Kind::Mul: binary(" * "); break;
        case Kind::Div: binary(" / "); break;
        case Kind::Pow: binary(" ^ "); break;
        case Kind::Call: {
            out += function_info(n.func).name;
            out += '(';
            for (std::size_t i = 0; i < n.children.size(); ++i) {
                if (i) out += ", ";
                print_node(n.children[i], out);
            }
            out += ')';
            break;
        }
    }
}

std::string Expr::to_string() const {
    std::string out;
    if (impl_) print_node(impl_->root, out);
    return out;
}

bool operator==(const Expr& a, const Expr& b) {
    if (a.empty() || b.empty()) return a.empty() && b.empty();
    std::function<bool(int, int)> same = [&](int i, int j) {
        const Expr::Node& x = a.impl_->nodes[i];
        const Expr::Node& y = b.impl_->nodes[j];
        if (x.kind != y.kind || x.children.size() != y.children.size()) return false;
        switch (x.kind) {
            case Expr::Kind::Number:
                if (x.value != y.value) return false;
                break;
            case Expr::Kind::Pow:
                if (x.value != y.value) return false;
                break;
            case Expr::Kind::Variable:
                if (a.impl_->declared[x.slot] != b.impl_->declared[y.slot]) return false;
                break;
            case Expr::Kind::Call:
                if (x.func != y.func) return false;
                break;
            default: break;
        }
        for (std::size_t k = 0; k < x.children.size(); ++k)
            if (!same(x.children[k], y.children[k])) return false;
        return true;
    };
    return same(a.impl_->root, b.impl_->root);
}

}  // namespace nzsg
