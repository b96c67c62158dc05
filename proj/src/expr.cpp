#include "jdconvex/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <string_view>
#include <type_traits>

#include "jdconvex/errors.hpp"

namespace jdconvex {

namespace detail {

enum class Kind { Number, VarX, VarT, VarZ, Neg, Add, Sub, Mul, Div, Pow, Call };
enum class Func { Sqrt, Exp, Log, Abs, Min, Max, Pow };

struct Node {
    Kind kind;
    Func func = Func::Sqrt;
    double value = 0.0;
    int index = 0;  // xi index (1-based) for VarX
    int lhs = -1;
    int rhs = -1;
    std::size_t offset = 0;
    std::size_t length = 0;
};

struct Ast {
    std::vector<Node> nodes;
    int root = -1;
    std::string source;

    std::string text(const Node& nd) const { return source.substr(nd.offset, nd.length); }
};

}  // namespace detail

namespace {

using detail::Ast;
using detail::Func;
using detail::Kind;
using detail::Node;

struct FuncInfo {
    std::string_view name;
    Func func;
    int arity;
};

constexpr std::array<FuncInfo, 7> kFunctions{{
    {"sqrt", Func::Sqrt, 1},
    {"exp", Func::Exp, 1},
    {"log", Func::Log, 1},
    {"abs", Func::Abs, 1},
    {"min", Func::Min, 2},
    {"max", Func::Max, 2},
    {"pow", Func::Pow, 2},
}};

// ---------------------------------------------------------------------------
// Parser

class Parser {
public:
    Parser(std::string_view src, std::size_t n, VarPolicy policy, Ast& ast)
        : src_(src), n_(n), policy_(policy), ast_(ast) {}

    int parse_all() {
        skip_ws();
        int root = parse_binary(0);
        skip_ws();
        if (pos_ < src_.size())
            throw ParseError("syntax error: unexpected '" + std::string(1, src_[pos_]) + "'", pos_);
        return root;
    }

    std::size_t max_x = 0;
    bool uses_t = false;
    bool uses_z = false;

private:
    std::string_view src_;
    std::size_t n_;
    VarPolicy policy_;
    Ast& ast_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    int add(Node nd) {
        ast_.nodes.push_back(nd);
        return static_cast<int>(ast_.nodes.size()) - 1;
    }

    int make_binary(Kind k, int lhs, int rhs) {
        const auto& l = ast_.nodes[lhs];
        const auto& r = ast_.nodes[rhs];
        Node nd{k};
        nd.lhs = lhs;
        nd.rhs = rhs;
        nd.offset = l.offset;
        nd.length = r.offset + r.length - l.offset;
        return add(nd);
    }

    static int precedence(char op) {
        switch (op) {
            case '+':
            case '-': return 1;
            case '*':
            case '/': return 2;
            default: return -1;
        }
    }

    // Precedence climbing over the left-associative binary operators.
    int parse_binary(int min_prec) {
        int lhs = parse_unary();
        for (;;) {
            char op = peek();
            int prec = precedence(op);
            if (prec < 0 || prec < min_prec) return lhs;
            ++pos_;
            int rhs = parse_binary(prec + 1);
            Kind k = op == '+' ? Kind::Add : op == '-' ? Kind::Sub : op == '*' ? Kind::Mul : Kind::Div;
            lhs = make_binary(k, lhs, rhs);
        }
    }

    int parse_unary() {
        if (peek() == '-') {
            std::size_t start = pos_++;
            int operand = parse_unary();
            const auto& o = ast_.nodes[operand];
            Node nd{Kind::Neg};
            nd.lhs = operand;
            nd.offset = start;
            nd.length = o.offset + o.length - start;
            return add(nd);
        }
        return parse_power();
    }

    int parse_power() {
        int base = parse_primary();
        if (peek() == '^') {
            ++pos_;
            int exponent = parse_unary();
            return make_binary(Kind::Pow, base, exponent);
        }
        return base;
    }

    int parse_primary() {
        char c = peek();
        std::size_t start = pos_;
        if (c == '\0') throw ParseError("syntax error: unexpected end of input", pos_);
        if (c == '(') {
            ++pos_;
            int inner = parse_binary(0);
            expect(')');
            // Widen the span so sub-expression text includes the parentheses.
            Node& nd = ast_.nodes[inner];
            nd.offset = start;
            nd.length = pos_ - start;
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t end = pos_;
            while (end < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[end])) || src_[end] == '_'))
                ++end;
            std::string_view ident = src_.substr(pos_, end - pos_);
            pos_ = end;
            if (peek() == '(') return parse_call(ident, start);
            return parse_variable(ident, start);
        }
        throw ParseError("syntax error: unexpected '" + std::string(1, c) + "'", pos_);
    }

    int parse_number() {
        std::size_t start = pos_;
        std::size_t end = pos_;
        auto digits = [&] {
            while (end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[end]))) ++end;
        };
        digits();
        if (end < src_.size() && src_[end] == '.') {
            ++end;
            digits();
        }
        if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
            std::size_t save = end++;
            if (end < src_.size() && (src_[end] == '+' || src_[end] == '-')) ++end;
            if (end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[end])))
                digits();
            else
                end = save;
        }
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + end, value);
        if (ec != std::errc() || ptr != src_.data() + end)
            throw ParseError("syntax error: malformed number", start);
        pos_ = end;
        Node nd{Kind::Number};
        nd.value = value;
        nd.offset = start;
        nd.length = end - start;
        return add(nd);
    }

    int parse_variable(std::string_view ident, std::size_t start) {
        Node nd{Kind::Number};
        nd.offset = start;
        nd.length = ident.size();
        if (ident == "t") {
            if (!policy_.allow_t) throw ParseError("variable 't' not permitted here", start);
            nd.kind = Kind::VarT;
            uses_t = true;
        } else if (ident == "z") {
            if (!policy_.allow_z) throw ParseError("variable 'z' not permitted here", start);
            nd.kind = Kind::VarZ;
            uses_z = true;
        } else if (ident.size() >= 2 && ident[0] == 'x' &&
                   std::all_of(ident.begin() + 1, ident.end(),
                               [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
            if (!policy_.allow_x)
                throw ParseError("variable '" + std::string(ident) + "' not permitted here", start);
            std::size_t idx = 0;
            auto [ptr, ec] = std::from_chars(ident.data() + 1, ident.data() + ident.size(), idx);
            if (ec != std::errc() || idx == 0)
                throw ParseError("unknown identifier '" + std::string(ident) + "'", start);
            if (idx > n_)
                throw ParseError("variable index " + std::to_string(idx) + " exceeds dimension " +
                                     std::to_string(n_),
                                 start);
            nd.kind = Kind::VarX;
            nd.index = static_cast<int>(idx);
            max_x = std::max(max_x, idx);
        } else {
            throw ParseError("unknown identifier '" + std::string(ident) + "'", start);
        }
        return add(nd);
    }

    int parse_call(std::string_view ident, std::size_t start) {
        auto it = std::find_if(kFunctions.begin(), kFunctions.end(),
                               [&](const FuncInfo& f) { return f.name == ident; });
        if (it == kFunctions.end())
            throw ParseError("unknown function '" + std::string(ident) + "'", start);
        expect('(');
        std::vector<int> args{parse_binary(0)};
        while (peek() == ',') {
            ++pos_;
            args.push_back(parse_binary(0));
        }
        expect(')');
        if (static_cast<int>(args.size()) != it->arity)
            throw ParseError("function '" + std::string(ident) + "' expects " +
                                 std::to_string(it->arity) + " argument(s)",
                             start);
        Node nd{Kind::Call};
        nd.func = it->func;
        nd.lhs = args[0];
        nd.rhs = args.size() > 1 ? args[1] : -1;
        nd.offset = start;
        nd.length = pos_ - start;
        return add(nd);
    }

    void expect(char c) {
        if (peek() != c) {
            if (pos_ >= src_.size())
                throw ParseError(std::string("syntax error: expected '") + c + "', got end of input", pos_);
            throw ParseError(std::string("syntax error: expected '") + c + "'", pos_);
        }
        ++pos_;
    }
};

// ---------------------------------------------------------------------------
// Second-order Taylor jets along a direction: (f, f_v, f_vv).

struct Jet {
    double v0 = 0.0, v1 = 0.0, v2 = 0.0;
};

Jet operator+(Jet a, Jet b) { return {a.v0 + b.v0, a.v1 + b.v1, a.v2 + b.v2}; }
Jet operator-(Jet a, Jet b) { return {a.v0 - b.v0, a.v1 - b.v1, a.v2 - b.v2}; }
Jet operator-(Jet a) { return {-a.v0, -a.v1, -a.v2}; }
Jet operator*(Jet a, Jet b) {
    return {a.v0 * b.v0, a.v0 * b.v1 + a.v1 * b.v0, a.v0 * b.v2 + 2.0 * a.v1 * b.v1 + a.v2 * b.v0};
}
Jet operator/(Jet a, Jet b) {
    double c0 = a.v0 / b.v0;
    double c1 = (a.v1 - c0 * b.v1) / b.v0;
    double c2 = (a.v2 - 2.0 * c1 * b.v1 - c0 * b.v2) / b.v0;
    return {c0, c1, c2};
}
// Chain rule for a scalar function with derivatives g1, g2 at a.v0.
Jet compose(Jet a, double g0, double g1, double g2) {
    return {g0, g1 * a.v1, g2 * a.v1 * a.v1 + g1 * a.v2};
}

double value_of(double d) { return d; }
double value_of(const Jet& j) { return j.v0; }

template <class T>
T constant(double c) {
    if constexpr (std::is_same_v<T, double>)
        return c;
    else
        return Jet{c, 0.0, 0.0};
}

template <class T>
bool is_constant_value(const T& a) {
    if constexpr (std::is_same_v<T, double>)
        return true;
    else
        return a.v1 == 0.0 && a.v2 == 0.0;
}

constexpr double kMaxRepeatedPower = 1024.0;

template <class T>
T integer_power(T base, long k) {
    bool invert = k < 0;
    long m = invert ? -k : k;
    T result = constant<T>(1.0);
    for (long i = 0; i < m; ++i) result = result * base;
    if (invert) result = constant<T>(1.0) / result;
    return result;
}

template <class T>
class Evaluator {
public:
    Evaluator(const Ast& ast, const EvalEnv& env, std::span<const double> dir)
        : ast_(ast), env_(env), dir_(dir) {}

    T run(int idx) {
        const Node& nd = ast_.nodes[idx];
        switch (nd.kind) {
            case Kind::Number: return constant<T>(nd.value);
            case Kind::VarX: {
                double xv = env_.x[nd.index - 1];
                if constexpr (std::is_same_v<T, double>)
                    return xv;
                else
                    return Jet{xv, dir_[nd.index - 1], 0.0};
            }
            case Kind::VarT: return constant<T>(env_.t);
            case Kind::VarZ:
                if (!env_.z) throw DomainError("variable z used without a jump label", nd.offset, ast_.text(nd));
                return constant<T>(*env_.z);
            case Kind::Neg: return -run(nd.lhs);
            case Kind::Add: return run(nd.lhs) + run(nd.rhs);
            case Kind::Sub: return run(nd.lhs) - run(nd.rhs);
            case Kind::Mul: return run(nd.lhs) * run(nd.rhs);
            case Kind::Div: {
                T a = run(nd.lhs);
                T b = run(nd.rhs);
                if (value_of(b) == 0.0) throw DomainError("division by zero", nd.offset, ast_.text(nd));
                return a / b;
            }
            case Kind::Pow: return power(nd, run(nd.lhs), run(nd.rhs));
            case Kind::Call: return call(nd);
        }
        return constant<T>(0.0);
    }

private:
    const Ast& ast_;
    const EvalEnv& env_;
    std::span<const double> dir_;

    [[noreturn]] void domain(const Node& nd, const char* what) {
        throw DomainError(what, nd.offset, ast_.text(nd));
    }
    [[noreturn]] void kink(const Node& nd, const char* what) {
        throw NonDifferentiableError(what, nd.offset, ast_.text(nd));
    }

    T power(const Node& nd, T base, T expo) {
        double b = value_of(base);
        double p = value_of(expo);
        if (is_constant_value(expo) && std::floor(p) == p && std::abs(p) <= kMaxRepeatedPower) {
            if (p < 0 && b == 0.0) domain(nd, "zero raised to a negative power");
            return integer_power(base, static_cast<long>(p));
        }
        if (b < 0.0) domain(nd, "negative base with non-integer exponent");
        if (b == 0.0) {
            if (p <= 0.0) domain(nd, "zero raised to a non-positive power");
            if constexpr (std::is_same_v<T, double>)
                return 0.0;
            else
                kink(nd, "power not differentiable at zero base");
        }
        if constexpr (std::is_same_v<T, double>) {
            return std::pow(b, p);
        } else {
            if (is_constant_value(expo))
                return compose(base, std::pow(b, p), p * std::pow(b, p - 1.0),
                               p * (p - 1.0) * std::pow(b, p - 2.0));
            Jet lg = compose(base, std::log(b), 1.0 / b, -1.0 / (b * b));
            Jet arg = expo * lg;
            double e = std::exp(arg.v0);
            return compose(arg, e, e, e);
        }
    }

    T call(const Node& nd) {
        T a = run(nd.lhs);
        double av = value_of(a);
        switch (nd.func) {
            case Func::Sqrt:
                if (av < 0.0) domain(nd, "sqrt of negative argument");
                if constexpr (std::is_same_v<T, double>) {
                    return std::sqrt(av);
                } else {
                    if (av == 0.0) kink(nd, "sqrt not differentiable at zero");
                    double s = std::sqrt(av);
                    return compose(a, s, 0.5 / s, -0.25 / (s * av));
                }
            case Func::Exp:
                if constexpr (std::is_same_v<T, double>) {
                    return std::exp(av);
                } else {
                    double e = std::exp(av);
                    return compose(a, e, e, e);
                }
            case Func::Log:
                if (av <= 0.0) domain(nd, "log of non-positive argument");
                if constexpr (std::is_same_v<T, double>)
                    return std::log(av);
                else
                    return compose(a, std::log(av), 1.0 / av, -1.0 / (av * av));
            case Func::Abs:
                if constexpr (std::is_same_v<T, double>) {
                    return std::abs(av);
                } else {
                    if (av == 0.0) kink(nd, "abs not differentiable at zero");
                    return av > 0.0 ? a : -a;
                }
            case Func::Min:
            case Func::Max: {
                T b = run(nd.rhs);
                double bv = value_of(b);
                if constexpr (!std::is_same_v<T, double>) {
                    if (av == bv) kink(nd, nd.func == Func::Min ? "min not differentiable at a tie"
                                                                : "max not differentiable at a tie");
                }
                bool pick_a = nd.func == Func::Min ? av <= bv : av >= bv;
                return pick_a ? a : b;
            }
            case Func::Pow: return power(nd, a, run(nd.rhs));
        }
        return a;
    }
};

// ---------------------------------------------------------------------------
// Printer

void format_number(std::string& out, double v) {
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    out.append(buf.data(), ptr);
}

std::string_view func_name(Func f) {
    for (const auto& info : kFunctions)
        if (info.func == f) return info.name;
    return "?";
}

void print(const Ast& ast, int idx, std::string& out) {
    const Node& nd = ast.nodes[idx];
    auto binary = [&](char op) {
        out += '(';
        print(ast, nd.lhs, out);
        out += ' ';
        out += op;
        out += ' ';
        print(ast, nd.rhs, out);
        out += ')';
    };
    switch (nd.kind) {
        case Kind::Number: format_number(out, nd.value); break;
        case Kind::VarX: out += "x" + std::to_string(nd.index); break;
        case Kind::VarT: out += 't'; break;
        case Kind::VarZ: out += 'z'; break;
        case Kind::Neg:
            out += "(-";
            print(ast, nd.lhs, out);
            out += ')';
            break;
        case Kind::Add: binary('+'); break;
        case Kind::Sub: binary('-'); break;
        case Kind::Mul: binary('*'); break;
        case Kind::Div: binary('/'); break;
        case Kind::Pow: binary('^'); break;
        case Kind::Call:
            out += func_name(nd.func);
            out += '(';
            print(ast, nd.lhs, out);
            if (nd.rhs >= 0) {
                out += ", ";
                print(ast, nd.rhs, out);
            }
            out += ')';
            break;
    }
}

void check_env(const CoeffExpr& e, const EvalEnv& env) {
    if (env.x.size() < e.max_x_index())
        throw Error("evaluation point has dimension " + std::to_string(env.x.size()) +
                    ", expression needs " + std::to_string(e.max_x_index()));
}

}  // namespace

CoeffExpr parse(std::string_view source, std::size_t n, VarPolicy policy) {
    if (source.find_first_not_of(" \t\r\n") == std::string_view::npos)
        throw ParseError("syntax error: empty expression", 0);
    auto ast = std::make_shared<Ast>();
    ast->source = std::string(source);
    Parser parser(ast->source, n, policy, *ast);
    ast->root = parser.parse_all();

    CoeffExpr e;
    e.source_ = ast->source;
    e.n_ = n;
    e.max_x_ = parser.max_x;
    e.uses_t_ = parser.uses_t;
    e.uses_z_ = parser.uses_z;
    e.ast_ = std::move(ast);
    return e;
}

double eval(const CoeffExpr& e, const EvalEnv& env) {
    if (e.empty()) throw Error("evaluating an empty expression");
    check_env(e, env);
    Evaluator<double> ev(*e.ast_, env, {});
    return ev.run(e.ast_->root);
}

DirDeriv dir_derivs(const CoeffExpr& e, const EvalEnv& env, std::span<const double> v) {
    if (e.empty()) throw Error("evaluating an empty expression");
    check_env(e, env);
    if (v.size() != env.x.size()) throw Error("direction and point dimensions differ");
    double norm2 = 0.0;
    for (double c : v) norm2 += c * c;
    if (std::abs(std::sqrt(norm2) - 1.0) > 1e-12) throw Error("direction is not a unit vector");
    Evaluator<Jet> ev(*e.ast_, env, v);
    Jet j = ev.run(e.ast_->root);
    return {j.v0, j.v1, j.v2};
}

std::vector<double> gradient(const CoeffExpr& e, const EvalEnv& env) {
    std::vector<double> g(env.x.size());
    std::vector<double> dir(env.x.size(), 0.0);
    for (std::size_t i = 0; i < dir.size(); ++i) {
        dir[i] = 1.0;
        g[i] = dir_derivs(e, env, dir).d_v;
        dir[i] = 0.0;
    }
    return g;
}

std::string CoeffExpr::to_string() const {
    std::string out;
    if (ast_) print(*ast_, ast_->root, out);
    return out;
}

}  // namespace jdconvex
