#include "twoscale/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace twoscale {

const char* var_name(Var v) {
    switch (v) {
        case Var::x0: return "x0";
        case Var::x1: return "x1";
        case Var::y0: return "y0";
        case Var::y1: return "y1";
    }
    return "?";
}

namespace detail {

enum class Kind { Constant, Variable, Parameter, Unary, Binary, Power };
enum class UnaryOp { Neg, Sin, Cos, Exp, Sqrt };
enum class BinaryOp { Add, Sub, Mul, Div };

struct Node {
    Kind kind;
    double value = 0.0;        // Constant
    Var var = Var::x0;         // Variable
    std::string name;          // Parameter
    UnaryOp uop = UnaryOp::Neg;
    BinaryOp bop = BinaryOp::Add;
    int exponent = 0;          // Power
    NodePtr a, b;
};

namespace {

NodePtr make_const(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Constant;
    n->value = v;
    return n;
}

NodePtr make_var(Var v) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Variable;
    n->var = v;
    return n;
}

NodePtr make_param(std::string name) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Parameter;
    n->name = std::move(name);
    return n;
}

bool const_val(const NodePtr& n, double* v) {
    if (n->kind == Kind::Constant) {
        if (v) *v = n->value;
        return true;
    }
    return false;
}

bool is_const(const NodePtr& n, double v) {
    return n->kind == Kind::Constant && n->value == v;
}

NodePtr make_unary(UnaryOp op, NodePtr a);

// Smart constructors fold constants and strip additive/multiplicative identities
// so that derivative trees stay small.
NodePtr make_binary(BinaryOp op, NodePtr a, NodePtr b) {
    double ca, cb;
    const bool a_const = const_val(a, &ca);
    const bool b_const = const_val(b, &cb);
    switch (op) {
        case BinaryOp::Add:
            if (a_const && b_const) return make_const(ca + cb);
            if (is_const(a, 0.0)) return b;
            if (is_const(b, 0.0)) return a;
            break;
        case BinaryOp::Sub:
            if (a_const && b_const) return make_const(ca - cb);
            if (is_const(b, 0.0)) return a;
            if (is_const(a, 0.0)) return make_unary(UnaryOp::Neg, b);
            break;
        case BinaryOp::Mul:
            if (a_const && b_const) return make_const(ca * cb);
            if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
            if (is_const(a, 1.0)) return b;
            if (is_const(b, 1.0)) return a;
            break;
        case BinaryOp::Div:
            if (is_const(a, 0.0) && !is_const(b, 0.0)) return make_const(0.0);
            if (a_const && b_const && cb != 0.0) return make_const(ca / cb);
            if (is_const(b, 1.0)) return a;
            break;
    }
    auto n = std::make_shared<Node>();
    n->kind = Kind::Binary;
    n->bop = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

NodePtr make_unary(UnaryOp op, NodePtr a) {
    double ca;
    if (const_val(a, &ca)) {
        switch (op) {
            case UnaryOp::Neg: return make_const(-ca);
            case UnaryOp::Sin: return make_const(std::sin(ca));
            case UnaryOp::Cos: return make_const(std::cos(ca));
            case UnaryOp::Exp: return make_const(std::exp(ca));
            case UnaryOp::Sqrt:
                if (ca >= 0.0) return make_const(std::sqrt(ca));
                break;  // keep symbolic; evaluation reports the domain error
        }
    }
    if (op == UnaryOp::Neg && a->kind == Kind::Unary && a->uop == UnaryOp::Neg) return a->a;
    auto n = std::make_shared<Node>();
    n->kind = Kind::Unary;
    n->uop = op;
    n->a = std::move(a);
    return n;
}

NodePtr make_power(NodePtr a, int e) {
    if (e < 0) throw std::invalid_argument("negative exponent not supported");
    if (e == 0) return make_const(1.0);
    if (e == 1) return a;
    double ca;
    if (const_val(a, &ca)) return make_const(std::pow(ca, e));
    auto n = std::make_shared<Node>();
    n->kind = Kind::Power;
    n->exponent = e;
    n->a = std::move(a);
    return n;
}

double eval_node(const Node& n, const EvalEnv& env) {
    switch (n.kind) {
        case Kind::Constant: return n.value;
        case Kind::Variable: return env.vars[static_cast<int>(n.var)];
        case Kind::Parameter: {
            if (env.params) {
                auto it = env.params->find(n.name);
                if (it != env.params->end()) return it->second;
            }
            throw EvalError("unbound parameter '" + n.name + "'");
        }
        case Kind::Unary: {
            const double a = eval_node(*n.a, env);
            switch (n.uop) {
                case UnaryOp::Neg: return -a;
                case UnaryOp::Sin: return std::sin(a);
                case UnaryOp::Cos: return std::cos(a);
                case UnaryOp::Exp: return std::exp(a);
                case UnaryOp::Sqrt:
                    if (a < 0.0) throw EvalError("sqrt of negative value");
                    return std::sqrt(a);
            }
            break;
        }
        case Kind::Binary: {
            const double a = eval_node(*n.a, env);
            const double b = eval_node(*n.b, env);
            switch (n.bop) {
                case BinaryOp::Add: return a + b;
                case BinaryOp::Sub: return a - b;
                case BinaryOp::Mul: return a * b;
                case BinaryOp::Div:
                    if (b == 0.0) throw EvalError("division by zero");
                    return a / b;
            }
            break;
        }
        case Kind::Power: {
            const double a = eval_node(*n.a, env);
            double r = 1.0;
            for (int i = 0; i < n.exponent; ++i) r *= a;
            return r;
        }
    }
    throw EvalError("corrupt expression node");
}

NodePtr diff_node(const NodePtr& n, Var v) {
    switch (n->kind) {
        case Kind::Constant:
        case Kind::Parameter:
            return make_const(0.0);
        case Kind::Variable:
            return make_const(n->var == v ? 1.0 : 0.0);
        case Kind::Unary: {
            NodePtr da = diff_node(n->a, v);
            switch (n->uop) {
                case UnaryOp::Neg:
                    return make_unary(UnaryOp::Neg, da);
                case UnaryOp::Sin:
                    return make_binary(BinaryOp::Mul, make_unary(UnaryOp::Cos, n->a), da);
                case UnaryOp::Cos:
                    return make_unary(
                        UnaryOp::Neg,
                        make_binary(BinaryOp::Mul, make_unary(UnaryOp::Sin, n->a), da));
                case UnaryOp::Exp:
                    return make_binary(BinaryOp::Mul, make_unary(UnaryOp::Exp, n->a), da);
                case UnaryOp::Sqrt:
                    // d sqrt(u) = u' / (2 sqrt(u))
                    return make_binary(
                        BinaryOp::Div, da,
                        make_binary(BinaryOp::Mul, make_const(2.0),
                                    make_unary(UnaryOp::Sqrt, n->a)));
            }
            break;
        }
        case Kind::Binary: {
            NodePtr da = diff_node(n->a, v);
            NodePtr db = diff_node(n->b, v);
            switch (n->bop) {
                case BinaryOp::Add: return make_binary(BinaryOp::Add, da, db);
                case BinaryOp::Sub: return make_binary(BinaryOp::Sub, da, db);
                case BinaryOp::Mul:
                    return make_binary(BinaryOp::Add,
                                       make_binary(BinaryOp::Mul, da, n->b),
                                       make_binary(BinaryOp::Mul, n->a, db));
                case BinaryOp::Div:
                    // (u/w)' = (u' w - u w') / w^2
                    return make_binary(
                        BinaryOp::Div,
                        make_binary(BinaryOp::Sub,
                                    make_binary(BinaryOp::Mul, da, n->b),
                                    make_binary(BinaryOp::Mul, n->a, db)),
                        make_power(n->b, 2));
            }
            break;
        }
        case Kind::Power: {
            NodePtr da = diff_node(n->a, v);
            return make_binary(BinaryOp::Mul,
                               make_binary(BinaryOp::Mul, make_const(double(n->exponent)),
                                           make_power(n->a, n->exponent - 1)),
                               da);
        }
    }
    throw EvalError("corrupt expression node");
}

NodePtr subst_node(const NodePtr& n, const std::array<std::optional<Expr>, 4>& map) {
    switch (n->kind) {
        case Kind::Constant:
        case Kind::Parameter:
            return n;
        case Kind::Variable: {
            const auto& repl = map[static_cast<int>(n->var)];
            return repl ? repl->node() : n;
        }
        case Kind::Unary:
            return make_unary(n->uop, subst_node(n->a, map));
        case Kind::Binary:
            return make_binary(n->bop, subst_node(n->a, map), subst_node(n->b, map));
        case Kind::Power:
            return make_power(subst_node(n->a, map), n->exponent);
    }
    throw EvalError("corrupt expression node");
}

NodePtr simplify_node(const NodePtr& n) {
    switch (n->kind) {
        case Kind::Constant:
        case Kind::Variable:
        case Kind::Parameter:
            return n;
        case Kind::Unary:
            return make_unary(n->uop, simplify_node(n->a));
        case Kind::Binary:
            return make_binary(n->bop, simplify_node(n->a), simplify_node(n->b));
        case Kind::Power:
            return make_power(simplify_node(n->a), n->exponent);
    }
    throw EvalError("corrupt expression node");
}

bool depends_on_node(const Node& n, Var v) {
    switch (n.kind) {
        case Kind::Constant:
        case Kind::Parameter:
            return false;
        case Kind::Variable:
            return n.var == v;
        case Kind::Unary:
        case Kind::Power:
            return depends_on_node(*n.a, v);
        case Kind::Binary:
            return depends_on_node(*n.a, v) || depends_on_node(*n.b, v);
    }
    return false;
}

void collect_params(const Node& n, std::set<std::string>& out) {
    switch (n.kind) {
        case Kind::Parameter: out.insert(n.name); return;
        case Kind::Unary:
        case Kind::Power: collect_params(*n.a, out); return;
        case Kind::Binary:
            collect_params(*n.a, out);
            collect_params(*n.b, out);
            return;
        default: return;
    }
}

const char* unary_name(UnaryOp op) {
    switch (op) {
        case UnaryOp::Neg: return "-";
        case UnaryOp::Sin: return "sin";
        case UnaryOp::Cos: return "cos";
        case UnaryOp::Exp: return "exp";
        case UnaryOp::Sqrt: return "sqrt";
    }
    return "?";
}

// Precedence levels: 1 add/sub, 2 mul/div, 3 unary minus, 4 power, 5 atom.
int precedence(const Node& n) {
    switch (n.kind) {
        case Kind::Binary:
            return (n.bop == BinaryOp::Add || n.bop == BinaryOp::Sub) ? 1 : 2;
        case Kind::Unary:
            return n.uop == UnaryOp::Neg ? 3 : 5;  // function calls print as atoms
        case Kind::Power:
            return 4;
        default:
            return 5;
    }
}

void print_node(const Node& n, std::string& out, int parent_prec) {
    const int prec = precedence(n);
    const bool parens = prec < parent_prec;
    if (parens) out += '(';
    switch (n.kind) {
        case Kind::Constant: {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", n.value);
            if (n.value < 0.0) {
                out += '(';
                out += buf;
                out += ')';
            } else {
                out += buf;
            }
            break;
        }
        case Kind::Variable: out += var_name(n.var); break;
        case Kind::Parameter: out += n.name; break;
        case Kind::Unary:
            if (n.uop == UnaryOp::Neg) {
                out += '-';
                print_node(*n.a, out, 4);  // -x^2 must stay -(x^2): print operand above mul level
            } else {
                out += unary_name(n.uop);
                out += '(';
                print_node(*n.a, out, 0);
                out += ')';
            }
            break;
        case Kind::Binary: {
            const char op = n.bop == BinaryOp::Add   ? '+'
                            : n.bop == BinaryOp::Sub ? '-'
                            : n.bop == BinaryOp::Mul ? '*'
                                                     : '/';
            print_node(*n.a, out, prec);
            out += op;
            // Right operand of - and / needs strictly higher precedence.
            const bool strict = n.bop == BinaryOp::Sub || n.bop == BinaryOp::Div;
            print_node(*n.b, out, prec + (strict ? 1 : 0));
            break;
        }
        case Kind::Power:
            print_node(*n.a, out, 5);
            out += '^';
            out += std::to_string(n.exponent);
            break;
    }
    if (parens) out += ')';
}

}  // namespace
}  // namespace detail

using detail::BinaryOp;
using detail::Kind;
using detail::UnaryOp;

Expr::Expr() : node_(detail::make_const(0.0)) {}
Expr::Expr(double c) : node_(detail::make_const(c)) {}
Expr Expr::variable(Var v) { return Expr(detail::make_var(v)); }
Expr Expr::parameter(const std::string& name) { return Expr(detail::make_param(name)); }

double Expr::eval(const EvalEnv& env) const { return detail::eval_node(*node_, env); }
Expr Expr::diff(Var v) const { return Expr(detail::diff_node(node_, v)); }
Expr Expr::subst(const std::array<std::optional<Expr>, 4>& map) const {
    return Expr(detail::subst_node(node_, map));
}
Expr Expr::simplified() const { return Expr(detail::simplify_node(node_)); }

std::string Expr::str() const {
    std::string out;
    detail::print_node(*node_, out, 0);
    return out;
}

bool Expr::is_constant(double* value) const {
    if (node_->kind == Kind::Constant) {
        if (value) *value = node_->value;
        return true;
    }
    return false;
}

bool Expr::depends_on(Var v) const { return detail::depends_on_node(*node_, v); }

std::set<std::string> Expr::parameters() const {
    std::set<std::string> out;
    detail::collect_params(*node_, out);
    return out;
}

Expr operator+(const Expr& a, const Expr& b) {
    return Expr(detail::make_binary(BinaryOp::Add, a.node(), b.node()));
}
Expr operator-(const Expr& a, const Expr& b) {
    return Expr(detail::make_binary(BinaryOp::Sub, a.node(), b.node()));
}
Expr operator*(const Expr& a, const Expr& b) {
    return Expr(detail::make_binary(BinaryOp::Mul, a.node(), b.node()));
}
Expr operator/(const Expr& a, const Expr& b) {
    return Expr(detail::make_binary(BinaryOp::Div, a.node(), b.node()));
}
Expr operator-(const Expr& a) { return Expr(detail::make_unary(UnaryOp::Neg, a.node())); }
Expr pow(const Expr& a, int n) { return Expr(detail::make_power(a.node(), n)); }
Expr sin(const Expr& a) { return Expr(detail::make_unary(UnaryOp::Sin, a.node())); }
Expr cos(const Expr& a) { return Expr(detail::make_unary(UnaryOp::Cos, a.node())); }
Expr exp(const Expr& a) { return Expr(detail::make_unary(UnaryOp::Exp, a.node())); }
Expr sqrt(const Expr& a) { return Expr(detail::make_unary(UnaryOp::Sqrt, a.node())); }

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

struct Parser {
    const std::string& text;
    const std::set<std::string>& params;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    bool eof() {
        skip_ws();
        return pos >= text.size();
    }

    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }

    bool accept(char c) {
        if (peek() == c) {
            ++pos;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, pos); }

    Expr parse_expr() {
        Expr e = parse_term();
        while (true) {
            if (accept('+')) {
                e = e + parse_term();
            } else if (accept('-')) {
                e = e - parse_term();
            } else {
                return e;
            }
        }
    }

    Expr parse_term() {
        Expr e = parse_unary();
        while (true) {
            if (accept('*')) {
                e = e * parse_unary();
            } else if (accept('/')) {
                e = e / parse_unary();
            } else {
                return e;
            }
        }
    }

    Expr parse_unary() {
        if (accept('-')) return -parse_unary();
        if (accept('+')) return parse_unary();
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_atom();
        if (accept('^')) {
            skip_ws();
            const std::size_t start = pos;
            int n = 0;
            while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
                n = n * 10 + (text[pos] - '0');
                ++pos;
            }
            if (pos == start) fail("expected non-negative integer exponent after '^'");
            return pow(base, n);
        }
        return base;
    }

    Expr parse_atom() {
        skip_ws();
        if (pos >= text.size()) fail("unexpected end of expression");
        const char c = text[pos];
        if (c == '(') {
            ++pos;
            Expr e = parse_expr();
            if (!accept(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
        fail(std::string("unexpected character '") + c + "'");
    }

    Expr parse_number() {
        const std::size_t start = pos;
        while (pos < text.size() &&
               (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.'))
            ++pos;
        if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
            std::size_t epos = pos + 1;
            if (epos < text.size() && (text[epos] == '+' || text[epos] == '-')) ++epos;
            if (epos < text.size() && std::isdigit(static_cast<unsigned char>(text[epos]))) {
                pos = epos;
                while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])))
                    ++pos;
            }
        }
        const std::string tok = text.substr(start, pos - start);
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end != tok.c_str() + tok.size()) {
            pos = start;
            fail("malformed number '" + tok + "'");
        }
        return Expr(v);
    }

    Expr parse_ident() {
        const std::size_t start = pos;
        while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) ||
                                     text[pos] == '_'))
            ++pos;
        const std::string name = text.substr(start, pos - start);
        if (name == "x0") return Expr::variable(Var::x0);
        if (name == "x1") return Expr::variable(Var::x1);
        if (name == "y0") return Expr::variable(Var::y0);
        if (name == "y1") return Expr::variable(Var::y1);
        if (name == "sin" || name == "cos" || name == "exp" || name == "sqrt") {
            if (!accept('(')) fail("expected '(' after function '" + name + "'");
            Expr arg = parse_expr();
            if (!accept(')')) fail("expected ')'");
            if (name == "sin") return sin(arg);
            if (name == "cos") return cos(arg);
            if (name == "exp") return exp(arg);
            return sqrt(arg);
        }
        if (params.count(name)) return Expr::parameter(name);
        pos = start;
        fail("unknown identifier '" + name + "'");
    }
};

}  // namespace

Expr parse(const std::string& text, const std::set<std::string>& params) {
    Parser p{text, params};
    Expr e = p.parse_expr();
    if (!p.eof()) p.fail("unexpected trailing input");
    return e;
}

// ---------------------------------------------------------------------------
// CompiledExpr
// ---------------------------------------------------------------------------

CompiledExpr::CompiledExpr() {
    code_.push_back({Op::PushConst, 0, 0.0});
}

CompiledExpr::CompiledExpr(const Expr& e, const ParamMap& params) {
    compile(*e.node(), params, 1);
}

void CompiledExpr::compile(const detail::Node& n, const ParamMap& params, int depth) {
    max_stack_ = std::max(max_stack_, depth);
    switch (n.kind) {
        case Kind::Constant:
            code_.push_back({Op::PushConst, 0, n.value});
            return;
        case Kind::Variable:
            code_.push_back({Op::PushVar, static_cast<int>(n.var), 0.0});
            return;
        case Kind::Parameter: {
            auto it = params.find(n.name);
            if (it == params.end()) throw EvalError("unbound parameter '" + n.name + "'");
            code_.push_back({Op::PushConst, 0, it->second});
            return;
        }
        case Kind::Unary:
            compile(*n.a, params, depth);
            switch (n.uop) {
                case UnaryOp::Neg: code_.push_back({Op::Neg, 0, 0.0}); break;
                case UnaryOp::Sin: code_.push_back({Op::Sin, 0, 0.0}); break;
                case UnaryOp::Cos: code_.push_back({Op::Cos, 0, 0.0}); break;
                case UnaryOp::Exp: code_.push_back({Op::Exp, 0, 0.0}); break;
                case UnaryOp::Sqrt: code_.push_back({Op::Sqrt, 0, 0.0}); break;
            }
            return;
        case Kind::Binary:
            compile(*n.a, params, depth);
            compile(*n.b, params, depth + 1);
            switch (n.bop) {
                case BinaryOp::Add: code_.push_back({Op::Add, 0, 0.0}); break;
                case BinaryOp::Sub: code_.push_back({Op::Sub, 0, 0.0}); break;
                case BinaryOp::Mul: code_.push_back({Op::Mul, 0, 0.0}); break;
                case BinaryOp::Div: code_.push_back({Op::Div, 0, 0.0}); break;
            }
            return;
        case Kind::Power:
            compile(*n.a, params, depth);
            code_.push_back({Op::Pow, n.exponent, 0.0});
            return;
    }
}

double CompiledExpr::operator()(const std::array<double, 4>& vars) const {
    double small[64];
    std::vector<double> big;
    double* stack = small;
    if (max_stack_ > 64) {
        big.resize(max_stack_);
        stack = big.data();
    }
    int top = -1;
    for (const Instr& in : code_) {
        switch (in.op) {
            case Op::PushConst: stack[++top] = in.value; break;
            case Op::PushVar: stack[++top] = vars[in.arg]; break;
            case Op::Neg: stack[top] = -stack[top]; break;
            case Op::Sin: stack[top] = std::sin(stack[top]); break;
            case Op::Cos: stack[top] = std::cos(stack[top]); break;
            case Op::Exp: stack[top] = std::exp(stack[top]); break;
            case Op::Sqrt:
                if (stack[top] < 0.0) throw EvalError("sqrt of negative value");
                stack[top] = std::sqrt(stack[top]);
                break;
            case Op::Add: --top; stack[top] += stack[top + 1]; break;
            case Op::Sub: --top; stack[top] -= stack[top + 1]; break;
            case Op::Mul: --top; stack[top] *= stack[top + 1]; break;
            case Op::Div:
                --top;
                if (stack[top + 1] == 0.0) throw EvalError("division by zero");
                stack[top] /= stack[top + 1];
                break;
            case Op::Pow: {
                double r = 1.0, a = stack[top];
                for (int i = 0; i < in.arg; ++i) r *= a;
                stack[top] = r;
                break;
            }
        }
    }
    return stack[0];
}

double CompiledExpr::operator()(double x0, double x1, double y0, double y1) const {
    return (*this)(std::array<double, 4>{x0, x1, y0, y1});
}

}  // namespace twoscale
