#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace twoscale {

// The four coordinates of the two-scale setting: macro x = (x0,x1), micro y = (y0,y1).
enum class Var : int { x0 = 0, x1 = 1, y0 = 2, y1 = 3 };

const char* var_name(Var v);

using ParamMap = std::map<std::string, double>;

struct EvalEnv {
    std::array<double, 4> vars{0.0, 0.0, 0.0, 0.0};  // indexed by Var
    const ParamMap* params = nullptr;

    static EvalEnv at(double x0, double x1, double y0 = 0.0, double y1 = 0.0,
                      const ParamMap* p = nullptr) {
        EvalEnv env;
        env.vars = {x0, x1, y0, y1};
        env.params = p;
        return env;
    }
};

struct ParseError : std::runtime_error {
    std::size_t position;  // 0-based offset into the input text
    ParseError(const std::string& msg, std::size_t pos)
        : std::runtime_error(msg + " (at position " + std::to_string(pos) + ")"), position(pos) {}
};

struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {
struct Node;
using NodePtr = std::shared_ptr<const Node>;
}  // namespace detail

// Immutable scalar expression in (x0,x1,y0,y1) and named parameters.
// Value type: copies share the underlying tree; safe to use across threads.
class Expr {
public:
    Expr();  // the constant 0
    Expr(double c);
    static Expr variable(Var v);
    static Expr parameter(const std::string& name);

    double eval(const EvalEnv& env) const;
    Expr diff(Var v) const;
    // Substitutes expressions for variables; entries left empty keep the variable.
    Expr subst(const std::array<std::optional<Expr>, 4>& map) const;
    Expr simplified() const;
    std::string str() const;

    bool is_constant(double* value = nullptr) const;
    bool depends_on(Var v) const;
    std::set<std::string> parameters() const;

    const detail::NodePtr& node() const { return node_; }
    explicit Expr(detail::NodePtr n) : node_(std::move(n)) {}

private:
    detail::NodePtr node_;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& a, int n);  // n >= 0
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr exp(const Expr& a);
Expr sqrt(const Expr& a);

// Parses the documented grammar: infix + - * /, integer powers with ^,
// function calls sin/cos/exp/sqrt, identifiers [a-zA-Z_][a-zA-Z0-9_]*,
// decimal or scientific numbers. Identifiers must be x0,x1,y0,y1, a function
// name, or a member of `params`.
Expr parse(const std::string& text, const std::set<std::string>& params = {});

// Two expressions for the components of a vector-valued map (zeta, vector data).
struct VecExpr {
    Expr c0, c1;
};

// Flattened postfix program for fast repeated evaluation. Parameters are
// bound to constants at compile time; evaluation is reentrant.
class CompiledExpr {
public:
    CompiledExpr();  // evaluates to 0
    CompiledExpr(const Expr& e, const ParamMap& params = {});

    double operator()(double x0, double x1, double y0 = 0.0, double y1 = 0.0) const;
    double operator()(const std::array<double, 4>& vars) const;

private:
    enum class Op : unsigned char {
        PushConst, PushVar, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Sqrt
    };
    struct Instr {
        Op op;
        int arg;      // Var index for PushVar, exponent for Pow
        double value; // PushConst
    };
    std::vector<Instr> code_;
    int max_stack_ = 1;

    void compile(const detail::Node& n, const ParamMap& params, int depth);
};

}  // namespace twoscale
