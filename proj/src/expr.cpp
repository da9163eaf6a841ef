#include "steklab/expr.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace steklab {

enum class Op { Const, X1, X2, Add, Sub, Mul, Div, Neg, Pow, Exp, Log, Sin, Cos, Sqrt };

struct Expr {
    Op op;
    double c = 0;
    ExprPtr a, b;
};

namespace {

ExprPtr make(Op op, ExprPtr a = nullptr, ExprPtr b = nullptr, double c = 0) {
    auto e = std::make_shared<Expr>();
    e->op = op;
    e->a = std::move(a);
    e->b = std::move(b);
    e->c = c;
    return e;
}
ExprPtr num(double v) { return make(Op::Const, nullptr, nullptr, v); }

bool is_const(const ExprPtr& e, double v) { return e->op == Op::Const && e->c == v; }

ExprPtr add(ExprPtr a, ExprPtr b) {
    if (is_const(a, 0)) return b;
    if (is_const(b, 0)) return a;
    if (a->op == Op::Const && b->op == Op::Const) return num(a->c + b->c);
    return make(Op::Add, a, b);
}
ExprPtr sub(ExprPtr a, ExprPtr b) {
    if (is_const(b, 0)) return a;
    if (a->op == Op::Const && b->op == Op::Const) return num(a->c - b->c);
    return make(Op::Sub, a, b);
}
ExprPtr mul(ExprPtr a, ExprPtr b) {
    if (is_const(a, 0) || is_const(b, 0)) return num(0);
    if (is_const(a, 1)) return b;
    if (is_const(b, 1)) return a;
    if (a->op == Op::Const && b->op == Op::Const) return num(a->c * b->c);
    return make(Op::Mul, a, b);
}
ExprPtr divide(ExprPtr a, ExprPtr b) {
    if (is_const(a, 0)) return num(0);
    if (is_const(b, 1)) return a;
    return make(Op::Div, a, b);
}

struct Parser {
    const std::string& s;
    size_t i = 0;

    explicit Parser(const std::string& text) : s(text) {}

    void skip() {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    }
    bool eat(char ch) {
        skip();
        if (i < s.size() && s[i] == ch) {
            ++i;
            return true;
        }
        return false;
    }
    [[noreturn]] void fail(const std::string& what) {
        throw Error("weight expression parse error at position " + std::to_string(i) + ": " + what);
    }

    ExprPtr expr() {
        ExprPtr e = term();
        for (;;) {
            if (eat('+'))
                e = add(e, term());
            else if (eat('-'))
                e = sub(e, term());
            else
                return e;
        }
    }
    ExprPtr term() {
        ExprPtr e = unary();
        for (;;) {
            if (eat('*'))
                e = mul(e, unary());
            else if (eat('/'))
                e = divide(e, unary());
            else
                return e;
        }
    }
    ExprPtr unary() {
        if (eat('-')) return make(Op::Neg, unary());
        if (eat('+')) return unary();
        return power();
    }
    ExprPtr power() {
        ExprPtr base = atom();
        if (eat('^')) {
            ExprPtr e = unary();
            if (e->op != Op::Const) fail("exponent must be a constant");
            return make(Op::Pow, base, nullptr, e->c);
        }
        return base;
    }
    ExprPtr atom() {
        skip();
        if (i >= s.size()) fail("unexpected end of input");
        char ch = s[i];
        if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') {
            size_t end = 0;
            double v = std::stod(s.substr(i), &end);
            i += end;
            return num(v);
        }
        if (ch == '(') {
            ++i;
            ExprPtr e = expr();
            if (!eat(')')) fail("missing closing parenthesis");
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(ch))) {
            size_t j = i;
            while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
            std::string name = s.substr(i, j - i);
            i = j;
            if (name == "x1") return make(Op::X1);
            if (name == "x2") return make(Op::X2);
            if (name == "one") return num(1.0);
            if (name == "pi") return num(kPi);
            Op fop;
            if (name == "exp")
                fop = Op::Exp;
            else if (name == "log")
                fop = Op::Log;
            else if (name == "sin")
                fop = Op::Sin;
            else if (name == "cos")
                fop = Op::Cos;
            else if (name == "sqrt")
                fop = Op::Sqrt;
            else
                fail("unknown identifier '" + name + "'");
            if (!eat('(')) fail("expected '(' after function name");
            ExprPtr arg = expr();
            if (!eat(')')) fail("missing closing parenthesis");
            return make(fop, arg);
        }
        fail(std::string("unexpected character '") + ch + "'");
    }
};

} // namespace

ExprPtr parse_expression(const std::string& text) {
    Parser p(text);
    ExprPtr e = p.expr();
    p.skip();
    if (p.i != text.size()) p.fail("trailing input");
    return e;
}

double eval_expression(const ExprPtr& e, double x1, double x2) {
    switch (e->op) {
        case Op::Const: return e->c;
        case Op::X1: return x1;
        case Op::X2: return x2;
        case Op::Add: return eval_expression(e->a, x1, x2) + eval_expression(e->b, x1, x2);
        case Op::Sub: return eval_expression(e->a, x1, x2) - eval_expression(e->b, x1, x2);
        case Op::Mul: return eval_expression(e->a, x1, x2) * eval_expression(e->b, x1, x2);
        case Op::Div: return eval_expression(e->a, x1, x2) / eval_expression(e->b, x1, x2);
        case Op::Neg: return -eval_expression(e->a, x1, x2);
        case Op::Pow: return std::pow(eval_expression(e->a, x1, x2), e->c);
        case Op::Exp: return std::exp(eval_expression(e->a, x1, x2));
        case Op::Log: return std::log(eval_expression(e->a, x1, x2));
        case Op::Sin: return std::sin(eval_expression(e->a, x1, x2));
        case Op::Cos: return std::cos(eval_expression(e->a, x1, x2));
        case Op::Sqrt: return std::sqrt(eval_expression(e->a, x1, x2));
    }
    throw Error("corrupt expression tree");
}

ExprPtr differentiate(const ExprPtr& e, int var) {
    switch (e->op) {
        case Op::Const: return num(0);
        case Op::X1: return num(var == 0 ? 1 : 0);
        case Op::X2: return num(var == 1 ? 1 : 0);
        case Op::Add: return add(differentiate(e->a, var), differentiate(e->b, var));
        case Op::Sub: return sub(differentiate(e->a, var), differentiate(e->b, var));
        case Op::Mul:
            return add(mul(differentiate(e->a, var), e->b), mul(e->a, differentiate(e->b, var)));
        case Op::Div:
            return divide(sub(mul(differentiate(e->a, var), e->b), mul(e->a, differentiate(e->b, var))),
                          make(Op::Pow, e->b, nullptr, 2));
        case Op::Neg: return make(Op::Neg, differentiate(e->a, var));
        case Op::Pow:
            return mul(mul(num(e->c), make(Op::Pow, e->a, nullptr, e->c - 1)), differentiate(e->a, var));
        case Op::Exp: return mul(make(Op::Exp, e->a), differentiate(e->a, var));
        case Op::Log: return divide(differentiate(e->a, var), e->a);
        case Op::Sin: return mul(make(Op::Cos, e->a), differentiate(e->a, var));
        case Op::Cos: return make(Op::Neg, mul(make(Op::Sin, e->a), differentiate(e->a, var)));
        case Op::Sqrt:
            return divide(differentiate(e->a, var), mul(num(2), make(Op::Sqrt, e->a)));
    }
    throw Error("corrupt expression tree");
}

std::string expression_to_string(const ExprPtr& e) {
    std::ostringstream os;
    switch (e->op) {
        case Op::Const: os << e->c; break;
        case Op::X1: os << "x1"; break;
        case Op::X2: os << "x2"; break;
        case Op::Add: os << "(" << expression_to_string(e->a) << "+" << expression_to_string(e->b) << ")"; break;
        case Op::Sub: os << "(" << expression_to_string(e->a) << "-" << expression_to_string(e->b) << ")"; break;
        case Op::Mul: os << "(" << expression_to_string(e->a) << "*" << expression_to_string(e->b) << ")"; break;
        case Op::Div: os << "(" << expression_to_string(e->a) << "/" << expression_to_string(e->b) << ")"; break;
        case Op::Neg: os << "(-" << expression_to_string(e->a) << ")"; break;
        case Op::Pow: os << "(" << expression_to_string(e->a) << "^" << e->c << ")"; break;
        case Op::Exp: os << "exp(" << expression_to_string(e->a) << ")"; break;
        case Op::Log: os << "log(" << expression_to_string(e->a) << ")"; break;
        case Op::Sin: os << "sin(" << expression_to_string(e->a) << ")"; break;
        case Op::Cos: os << "cos(" << expression_to_string(e->a) << ")"; break;
        case Op::Sqrt: os << "sqrt(" << expression_to_string(e->a) << ")"; break;
    }
    return os.str();
}

WeightField weight_from_expression(const std::string& text) {
    if (text == "one" || text == "1") return unit_weight();
    if (text == "x1") return axial_weight();
    ExprPtr e = parse_expression(text);
    ExprPtr d1 = differentiate(e, 0);
    ExprPtr d2 = differentiate(e, 1);
    WeightField w;
    w.value = [e](Vec2 p) { return eval_expression(e, p.x(), p.y()); };
    w.grad = [d1, d2](Vec2 p) {
        return Vec2(eval_expression(d1, p.x(), p.y()), eval_expression(d2, p.x(), p.y()));
    };
    return w;
}

} // namespace steklab
