#include "backstep/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "backstep/errors.hpp"

namespace backstep {

namespace {

using Node = Expression::Node;
using NodePtr = Expression::NodePtr;
using Kind = Expression::Kind;
using Var = Expression::Var;
using Fn = Expression::Fn;

NodePtr make_number(double v) {
    auto n = std::make_unique<Node>();
    n->kind = Kind::Number;
    n->number = v;
    return n;
}

NodePtr make_var(Var v) {
    auto n = std::make_unique<Node>();
    n->kind = Kind::Variable;
    n->var = v;
    return n;
}

NodePtr make_unary(NodePtr child) {
    auto n = std::make_unique<Node>();
    n->kind = Kind::Unary;
    n->op = '-';
    n->lhs = std::move(child);
    return n;
}

NodePtr make_binary(char op, NodePtr l, NodePtr r) {
    auto n = std::make_unique<Node>();
    n->kind = Kind::Binary;
    n->op = op;
    n->lhs = std::move(l);
    n->rhs = std::move(r);
    return n;
}

NodePtr make_call(Fn fn, NodePtr arg) {
    auto n = std::make_unique<Node>();
    n->kind = Kind::Call;
    n->fn = fn;
    n->lhs = std::move(arg);
    return n;
}

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    NodePtr parse() {
        skip_ws();
        if (pos_ >= src_.size()) throw SyntaxError(pos_, "empty expression");
        NodePtr e = additive();
        skip_ws();
        if (pos_ < src_.size()) {
            throw SyntaxError(pos_, "unexpected trailing input; expected operator or end");
        }
        return e;
    }

private:
    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    NodePtr additive() {
        NodePtr e = multiplicative();
        for (;;) {
            const char c = peek();
            if (c != '+' && c != '-') return e;
            ++pos_;
            e = make_binary(c, std::move(e), multiplicative());
        }
    }

    NodePtr multiplicative() {
        NodePtr e = unary();
        for (;;) {
            const char c = peek();
            if (c != '*' && c != '/') return e;
            ++pos_;
            e = make_binary(c, std::move(e), unary());
        }
    }

    NodePtr unary() {
        if (peek() == '-') {
            ++pos_;
            return make_unary(unary());
        }
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (peek() == '^') {
            ++pos_;
            // right operand may carry a unary minus: 2^-3
            return make_binary('^', std::move(base), unary());
        }
        return base;
    }

    NodePtr primary() {
        const char c = peek();
        if (c == '(') {
            ++pos_;
            NodePtr e = additive();
            if (peek() != ')') throw SyntaxError(pos_, "expected ')'");
            ++pos_;
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return number();
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            return identifier();
        }
        throw SyntaxError(pos_, "expected number, identifier, call, '(' or unary '-'");
    }

    NodePtr number() {
        // plain decimal literals only: digits [. digits] [e|E [sign] digits]
        const std::size_t start = pos_;
        std::size_t p = pos_;
        auto digit = [this](std::size_t k) {
            return k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]));
        };
        std::size_t mantissa_digits = 0;
        while (digit(p)) ++p, ++mantissa_digits;
        if (p < src_.size() && src_[p] == '.') {
            ++p;
            while (digit(p)) ++p, ++mantissa_digits;
        }
        if (mantissa_digits == 0) throw SyntaxError(start, "malformed number");
        if (p < src_.size() && (src_[p] == 'e' || src_[p] == 'E')) {
            std::size_t q = p + 1;
            if (q < src_.size() && (src_[q] == '+' || src_[q] == '-')) ++q;
            if (!digit(q)) throw SyntaxError(p, "malformed exponent");
            while (digit(q)) ++q;
            p = q;
        }
        const std::string text(src_.substr(start, p - start));
        const double v = std::strtod(text.c_str(), nullptr);
        if (!std::isfinite(v)) throw SyntaxError(start, "number out of range");
        pos_ = p;
        return make_number(v);
    }

    NodePtr identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
            ++pos_;
        }
        const std::string_view name = src_.substr(start, pos_ - start);
        if (name == "x") return make_var(Var::X);
        if (name == "z1") return make_var(Var::Z1);
        if (name == "z2") return make_var(Var::Z2);

        Fn fn;
        if (name == "exp") fn = Fn::Exp;
        else if (name == "sin") fn = Fn::Sin;
        else if (name == "cos") fn = Fn::Cos;
        else if (name == "sqrt") fn = Fn::Sqrt;
        else if (name == "tanh") fn = Fn::Tanh;
        else throw UnknownIdentifier(start, std::string(name));

        if (peek() != '(') throw SyntaxError(pos_, "expected '(' after function name");
        ++pos_;
        NodePtr arg = additive();
        if (peek() != ')') throw SyntaxError(pos_, "expected ')'");
        ++pos_;
        return make_call(fn, std::move(arg));
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

double eval_node(const Node* n, double x, double z1, double z2) {
    switch (n->kind) {
        case Kind::Number:
            return n->number;
        case Kind::Variable:
            switch (n->var) {
                case Var::X: return x;
                case Var::Z1: return z1;
                default: return z2;
            }
        case Kind::Unary:
            return -eval_node(n->lhs.get(), x, z1, z2);
        case Kind::Binary: {
            const double l = eval_node(n->lhs.get(), x, z1, z2);
            const double r = eval_node(n->rhs.get(), x, z1, z2);
            double v = 0.0;
            switch (n->op) {
                case '+': v = l + r; break;
                case '-': v = l - r; break;
                case '*': v = l * r; break;
                case '/':
                    if (r == 0.0) throw EvalError("division by zero");
                    v = l / r;
                    break;
                default: v = std::pow(l, r); break;
            }
            if (!std::isfinite(v)) throw EvalError("non-finite result of operator");
            return v;
        }
        default: {
            const double a = eval_node(n->lhs.get(), x, z1, z2);
            double v = 0.0;
            switch (n->fn) {
                case Fn::Exp: v = std::exp(a); break;
                case Fn::Sin: v = std::sin(a); break;
                case Fn::Cos: v = std::cos(a); break;
                case Fn::Sqrt:
                    if (a < 0.0) throw EvalError("square root of a negative value");
                    v = std::sqrt(a);
                    break;
                default: v = std::tanh(a); break;
            }
            if (!std::isfinite(v)) throw EvalError("non-finite result of call");
            return v;
        }
    }
}

// precedence levels for printing: additive 1, multiplicative 2, unary 3, power 4
int precedence(const Node* n) {
    switch (n->kind) {
        case Kind::Binary:
            if (n->op == '+' || n->op == '-') return 1;
            if (n->op == '*' || n->op == '/') return 2;
            return 4;
        case Kind::Unary:
            return 3;
        default:
            return 5;
    }
}

void print_node(const Node* n, std::string& out);

void print_child(const Node* child, int min_prec, std::string& out) {
    if (precedence(child) < min_prec) {
        out += '(';
        print_node(child, out);
        out += ')';
    } else {
        print_node(child, out);
    }
}

void print_node(const Node* n, std::string& out) {
    switch (n->kind) {
        case Kind::Number: {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.17g", n->number);
            out += buf;
            break;
        }
        case Kind::Variable:
            out += n->var == Var::X ? "x" : (n->var == Var::Z1 ? "z1" : "z2");
            break;
        case Kind::Unary:
            out += '-';
            // the operand of unary minus must bind at least as tight as unary
            print_child(n->lhs.get(), 4, out);
            break;
        case Kind::Binary: {
            const int prec = precedence(n);
            if (n->op == '^') {
                // left operand must be primary-like; right may be unary
                print_child(n->lhs.get(), 5, out);
                out += '^';
                print_child(n->rhs.get(), 3, out);
            } else {
                print_child(n->lhs.get(), prec, out);
                out += n->op;
                // - and / are left-associative: the right operand needs
                // strictly higher precedence
                print_child(n->rhs.get(), prec + 1, out);
            }
            break;
        }
        default: {
            switch (n->fn) {
                case Fn::Exp: out += "exp("; break;
                case Fn::Sin: out += "sin("; break;
                case Fn::Cos: out += "cos("; break;
                case Fn::Sqrt: out += "sqrt("; break;
                default: out += "tanh("; break;
            }
            print_node(n->lhs.get(), out);
            out += ')';
            break;
        }
    }
}

bool equal_nodes(const Node* a, const Node* b) {
    if (a == nullptr || b == nullptr) return a == b;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case Kind::Number: return a->number == b->number;
        case Kind::Variable: return a->var == b->var;
        case Kind::Unary: return equal_nodes(a->lhs.get(), b->lhs.get());
        case Kind::Binary:
            return a->op == b->op && equal_nodes(a->lhs.get(), b->lhs.get()) &&
                   equal_nodes(a->rhs.get(), b->rhs.get());
        default:
            return a->fn == b->fn && equal_nodes(a->lhs.get(), b->lhs.get());
    }
}

bool node_uses_z(const Node* n) {
    if (n == nullptr) return false;
    if (n->kind == Kind::Variable) return n->var != Var::X;
    return node_uses_z(n->lhs.get()) || node_uses_z(n->rhs.get());
}

}  // namespace

Expression::NodePtr Expression::clone(const NodePtr& n) {
    if (!n) return nullptr;
    auto c = std::make_unique<Node>();
    c->kind = n->kind;
    c->number = n->number;
    c->var = n->var;
    c->op = n->op;
    c->fn = n->fn;
    c->lhs = clone(n->lhs);
    c->rhs = clone(n->rhs);
    return c;
}

double Expression::eval(double x, double z1, double z2) const {
    if (!root_) throw EvalError("empty expression");
    return eval_node(root_.get(), x, z1, z2);
}

std::string Expression::print() const {
    std::string out;
    if (root_) print_node(root_.get(), out);
    return out;
}

bool Expression::equals(const Expression& o) const {
    return equal_nodes(root_.get(), o.root_.get());
}

bool Expression::uses_z() const { return node_uses_z(root_.get()); }

Expression parse_expression(std::string_view src) {
    Parser p(src);
    return Expression(p.parse());
}

}  // namespace backstep
