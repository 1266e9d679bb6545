#pragma once

#include <memory>
#include <string>
#include <string_view>

namespace backstep {

/// Arithmetic expression over x, z1, z2 with + - * / ^, unary minus and the
/// calls exp, sin, cos, sqrt, tanh. '^' is right-associative and binds
/// tighter than unary minus.
class Expression {
public:
    struct Node;
    using NodePtr = std::unique_ptr<Node>;

    enum class Kind { Number, Variable, Unary, Binary, Call };
    enum class Var { X, Z1, Z2 };
    enum class Fn { Exp, Sin, Cos, Sqrt, Tanh };

    struct Node {
        Kind kind;
        double number = 0.0;
        Var var = Var::X;
        char op = 0;  // + - * / ^ for Binary, '-' for Unary
        Fn fn = Fn::Exp;
        NodePtr lhs;
        NodePtr rhs;
    };

    Expression() = default;
    explicit Expression(NodePtr root) : root_(std::move(root)) {}
    Expression(const Expression& o) : root_(clone(o.root_)) {}
    Expression& operator=(const Expression& o) {
        root_ = clone(o.root_);
        return *this;
    }
    Expression(Expression&&) = default;
    Expression& operator=(Expression&&) = default;

    bool empty() const { return root_ == nullptr; }
    const Node* root() const { return root_.get(); }

    /// Throws EvalError on division by zero, invalid roots/powers, or any
    /// non-finite intermediate.
    double eval(double x, double z1 = 0.0, double z2 = 0.0) const;

    /// Minimal-parentheses text that re-parses to an equal tree.
    std::string print() const;

    bool equals(const Expression& o) const;

    /// Variables actually referenced.
    bool uses_z() const;

    static NodePtr clone(const NodePtr& n);

private:
    NodePtr root_;
};

/// Parses `src`; throws SyntaxError / UnknownIdentifier with byte offsets.
Expression parse_expression(std::string_view src);

}  // namespace backstep
