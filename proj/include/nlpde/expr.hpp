#pragma once

#include <memory>
#include <string>
#include <vector>

#include "nlpde/errors.hpp"

namespace nlpde {

/// Variable bindings for expression evaluation. Reserved identifiers:
/// t, s, y1..yd; jet identifiers: u, p1..pd, q11..qdd (local value, first,
/// second derivatives), c111.. / e1111.. for third/fourth order (r=2), and
/// the diagonal counterparts prefixed with n (n, np1.., nq11.., ...).
class Bindings {
public:
    void bind(const std::string& name, double value) {
        for (auto& kv : vars_)
            if (kv.first == name) { kv.second = value; return; }
        vars_.emplace_back(name, value);
    }

    const double* find(const std::string& name) const {
        for (const auto& kv : vars_)
            if (kv.first == name) return &kv.second;
        return nullptr;
    }

    double get(const std::string& name) const {
        const double* p = find(name);
        if (!p) fail(ErrorCode::UnboundIdentifier, "expr::eval", "unbound identifier '" + name + "'");
        return *p;
    }

    std::string snapshot() const;

private:
    std::vector<std::pair<std::string, double>> vars_;
};

/// Immutable arithmetic expression: literals, variables, unary minus,
/// + - * / ^, and {sin, cos, exp, log, tanh, sqrt, abs}.
class Expression {
public:
    struct Node;
    using NodePtr = std::shared_ptr<const Node>;

    Expression() = default;
    explicit Expression(NodePtr root) : root_(std::move(root)) {}

    bool empty() const { return root_ == nullptr; }
    double eval(const Bindings& b) const;
    std::string print() const;
    bool structurally_equal(const Expression& other) const;

    const NodePtr& root() const { return root_; }

private:
    NodePtr root_;
};

/// Parse UTF-8 text (<= 64 KiB) into an AST. Precedence:
/// ^ (right-assoc) > unary - > * / > + -. Whitespace-insensitive.
Expression parse(const std::string& text);

/// Central-difference d/dvar with step eps = cbrt(machine eps) * max(|x|, scale).
double derivative_fd(const Expression& e, const std::string& var, Bindings b, double scale = 1.0);

/// Nested central difference d^2/(dvar1 dvar2); the outer step is scaled
/// by sqrt(eps) relative to the first-order step.
double second_derivative_fd(const Expression& e, const std::string& var1,
                            const std::string& var2, Bindings b, double scale = 1.0);

} // namespace nlpde
