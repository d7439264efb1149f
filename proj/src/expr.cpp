#include "nlpde/expr.hpp"

#include <cctype>
#include <cfloat>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace nlpde {

std::string Bindings::snapshot() const {
    std::ostringstream os;
    os << "{";
    bool first = true;
    for (const auto& kv : vars_) {
        if (!first) os << ", ";
        os << kv.first << "=" << kv.second;
        first = false;
    }
    os << "}";
    return os.str();
}

struct Expression::Node {
    enum class Kind { Number, Var, Neg, Add, Sub, Mul, Div, Pow, Call };
    Kind kind;
    double value = 0.0;     // Number
    std::string name;       // Var / Call
    NodePtr a, b;
};

namespace {

using Node = Expression::Node;
using NodePtr = Expression::NodePtr;

NodePtr make_num(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Number;
    n->value = v;
    return n;
}

NodePtr make_node(Node::Kind k, NodePtr a, NodePtr b = nullptr, std::string name = {}) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    n->name = std::move(name);
    return n;
}

bool known_function(const std::string& f) {
    return f == "sin" || f == "cos" || f == "exp" || f == "log" || f == "tanh" ||
           f == "sqrt" || f == "abs";
}

// Jet identifiers use canonical nondecreasing digit suffixes; q21 etc. are
// rejected at parse time to mirror symmetric multi-index storage.
bool canonical_jet_suffix(const std::string& ident) {
    size_t pos = 0;
    if (ident[pos] == 'n' && ident.size() > 1 &&
        (ident[1] == 'p' || ident[1] == 'q' || ident[1] == 'c' || ident[1] == 'e'))
        pos = 1;
    char head = ident[pos];
    if (head != 'p' && head != 'q' && head != 'c' && head != 'e') return true;
    for (size_t i = pos + 1; i < ident.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(ident[i]))) return true; // not a jet name
    if (pos + 1 == ident.size()) return true;
    for (size_t i = pos + 2; i < ident.size(); ++i)
        if (ident[i] < ident[i - 1]) return false;
    return true;
}

class Parser {
public:
    explicit Parser(const std::string& text) : s_(text) {}

    NodePtr parse_all() {
        NodePtr e = parse_expr();
        skip_ws();
        if (pos_ != s_.size()) error("unexpected trailing input");
        return e;
    }

private:
    [[noreturn]] void error(const std::string& msg) const {
        fail(ErrorCode::SyntaxError, "expr::parse",
             msg + " at offset " + std::to_string(pos_));
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool peek(char c) {
        skip_ws();
        return pos_ < s_.size() && s_[pos_] == c;
    }

    bool accept(char c) {
        if (peek(c)) { ++pos_; return true; }
        return false;
    }

    NodePtr parse_expr() {
        NodePtr lhs = parse_term();
        for (;;) {
            if (accept('+')) lhs = make_node(Node::Kind::Add, lhs, parse_term());
            else if (accept('-')) lhs = make_node(Node::Kind::Sub, lhs, parse_term());
            else return lhs;
        }
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_unary();
        for (;;) {
            if (accept('*')) lhs = make_node(Node::Kind::Mul, lhs, parse_unary());
            else if (accept('/')) lhs = make_node(Node::Kind::Div, lhs, parse_unary());
            else return lhs;
        }
    }

    NodePtr parse_unary() {
        if (accept('-')) return make_node(Node::Kind::Neg, parse_unary());
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_primary();
        if (accept('^')) return make_node(Node::Kind::Pow, base, parse_unary());
        return base;
    }

    NodePtr parse_primary() {
        skip_ws();
        if (pos_ >= s_.size()) error("unexpected end of input");
        char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = parse_expr();
            if (!accept(')')) error("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
        error(std::string("unexpected character '") + c + "'");
    }

    NodePtr parse_number() {
        size_t start = pos_;
        while (pos_ < s_.size() &&
               (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.'))
            ++pos_;
        // exponent part
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            size_t save = pos_;
            ++pos_;
            if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
            if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            } else {
                pos_ = save;
            }
        }
        try {
            size_t used = 0;
            double v = std::stod(s_.substr(start, pos_ - start), &used);
            if (used != pos_ - start) { pos_ = start; error("malformed number"); }
            return make_num(v);
        } catch (const std::exception&) {
            pos_ = start;
            error("malformed number");
        }
    }

    NodePtr parse_ident() {
        size_t start = pos_;
        while (pos_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
            ++pos_;
        std::string ident = s_.substr(start, pos_ - start);
        if (peek('(')) {
            if (!known_function(ident))
                fail(ErrorCode::UnknownFunction, "expr::parse",
                     "unknown function '" + ident + "' at offset " + std::to_string(start));
            ++pos_;
            NodePtr arg = parse_expr();
            if (!accept(')')) error("expected ')' after function argument");
            return make_node(Node::Kind::Call, arg, nullptr, ident);
        }
        if (!canonical_jet_suffix(ident)) {
            pos_ = start;
            error("non-canonical jet identifier '" + ident + "' (indices must be nondecreasing)");
        }
        return make_node(Node::Kind::Var, nullptr, nullptr, ident);
    }

    const std::string& s_;
    size_t pos_ = 0;
};

double eval_node(const Node& n, const Bindings& b) {
    using K = Node::Kind;
    switch (n.kind) {
        case K::Number: return n.value;
        case K::Var: return b.get(n.name);
        case K::Neg: return -eval_node(*n.a, b);
        case K::Add: { double x = eval_node(*n.a, b); double y = eval_node(*n.b, b); return x + y; }
        case K::Sub: { double x = eval_node(*n.a, b); double y = eval_node(*n.b, b); return x - y; }
        case K::Mul: { double x = eval_node(*n.a, b); double y = eval_node(*n.b, b); return x * y; }
        case K::Div: { double x = eval_node(*n.a, b); double y = eval_node(*n.b, b); return x / y; }
        case K::Pow: {
            double x = eval_node(*n.a, b);
            double y = eval_node(*n.b, b);
            double v = std::pow(x, y);
            if (std::isnan(v))
                fail(ErrorCode::DomainError, "expr::eval",
                     "pow(" + std::to_string(x) + "," + std::to_string(y) +
                         ") undefined; bindings " + b.snapshot());
            return v;
        }
        case K::Call: {
            double x = eval_node(*n.a, b);
            if (n.name == "sin") return std::sin(x);
            if (n.name == "cos") return std::cos(x);
            if (n.name == "exp") return std::exp(x);
            if (n.name == "tanh") return std::tanh(x);
            if (n.name == "abs") return std::fabs(x);
            if (n.name == "log") {
                if (!(x > 0.0))
                    fail(ErrorCode::DomainError, "expr::eval",
                         "log of non-positive " + std::to_string(x) + "; bindings " + b.snapshot());
                return std::log(x);
            }
            if (n.name == "sqrt") {
                if (x < 0.0)
                    fail(ErrorCode::DomainError, "expr::eval",
                         "sqrt of negative " + std::to_string(x) + "; bindings " + b.snapshot());
                return std::sqrt(x);
            }
            fail(ErrorCode::UnknownFunction, "expr::eval", "'" + n.name + "'");
        }
    }
    fail(ErrorCode::EvaluatorFailure, "expr::eval", "corrupt AST");
}

void print_node(const Node& n, std::string& out) {
    using K = Node::Kind;
    switch (n.kind) {
        case K::Number: {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", n.value);
            out += buf;
            return;
        }
        case K::Var: out += n.name; return;
        case K::Neg:
            out += "(-";
            print_node(*n.a, out);
            out += ")";
            return;
        case K::Call:
            out += n.name;
            out += "(";
            print_node(*n.a, out);
            out += ")";
            return;
        default: {
            const char* op = n.kind == K::Add ? "+"
                           : n.kind == K::Sub ? "-"
                           : n.kind == K::Mul ? "*"
                           : n.kind == K::Div ? "/"
                                              : "^";
            out += "(";
            print_node(*n.a, out);
            out += op;
            print_node(*n.b, out);
            out += ")";
            return;
        }
    }
}

bool equal_nodes(const NodePtr& a, const NodePtr& b) {
    if (!a || !b) return a == b;
    if (a->kind != b->kind || a->name != b->name) return false;
    if (a->kind == Node::Kind::Number && a->value != b->value) return false;
    return equal_nodes(a->a, b->a) && equal_nodes(a->b, b->b);
}

} // namespace

double Expression::eval(const Bindings& b) const {
    if (!root_) fail(ErrorCode::EvaluatorFailure, "expr::eval", "empty expression");
    return eval_node(*root_, b);
}

std::string Expression::print() const {
    std::string out;
    if (root_) print_node(*root_, out);
    return out;
}

bool Expression::structurally_equal(const Expression& other) const {
    return equal_nodes(root_, other.root_);
}

Expression parse(const std::string& text) {
    if (text.size() > 64 * 1024)
        fail(ErrorCode::SyntaxError, "expr::parse", "input exceeds 64 KiB");
    Parser p(text);
    return Expression(p.parse_all());
}

double derivative_fd(const Expression& e, const std::string& var, Bindings b, double scale) {
    const double* p = b.find(var);
    if (!p) fail(ErrorCode::UnboundIdentifier, "expr::derivative_fd", "'" + var + "' not bound");
    double x = *p;
    double eps = std::cbrt(DBL_EPSILON) * std::max(std::fabs(x), scale);
    b.bind(var, x + eps);
    double up = e.eval(b);
    b.bind(var, x - eps);
    double dn = e.eval(b);
    return (up - dn) / (2.0 * eps);
}

double second_derivative_fd(const Expression& e, const std::string& var1,
                            const std::string& var2, Bindings b, double scale) {
    const double* p = b.find(var1);
    if (!p) fail(ErrorCode::UnboundIdentifier, "expr::derivative_fd", "'" + var1 + "' not bound");
    double x = *p;
    double eps1 = std::cbrt(DBL_EPSILON) * std::max(std::fabs(x), scale);
    double h = std::sqrt(eps1) * std::max(std::fabs(x), scale);
    b.bind(var1, x + h);
    double up = derivative_fd(e, var2, b, scale);
    b.bind(var1, x - h);
    double dn = derivative_fd(e, var2, b, scale);
    return (up - dn) / (2.0 * h);
}

} // namespace nlpde
