#include <doctest.h>

#include <cmath>
#include <cstring>
#include <functional>

#include "nlpde/expr.hpp"

using namespace nlpde;

TEST_SUITE_BEGIN("expr");

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::InvalidParameter;
}

double eval1(const std::string& text, const Bindings& b) { return parse(text).eval(b); }

} // namespace

TEST_CASE("parse handles two-token jet sums and whitespace") {
    Bindings b;
    b.bind("q11", 2.0);
    b.bind("nq11", 3.0);
    CHECK(eval1("q11 + nq11", b) == 5.0);
    CHECK(eval1("  q11+nq11  ", b) == 5.0);
}

TEST_CASE("trig identity holds to 1e-15") {
    for (double y : {0.0, 0.3, 1.7, -2.5, 6.1}) {
        Bindings b;
        b.bind("y1", y);
        CHECK(std::fabs(eval1("sin(y1)^2 + cos(y1)^2", b) - 1.0) <= 1e-15);
    }
}

TEST_CASE("precedence: ^ right-assoc above unary minus above * / above + -") {
    Bindings b;
    CHECK(eval1("2^3^2", b) == 512.0);       // right-assoc: 2^(3^2)
    CHECK(eval1("-2^2", b) == -4.0);         // ^ binds tighter than unary -
    CHECK(eval1("2+3*4", b) == 14.0);
    CHECK(eval1("2*3^2", b) == 18.0);
    CHECK(eval1("(2+3)*4", b) == 20.0);
    CHECK(eval1("6/3/2", b) == 1.0);         // left-assoc
    CHECK(eval1("t*s", [] { Bindings bb; bb.bind("t", 0.5); bb.bind("s", 0.25); return bb; }()) ==
          0.125);
}

TEST_CASE("syntax errors carry a byte offset") {
    try {
        parse("2*+3");
        FAIL("expected SyntaxError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SyntaxError);
        CHECK(e.message().find("offset 2") != std::string::npos);
    }
    CHECK(code_of([] { parse("sinh(1)"); }) == ErrorCode::UnknownFunction);
    CHECK(code_of([] { parse("(1+2"); }) == ErrorCode::SyntaxError);
}

TEST_CASE("non-canonical second-derivative names are rejected") {
    // symmetric jets store only i <= j, so q21/nq21 must not parse
    CHECK(code_of([] { parse("q21"); }) == ErrorCode::SyntaxError);
    CHECK(code_of([] { parse("nq21"); }) == ErrorCode::SyntaxError);
    CHECK_NOTHROW(parse("q12 + nq12"));
}

TEST_CASE("eval reports unbound identifiers and domain errors with a snapshot") {
    Bindings b;
    CHECK(code_of([&] { eval1("u + 1", b); }) == ErrorCode::UnboundIdentifier);
    b.bind("u", -1.0);
    try {
        eval1("log(u)", b);
        FAIL("expected DomainError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DomainError);
        CHECK(e.message().find("u") != std::string::npos); // variable snapshot
    }
    CHECK(code_of([&] { eval1("sqrt(u)", b); }) == ErrorCode::DomainError);
}

TEST_CASE("parse-print-parse is structurally idempotent") {
    for (const char* text :
         {"q11 + nq11", "-(t*s)/2", "sin(y1)^2 + cos(y1)^2", "2^3^2", "tanh(n11)*sqrt(abs(u))"}) {
        Expression e = parse(text);
        Expression e2 = parse(e.print());
        CHECK(e.structurally_equal(e2));
        CHECK(e.print() == e2.print());
    }
}

TEST_CASE("eval is pure: identical bindings give bitwise identical values") {
    Expression e = parse("exp(sin(t)*q11) - tanh(s)/3");
    Bindings b;
    b.bind("t", 0.7);
    b.bind("s", 0.3);
    b.bind("q11", -1.2);
    double v1 = e.eval(b);
    double v2 = e.eval(b);
    CHECK(std::memcmp(&v1, &v2, sizeof v1) == 0);
}

TEST_CASE("derivative_fd matches simple analytic derivatives") {
    Bindings b;
    b.bind("q11", 0.4);
    b.bind("nq11", -0.8);
    CHECK(std::fabs(derivative_fd(parse("q11 + nq11"), "q11", b) - 1.0) <= 1e-9);
    Bindings bu;
    bu.bind("u", 3.0);
    CHECK(std::fabs(derivative_fd(parse("u^2"), "u", bu) - 6.0) <= 1e-7 * 6.0);
    // second derivative: d2/du2 of u^3 at u=2 is 12
    CHECK(second_derivative_fd(parse("u^3"), "u", "u", [] {
              Bindings x;
              x.bind("u", 2.0);
              return x;
          }()) == doctest::Approx(12.0).epsilon(1e-4));
}

TEST_SUITE_END();
