#include "support.hpp"

#include "qqm/expression.hpp"
#include "qqm/parser.hpp"

#include <catch_amalgamated.hpp>

using namespace qqm;
using qqm_test::expr;

TEST_CASE("builtin table is consistent with name lookup", "[expression]") {
    for (const auto& b : builtins) {
        auto found = find_builtin(b.name);
        REQUIRE(found);
        CHECK(*found == b.fn);
        CHECK(info(b.fn).arity == b.arity);
    }
    CHECK_FALSE(find_builtin("sqrt"));
    CHECK(is_delay_family(Builtin::smooth));
    CHECK(is_delay_family(Builtin::delay_fixed));
    CHECK_FALSE(is_delay_family(Builtin::step));
}

TEST_CASE("precedence: a + 2*b is a + (2*b)", "[expression]") {
    auto e = expr("a + 2*b");
    auto want = binary(BinaryOp::add, ref("a"), binary(BinaryOp::mul, lit(2), ref("b")));
    CHECK(equal(e, want));
}

TEST_CASE("precedence: -2^2 is -(2^2)", "[expression]") {
    auto e = expr("-2^2");
    auto want = unary(UnaryOp::neg, binary(BinaryOp::pow, lit(2), lit(2)));
    CHECK(equal(e, want));
}

TEST_CASE("power is right associative and takes a unary exponent", "[expression]") {
    CHECK(equal(expr("a^b^c"), binary(BinaryOp::pow, ref("a"), binary(BinaryOp::pow, ref("b"), ref("c")))));
    CHECK(equal(expr("a^-b"), binary(BinaryOp::pow, ref("a"), unary(UnaryOp::neg, ref("b")))));
}

TEST_CASE("logical operators bind looser than comparisons", "[expression]") {
    auto e = expr("a < b and not c or d");
    auto want = binary(BinaryOp::logical_or,
                       binary(BinaryOp::logical_and, binary(BinaryOp::lt, ref("a"), ref("b")),
                              unary(UnaryOp::logical_not, ref("c"))),
                       ref("d"));
    CHECK(equal(e, want));
}

TEST_CASE("comparisons do not chain", "[expression]") {
    auto p = parse_expression("a < b < c");
    CHECK_FALSE(p.expr);
    CHECK(has_code(p.diagnostics, "E-SYNTAX"));
}

TEST_CASE("lookup stores its table id", "[expression]") {
    auto e = expr("lookup(curve, x + 1)");
    const auto& c = std::get<Call>(e->node);
    CHECK(c.fn == Builtin::lookup);
    CHECK(c.table == "curve");
    REQUIRE(c.args.size() == 1);
}

TEST_CASE("wrong arity is reported at the call", "[expression]") {
    auto p = parse_expression("1 + min(1)");
    CHECK_FALSE(p.expr);
    REQUIRE(has_code(p.diagnostics, "E-ARITY"));
    const auto& d = p.diagnostics.front();
    REQUIRE(d.span);
    CHECK(d.span->column == 5);
}

TEST_CASE("equality compares literals bitwise", "[expression]") {
    CHECK(equal(lit(0.1), lit(0.1)));
    CHECK_FALSE(equal(lit(0.0), lit(-0.0)));
    CHECK_FALSE(equal(ref("a"), ref("b")));
    CHECK(equal(nullptr, nullptr));
    CHECK_FALSE(equal(lit(1), nullptr));
}

TEST_CASE("references inside delays are lagged unless also used directly", "[expression]") {
    auto r = collect_references(expr("smooth(a, tau, 0) + delay_fixed(b, 2, c) + b + lookup(t, d)"));
    CHECK(r.lagged == std::set<std::string>{"a"});
    CHECK(r.instantaneous == std::set<std::string>{"b", "c", "d", "tau"});
    CHECK(r.tables == std::set<std::string>{"t"});
    CHECK(all_references(expr("smooth(a, tau, 0)")) == std::set<std::string>{"a", "tau"});
}

TEST_CASE("time-dependent builtins are detected", "[expression]") {
    CHECK(uses_time_builtins(expr("1 + step(1, 2)")));
    CHECK(uses_time_builtins(expr("time()")));
    CHECK_FALSE(uses_time_builtins(expr("min(1, abs(-2))")));
    CHECK(delay_calls(expr("smooth(x, 1, 0) * delay_fixed(y, 1, 0)")).size() == 2);
}
