#pragma once

/**
 * @file eval.hpp
 * @brief Pure expression evaluator.
 *
 * Comparisons and logical operators yield 1.0 / 0.0; any nonzero value is
 * true. if_then_else only evaluates the selected branch.
 */

#include "qqm/data.hpp"
#include "qqm/diagnostic.hpp"
#include "qqm/expression.hpp"
#include "qqm/number.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace qqm {

/// Read access to the current output of delay_fixed / smooth call sites.
class DelayStateView {
public:
    virtual ~DelayStateView() = default;
    virtual double output(const Call& site) const = 0;
};

/// Values visible to an expression at one instant.
struct Env {
    std::map<std::string, double, std::less<>> values;
    const std::vector<LookupTable>* tables = nullptr;

    const LookupTable* table(std::string_view id) const {
        if (!tables) return nullptr;
        for (const auto& t : *tables)
            if (t.id == id) return &t;
        return nullptr;
    }
};

namespace detail {

inline bool truthy(double v) { return v != 0.0; }
inline double boolean(bool b) { return b ? 1.0 : 0.0; }

inline double checked_pow(double base, double exponent) {
    if (base < 0.0 && std::trunc(exponent) != exponent)
        throw Error(make_error("E-DOMAIN", "negative base " + format_number(base) +
                                               " raised to non-integer exponent " +
                                               format_number(exponent)));
    if (base == 0.0 && exponent < 0.0)
        throw Error(make_error("E-DIV-ZERO", "zero raised to a negative exponent"));
    double r = std::pow(base, exponent);
    if (!std::isfinite(r)) throw Error(make_error("E-DOMAIN", "pow overflow"));
    return r;
}

} // namespace detail

inline double eval_expression(const Expr& e, const Env& env, double t,
                              const DelayStateView* state = nullptr);

inline double eval_expression(const ExprPtr& e, const Env& env, double t,
                              const DelayStateView* state = nullptr) {
    return eval_expression(*e, env, t, state);
}

inline double eval_expression(const Expr& e, const Env& env, double t,
                              const DelayStateView* state) {
    using detail::boolean;
    using detail::truthy;
    auto ev = [&](const ExprPtr& x) { return eval_expression(*x, env, t, state); };

    if (const auto* l = std::get_if<Literal>(&e.node)) return l->value;

    if (const auto* r = std::get_if<Ref>(&e.node)) {
        auto it = env.values.find(r->id);
        if (it == env.values.end())
            throw Error(make_error("E-UNKNOWN-REF", "no value for '" + r->id + "'", r->id));
        return it->second;
    }

    if (const auto* u = std::get_if<Unary>(&e.node)) {
        double v = ev(u->operand);
        return u->op == UnaryOp::neg ? -v : boolean(!truthy(v));
    }

    if (const auto* b = std::get_if<Binary>(&e.node)) {
        if (b->op == BinaryOp::logical_and) return boolean(truthy(ev(b->lhs)) && truthy(ev(b->rhs)));
        if (b->op == BinaryOp::logical_or) return boolean(truthy(ev(b->lhs)) || truthy(ev(b->rhs)));
        double x = ev(b->lhs);
        double y = ev(b->rhs);
        switch (b->op) {
        case BinaryOp::add: return x + y;
        case BinaryOp::sub: return x - y;
        case BinaryOp::mul: return x * y;
        case BinaryOp::div:
            if (y == 0.0) throw Error(make_error("E-DIV-ZERO", "division by zero"));
            return x / y;
        case BinaryOp::pow: return detail::checked_pow(x, y);
        case BinaryOp::lt: return boolean(x < y);
        case BinaryOp::le: return boolean(x <= y);
        case BinaryOp::gt: return boolean(x > y);
        case BinaryOp::ge: return boolean(x >= y);
        case BinaryOp::eq: return boolean(x == y);
        default: break;
        }
        return 0.0;
    }

    const auto& c = std::get<Call>(e.node);
    switch (c.fn) {
    case Builtin::min: return std::min(ev(c.args[0]), ev(c.args[1]));
    case Builtin::max: return std::max(ev(c.args[0]), ev(c.args[1]));
    case Builtin::clamp: {
        double x = ev(c.args[0]);
        double lo = ev(c.args[1]);
        double hi = ev(c.args[2]);
        return std::min(std::max(x, lo), hi);
    }
    case Builtin::abs: return std::abs(ev(c.args[0]));
    case Builtin::if_then_else: return truthy(ev(c.args[0])) ? ev(c.args[1]) : ev(c.args[2]);
    case Builtin::step: {
        double h = ev(c.args[0]);
        double t0 = ev(c.args[1]);
        return t >= t0 ? h : 0.0;
    }
    case Builtin::pulse: {
        double h = ev(c.args[0]);
        double t0 = ev(c.args[1]);
        double w = ev(c.args[2]);
        return (t >= t0 && t < t0 + w) ? h : 0.0;
    }
    case Builtin::ramp: {
        double s = ev(c.args[0]);
        double t0 = ev(c.args[1]);
        return s * std::max(0.0, t - t0);
    }
    case Builtin::time: return t;
    case Builtin::lookup: {
        const auto* table = env.table(c.table);
        if (!table)
            throw Error(make_error("E-UNKNOWN-REF", "no lookup table '" + c.table + "'", c.table));
        return lookup_eval(*table, ev(c.args[0]));
    }
    case Builtin::delay_fixed:
    case Builtin::smooth:
        if (!state)
            throw Error(make_error("E-INTERNAL", std::string(info(c.fn).name) +
                                                     " evaluated without delay state"));
        return state->output(c);
    }
    return 0.0;
}

} // namespace qqm
