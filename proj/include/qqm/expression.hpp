#pragma once

/**
 * @file expression.hpp
 * @brief Immutable expression trees over element references.
 *
 * Nodes are shared and never mutated after construction, so a node address
 * identifies a call site for the lifetime of the tree (the engine keys delay
 * state on it).
 */

#include <array>
#include <bit>
#include <cstddef>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace qqm {

enum class UnaryOp { neg, logical_not };

enum class BinaryOp { add, sub, mul, div, pow, lt, le, gt, ge, eq, logical_and, logical_or };

enum class Builtin {
    min,
    max,
    clamp,
    abs,
    if_then_else,
    step,
    pulse,
    ramp,
    time,
    lookup,
    delay_fixed,
    smooth,
};

struct BuiltinInfo {
    Builtin fn;
    std::string_view name;
    int arity; ///< textual argument count (lookup counts its table id)
    bool time_dependent;
};

inline constexpr std::array<BuiltinInfo, 12> builtins{{
    {Builtin::min, "min", 2, false},
    {Builtin::max, "max", 2, false},
    {Builtin::clamp, "clamp", 3, false},
    {Builtin::abs, "abs", 1, false},
    {Builtin::if_then_else, "if_then_else", 3, false},
    {Builtin::step, "step", 2, true},
    {Builtin::pulse, "pulse", 3, true},
    {Builtin::ramp, "ramp", 2, true},
    {Builtin::time, "time", 0, true},
    {Builtin::lookup, "lookup", 2, false},
    {Builtin::delay_fixed, "delay_fixed", 3, true},
    {Builtin::smooth, "smooth", 3, true},
}};

inline const BuiltinInfo& info(Builtin fn) { return builtins[static_cast<std::size_t>(fn)]; }

inline std::optional<Builtin> find_builtin(std::string_view name) {
    for (const auto& b : builtins)
        if (b.name == name) return b.fn;
    return std::nullopt;
}

inline bool is_delay_family(Builtin fn) { return fn == Builtin::delay_fixed || fn == Builtin::smooth; }

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Literal {
    double value;
};

struct Ref {
    std::string id;
};

struct Unary {
    UnaryOp op;
    ExprPtr operand;
};

struct Binary {
    BinaryOp op;
    ExprPtr lhs;
    ExprPtr rhs;
};

/// Builtin call. For lookup, `table` holds the table id and `args` the single argument.
struct Call {
    Builtin fn;
    std::vector<ExprPtr> args;
    std::string table;
};

struct Expr {
    std::variant<Literal, Ref, Unary, Binary, Call> node;
};

// construction helpers

inline ExprPtr lit(double v) { return std::make_shared<const Expr>(Expr{Literal{v}}); }
inline ExprPtr ref(std::string id) { return std::make_shared<const Expr>(Expr{Ref{std::move(id)}}); }
inline ExprPtr unary(UnaryOp op, ExprPtr e) {
    return std::make_shared<const Expr>(Expr{Unary{op, std::move(e)}});
}
inline ExprPtr binary(BinaryOp op, ExprPtr a, ExprPtr b) {
    return std::make_shared<const Expr>(Expr{Binary{op, std::move(a), std::move(b)}});
}
inline ExprPtr call(Builtin fn, std::vector<ExprPtr> args, std::string table = {}) {
    return std::make_shared<const Expr>(Expr{Call{fn, std::move(args), std::move(table)}});
}

/// Structural equality. Literals compare by bit pattern so 0.0 and -0.0 differ.
inline bool equal(const ExprPtr& a, const ExprPtr& b);

inline bool equal(const Expr& a, const Expr& b) {
    if (a.node.index() != b.node.index()) return false;
    return std::visit(
        [&](const auto& x) -> bool {
            using T = std::decay_t<decltype(x)>;
            const auto& y = std::get<T>(b.node);
            if constexpr (std::is_same_v<T, Literal>) {
                return std::bit_cast<unsigned long long>(x.value) ==
                       std::bit_cast<unsigned long long>(y.value);
            } else if constexpr (std::is_same_v<T, Ref>) {
                return x.id == y.id;
            } else if constexpr (std::is_same_v<T, Unary>) {
                return x.op == y.op && equal(x.operand, y.operand);
            } else if constexpr (std::is_same_v<T, Binary>) {
                return x.op == y.op && equal(x.lhs, y.lhs) && equal(x.rhs, y.rhs);
            } else {
                if (x.fn != y.fn || x.table != y.table || x.args.size() != y.args.size())
                    return false;
                for (std::size_t i = 0; i < x.args.size(); ++i)
                    if (!equal(x.args[i], y.args[i])) return false;
                return true;
            }
        },
        a.node);
}

inline bool equal(const ExprPtr& a, const ExprPtr& b) {
    if (!a || !b) return !a && !b;
    return a == b || equal(*a, *b);
}

/// Pre-order traversal; `fn(const Expr&, bool inside_delay_input)`.
/// The flag is true for nodes under the first argument of delay_fixed/smooth.
template <class Fn>
void visit_nodes(const ExprPtr& e, Fn&& fn, bool in_delay = false) {
    if (!e) return;
    fn(*e, in_delay);
    if (const auto* u = std::get_if<Unary>(&e->node)) {
        visit_nodes(u->operand, fn, in_delay);
    } else if (const auto* b = std::get_if<Binary>(&e->node)) {
        visit_nodes(b->lhs, fn, in_delay);
        visit_nodes(b->rhs, fn, in_delay);
    } else if (const auto* c = std::get_if<Call>(&e->node)) {
        for (std::size_t i = 0; i < c->args.size(); ++i)
            visit_nodes(c->args[i], fn, in_delay || (is_delay_family(c->fn) && i == 0));
    }
}

struct References {
    std::set<std::string> instantaneous; ///< refs outside any delay-family input
    std::set<std::string> lagged;        ///< refs only reached through a delay-family input
    std::set<std::string> tables;        ///< lookup tables used
};

inline References collect_references(const ExprPtr& e) {
    References r;
    std::set<std::string> lagged_all;
    visit_nodes(e, [&](const Expr& node, bool in_delay) {
        if (const auto* rf = std::get_if<Ref>(&node.node)) {
            (in_delay ? lagged_all : r.instantaneous).insert(rf->id);
        } else if (const auto* c = std::get_if<Call>(&node.node)) {
            if (c->fn == Builtin::lookup) r.tables.insert(c->table);
        }
    });
    for (const auto& id : lagged_all)
        if (!r.instantaneous.count(id)) r.lagged.insert(id);
    return r;
}

inline std::set<std::string> all_references(const ExprPtr& e) {
    std::set<std::string> out;
    visit_nodes(e, [&](const Expr& node, bool) {
        if (const auto* rf = std::get_if<Ref>(&node.node)) out.insert(rf->id);
    });
    return out;
}

inline bool uses_time_builtins(const ExprPtr& e) {
    bool found = false;
    visit_nodes(e, [&](const Expr& node, bool) {
        if (const auto* c = std::get_if<Call>(&node.node))
            if (info(c->fn).time_dependent) found = true;
    });
    return found;
}

/// Delay-family call nodes in pre-order.
inline std::vector<const Call*> delay_calls(const ExprPtr& e) {
    std::vector<const Call*> out;
    visit_nodes(e, [&](const Expr& node, bool) {
        if (const auto* c = std::get_if<Call>(&node.node))
            if (is_delay_family(c->fn)) out.push_back(c);
    });
    return out;
}

} // namespace qqm
