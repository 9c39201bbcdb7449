#pragma once

/**
 * @file validate.hpp
 * @brief Structural validation and content fingerprinting of models.
 */

#include "qqm/diagnostic.hpp"
#include "qqm/expression.hpp"
#include "qqm/graph.hpp"
#include "qqm/model.hpp"
#include "qqm/number.hpp"
#include "qqm/parser.hpp"
#include "qqm/text_writer.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace qqm {

namespace detail {

inline void check_expression_shape(const ExprPtr& e, const std::string& owner,
                                   std::vector<Diagnostic>& out) {
    visit_nodes(e, [&](const Expr& node, bool) {
        if (const auto* l = std::get_if<Literal>(&node.node)) {
            if (!std::isfinite(l->value))
                out.push_back(make_error("E-NONFINITE", "non-finite literal in '" + owner + "'", owner));
        } else if (const auto* c = std::get_if<Call>(&node.node)) {
            const int count = static_cast<int>(c->args.size()) + (c->fn == Builtin::lookup ? 1 : 0);
            if (count != info(c->fn).arity)
                out.push_back(make_error("E-ARITY",
                                         "'" + std::string(info(c->fn).name) + "' in '" + owner +
                                             "' takes " + std::to_string(info(c->fn).arity) +
                                             " arguments",
                                         owner));
        }
    });
}

inline void check_id(const std::string& id, std::vector<Diagnostic>& out) {
    if (is_reserved_word(id))
        out.push_back(make_error("E-RESERVED-ID", "'" + id + "' is a reserved name", id));
    else if (!is_valid_identifier(id))
        out.push_back(make_error("E-BAD-ID", "identifier '" + id + "' must be lowercase snake case", id));
}

} // namespace detail

/// All diagnostics for a candidate model. Never throws.
inline std::vector<Diagnostic> validate_model(const Model& model) {
    std::vector<Diagnostic> out;

    // time spec
    const auto& ts = model.time_spec;
    if (!std::isfinite(ts.t_start) || !std::isfinite(ts.t_stop) || !std::isfinite(ts.dt) ||
        !(ts.t_stop > ts.t_start) || !(ts.dt > 0.0)) {
        out.push_back(make_error("E-TIME-SPEC", "time spec needs t_stop > t_start and dt > 0"));
    } else {
        const double steps = (ts.t_stop - ts.t_start) / ts.dt;
        if (steps < 1.0 - 1e-9)
            out.push_back(make_error("E-TIME-SPEC", "time span shorter than one step"));
        else if (std::abs(steps - std::round(steps)) > 1e-9)
            out.push_back(make_error("E-TIME-SPEC", "(t_stop - t_start) / dt = " +
                                                        format_number(steps) +
                                                        " is not an integer step count"));
    }

    if (model.empty()) out.push_back(make_info("I-EMPTY", "model has no elements"));

    // identity
    std::map<std::string, int> seen;
    auto note_id = [&](const std::string& id) {
        if (++seen[id] == 2) out.push_back(make_error("E-DUP-ID", "duplicate id '" + id + "'", id));
        detail::check_id(id, out);
    };
    for (const auto& v : model.variables) note_id(v.id);
    for (const auto& s : model.stocks) note_id(s.id);
    for (const auto& t : model.lookups) note_id(t.id);

    std::map<std::string, const Variable*> vars;
    std::map<std::string, const Stock*> stocks;
    std::set<std::string> tables;
    for (const auto& v : model.variables) vars.emplace(v.id, &v);
    for (const auto& s : model.stocks) stocks.emplace(s.id, &s);
    for (const auto& t : model.lookups) tables.insert(t.id);

    auto is_value = [&](const std::string& id) { return vars.count(id) || stocks.count(id); };
    auto is_constant = [&](const std::string& id) {
        auto it = vars.find(id);
        return it != vars.end() && it->second->kind == VariableKind::constant;
    };
    bool unresolved = false;
    auto check_refs = [&](const ExprPtr& e, const std::string& owner) {
        auto refs = collect_references(e);
        for (const auto* set : {&refs.instantaneous, &refs.lagged})
            for (const auto& r : *set)
                if (!is_value(r)) {
                    unresolved = true;
                    out.push_back(make_error("E-UNKNOWN-REF",
                                             "'" + owner + "' references unknown '" + r + "'", owner));
                }
        for (const auto& t : refs.tables)
            if (!tables.count(t)) {
                unresolved = true;
                out.push_back(make_error("E-UNKNOWN-REF",
                                         "'" + owner + "' uses unknown lookup '" + t + "'", owner));
            }
    };
    /// Only literals and constant references, no time-dependent builtins.
    auto constant_evaluable = [&](const ExprPtr& e) {
        if (uses_time_builtins(e)) return false;
        for (const auto& r : all_references(e))
            if (!is_constant(r)) return false;
        return true;
    };

    // variables, in id order
    for (const auto& [id, v] : vars) {
        if (v->expression) {
            detail::check_expression_shape(v->expression, id, out);
            check_refs(v->expression, id);
            for (const auto* c : delay_calls(v->expression))
                for (std::size_t i = 1; i < c->args.size(); ++i)
                    if (!constant_evaluable(c->args[i]))
                        out.push_back(make_error("E-NONCONST-PARAM",
                                                 "delay/smooth parameters of '" + id +
                                                     "' must be constant-evaluable",
                                                 id));
        }
        const bool bound = model.data_bindings.count(id) > 0;
        switch (v->kind) {
        case VariableKind::constant:
            if (!v->expression)
                out.push_back(make_error("E-CONST-EXPR", "constant '" + id + "' has no value", id));
            else if (!all_references(v->expression).empty() || uses_time_builtins(v->expression))
                out.push_back(make_error("E-CONST-EXPR",
                                         "constant '" + id +
                                             "' may not reference variables or time-dependent builtins",
                                         id));
            break;
        case VariableKind::auxiliary:
            if (!v->expression)
                out.push_back(make_info("I-INCOMPLETE", "'" + id + "' has no expression yet", id));
            break;
        case VariableKind::exogenous:
            if (!bound)
                out.push_back(make_error("E-DATA-BINDING", "data variable '" + id + "' has no binding", id));
            if (v->expression)
                out.push_back(make_error("E-DATA-BINDING",
                                         "data variable '" + id + "' may not have an expression", id));
            break;
        }
        if (bound && v->kind != VariableKind::exogenous)
            out.push_back(make_error("E-DATA-BINDING",
                                     "'" + id + "' is bound to data but is not a data variable", id));
    }
    for (const auto& [id, b] : model.data_bindings)
        if (!vars.count(id))
            out.push_back(make_error("E-DATA-BINDING", "binding for unknown variable '" + id + "'", id));

    // stocks
    for (const auto& [id, s] : stocks) {
        if (!s->initial) {
            out.push_back(make_error("E-NONCONST-PARAM", "stock '" + id + "' has no initial value", id));
        } else {
            detail::check_expression_shape(s->initial, id, out);
            check_refs(s->initial, id);
            if (!constant_evaluable(s->initial))
                out.push_back(make_error("E-NONCONST-PARAM",
                                         "initial value of stock '" + id +
                                             "' may only use literals and constants",
                                         id));
        }
        for (const auto* flows : {&s->inflows, &s->outflows})
            for (const auto& f : *flows) {
                if (vars.count(f)) continue;
                unresolved = true;
                if (stocks.count(f) || tables.count(f))
                    out.push_back(make_error("E-BAD-FLOW",
                                             "flow '" + f + "' of stock '" + id + "' is not a variable", id));
                else
                    out.push_back(make_error("E-UNKNOWN-REF",
                                             "stock '" + id + "' uses unknown flow '" + f + "'", id));
            }
    }

    for (const auto& t : model.lookups) {
        auto ds = check_lookup(t);
        out.insert(out.end(), ds.begin(), ds.end());
    }

    // links versus expressions
    std::set<Edge> declared;
    for (const auto& l : model.links) {
        if (!is_value(l.from) || !is_value(l.to)) {
            out.push_back(make_error("E-UNKNOWN-REF",
                                     "link " + l.from + " -> " + l.to + " has an unknown endpoint",
                                     is_value(l.from) ? l.to : l.from));
            continue;
        }
        if (!declared.emplace(l.from, l.to).second)
            out.push_back(make_error("E-DUP-LINK", "link " + l.from + " -> " + l.to + " declared twice",
                                     l.to));
        if (l.from == l.to)
            out.push_back(make_warning("W-SELF-LINK", "link from '" + l.from + "' to itself", l.from));
    }
    auto inputs_of = [&](const std::string& id) -> std::optional<std::set<std::string>> {
        if (auto it = vars.find(id); it != vars.end()) {
            if (!it->second->expression) return std::nullopt;
            return all_references(it->second->expression);
        }
        const Stock* s = stocks.at(id);
        std::set<std::string> in(s->inflows.begin(), s->inflows.end());
        in.insert(s->outflows.begin(), s->outflows.end());
        if (s->initial) {
            auto r = all_references(s->initial);
            in.insert(r.begin(), r.end());
        }
        return in;
    };
    for (const auto& [from, to] : declared) {
        auto in = inputs_of(to);
        if (in && !in->count(from))
            out.push_back(make_warning("W-LINK-UNUSED",
                                       "link " + from + " -> " + to + " is not used by '" + to + "'", to));
    }
    std::vector<std::string> targets;
    for (const auto& [id, v] : vars) targets.push_back(id);
    for (const auto& [id, s] : stocks) targets.push_back(id);
    for (const auto& to : targets) {
        auto in = inputs_of(to);
        if (!in) continue;
        for (const auto& from : *in)
            if (is_value(from) && !is_constant(from) && !declared.count({from, to}))
                out.push_back(make_warning("W-LINK-MISSING",
                                           "'" + to + "' reads '" + from + "' but no link " + from +
                                               " -> " + to + " is declared",
                                           to));
    }

    if (!unresolved) {
        try {
            (void)evaluation_order(build_dependency_graph(model));
        } catch (const AlgebraicLoopError& e) {
            out.push_back(e.diagnostics().front());
        }
    }
    return out;
}

/// 64-bit FNV-1a over the canonical text without docs and notes, as 16 hex digits.
inline std::string model_fingerprint(const Model& model) {
    const std::string text = write_model(model, WriteOptions{false});
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace qqm
