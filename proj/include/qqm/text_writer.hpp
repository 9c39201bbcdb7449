#pragma once

/**
 * @file text_writer.hpp
 * @brief Canonical `.mag` text rendering (no validation).
 *
 * Canonical layout: header, notes, then constants, data, lookups,
 * auxiliaries, stocks, links and scenarios, each section sorted by id.
 * Numbers use the shortest text that round-trips. Parentheses are emitted
 * only where precedence requires them.
 */

#include "qqm/expression.hpp"
#include "qqm/model.hpp"
#include "qqm/number.hpp"
#include "qqm/scenario.hpp"

#include <algorithm>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace qqm {

struct WriteOptions {
    bool include_docs = true; ///< doc strings and notes
};

namespace detail {

enum WritePrec { w_or = 1, w_and, w_not, w_cmp, w_add, w_mul, w_unary, w_pow, w_atom };

inline int binary_prec(BinaryOp op) {
    switch (op) {
    case BinaryOp::logical_or: return w_or;
    case BinaryOp::logical_and: return w_and;
    case BinaryOp::lt:
    case BinaryOp::le:
    case BinaryOp::gt:
    case BinaryOp::ge:
    case BinaryOp::eq: return w_cmp;
    case BinaryOp::add:
    case BinaryOp::sub: return w_add;
    case BinaryOp::mul:
    case BinaryOp::div: return w_mul;
    case BinaryOp::pow: return w_pow;
    }
    return w_atom;
}

inline std::string_view binary_symbol(BinaryOp op) {
    switch (op) {
    case BinaryOp::add: return " + ";
    case BinaryOp::sub: return " - ";
    case BinaryOp::mul: return " * ";
    case BinaryOp::div: return " / ";
    case BinaryOp::pow: return "^";
    case BinaryOp::lt: return " < ";
    case BinaryOp::le: return " <= ";
    case BinaryOp::gt: return " > ";
    case BinaryOp::ge: return " >= ";
    case BinaryOp::eq: return " == ";
    case BinaryOp::logical_and: return " and ";
    case BinaryOp::logical_or: return " or ";
    }
    return " ? ";
}

inline int node_prec(const Expr& e) {
    if (const auto* l = std::get_if<Literal>(&e.node)) return std::signbit(l->value) ? w_unary : w_atom;
    if (const auto* u = std::get_if<Unary>(&e.node)) return u->op == UnaryOp::neg ? w_unary : w_not;
    if (const auto* b = std::get_if<Binary>(&e.node)) return binary_prec(b->op);
    return w_atom;
}

inline void write_expr(std::string& out, const Expr& e, int min_prec) {
    const int p = node_prec(e);
    const bool parens = p < min_prec;
    if (parens) out += '(';
    if (const auto* l = std::get_if<Literal>(&e.node)) {
        out += format_number(l->value);
    } else if (const auto* r = std::get_if<Ref>(&e.node)) {
        out += r->id;
    } else if (const auto* u = std::get_if<Unary>(&e.node)) {
        if (u->op == UnaryOp::neg) {
            out += '-';
            write_expr(out, *u->operand, w_unary);
        } else {
            out += "not ";
            write_expr(out, *u->operand, w_not);
        }
    } else if (const auto* b = std::get_if<Binary>(&e.node)) {
        int lhs_min = p;
        int rhs_min = p + 1;
        if (b->op == BinaryOp::pow) {
            lhs_min = w_atom;
            rhs_min = w_unary;
        } else if (p == w_cmp) {
            lhs_min = p + 1;
        }
        write_expr(out, *b->lhs, lhs_min);
        out += binary_symbol(b->op);
        write_expr(out, *b->rhs, rhs_min);
    } else {
        const auto& c = std::get<Call>(e.node);
        out += info(c.fn).name;
        out += '(';
        bool first = true;
        if (c.fn == Builtin::lookup) {
            out += c.table;
            first = false;
        }
        for (const auto& a : c.args) {
            if (!first) out += ", ";
            first = false;
            write_expr(out, *a, 0);
        }
        out += ')';
    }
    if (parens) out += ')';
}

inline std::string quote(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        default: out += c;
        }
    }
    out += '"';
    return out;
}

template <class Elem>
void write_common(std::string& out, const Elem& e, const WriteOptions& opt) {
    if (!e.name.empty()) out += " name " + quote(e.name);
    if (!e.unit.empty()) out += " unit " + quote(e.unit);
    if (e.provenance) {
        out += " source ";
        out += to_string(e.provenance->tag);
        if (!e.provenance->citation.empty()) out += " " + quote(e.provenance->citation);
    }
    if (opt.include_docs && !e.doc.empty()) out += " doc " + quote(e.doc);
}

template <class T>
std::vector<const T*> sorted_by_id(const std::vector<T>& v) {
    std::vector<const T*> out;
    for (const auto& e : v) out.push_back(&e);
    std::sort(out.begin(), out.end(), [](const T* a, const T* b) { return a->id < b->id; });
    return out;
}

} // namespace detail

inline std::string write_expression(const Expr& e) {
    std::string out;
    detail::write_expr(out, e, 0);
    return out;
}

inline std::string write_expression(const ExprPtr& e) { return e ? write_expression(*e) : ""; }

inline std::string write_model(const Model& m, const WriteOptions& opt = {}) {
    using detail::quote;
    std::string out;
    const auto& ts = m.time_spec;
    out += "model " + quote(m.id) + " { time " + format_number(ts.t_start) + " .. " +
           format_number(ts.t_stop) + " dt " + format_number(ts.dt);
    if (!ts.time_unit.empty()) out += " unit " + quote(ts.time_unit);
    if (!m.name.empty()) out += " name " + quote(m.name);
    out += " }\n";
    if (opt.include_docs && !m.notes.empty()) {
        std::size_t start = 0;
        for (;;) {
            auto nl = m.notes.find('\n', start);
            out += "notes " + quote(std::string_view(m.notes).substr(start, nl - start)) + "\n";
            if (nl == std::string::npos) break;
            start = nl + 1;
        }
    }

    auto section = [&](auto&& body) {
        std::string s;
        body(s);
        if (!s.empty()) out += "\n" + s;
    };
    auto vars = detail::sorted_by_id(m.variables);

    section([&](std::string& s) {
        for (const auto* v : vars) {
            if (v->kind != VariableKind::constant) continue;
            s += "const " + v->id + " = " + write_expression(v->expression);
            detail::write_common(s, *v, opt);
            if (v->slider)
                s += " slider " + format_number(v->slider->min) + " .. " +
                     format_number(v->slider->max);
            s += "\n";
        }
    });
    section([&](std::string& s) {
        for (const auto* v : vars) {
            if (v->kind != VariableKind::exogenous) continue;
            s += "data " + v->id;
            auto it = m.data_bindings.find(v->id);
            if (it != m.data_bindings.end()) {
                const auto& b = it->second;
                s += " from " + quote(b.path) + " column " + quote(b.column);
                if (b.interp != Interp::linear) s += " interp " + std::string(to_string(b.interp));
                if (b.extrapolation != Extrapolation::error)
                    s += " extrapolate " + std::string(to_string(b.extrapolation));
            }
            detail::write_common(s, *v, opt);
            s += "\n";
        }
    });
    section([&](std::string& s) {
        for (const auto* t : detail::sorted_by_id(m.lookups)) {
            s += "lookup " + t->id + " = [";
            for (std::size_t i = 0; i < t->points.size(); ++i) {
                if (i) s += ", ";
                s += "(" + format_number(t->points[i].x) + ", " + format_number(t->points[i].y) + ")";
            }
            s += "] interp linear";
            if (opt.include_docs && !t->doc.empty()) s += " doc " + quote(t->doc);
            s += "\n";
        }
    });
    section([&](std::string& s) {
        for (const auto* v : vars) {
            if (v->kind != VariableKind::auxiliary) continue;
            s += "aux " + v->id;
            if (v->expression) s += " = " + write_expression(v->expression);
            detail::write_common(s, *v, opt);
            s += "\n";
        }
    });
    section([&](std::string& s) {
        for (const auto* st : detail::sorted_by_id(m.stocks)) {
            s += "stock " + st->id + " init " + write_expression(st->initial);
            auto list = [&](std::string_view kw, const std::vector<std::string>& ids) {
                if (ids.empty()) return;
                s += " ";
                s += kw;
                s += " ";
                for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? ", " : "") + ids[i];
            };
            list("inflow", st->inflows);
            list("outflow", st->outflows);
            if (st->non_negative) s += " non_negative";
            detail::write_common(s, *st, opt);
            s += "\n";
        }
    });
    section([&](std::string& s) {
        auto links = m.links;
        std::sort(links.begin(), links.end(), [](const InfluenceLink& a, const InfluenceLink& b) {
            return std::tie(a.from, a.to) < std::tie(b.from, b.to);
        });
        for (const auto& l : links) {
            s += "link " + l.from + " -> " + l.to;
            if (l.polarity != Polarity::unspecified) s += " polarity " + std::string(to_string(l.polarity));
            if (l.delayed) s += " delayed";
            if (l.effect_order != EffectOrder::untagged)
                s += " order " + std::string(to_string(l.effect_order));
            s += "\n";
        }
    });
    return out;
}

inline std::string write_scenario(const Scenario& sc) {
    std::string out = "scenario " + sc.name;
    if (!sc.description.empty()) out += " " + detail::quote(sc.description);
    if (sc.empty()) return out + " {}\n";
    out += " {\n";
    for (const auto& [id, v] : sc.overrides) out += "  override " + id + " = " + format_number(v) + "\n";
    auto ivs = sc.interventions;
    std::stable_sort(ivs.begin(), ivs.end(), [](const Intervention& a, const Intervention& b) {
        return std::tie(a.at_time, a.target) < std::tie(b.at_time, b.target);
    });
    for (const auto& iv : ivs) {
        out += "  at " + format_number(iv.at_time) + " ";
        if (iv.action == InterventionAction::set)
            out += "set " + iv.target + " = " + format_number(iv.value) + "\n";
        else
            out += "scale " + iv.target + " by " + format_number(iv.value) + "\n";
    }
    return out + "}\n";
}

inline std::string write_document(const ModelDocument& doc, const WriteOptions& opt = {}) {
    std::string out = write_model(doc.model, opt);
    std::vector<const Scenario*> scs;
    for (const auto& s : doc.scenarios) scs.push_back(&s);
    std::sort(scs.begin(), scs.end(),
              [](const Scenario* a, const Scenario* b) { return a->name < b->name; });
    if (!scs.empty()) out += "\n";
    for (const auto* s : scs) out += write_scenario(*s);
    return out;
}

} // namespace qqm
