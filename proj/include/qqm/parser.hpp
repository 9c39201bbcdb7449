#pragma once

/**
 * @file parser.hpp
 * @brief Lexer and recursive-descent parser for the `.mag` model format.
 *
 * The format is line oriented: one declaration per line. Newlines inside
 * parentheses and brackets are ignored so long expressions can wrap.
 * Scenario blocks use braces and hold one statement per line.
 *
 *   model "second_hand_platform" { time 0 .. 60 dt 1 unit "month" }
 *   const emission_factor = 0.12 unit "kgCO2/km" source literature "cite..."
 *   data  monthly_users from "users.csv" column "users"
 *   aux   items_sold = monthly_users * purchase_rate
 *   stock wardrobe init 50 inflow items_sold outflow discards non_negative
 *   link  items_sold -> transport_km polarity + order first-order
 *   lookup price_effect = [(0,1.0), (10,0.8), (30,0.5)] interp linear
 *   scenario local_filtering "nearby items first" {
 *     override avg_distance_km = 6
 *     at 12 set reuse_share = 0.4
 *     at 24 scale avg_distance_km by 0.5
 *   }
 *
 * Expression precedence, loosest first: or, and, not, comparison
 * (non-associative), + -, * /, unary minus, ^ (right associative, binds
 * tighter than unary minus so -2^2 == -(2^2)).
 */

#include "qqm/diagnostic.hpp"
#include "qqm/expression.hpp"
#include "qqm/model.hpp"
#include "qqm/number.hpp"
#include "qqm/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qqm {

struct ParseResult {
    std::optional<Model> model; ///< present iff diagnostics hold no error
    std::vector<Scenario> scenarios;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return model.has_value(); }
    ModelDocument document() const { return {*model, scenarios}; }
};

inline bool is_reserved_word(std::string_view id) {
    return find_builtin(id).has_value() || id == "and" || id == "or" || id == "not";
}

/// Lowercase snake case; non-ASCII bytes (UTF-8 letters) are accepted.
inline bool is_valid_identifier(std::string_view id) {
    if (id.empty()) return false;
    auto c0 = static_cast<unsigned char>(id.front());
    if (!(c0 == '_' || (c0 >= 'a' && c0 <= 'z') || c0 >= 0x80)) return false;
    for (unsigned char c : id)
        if (!(c == '_' || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c >= 0x80))
            return false;
    return true;
}

namespace detail {

enum class Tok { ident, number, string, punct, newline, end };

struct Token {
    Tok kind = Tok::end;
    std::string text; ///< identifier / punctuation / decoded string
    double number = 0.0;
    Span span;
    bool space_before = false;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run(std::vector<Diagnostic>& diags) {
        std::vector<Token> out;
        int depth = 0;
        bool space = true;
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == ' ' || c == '\t' || c == '\r') {
                advance();
                space = true;
                continue;
            }
            if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
                continue;
            }
            Token tok;
            tok.span = {line_, col_, 1};
            tok.space_before = space;
            space = false;
            if (c == '\n') {
                advance();
                space = true;
                if (depth > 0) continue;
                tok.kind = Tok::newline;
                out.push_back(std::move(tok));
                continue;
            }
            auto uc = static_cast<unsigned char>(c);
            if (std::isalpha(uc) || c == '_' || uc >= 0x80) {
                std::size_t start = pos_;
                while (pos_ < src_.size()) {
                    auto d = static_cast<unsigned char>(src_[pos_]);
                    if (!(std::isalnum(d) || d == '_' || d >= 0x80)) break;
                    advance();
                }
                tok.kind = Tok::ident;
                tok.text = std::string(src_.substr(start, pos_ - start));
                tok.span.length = col_ - tok.span.column;
                out.push_back(std::move(tok));
                continue;
            }
            if (std::isdigit(uc)) {
                std::size_t start = pos_;
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                    advance();
                if (pos_ + 1 < src_.size() && src_[pos_] == '.' &&
                    std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
                    advance();
                    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                        advance();
                }
                if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
                    std::size_t save = pos_;
                    int save_col = col_;
                    advance();
                    if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
                    if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                        while (pos_ < src_.size() &&
                               std::isdigit(static_cast<unsigned char>(src_[pos_])))
                            advance();
                    } else {
                        pos_ = save;
                        col_ = save_col;
                    }
                }
                tok.kind = Tok::number;
                tok.text = std::string(src_.substr(start, pos_ - start));
                tok.number = parse_number(tok.text).value_or(0.0);
                tok.span.length = col_ - tok.span.column;
                out.push_back(std::move(tok));
                continue;
            }
            if (c == '"') {
                advance();
                std::string s;
                bool closed = false;
                while (pos_ < src_.size() && src_[pos_] != '\n') {
                    char d = src_[pos_];
                    if (d == '"') {
                        advance();
                        closed = true;
                        break;
                    }
                    if (d == '\\' && pos_ + 1 < src_.size()) {
                        advance();
                        char e = src_[pos_];
                        s += e == 'n' ? '\n' : e == 't' ? '\t' : e;
                        advance();
                        continue;
                    }
                    s += d;
                    advance();
                }
                if (!closed) {
                    Diagnostic d = make_error("E-SYNTAX", "unterminated string");
                    d.span = tok.span;
                    diags.push_back(std::move(d));
                }
                tok.kind = Tok::string;
                tok.text = std::move(s);
                tok.span.length = col_ - tok.span.column;
                out.push_back(std::move(tok));
                continue;
            }
            static constexpr std::string_view two[] = {"<=", ">=", "==", "->", ".."};
            bool matched = false;
            for (auto op : two) {
                if (src_.substr(pos_, 2) == op) {
                    advance();
                    advance();
                    tok.kind = Tok::punct;
                    tok.text = std::string(op);
                    tok.span.length = 2;
                    out.push_back(std::move(tok));
                    matched = true;
                    break;
                }
            }
            if (matched) continue;
            static constexpr std::string_view one = "+-*/^()[]{},=<>?";
            if (one.find(c) != std::string_view::npos) {
                if (c == '(' || c == '[') ++depth;
                if ((c == ')' || c == ']') && depth > 0) --depth;
                advance();
                tok.kind = Tok::punct;
                tok.text = std::string(1, c);
                out.push_back(std::move(tok));
                continue;
            }
            Diagnostic d = make_error("E-SYNTAX", std::string("unexpected character '") + c + "'");
            d.span = tok.span;
            diags.push_back(std::move(d));
            advance();
        }
        Token end;
        end.kind = Tok::end;
        end.span = {line_, col_, 0};
        out.push_back(std::move(end));
        return out;
    }

private:
    void advance() {
        unsigned char c = static_cast<unsigned char>(src_[pos_]);
        ++pos_;
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else if ((c & 0xC0) != 0x80) {
            ++col_;
        }
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

struct SyntaxError {
    Diagnostic diag;
};

struct RefUse {
    std::string id;
    Span span;
    std::string owner;
    enum class Kind { value, table, flow, link_end, scenario_target } kind;
};

class Parser {
public:
    Parser(std::vector<Token> toks, std::vector<Diagnostic>& diags)
        : toks_(std::move(toks)), diags_(diags) {}

    ExprPtr expression_only() {
        auto e = expression();
        if (!at_end_of_statement()) fail(peek(), "unexpected '" + describe(peek()) + "'");
        return e;
    }

    void document(Model& model, std::vector<Scenario>& scenarios, bool& saw_header) {
        while (peek().kind != Tok::end) {
            if (peek().kind == Tok::newline) {
                ++i_;
                continue;
            }
            try {
                statement(model, scenarios, saw_header);
                if (!at_end_of_statement())
                    fail(peek(), "unexpected '" + describe(peek()) + "' at end of declaration");
            } catch (const SyntaxError& e) {
                diags_.push_back(e.diag);
                skip_line();
            }
        }
    }

    std::vector<RefUse> uses;
    std::map<std::string, Span> decl_spans;
    std::vector<std::pair<std::string, Span>> scenario_spans;

private:
    // --- token helpers ---------------------------------------------------
    const Token& peek(std::size_t ahead = 0) const {
        return toks_[std::min(i_ + ahead, toks_.size() - 1)];
    }
    const Token& next() {
        const Token& t = toks_[i_];
        if (i_ + 1 < toks_.size()) ++i_;
        return t;
    }
    bool is_punct(std::string_view p, std::size_t ahead = 0) const {
        return peek(ahead).kind == Tok::punct && peek(ahead).text == p;
    }
    bool is_word(std::string_view w, std::size_t ahead = 0) const {
        return peek(ahead).kind == Tok::ident && peek(ahead).text == w;
    }
    bool at_end_of_statement() const {
        return peek().kind == Tok::newline || peek().kind == Tok::end;
    }
    static std::string describe(const Token& t) {
        switch (t.kind) {
        case Tok::newline: return "end of line";
        case Tok::end: return "end of input";
        case Tok::string: return "\"" + t.text + "\"";
        default: return t.text;
        }
    }
    [[noreturn]] void fail(const Token& at, std::string msg, std::string code = "E-SYNTAX") {
        Diagnostic d = make_error(std::move(code), std::move(msg));
        d.span = at.span;
        throw SyntaxError{std::move(d)};
    }
    void skip_line() {
        while (!at_end_of_statement()) ++i_;
    }
    void expect_punct(std::string_view p) {
        if (!is_punct(p)) fail(peek(), "expected '" + std::string(p) + "', found '" + describe(peek()) + "'");
        next();
    }
    void expect_word(std::string_view w) {
        if (!is_word(w)) fail(peek(), "expected '" + std::string(w) + "', found '" + describe(peek()) + "'");
        next();
    }
    std::string expect_string() {
        if (peek().kind != Tok::string) fail(peek(), "expected a string, found '" + describe(peek()) + "'");
        return next().text;
    }
    double signed_number() {
        bool neg = false;
        if (is_punct("-")) {
            next();
            neg = true;
        }
        if (peek().kind != Tok::number) fail(peek(), "expected a number, found '" + describe(peek()) + "'");
        double v = next().number;
        return neg ? -v : v;
    }
    /// Identifier naming a declared or referenced element.
    std::pair<std::string, Span> identifier() {
        const Token& t = peek();
        if (t.kind != Tok::ident) fail(t, "expected an identifier, found '" + describe(t) + "'");
        next();
        return {t.text, t.span};
    }
    std::pair<std::string, Span> declared_identifier() {
        auto [id, span] = identifier();
        if (is_reserved_word(id)) {
            Diagnostic d = make_error("E-RESERVED-ID", "'" + id + "' is a reserved name", id);
            d.span = span;
            throw SyntaxError{std::move(d)};
        }
        if (!is_valid_identifier(id)) {
            Diagnostic d =
                make_error("E-BAD-ID", "identifier '" + id + "' must be lowercase snake case", id);
            d.span = span;
            throw SyntaxError{std::move(d)};
        }
        return {id, span};
    }
    /// Hyphenated word such as first-order or measured-data.
    std::string tag_word() {
        auto [w, span] = identifier();
        while (is_punct("-") && !peek().space_before && peek(1).kind == Tok::ident &&
               !peek(1).space_before) {
            next();
            w += "-" + next().text;
        }
        return w;
    }

    // --- declarations ------------------------------------------------------
    void declare(const std::string& id, Span span) {
        if (decl_spans.count(id)) {
            Diagnostic d = make_error("E-DUP-ID", "duplicate id '" + id + "'", id);
            d.span = span;
            diags_.push_back(std::move(d));
        } else {
            decl_spans[id] = span;
        }
    }

    void statement(Model& model, std::vector<Scenario>& scenarios, bool& saw_header) {
        const Token& kw = peek();
        if (kw.kind != Tok::ident) fail(kw, "expected a declaration, found '" + describe(kw) + "'");
        const std::string word = kw.text;
        if (word == "model") return model_header(model, saw_header);
        if (word == "notes") {
            next();
            auto text = expect_string();
            model.notes = notes_started_ ? model.notes + "\n" + text : text;
            notes_started_ = true;
            return;
        }
        if (word == "const" || word == "aux") return variable_decl(model, word == "const");
        if (word == "data") return data_decl(model);
        if (word == "stock") return stock_decl(model);
        if (word == "link") return link_decl(model);
        if (word == "lookup") return lookup_decl(model);
        if (word == "scenario") return scenario_decl(scenarios);
        fail(kw, "unknown declaration '" + word + "'");
    }

    void model_header(Model& model, bool& saw_header) {
        const Token& kw = next();
        if (saw_header) fail(kw, "model header declared twice");
        saw_header = true;
        model.id = expect_string();
        expect_punct("{");
        bool saw_time = false;
        while (!is_punct("}")) {
            if (at_end_of_statement()) fail(peek(), "expected '}' to close the model header");
            if (is_word("time")) {
                next();
                model.time_spec.t_start = signed_number();
                expect_punct("..");
                model.time_spec.t_stop = signed_number();
                expect_word("dt");
                model.time_spec.dt = signed_number();
                saw_time = true;
            } else if (is_word("unit")) {
                next();
                model.time_spec.time_unit = expect_string();
            } else if (is_word("name")) {
                next();
                model.name = expect_string();
            } else {
                fail(peek(), "unexpected '" + describe(peek()) + "' in model header");
            }
        }
        if (!saw_time) fail(peek(), "model header needs 'time <start> .. <stop> dt <dt>'");
        next();
    }

    /// Trailing attributes shared by element declarations. Returns false when none matched.
    template <class Elem>
    bool common_attribute(Elem& e) {
        if (is_word("unit")) {
            next();
            e.unit = expect_string();
        } else if (is_word("doc")) {
            next();
            e.doc = expect_string();
        } else if (is_word("name")) {
            next();
            e.name = expect_string();
        } else if (is_word("source")) {
            const Token& at = next();
            auto tag = tag_word();
            auto parsed = parse_source_tag(tag);
            if (!parsed) fail(at, "unknown source tag '" + tag + "'");
            QuantificationSource src{*parsed, {}};
            if (peek().kind == Tok::string) src.citation = next().text;
            e.provenance = std::move(src);
        } else {
            return false;
        }
        return true;
    }

    void variable_decl(Model& model, bool is_const) {
        next();
        auto [id, span] = declared_identifier();
        declare(id, span);
        Variable v;
        v.id = id;
        v.kind = is_const ? VariableKind::constant : VariableKind::auxiliary;
        if (is_punct("=")) {
            next();
            owner_ = id;
            v.expression = expression();
        } else if (is_const) {
            fail(peek(), "constant '" + id + "' needs '= <value>'");
        }
        while (!at_end_of_statement()) {
            if (common_attribute(v)) continue;
            if (is_const && is_word("slider")) {
                next();
                Slider s;
                s.min = signed_number();
                expect_punct("..");
                s.max = signed_number();
                v.slider = s;
                continue;
            }
            fail(peek(), "unexpected '" + describe(peek()) + "' after expression");
        }
        model.variables.push_back(std::move(v));
    }

    void data_decl(Model& model) {
        next();
        auto [id, span] = declared_identifier();
        declare(id, span);
        Variable v;
        v.id = id;
        v.kind = VariableKind::exogenous;
        DataBinding b;
        expect_word("from");
        b.path = expect_string();
        expect_word("column");
        b.column = expect_string();
        while (!at_end_of_statement()) {
            if (common_attribute(v)) continue;
            if (is_word("interp")) {
                next();
                auto [w, ws] = identifier();
                if (w == "linear") b.interp = Interp::linear;
                else if (w == "hold") b.interp = Interp::hold;
                else fail(peek(), "interp must be 'linear' or 'hold'");
                continue;
            }
            if (is_word("extrapolate")) {
                next();
                auto [w, ws] = identifier();
                if (w == "error") b.extrapolation = Extrapolation::error;
                else if (w == "hold_ends") b.extrapolation = Extrapolation::hold_ends;
                else fail(peek(), "extrapolate must be 'error' or 'hold_ends'");
                continue;
            }
            fail(peek(), "unexpected '" + describe(peek()) + "' in data declaration");
        }
        model.data_bindings[id] = std::move(b);
        model.variables.push_back(std::move(v));
    }

    void flow_list(std::vector<std::string>& into, const std::string& owner) {
        for (;;) {
            auto [fid, fspan] = identifier();
            uses.push_back({fid, fspan, owner, RefUse::Kind::flow});
            into.push_back(fid);
            if (!is_punct(",")) break;
            next();
        }
    }

    void stock_decl(Model& model) {
        next();
        auto [id, span] = declared_identifier();
        declare(id, span);
        Stock s;
        s.id = id;
        expect_word("init");
        owner_ = id;
        s.initial = expression();
        while (!at_end_of_statement()) {
            if (common_attribute(s)) continue;
            if (is_word("inflow")) {
                next();
                flow_list(s.inflows, id);
            } else if (is_word("outflow")) {
                next();
                flow_list(s.outflows, id);
            } else if (is_word("non_negative")) {
                next();
                s.non_negative = true;
            } else {
                fail(peek(), "unexpected '" + describe(peek()) + "' in stock declaration");
            }
        }
        model.stocks.push_back(std::move(s));
    }

    void link_decl(Model& model) {
        next();
        InfluenceLink l;
        auto [from, fspan] = identifier();
        expect_punct("->");
        auto [to, tspan] = identifier();
        uses.push_back({from, fspan, "", RefUse::Kind::link_end});
        uses.push_back({to, tspan, "", RefUse::Kind::link_end});
        l.from = from;
        l.to = to;
        while (!at_end_of_statement()) {
            if (is_word("polarity")) {
                next();
                if (is_punct("+")) l.polarity = Polarity::positive;
                else if (is_punct("-")) l.polarity = Polarity::negative;
                else if (is_punct("?")) l.polarity = Polarity::unspecified;
                else fail(peek(), "polarity must be '+', '-' or '?'");
                next();
            } else if (is_word("delayed")) {
                next();
                l.delayed = true;
            } else if (is_word("order")) {
                const Token& at = next();
                auto w = tag_word();
                auto o = parse_effect_order(w);
                if (!o) fail(at, "unknown effect order '" + w + "'");
                l.effect_order = *o;
            } else {
                fail(peek(), "unexpected '" + describe(peek()) + "' in link declaration");
            }
        }
        model.links.push_back(std::move(l));
    }

    void lookup_decl(Model& model) {
        next();
        auto [id, span] = declared_identifier();
        declare(id, span);
        LookupTable t;
        t.id = id;
        expect_punct("=");
        expect_punct("[");
        if (!is_punct("]")) {
            for (;;) {
                expect_punct("(");
                Breakpoint b{};
                b.x = signed_number();
                expect_punct(",");
                b.y = signed_number();
                expect_punct(")");
                t.points.push_back(b);
                if (!is_punct(",")) break;
                next();
            }
        }
        expect_punct("]");
        while (!at_end_of_statement()) {
            if (is_word("interp")) {
                next();
                expect_word("linear");
            } else if (is_word("doc")) {
                next();
                t.doc = expect_string();
            } else {
                fail(peek(), "unexpected '" + describe(peek()) + "' in lookup declaration");
            }
        }
        model.lookups.push_back(std::move(t));
    }

    void scenario_decl(std::vector<Scenario>& scenarios) {
        next();
        auto [name, span] = declared_identifier();
        Scenario sc;
        sc.name = name;
        if (peek().kind == Tok::string) sc.description = next().text;
        expect_punct("{");
        for (;;) {
            if (is_punct("}")) {
                next();
                break;
            }
            if (peek().kind == Tok::newline) {
                next();
                continue;
            }
            if (peek().kind == Tok::end) fail(peek(), "unterminated scenario block");
            try {
                scenario_statement(sc);
            } catch (const SyntaxError& e) {
                diags_.push_back(e.diag);
                skip_line();
            }
        }
        scenario_spans.emplace_back(name, span);
        scenarios.push_back(std::move(sc));
    }

    void scenario_statement(Scenario& sc) {
        if (is_word("override")) {
            next();
            auto [target, tspan] = identifier();
            uses.push_back({target, tspan, sc.name, RefUse::Kind::scenario_target});
            expect_punct("=");
            double v = signed_number();
            if (!sc.overrides.emplace(target, v).second)
                fail(peek(), "'" + target + "' overridden twice", "E-BAD-INTERVENTION");
        } else if (is_word("at")) {
            next();
            Intervention iv;
            iv.at_time = signed_number();
            if (is_word("set")) {
                next();
                auto [target, tspan] = identifier();
                uses.push_back({target, tspan, sc.name, RefUse::Kind::scenario_target});
                iv.target = target;
                iv.action = InterventionAction::set;
                expect_punct("=");
            } else if (is_word("scale")) {
                next();
                auto [target, tspan] = identifier();
                uses.push_back({target, tspan, sc.name, RefUse::Kind::scenario_target});
                iv.target = target;
                iv.action = InterventionAction::scale;
                expect_word("by");
            } else {
                fail(peek(), "expected 'set' or 'scale'");
            }
            iv.value = signed_number();
            sc.interventions.push_back(std::move(iv));
        } else {
            fail(peek(), "expected 'override' or 'at' inside a scenario");
        }
        if (!at_end_of_statement() && !is_punct("}"))
            fail(peek(), "unexpected '" + describe(peek()) + "' in scenario");
    }

    // --- expressions -------------------------------------------------------
    enum Prec { p_or = 1, p_and, p_not, p_cmp, p_add, p_mul, p_unary, p_pow };

    ExprPtr expression() { return parse_or(); }

    /// Operand required after an operator token.
    void require_operand(const Token& op) {
        const Token& t = peek();
        bool ok = t.kind == Tok::number || t.kind == Tok::ident ||
                  (t.kind == Tok::punct && (t.text == "(" || t.text == "-"));
        if (!ok) fail(op, "expected an operand after '" + op.text + "'");
    }

    ExprPtr parse_or() {
        auto lhs = parse_and();
        while (is_word("or")) {
            const Token& op = next();
            require_operand(op);
            lhs = binary(BinaryOp::logical_or, lhs, parse_and());
        }
        return lhs;
    }
    ExprPtr parse_and() {
        auto lhs = parse_not();
        while (is_word("and")) {
            const Token& op = next();
            require_operand(op);
            lhs = binary(BinaryOp::logical_and, lhs, parse_not());
        }
        return lhs;
    }
    ExprPtr parse_not() {
        if (is_word("not")) {
            const Token& op = next();
            require_operand(op);
            return unary(UnaryOp::logical_not, parse_not());
        }
        return parse_cmp();
    }
    std::optional<BinaryOp> cmp_op() const {
        if (peek().kind != Tok::punct) return std::nullopt;
        const auto& t = peek().text;
        if (t == "<") return BinaryOp::lt;
        if (t == "<=") return BinaryOp::le;
        if (t == ">") return BinaryOp::gt;
        if (t == ">=") return BinaryOp::ge;
        if (t == "==") return BinaryOp::eq;
        return std::nullopt;
    }
    ExprPtr parse_cmp() {
        auto lhs = parse_add();
        if (auto op = cmp_op()) {
            const Token& tok = next();
            require_operand(tok);
            lhs = binary(*op, lhs, parse_add());
            if (cmp_op()) fail(peek(), "comparisons do not chain; add parentheses");
        }
        return lhs;
    }
    ExprPtr parse_add() {
        auto lhs = parse_mul();
        while (is_punct("+") || is_punct("-")) {
            const Token& op = next();
            require_operand(op);
            lhs = binary(op.text == "+" ? BinaryOp::add : BinaryOp::sub, lhs, parse_mul());
        }
        return lhs;
    }
    ExprPtr parse_mul() {
        auto lhs = parse_unary();
        while (is_punct("*") || is_punct("/")) {
            const Token& op = next();
            require_operand(op);
            lhs = binary(op.text == "*" ? BinaryOp::mul : BinaryOp::div, lhs, parse_unary());
        }
        return lhs;
    }
    ExprPtr parse_unary() {
        if (is_punct("-")) {
            const Token& op = next();
            require_operand(op);
            return unary(UnaryOp::neg, parse_unary());
        }
        return parse_pow();
    }
    ExprPtr parse_pow() {
        auto base = parse_primary();
        if (is_punct("^")) {
            const Token& op = next();
            require_operand(op);
            return binary(BinaryOp::pow, base, parse_unary());
        }
        return base;
    }
    ExprPtr parse_primary() {
        const Token& t = peek();
        if (t.kind == Tok::number) {
            next();
            return lit(t.number);
        }
        if (is_punct("(")) {
            next();
            auto e = expression();
            expect_punct(")");
            return e;
        }
        if (t.kind == Tok::ident) {
            if (t.text == "and" || t.text == "or" || t.text == "not")
                fail(t, "expected an operand, found '" + t.text + "'");
            next();
            if (is_punct("(")) return parse_call(t);
            if (find_builtin(t.text))
                fail(t, "builtin '" + t.text + "' must be called with parentheses");
            uses.push_back({t.text, t.span, owner_, RefUse::Kind::value});
            return ref(t.text);
        }
        fail(t, "expected an operand, found '" + describe(t) + "'");
    }
    ExprPtr parse_call(const Token& name) {
        auto fn = find_builtin(name.text);
        if (!fn) fail(name, "unknown function '" + name.text + "'");
        next(); // (
        std::vector<ExprPtr> args;
        std::string table;
        int count = 0;
        if (!is_punct(")")) {
            for (;;) {
                if (*fn == Builtin::lookup && count == 0) {
                    auto [tid, tspan] = identifier();
                    uses.push_back({tid, tspan, owner_, RefUse::Kind::table});
                    table = tid;
                } else {
                    args.push_back(expression());
                }
                ++count;
                if (!is_punct(",")) break;
                next();
            }
        }
        expect_punct(")");
        if (count != info(*fn).arity) {
            Diagnostic d = make_error("E-ARITY", "'" + name.text + "' takes " +
                                                     std::to_string(info(*fn).arity) +
                                                     " arguments, got " + std::to_string(count));
            d.span = name.span;
            throw SyntaxError{std::move(d)};
        }
        return call(*fn, std::move(args), std::move(table));
    }

    std::vector<Token> toks_;
    std::size_t i_ = 0;
    std::vector<Diagnostic>& diags_;
    std::string owner_;
    bool notes_started_ = false;
};

inline void check_references(const Model& model, const Parser& p, std::vector<Diagnostic>& diags) {
    std::set<std::string> values;
    std::set<std::string> variables;
    std::set<std::string> tables;
    for (const auto& v : model.variables) {
        values.insert(v.id);
        variables.insert(v.id);
    }
    for (const auto& s : model.stocks) values.insert(s.id);
    for (const auto& t : model.lookups) tables.insert(t.id);
    for (const auto& u : p.uses) {
        bool ok = false;
        std::string what;
        switch (u.kind) {
        case RefUse::Kind::value: ok = values.count(u.id) > 0; what = "element"; break;
        case RefUse::Kind::table: ok = tables.count(u.id) > 0; what = "lookup table"; break;
        case RefUse::Kind::flow: ok = variables.count(u.id) > 0; what = "flow variable"; break;
        case RefUse::Kind::link_end: ok = values.count(u.id) > 0; what = "element"; break;
        case RefUse::Kind::scenario_target: ok = variables.count(u.id) > 0; what = "variable"; break;
        }
        if (!ok) {
            Diagnostic d = make_error("E-UNKNOWN-REF", "unknown " + what + " '" + u.id + "'",
                                      u.owner.empty() ? u.id : u.owner);
            d.span = u.span;
            diags.push_back(std::move(d));
        }
    }
    std::set<std::string> names;
    for (const auto& [name, span] : p.scenario_spans) {
        if (!names.insert(name).second) {
            Diagnostic d = make_error("E-DUP-SCENARIO", "scenario '" + name + "' declared twice");
            d.span = span;
            diags.push_back(std::move(d));
        }
    }
}

} // namespace detail

/// Parses a model file. Never throws on malformed input.
inline ParseResult parse_model(std::string_view text) {
    ParseResult result;
    Model model;
    bool saw_header = false;
    detail::Lexer lexer(text);
    auto toks = lexer.run(result.diagnostics);
    detail::Parser parser(std::move(toks), result.diagnostics);
    parser.document(model, result.scenarios, saw_header);
    if (!saw_header) {
        Diagnostic d = make_error("E-SYNTAX", "missing 'model \"<id>\" { time ... }' header");
        d.span = Span{1, 1, 0};
        result.diagnostics.push_back(std::move(d));
    }
    detail::check_references(model, parser, result.diagnostics);
    std::stable_sort(result.diagnostics.begin(), result.diagnostics.end(),
                     [](const Diagnostic& a, const Diagnostic& b) {
                         auto la = a.span ? std::pair(a.span->line, a.span->column) : std::pair(0, 0);
                         auto lb = b.span ? std::pair(b.span->line, b.span->column) : std::pair(0, 0);
                         return la < lb;
                     });
    if (!has_errors(result.diagnostics)) result.model = std::move(model);
    return result;
}

struct ExpressionParse {
    ExprPtr expr; ///< null on error
    std::vector<Diagnostic> diagnostics;
};

/// Parses a single expression (no reference resolution).
inline ExpressionParse parse_expression(std::string_view text) {
    ExpressionParse out;
    detail::Lexer lexer(text);
    auto toks = lexer.run(out.diagnostics);
    detail::Parser parser(std::move(toks), out.diagnostics);
    try {
        auto e = parser.expression_only();
        if (!has_errors(out.diagnostics)) out.expr = std::move(e);
    } catch (const detail::SyntaxError& err) {
        out.diagnostics.push_back(err.diag);
    }
    return out;
}

} // namespace qqm
