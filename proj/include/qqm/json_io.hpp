#pragma once

/**
 * @file json_io.hpp
 * @brief JSON mirror of models, scenarios, indicators, run results, loop
 *        reports and comparison tables.
 *
 * Field names follow the C++ member names. Expressions travel as text in
 * the model language.
 */

#include "qqm/diagnostic.hpp"
#include "qqm/engine.hpp"
#include "qqm/graph.hpp"
#include "qqm/indicators.hpp"
#include "qqm/model.hpp"
#include "qqm/parser.hpp"
#include "qqm/scenario.hpp"
#include "qqm/text_writer.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace qqm {

using json = nlohmann::ordered_json;

// --- diagnostics -----------------------------------------------------------

inline json to_json(const Diagnostic& d) {
    json j;
    j["severity"] = to_string(d.severity);
    j["code"] = d.code;
    j["message"] = d.message;
    if (!d.element.empty()) j["element"] = d.element;
    if (d.span) j["span"] = {{"line", d.span->line}, {"column", d.span->column}, {"length", d.span->length}};
    if (d.time) j["time"] = *d.time;
    return j;
}

inline json to_json(const std::vector<Diagnostic>& ds) {
    json arr = json::array();
    for (const auto& d : ds) arr.push_back(to_json(d));
    return arr;
}

namespace detail {

inline Error json_error(const std::string& msg) { return Error(make_error("E-BAD-REQUEST", msg)); }

template <class T>
T get_field(const json& j, const char* key, const T& fallback) {
    if (!j.contains(key) || j[key].is_null()) return fallback;
    try {
        return j[key].get<T>();
    } catch (const json::exception&) {
        throw json_error(std::string("field '") + key + "' has the wrong type");
    }
}

inline const json& require(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw json_error(std::string("missing field '") + key + "'");
    return j[key];
}

inline std::string polarity_name(Polarity p) {
    switch (p) {
    case Polarity::positive: return "positive";
    case Polarity::negative: return "negative";
    case Polarity::unspecified: return "unspecified";
    }
    return "unspecified";
}

inline std::optional<Polarity> polarity_from(const std::string& s) {
    if (s == "positive" || s == "+") return Polarity::positive;
    if (s == "negative" || s == "-") return Polarity::negative;
    if (s == "unspecified" || s == "?" || s.empty()) return Polarity::unspecified;
    return std::nullopt;
}

inline json source_json(const std::optional<QuantificationSource>& p) {
    if (!p) return nullptr;
    return {{"tag", to_string(p->tag)}, {"citation", p->citation}};
}

inline std::optional<QuantificationSource> source_from(const json& j, const std::string& owner,
                                                       std::vector<Diagnostic>& diags) {
    if (j.is_null()) return std::nullopt;
    auto tag = parse_source_tag(get_field<std::string>(j, "tag", ""));
    if (!tag) {
        diags.push_back(make_error("E-BAD-REQUEST", "unknown provenance tag on '" + owner + "'", owner));
        return std::nullopt;
    }
    return QuantificationSource{*tag, get_field<std::string>(j, "citation", "")};
}

inline ExprPtr expression_from(const json& j, const std::string& owner, std::vector<Diagnostic>& diags) {
    if (j.is_null()) return nullptr;
    if (!j.is_string()) {
        diags.push_back(make_error("E-BAD-REQUEST", "expression of '" + owner + "' must be a string", owner));
        return nullptr;
    }
    auto parsed = parse_expression(j.get<std::string>());
    for (auto d : parsed.diagnostics) {
        d.element = owner;
        d.message = "'" + owner + "': " + d.message;
        diags.push_back(std::move(d));
    }
    return parsed.expr;
}

inline json expression_json(const ExprPtr& e) {
    if (!e) return nullptr;
    return write_expression(e);
}

} // namespace detail

// --- model -----------------------------------------------------------------

inline json to_json(const Model& m) {
    json j;
    j["id"] = m.id;
    j["name"] = m.name;
    j["time_spec"] = {{"t_start", m.time_spec.t_start},
                      {"t_stop", m.time_spec.t_stop},
                      {"dt", m.time_spec.dt},
                      {"time_unit", m.time_spec.time_unit}};
    json vars = json::array();
    for (const auto* v : detail::sorted_by_id(m.variables)) {
        json jv;
        jv["id"] = v->id;
        jv["name"] = v->name;
        jv["kind"] = to_string(v->kind);
        jv["expression"] = detail::expression_json(v->expression);
        jv["unit"] = v->unit;
        jv["provenance"] = detail::source_json(v->provenance);
        jv["doc"] = v->doc;
        if (v->slider) jv["slider"] = {{"min", v->slider->min}, {"max", v->slider->max}};
        else jv["slider"] = nullptr;
        vars.push_back(std::move(jv));
    }
    j["variables"] = std::move(vars);
    json stocks = json::array();
    for (const auto* s : detail::sorted_by_id(m.stocks)) {
        stocks.push_back({{"id", s->id},
                          {"name", s->name},
                          {"initial", detail::expression_json(s->initial)},
                          {"inflows", s->inflows},
                          {"outflows", s->outflows},
                          {"non_negative", s->non_negative},
                          {"unit", s->unit},
                          {"provenance", detail::source_json(s->provenance)},
                          {"doc", s->doc}});
    }
    j["stocks"] = std::move(stocks);
    auto links = m.links;
    std::sort(links.begin(), links.end(), [](const InfluenceLink& a, const InfluenceLink& b) {
        return std::tie(a.from, a.to) < std::tie(b.from, b.to);
    });
    json jl = json::array();
    for (const auto& l : links)
        jl.push_back({{"from", l.from},
                      {"to", l.to},
                      {"polarity", detail::polarity_name(l.polarity)},
                      {"delayed", l.delayed},
                      {"effect_order", to_string(l.effect_order)}});
    j["links"] = std::move(jl);
    json lookups = json::array();
    for (const auto* t : detail::sorted_by_id(m.lookups)) {
        json pts = json::array();
        for (const auto& b : t->points) pts.push_back({b.x, b.y});
        lookups.push_back({{"id", t->id},
                           {"breakpoints", std::move(pts)},
                           {"interp", "linear"},
                           {"extrapolation", "hold_ends"},
                           {"doc", t->doc}});
    }
    j["lookups"] = std::move(lookups);
    json bindings = json::object();
    for (const auto& [id, b] : m.data_bindings)
        bindings[id] = {{"series_id", b.series_id()},
                        {"path", b.path},
                        {"column", b.column},
                        {"interp", to_string(b.interp)},
                        {"extrapolation", to_string(b.extrapolation)}};
    j["data_bindings"] = std::move(bindings);
    j["notes"] = m.notes;
    return j;
}

/// Model from its JSON mirror. Throws qqm::Error listing every conversion problem.
inline Model model_from_json(const json& j) {
    using detail::get_field;
    if (!j.is_object()) throw detail::json_error("model must be a JSON object");
    std::vector<Diagnostic> diags;
    Model m;
    m.id = get_field<std::string>(j, "id", "");
    m.name = get_field<std::string>(j, "name", "");
    m.notes = get_field<std::string>(j, "notes", "");
    const json& ts = detail::require(j, "time_spec");
    m.time_spec.t_start = get_field<double>(ts, "t_start", 0.0);
    m.time_spec.t_stop = get_field<double>(ts, "t_stop", 0.0);
    m.time_spec.dt = get_field<double>(ts, "dt", 0.0);
    m.time_spec.time_unit = get_field<std::string>(ts, "time_unit", "");

    for (const auto& jv : get_field<json>(j, "variables", json::array())) {
        Variable v;
        v.id = get_field<std::string>(jv, "id", "");
        v.name = get_field<std::string>(jv, "name", "");
        auto kind = get_field<std::string>(jv, "kind", "auxiliary");
        if (kind == "constant") v.kind = VariableKind::constant;
        else if (kind == "auxiliary") v.kind = VariableKind::auxiliary;
        else if (kind == "exogenous-data") v.kind = VariableKind::exogenous;
        else diags.push_back(make_error("E-BAD-REQUEST", "unknown variable kind '" + kind + "'", v.id));
        v.expression = detail::expression_from(get_field<json>(jv, "expression", nullptr), v.id, diags);
        v.unit = get_field<std::string>(jv, "unit", "");
        v.provenance = detail::source_from(get_field<json>(jv, "provenance", nullptr), v.id, diags);
        v.doc = get_field<std::string>(jv, "doc", "");
        auto slider = get_field<json>(jv, "slider", nullptr);
        if (!slider.is_null())
            v.slider = Slider{get_field<double>(slider, "min", 0.0), get_field<double>(slider, "max", 1.0)};
        m.variables.push_back(std::move(v));
    }
    for (const auto& js : get_field<json>(j, "stocks", json::array())) {
        Stock s;
        s.id = get_field<std::string>(js, "id", "");
        s.name = get_field<std::string>(js, "name", "");
        s.initial = detail::expression_from(get_field<json>(js, "initial", nullptr), s.id, diags);
        s.inflows = get_field<std::vector<std::string>>(js, "inflows", {});
        s.outflows = get_field<std::vector<std::string>>(js, "outflows", {});
        s.non_negative = get_field<bool>(js, "non_negative", false);
        s.unit = get_field<std::string>(js, "unit", "");
        s.provenance = detail::source_from(get_field<json>(js, "provenance", nullptr), s.id, diags);
        s.doc = get_field<std::string>(js, "doc", "");
        m.stocks.push_back(std::move(s));
    }
    for (const auto& jl : get_field<json>(j, "links", json::array())) {
        InfluenceLink l;
        l.from = get_field<std::string>(jl, "from", "");
        l.to = get_field<std::string>(jl, "to", "");
        auto pol = detail::polarity_from(get_field<std::string>(jl, "polarity", "unspecified"));
        if (!pol) diags.push_back(make_error("E-BAD-REQUEST", "unknown polarity on link " + l.from + " -> " + l.to, l.to));
        l.polarity = pol.value_or(Polarity::unspecified);
        l.delayed = get_field<bool>(jl, "delayed", false);
        auto order = parse_effect_order(get_field<std::string>(jl, "effect_order", "untagged"));
        if (!order) diags.push_back(make_error("E-BAD-REQUEST", "unknown effect order on link " + l.from + " -> " + l.to, l.to));
        l.effect_order = order.value_or(EffectOrder::untagged);
        m.links.push_back(std::move(l));
    }
    for (const auto& jt : get_field<json>(j, "lookups", json::array())) {
        LookupTable t;
        t.id = get_field<std::string>(jt, "id", "");
        t.doc = get_field<std::string>(jt, "doc", "");
        for (const auto& p : get_field<json>(jt, "breakpoints", json::array())) {
            if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
                diags.push_back(make_error("E-BAD-REQUEST", "lookup breakpoints must be [x, y] pairs", t.id));
                continue;
            }
            t.points.push_back({p[0].get<double>(), p[1].get<double>()});
        }
        m.lookups.push_back(std::move(t));
    }
    const json bindings = get_field<json>(j, "data_bindings", json::object());
    for (const auto& [id, jb] : bindings.items()) {
        DataBinding b;
        b.path = get_field<std::string>(jb, "path", "");
        b.column = get_field<std::string>(jb, "column", "");
        b.interp = get_field<std::string>(jb, "interp", "linear") == "hold" ? Interp::hold : Interp::linear;
        b.extrapolation = get_field<std::string>(jb, "extrapolation", "error") == "hold_ends"
                              ? Extrapolation::hold_ends
                              : Extrapolation::error;
        m.data_bindings[id] = std::move(b);
    }
    if (has_errors(diags)) throw Error(std::move(diags));
    return m;
}

/// Model file contents: the model mirror plus a `scenarios` array.
inline json to_json(const Scenario& s);

inline json to_json(const ModelDocument& doc) {
    json j = to_json(doc.model);
    std::vector<const Scenario*> scs;
    for (const auto& s : doc.scenarios) scs.push_back(&s);
    std::sort(scs.begin(), scs.end(), [](const Scenario* a, const Scenario* b) { return a->name < b->name; });
    json arr = json::array();
    for (const auto* s : scs) arr.push_back(to_json(*s));
    j["scenarios"] = std::move(arr);
    return j;
}

inline Scenario scenario_from_json(const json& j);

inline ModelDocument document_from_json(const json& j) {
    ModelDocument doc;
    doc.model = model_from_json(j);
    if (j.contains("scenarios") && !j["scenarios"].is_null()) {
        if (!j["scenarios"].is_array()) throw detail::json_error("'scenarios' must be an array");
        for (const auto& s : j["scenarios"]) doc.scenarios.push_back(scenario_from_json(s));
    }
    return doc;
}

// --- scenarios and indicators ----------------------------------------------

inline json to_json(const Scenario& s) {
    json ivs = json::array();
    for (const auto& iv : s.interventions)
        ivs.push_back({{"target", iv.target},
                       {"at_time", iv.at_time},
                       {"action", to_string(iv.action)},
                       {"value", iv.value}});
    json ov = json::object();
    for (const auto& [id, v] : s.overrides) ov[id] = v;
    return {{"name", s.name}, {"overrides", std::move(ov)}, {"interventions", std::move(ivs)},
            {"description", s.description}};
}

inline Scenario scenario_from_json(const json& j) {
    using detail::get_field;
    if (!j.is_object()) throw detail::json_error("scenario must be a JSON object");
    Scenario s;
    s.name = get_field<std::string>(j, "name", "");
    if (s.name.empty()) throw detail::json_error("scenario needs a name");
    s.description = get_field<std::string>(j, "description", "");
    const json overrides = detail::get_field<json>(j, "overrides", json::object());
    for (const auto& [id, v] : overrides.items()) {
        if (!v.is_number()) throw detail::json_error("override '" + id + "' must be a number");
        s.overrides[id] = v.get<double>();
    }
    for (const auto& jv : get_field<json>(j, "interventions", json::array())) {
        Intervention iv;
        iv.target = get_field<std::string>(jv, "target", "");
        iv.at_time = get_field<double>(jv, "at_time", 0.0);
        auto action = get_field<std::string>(jv, "action", "set");
        if (action == "set") iv.action = InterventionAction::set;
        else if (action == "scale") iv.action = InterventionAction::scale;
        else throw detail::json_error("intervention action must be 'set' or 'scale'");
        iv.value = get_field<double>(jv, "value", 0.0);
        s.interventions.push_back(std::move(iv));
    }
    return s;
}

inline json to_json(const Indicator& i) {
    json j{{"name", i.name}, {"target", i.target}, {"kind", to_string(i.kind)}};
    if (i.kind == IndicatorKind::time_to_threshold) {
        j["threshold"] = i.threshold;
        j["direction"] = to_string(i.direction);
    }
    return j;
}

inline Indicator indicator_from_json(const json& j) {
    using detail::get_field;
    if (!j.is_object()) throw Error(make_error("E-BAD-INDICATOR", "indicator must be a JSON object"));
    Indicator i;
    i.name = get_field<std::string>(j, "name", "");
    i.target = get_field<std::string>(j, "target", "");
    auto kind = parse_indicator_kind(get_field<std::string>(j, "kind", ""));
    if (i.name.empty() || i.target.empty() || !kind)
        throw Error(make_error("E-BAD-INDICATOR", "indicator needs name, target and a known kind"));
    i.kind = *kind;
    if (i.kind == IndicatorKind::time_to_threshold) {
        if (!j.contains("threshold") || !j["threshold"].is_number())
            throw Error(make_error("E-BAD-INDICATOR", "time_to_threshold needs a numeric threshold", i.name));
        i.threshold = j["threshold"].get<double>();
        auto dir = get_field<std::string>(j, "direction", "rising");
        if (dir != "rising" && dir != "falling")
            throw Error(make_error("E-BAD-INDICATOR", "direction must be 'rising' or 'falling'", i.name));
        i.direction = dir == "rising" ? Direction::rising : Direction::falling;
    }
    return i;
}

inline std::vector<Indicator> indicators_from_json(const json& j) {
    if (!j.is_array()) throw Error(make_error("E-BAD-INDICATOR", "indicators must be a JSON array"));
    std::vector<Indicator> out;
    for (const auto& e : j) out.push_back(indicator_from_json(e));
    return out;
}

// --- results ---------------------------------------------------------------

inline json to_json_number(const std::optional<double>& v) {
    if (!v) return nullptr;
    return *v;
}

/// Run result; `selections` restricts the series (all when empty).
inline json to_json(const RunResult& r, const std::vector<std::string>& selections = {}) {
    json j;
    j["scenario_name"] = r.scenario_name;
    j["model_fingerprint"] = r.model_fingerprint;
    j["scenario_fingerprint"] = r.scenario_fingerprint;
    j["grid"] = {{"t_start", r.time_spec.t_start},
                 {"t_stop", r.time_spec.t_stop},
                 {"dt", r.time_spec.dt},
                 {"time_unit", r.time_spec.time_unit},
                 {"times", r.times}};
    json series = json::object();
    if (selections.empty()) {
        for (const auto& [id, v] : r.series) series[id] = v;
    } else {
        std::set<std::string> sel(selections.begin(), selections.end());
        for (const auto& id : sel) {
            const auto* v = r.find(id);
            if (!v) throw Error(make_error("E-UNKNOWN-SERIES", "no series '" + id + "' in the run", id));
            series[id] = *v;
        }
    }
    j["series"] = std::move(series);
    j["diagnostics"] = to_json(r.diagnostics);
    return j;
}

inline json to_json(const FeedbackLoop& loop) {
    json links = json::array();
    for (const auto& l : loop.cycle)
        links.push_back({{"from", l.from},
                         {"to", l.to},
                         {"polarity", detail::polarity_name(l.polarity)},
                         {"delayed", l.delayed},
                         {"effect_order", to_string(l.effect_order)}});
    json orders = json::array();
    for (auto o : loop.effect_orders) orders.push_back(to_string(o));
    return {{"nodes", loop.nodes()},
            {"cycle", std::move(links)},
            {"classification", to_string(loop.classification)},
            {"contains_delay", loop.contains_delay},
            {"effect_orders", std::move(orders)}};
}

inline json to_json(const LoopReport& report) {
    json loops = json::array();
    for (const auto& l : report.loops) loops.push_back(to_json(l));
    return {{"loops", std::move(loops)},
            {"truncated", report.truncated},
            {"diagnostics", to_json(report.diagnostics)}};
}

inline json to_json(const ComparisonTable& t) {
    json rows = json::array();
    for (const auto& r : t.rows) {
        json jr{{"indicator", r.indicator}, {"scenario", r.scenario}, {"value", to_json_number(r.value)},
                {"delta_abs", to_json_number(r.delta_abs)}};
        if (r.delta_rel) jr["delta_rel"] = *r.delta_rel;
        rows.push_back(std::move(jr));
    }
    return {{"baseline", t.baseline}, {"rows", std::move(rows)}};
}

// --- consequence trees -----------------------------------------------------

inline ConsequenceNode consequence_node_from_json(const json& j) {
    if (!j.is_object()) throw Error(make_error("E-BAD-TREE", "tree node must be a JSON object"));
    ConsequenceNode n;
    n.label = detail::get_field<std::string>(j, "label", "");
    if (n.label.empty()) throw Error(make_error("E-BAD-TREE", "tree node needs a non-empty label"));
    if (j.contains("polarity") && !j["polarity"].is_null()) {
        auto p = detail::polarity_from(j["polarity"].get<std::string>());
        if (!p) throw Error(make_error("E-BAD-TREE", "unknown polarity on '" + n.label + "'"));
        n.polarity = p;
    }
    if (j.contains("effect_order") && !j["effect_order"].is_null()) {
        auto o = parse_effect_order(j["effect_order"].get<std::string>());
        if (!o) throw Error(make_error("E-BAD-TREE", "unknown effect order on '" + n.label + "'"));
        n.order = o;
    }
    for (const auto& c : detail::get_field<json>(j, "children", json::array()))
        n.children.push_back(consequence_node_from_json(c));
    return n;
}

/// Accepts one root object or an array of roots; empty input is E-EMPTY-TREE.
inline Model import_consequence_tree(const json& j) {
    std::vector<ConsequenceNode> roots;
    if (j.is_null() || (j.is_object() && j.empty()) || (j.is_array() && j.empty()))
        throw Error(make_error("E-EMPTY-TREE", "consequence tree is empty"));
    if (j.is_array())
        for (const auto& e : j) roots.push_back(consequence_node_from_json(e));
    else
        roots.push_back(consequence_node_from_json(j));
    return import_consequence_tree(std::span<const ConsequenceNode>(roots));
}

} // namespace qqm
