#pragma once

/**
 * @file model.hpp
 * @brief Model data structure: variables, stocks, influence links, lookups,
 *        data bindings and the time specification.
 *
 * Models are plain values. Operations never mutate their input; scenario
 * application returns a new model that shares unchanged expression nodes.
 */

#include "qqm/data.hpp"
#include "qqm/expression.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace qqm {

struct TimeSpec {
    double t_start = 0.0;
    double t_stop = 1.0;
    double dt = 1.0;
    std::string time_unit;

    friend bool operator==(const TimeSpec&, const TimeSpec&) = default;
};

/// Number of integration steps; only meaningful for a validated TimeSpec.
inline std::size_t step_count(const TimeSpec& ts) {
    return static_cast<std::size_t>(std::llround((ts.t_stop - ts.t_start) / ts.dt));
}

/// Grid time of point k. The last point is pinned to t_stop.
inline double grid_time(const TimeSpec& ts, std::size_t k) {
    if (k == step_count(ts)) return ts.t_stop;
    return ts.t_start + static_cast<double>(k) * ts.dt;
}

enum class VariableKind { constant, auxiliary, exogenous };

inline std::string_view to_string(VariableKind k) {
    switch (k) {
    case VariableKind::constant: return "constant";
    case VariableKind::auxiliary: return "auxiliary";
    case VariableKind::exogenous: return "exogenous-data";
    }
    return "auxiliary";
}

/// How an influence was quantified.
enum class SourceTag { literature, measured_data, dedicated_study, expert_hypothesis };

inline constexpr std::string_view source_tag_names[] = {"literature", "measured-data",
                                                        "dedicated-study", "expert-hypothesis"};

inline std::string_view to_string(SourceTag t) { return source_tag_names[static_cast<int>(t)]; }

inline std::optional<SourceTag> parse_source_tag(std::string_view s) {
    for (int i = 0; i < 4; ++i)
        if (source_tag_names[i] == s) return static_cast<SourceTag>(i);
    return std::nullopt;
}

struct QuantificationSource {
    SourceTag tag = SourceTag::expert_hypothesis;
    std::string citation;

    friend bool operator==(const QuantificationSource&, const QuantificationSource&) = default;
};

/// Range annotation used by interactive front ends to build scenario sliders.
struct Slider {
    double min = 0.0;
    double max = 1.0;

    friend bool operator==(const Slider&, const Slider&) = default;
};

struct Variable {
    std::string id;
    std::string name;
    VariableKind kind = VariableKind::auxiliary;
    ExprPtr expression; ///< null for exogenous data and for not-yet-quantified variables
    std::string unit;
    std::optional<QuantificationSource> provenance;
    std::string doc;
    std::optional<Slider> slider;
};

struct Stock {
    std::string id;
    std::string name;
    ExprPtr initial;
    std::vector<std::string> inflows;
    std::vector<std::string> outflows;
    bool non_negative = false;
    std::string unit;
    std::optional<QuantificationSource> provenance;
    std::string doc;
};

enum class Polarity { positive, negative, unspecified };

inline std::string_view to_string(Polarity p) {
    switch (p) {
    case Polarity::positive: return "+";
    case Polarity::negative: return "-";
    case Polarity::unspecified: return "?";
    }
    return "?";
}

enum class EffectOrder { first_order, direct_rebound, indirect_rebound, higher_order, untagged };

inline constexpr std::string_view effect_order_names[] = {
    "first-order", "direct-rebound", "indirect-rebound", "higher-order", "untagged"};

inline std::string_view to_string(EffectOrder o) { return effect_order_names[static_cast<int>(o)]; }

inline std::optional<EffectOrder> parse_effect_order(std::string_view s) {
    for (int i = 0; i < 5; ++i)
        if (effect_order_names[i] == s) return static_cast<EffectOrder>(i);
    return std::nullopt;
}

struct InfluenceLink {
    std::string from;
    std::string to;
    Polarity polarity = Polarity::unspecified;
    bool delayed = false;
    EffectOrder effect_order = EffectOrder::untagged;

    friend bool operator==(const InfluenceLink&, const InfluenceLink&) = default;
};

/// Where an exogenous variable's series comes from.
struct DataBinding {
    std::string path; ///< relative to the model file
    std::string column;
    Interp interp = Interp::linear;
    Extrapolation extrapolation = Extrapolation::error;

    std::string series_id() const { return path + "#" + column; }

    friend bool operator==(const DataBinding&, const DataBinding&) = default;
};

struct Model {
    std::string id;
    std::string name;
    TimeSpec time_spec;
    std::vector<Variable> variables;
    std::vector<Stock> stocks;
    std::vector<InfluenceLink> links;
    std::vector<LookupTable> lookups;
    std::map<std::string, DataBinding> data_bindings; ///< variable id -> binding
    std::string notes;

    const Variable* find_variable(std::string_view vid) const {
        for (const auto& v : variables)
            if (v.id == vid) return &v;
        return nullptr;
    }
    Variable* find_variable(std::string_view vid) {
        for (auto& v : variables)
            if (v.id == vid) return &v;
        return nullptr;
    }
    const Stock* find_stock(std::string_view sid) const {
        for (const auto& s : stocks)
            if (s.id == sid) return &s;
        return nullptr;
    }
    const LookupTable* find_lookup(std::string_view lid) const {
        for (const auto& l : lookups)
            if (l.id == lid) return &l;
        return nullptr;
    }
    bool empty() const { return variables.empty() && stocks.empty() && lookups.empty(); }
};

inline bool structurally_equal(const Variable& a, const Variable& b) {
    return a.id == b.id && a.name == b.name && a.kind == b.kind &&
           equal(a.expression, b.expression) && a.unit == b.unit &&
           a.provenance == b.provenance && a.doc == b.doc && a.slider == b.slider;
}

inline bool structurally_equal(const Stock& a, const Stock& b) {
    return a.id == b.id && a.name == b.name && equal(a.initial, b.initial) &&
           a.inflows == b.inflows && a.outflows == b.outflows &&
           a.non_negative == b.non_negative && a.unit == b.unit &&
           a.provenance == b.provenance && a.doc == b.doc;
}

/// Equality up to element order.
inline bool structurally_equal(const Model& a, const Model& b) {
    if (a.id != b.id || a.name != b.name || !(a.time_spec == b.time_spec) ||
        a.notes != b.notes || a.data_bindings != b.data_bindings)
        return false;
    auto by_id = [](const auto* x, const auto* y) { return x->id < y->id; };
    auto sorted_ptrs = [&](const auto& vec) {
        std::vector<const typename std::decay_t<decltype(vec)>::value_type*> out;
        for (const auto& e : vec) out.push_back(&e);
        std::sort(out.begin(), out.end(), by_id);
        return out;
    };
    auto same = [&](const auto& va, const auto& vb, auto&& eq) {
        if (va.size() != vb.size()) return false;
        auto pa = sorted_ptrs(va);
        auto pb = sorted_ptrs(vb);
        for (std::size_t i = 0; i < pa.size(); ++i)
            if (!eq(*pa[i], *pb[i])) return false;
        return true;
    };
    if (!same(a.variables, b.variables,
              [](const Variable& x, const Variable& y) { return structurally_equal(x, y); }))
        return false;
    if (!same(a.stocks, b.stocks,
              [](const Stock& x, const Stock& y) { return structurally_equal(x, y); }))
        return false;
    if (!same(a.lookups, b.lookups, [](const LookupTable& x, const LookupTable& y) { return x == y; }))
        return false;
    auto la = a.links;
    auto lb = b.links;
    auto link_less = [](const InfluenceLink& x, const InfluenceLink& y) {
        return std::tie(x.from, x.to) < std::tie(y.from, y.to);
    };
    std::sort(la.begin(), la.end(), link_less);
    std::sort(lb.begin(), lb.end(), link_less);
    return la == lb;
}

} // namespace qqm
