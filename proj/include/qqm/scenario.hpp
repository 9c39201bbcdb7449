#pragma once

/**
 * @file scenario.hpp
 * @brief Scenarios (constant overrides and timed interventions) and their
 *        compilation into a derived model.
 */

#include "qqm/diagnostic.hpp"
#include "qqm/expression.hpp"
#include "qqm/model.hpp"
#include "qqm/number.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace qqm {

enum class InterventionAction { set, scale };

inline std::string_view to_string(InterventionAction a) {
    return a == InterventionAction::set ? "set" : "scale";
}

struct Intervention {
    std::string target;
    double at_time = 0.0;
    InterventionAction action = InterventionAction::set;
    double value = 0.0; ///< new value for set, factor for scale

    friend bool operator==(const Intervention&, const Intervention&) = default;
};

struct Scenario {
    std::string name;
    std::map<std::string, double> overrides; ///< constant id -> value
    std::vector<Intervention> interventions;
    std::string description;

    bool empty() const { return overrides.empty() && interventions.empty(); }

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// A model file: the model plus the scenarios declared next to it.
struct ModelDocument {
    Model model;
    std::vector<Scenario> scenarios;

    const Scenario* find_scenario(std::string_view name) const {
        for (const auto& s : scenarios)
            if (s.name == name) return &s;
        return nullptr;
    }
};

/// Resolves a scenario by name. "baseline" resolves to the empty scenario when undeclared.
inline Scenario resolve_scenario(const ModelDocument& doc, std::string_view name) {
    if (const auto* s = doc.find_scenario(name)) return *s;
    if (name == "baseline") return Scenario{"baseline", {}, {}, "no changes"};
    throw Error(make_error("E-NO-SCENARIO", "unknown scenario '" + std::string(name) + "'"));
}

/// Problems with a scenario against a model; empty when it can be applied.
inline std::vector<Diagnostic> check_scenario(const Model& model, const Scenario& scenario) {
    std::vector<Diagnostic> out;
    for (const auto& [id, value] : scenario.overrides) {
        const auto* v = model.find_variable(id);
        if (!v) {
            out.push_back(make_error("E-BAD-TARGET",
                                     "scenario '" + scenario.name + "' overrides unknown id '" + id +
                                         "'",
                                     id));
        } else if (v->kind != VariableKind::constant) {
            out.push_back(make_error("E-OVERRIDE-NONCONST",
                                     "override target '" + id + "' is not a constant", id));
        }
        if (!std::isfinite(value))
            out.push_back(make_error("E-NONFINITE", "override value for '" + id + "' is not finite",
                                     id));
    }
    std::set<std::pair<std::string, double>> seen;
    const auto& ts = model.time_spec;
    for (const auto& iv : scenario.interventions) {
        const auto* v = model.find_variable(iv.target);
        if (!v || v->kind == VariableKind::exogenous || !v->expression) {
            out.push_back(make_error("E-BAD-TARGET",
                                     "intervention target '" + iv.target +
                                         "' is not a constant or auxiliary variable",
                                     iv.target));
        }
        if (iv.at_time < ts.t_start || iv.at_time > ts.t_stop)
            out.push_back(make_error("E-BAD-INTERVENTION",
                                     "intervention on '" + iv.target + "' at t=" +
                                         format_number(iv.at_time) + " lies outside the run",
                                     iv.target));
        if (!seen.emplace(iv.target, iv.at_time).second)
            out.push_back(make_error("E-BAD-INTERVENTION",
                                     "more than one intervention on '" + iv.target + "' at t=" +
                                         format_number(iv.at_time),
                                     iv.target));
        if (!std::isfinite(iv.value) || !std::isfinite(iv.at_time))
            out.push_back(make_error("E-NONFINITE", "intervention value is not finite", iv.target));
    }
    return out;
}

/**
 * Derives the scenario model.
 *
 * Overrides replace the constant's literal. Interventions wrap the target's
 * expression in time-gated pieces, applied in time order:
 *   set   -> if_then_else(time() >= at, value, original)
 *   scale -> if_then_else(time() >= at, factor, 1) * original
 * so stacked scales compose multiplicatively and a later set wins over
 * everything before it. A constant with interventions becomes an auxiliary.
 */
inline Model apply_scenario(const Model& model, const Scenario& scenario) {
    auto problems = check_scenario(model, scenario);
    if (!problems.empty()) throw Error(std::move(problems));

    Model out = model;
    for (const auto& [id, value] : scenario.overrides) out.find_variable(id)->expression = lit(value);

    auto ivs = scenario.interventions;
    std::stable_sort(ivs.begin(), ivs.end(), [](const Intervention& a, const Intervention& b) {
        return a.at_time < b.at_time;
    });
    for (const auto& iv : ivs) {
        auto* v = out.find_variable(iv.target);
        auto active = binary(BinaryOp::ge, call(Builtin::time, {}), lit(iv.at_time));
        if (iv.action == InterventionAction::set) {
            v->expression = call(Builtin::if_then_else, {active, lit(iv.value), v->expression});
        } else {
            v->expression = binary(BinaryOp::mul,
                                   call(Builtin::if_then_else, {active, lit(iv.value), lit(1.0)}),
                                   v->expression);
        }
        v->kind = VariableKind::auxiliary;
    }
    return out;
}

} // namespace qqm
