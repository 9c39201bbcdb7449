#pragma once

/**
 * @file engine.hpp
 * @brief Deterministic fixed-step simulation (explicit Euler).
 *
 * Per grid point k at time t:
 *   1. sample exogenous series,
 *   2. evaluate constants and auxiliaries in evaluation order, reading
 *      start-of-step stock values and, for delay_fixed/smooth, only state
 *      committed in earlier steps,
 *   3. integrate stocks: S(t+dt) = S(t) + dt * (sum inflows - sum outflows),
 *      clamped at 0 for non-negative stocks,
 *   4. commit delay state from this step's inputs.
 * Steps 3 and 4 are skipped at the last grid point, where auxiliaries are
 * evaluated once more against the final stock values.
 */

#include "qqm/data.hpp"
#include "qqm/diagnostic.hpp"
#include "qqm/eval.hpp"
#include "qqm/expression.hpp"
#include "qqm/graph.hpp"
#include "qqm/model.hpp"
#include "qqm/number.hpp"
#include "qqm/scenario.hpp"
#include "qqm/validate.hpp"

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <future>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qqm {

/// Exogenous series keyed by the variable they feed.
using DataStore = std::map<std::string, TimeSeries>;

struct RunResult {
    std::string scenario_name;
    std::string model_fingerprint;    ///< base model, before the scenario
    std::string scenario_fingerprint; ///< model after applying the scenario
    TimeSpec time_spec;
    std::vector<double> times;
    std::map<std::string, std::vector<double>> series;
    std::vector<Diagnostic> diagnostics;

    const std::vector<double>* find(std::string_view id) const {
        auto it = series.find(std::string(id));
        return it == series.end() ? nullptr : &it->second;
    }
};

/// Loads every bound series from files, resolving paths against `base_dir`.
/// The first CSV column is the time column.
inline DataStore load_data(const Model& model, const std::filesystem::path& base_dir) {
    DataStore store;
    for (const auto& [id, b] : model.data_bindings) {
        auto path = base_dir / b.path;
        auto text = read_text_file(path);
        auto header = csv_header(text);
        if (header.empty()) throw Error(make_error("E-EMPTY", "no header in " + b.path, id));
        store[id] = parse_series(text, header.front(), b.column,
                                 SeriesOptions{b.interp, b.extrapolation, id}, b.path);
    }
    return store;
}

/// Same as load_data but from in-memory file contents keyed by binding path.
inline DataStore load_data(const Model& model, const std::map<std::string, std::string>& files) {
    DataStore store;
    for (const auto& [id, b] : model.data_bindings) {
        auto it = files.find(b.path);
        if (it == files.end())
            throw Error(make_error("E-MISSING-DATA", "no contents supplied for '" + b.path + "'", id));
        auto header = csv_header(it->second);
        if (header.empty()) throw Error(make_error("E-EMPTY", "no header in " + b.path, id));
        store[id] = parse_series(it->second, header.front(), b.column,
                                 SeriesOptions{b.interp, b.extrapolation, id}, b.path);
    }
    return store;
}

namespace detail {

class DelayState final : public DelayStateView {
public:
    struct Site {
        const Call* call = nullptr;
        std::string owner;
        bool is_smooth = false;
        std::size_t lag = 0;    ///< delay_fixed: steps
        double init = 0.0;
        double gain = 0.0;      ///< smooth: dt / tau
        double level = 0.0;     ///< smooth: current output
        std::vector<double> history; ///< delay_fixed: committed inputs, one per step
    };

    double output(const Call& site) const override {
        const Site& s = sites_.at(&site);
        if (s.is_smooth) return s.level;
        if (s.history.size() >= s.lag) return s.history[s.history.size() - s.lag];
        return s.init;
    }

    void add(Site s) {
        order_.push_back(s.call);
        sites_.emplace(s.call, std::move(s));
    }

    /// Evaluates every site input against the completed step, then updates all sites.
    void commit(const Env& env, double t) {
        inputs_.resize(order_.size());
        for (std::size_t i = 0; i < order_.size(); ++i) {
            const Site& s = sites_.at(order_[i]);
            try {
                inputs_[i] = eval_expression(*s.call->args[0], env, t, this);
            } catch (const Error& e) {
                throw located(e, s.owner, t);
            }
        }
        for (std::size_t i = 0; i < order_.size(); ++i) {
            Site& s = sites_.at(order_[i]);
            if (s.is_smooth)
                s.level = s.level + s.gain * (inputs_[i] - s.level);
            else
                s.history.push_back(inputs_[i]);
        }
    }

    static Error located(const Error& e, const std::string& owner, double t) {
        Diagnostic d = e.diagnostics().front();
        d.element = owner;
        d.time = t;
        d.message = "'" + owner + "' at t=" + format_number(t) + ": " + d.message;
        return Error(std::move(d));
    }

private:
    std::map<const Call*, Site> sites_;
    std::vector<const Call*> order_;
    std::vector<double> inputs_;
};

} // namespace detail

/// Simulates `model` under `scenario`. Throws qqm::Error on structural problems or run aborts.
inline RunResult run(const Model& model, const Scenario& scenario, const DataStore& data = {}) {
    const Model applied = apply_scenario(model, scenario);

    std::vector<Diagnostic> errors;
    for (auto& d : validate_model(applied))
        if (d.severity == Severity::error) errors.push_back(std::move(d));
    for (const auto& v : applied.variables)
        if (v.kind == VariableKind::auxiliary && !v.expression)
            errors.push_back(make_error("E-INCOMPLETE", "'" + v.id + "' has no expression", v.id));
    for (const auto& [id, b] : applied.data_bindings)
        if (!data.count(id))
            errors.push_back(make_error("E-MISSING-DATA", "no series supplied for '" + id + "'", id));
    if (!errors.empty()) throw Error(std::move(errors));

    const auto order = evaluation_order(build_dependency_graph(applied));
    const TimeSpec& ts = applied.time_spec;
    const std::size_t steps = step_count(ts);

    RunResult result;
    result.scenario_name = scenario.name;
    result.model_fingerprint = model_fingerprint(model);
    result.scenario_fingerprint = model_fingerprint(applied);
    result.time_spec = ts;

    std::map<std::string, const Variable*> vars;
    for (const auto& v : applied.variables) vars.emplace(v.id, &v);

    Env env;
    env.tables = &applied.lookups;

    // constants first: stock initials and delay parameters depend only on them
    for (const auto& id : order) {
        auto it = vars.find(id);
        if (it == vars.end() || it->second->kind != VariableKind::constant) continue;
        try {
            env.values[id] = eval_expression(it->second->expression, env, ts.t_start);
        } catch (const Error& e) {
            throw detail::DelayState::located(e, id, ts.t_start);
        }
    }

    std::vector<double> levels;
    for (const auto& s : applied.stocks) {
        try {
            levels.push_back(eval_expression(s.initial, env, ts.t_start));
        } catch (const Error& e) {
            throw detail::DelayState::located(e, s.id, ts.t_start);
        }
    }

    detail::DelayState delays;
    for (const auto& id : order) {
        auto it = vars.find(id);
        if (it == vars.end() || !it->second->expression) continue;
        for (const Call* c : delay_calls(it->second->expression)) {
            detail::DelayState::Site site;
            site.call = c;
            site.owner = id;
            try {
                double param = eval_expression(c->args[1], env, ts.t_start);
                site.init = eval_expression(c->args[2], env, ts.t_start);
                if (c->fn == Builtin::smooth) {
                    site.is_smooth = true;
                    if (!(param >= ts.dt))
                        throw Error(make_error("E-TAU-TOO-SMALL",
                                               "smooth time constant " + format_number(param) +
                                                   " is smaller than dt " + format_number(ts.dt),
                                               id));
                    site.gain = ts.dt / param;
                    site.level = site.init;
                } else {
                    const double ratio = param / ts.dt;
                    const long long lag = std::llround(ratio);
                    if (lag < 1)
                        throw Error(make_error("E-DELAY-TOO-SMALL",
                                               "delay " + format_number(param) +
                                                   " rounds to zero steps of dt " + format_number(ts.dt),
                                               id));
                    if (std::abs(ratio - static_cast<double>(lag)) > 1e-9)
                        result.diagnostics.push_back(make_warning(
                            "W-DELAY-ROUND",
                            "delay " + format_number(param) + " in '" + id + "' rounded to " +
                                format_number(static_cast<double>(lag) * ts.dt),
                            id));
                    site.lag = static_cast<std::size_t>(lag);
                    site.history.reserve(steps);
                }
            } catch (const Error& e) {
                if (e.code() == "E-TAU-TOO-SMALL" || e.code() == "E-DELAY-TOO-SMALL") throw;
                throw detail::DelayState::located(e, id, ts.t_start);
            }
            delays.add(std::move(site));
        }
    }

    for (const auto& id : order) result.series[id].reserve(steps + 1);
    std::vector<bool> clamp_warned(applied.stocks.size(), false);

    result.times.reserve(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = grid_time(ts, k);
        result.times.push_back(t);
        for (std::size_t i = 0; i < applied.stocks.size(); ++i)
            env.values[applied.stocks[i].id] = levels[i];

        for (const auto& id : order) {
            auto it = vars.find(id);
            if (it == vars.end()) continue; // stock
            const Variable& v = *it->second;
            try {
                if (v.kind == VariableKind::exogenous)
                    env.values[id] = sample(data.at(id), t);
                else
                    env.values[id] = eval_expression(v.expression, env, t, &delays);
            } catch (const Error& e) {
                throw detail::DelayState::located(e, id, t);
            }
        }
        for (auto& [id, col] : result.series) col.push_back(env.values.at(id));
        if (k == steps) break;

        delays.commit(env, t);
        for (std::size_t i = 0; i < applied.stocks.size(); ++i) {
            const Stock& s = applied.stocks[i];
            double net = 0.0;
            for (const auto& f : s.inflows) net += env.values.at(f);
            for (const auto& f : s.outflows) net -= env.values.at(f);
            double next = levels[i] + ts.dt * net;
            if (s.non_negative && next < 0.0) {
                if (!clamp_warned[i]) {
                    Diagnostic d = make_warning("W-CLAMP",
                                                "stock '" + s.id + "' clamped at 0 (first at t=" +
                                                    format_number(grid_time(ts, k + 1)) + ")",
                                                s.id);
                    d.time = grid_time(ts, k + 1);
                    result.diagnostics.push_back(std::move(d));
                    clamp_warned[i] = true;
                }
                next = 0.0;
            }
            levels[i] = next;
        }
    }
    return result;
}

/**
 * Runs several scenarios of one model. Each run works on its own copy of
 * the derived model and its own state; with `parallel` the runs execute on
 * separate threads and results come back in input order.
 */
inline std::vector<RunResult> run_scenarios(const Model& model, std::span<const Scenario> scenarios,
                                            const DataStore& data = {}, bool parallel = false) {
    std::vector<RunResult> out;
    out.reserve(scenarios.size());
    if (!parallel) {
        for (const auto& sc : scenarios) out.push_back(run(model, sc, data));
        return out;
    }
    std::vector<std::future<RunResult>> futures;
    for (const auto& sc : scenarios)
        futures.push_back(std::async(std::launch::async, [&model, &sc, &data] {
            return run(model, sc, data);
        }));
    for (auto& f : futures) out.push_back(f.get());
    return out;
}

} // namespace qqm
