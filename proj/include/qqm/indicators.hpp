#pragma once

/**
 * @file indicators.hpp
 * @brief Scalar run summaries and relative comparison of scenario runs.
 */

#include "qqm/diagnostic.hpp"
#include "qqm/engine.hpp"
#include "qqm/number.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace qqm {

enum class IndicatorKind { final_value, cumulative, peak, average, time_to_threshold };

inline constexpr std::string_view indicator_kind_names[] = {"final_value", "cumulative", "peak",
                                                            "average", "time_to_threshold"};

inline std::string_view to_string(IndicatorKind k) { return indicator_kind_names[static_cast<int>(k)]; }

inline std::optional<IndicatorKind> parse_indicator_kind(std::string_view s) {
    for (int i = 0; i < 5; ++i)
        if (indicator_kind_names[i] == s) return static_cast<IndicatorKind>(i);
    return std::nullopt;
}

/// Crossing direction for time_to_threshold.
enum class Direction { rising, falling };

inline std::string_view to_string(Direction d) { return d == Direction::rising ? "rising" : "falling"; }

struct Indicator {
    std::string name;
    std::string target;
    IndicatorKind kind = IndicatorKind::final_value;
    double threshold = 0.0;
    Direction direction = Direction::rising;
};

/**
 * cumulative: left-rectangle sum of v(t) * dt over t_start .. t_stop - dt.
 * average: cumulative / (t_stop - t_start).
 * time_to_threshold: first grid time with v >= threshold (rising) or
 * v <= threshold (falling); absent when never reached.
 */
inline std::optional<double> compute_indicator(const RunResult& run, const Indicator& indicator) {
    const auto* v = run.find(indicator.target);
    if (!v)
        throw Error(make_error("E-UNKNOWN-SERIES",
                               "indicator '" + indicator.name + "' targets unknown series '" +
                                   indicator.target + "'",
                               indicator.target));
    const auto& s = *v;
    const double dt = run.time_spec.dt;
    switch (indicator.kind) {
    case IndicatorKind::final_value: return s.back();
    case IndicatorKind::peak: return *std::max_element(s.begin(), s.end());
    case IndicatorKind::cumulative:
    case IndicatorKind::average: {
        double sum = 0.0;
        for (std::size_t k = 0; k + 1 < s.size(); ++k) sum += s[k] * dt;
        if (indicator.kind == IndicatorKind::cumulative) return sum;
        return sum / (run.time_spec.t_stop - run.time_spec.t_start);
    }
    case IndicatorKind::time_to_threshold:
        for (std::size_t k = 0; k < s.size(); ++k) {
            bool hit = indicator.direction == Direction::rising ? s[k] >= indicator.threshold
                                                                : s[k] <= indicator.threshold;
            if (hit) return run.times[k];
        }
        return std::nullopt;
    }
    return std::nullopt;
}

struct ComparisonRow {
    std::string indicator;
    std::string scenario;
    std::optional<double> value;
    std::optional<double> delta_abs; ///< value - baseline value
    std::optional<double> delta_rel; ///< delta_abs / |baseline value|; absent when that is 0
};

struct ComparisonTable {
    std::string baseline;
    std::vector<ComparisonRow> rows; ///< ordered by (indicator, scenario)
};

inline ComparisonTable compare_runs(std::span<const RunResult> runs, std::string_view baseline,
                                    std::span<const Indicator> indicators) {
    const RunResult* base = nullptr;
    for (const auto& r : runs)
        if (r.scenario_name == baseline) base = &r;
    if (!base)
        throw Error(make_error("E-NO-BASELINE",
                               "baseline '" + std::string(baseline) + "' is not among the runs"));
    std::set<std::string> names;
    for (const auto& r : runs) {
        if (!names.insert(r.scenario_name).second)
            throw Error(make_error("E-DUP-SCENARIO", "scenario '" + r.scenario_name + "' appears twice in the comparison"));
        if (r.times != base->times)
            throw Error(make_error("E-GRID-MISMATCH", "run '" + r.scenario_name +
                                                          "' uses a different time grid than '" +
                                                          base->scenario_name + "'"));
        if (r.model_fingerprint != base->model_fingerprint)
            throw Error(make_error("E-LINEAGE-MISMATCH", "run '" + r.scenario_name +
                                                             "' comes from a different base model"));
    }

    ComparisonTable table;
    table.baseline = std::string(baseline);
    for (const auto& ind : indicators) {
        const auto base_value = compute_indicator(*base, ind);
        for (const auto& r : runs) {
            ComparisonRow row;
            row.indicator = ind.name;
            row.scenario = r.scenario_name;
            row.value = &r == base ? base_value : compute_indicator(r, ind);
            if (row.value && base_value) {
                row.delta_abs = *row.value - *base_value;
                if (*base_value != 0.0) row.delta_rel = *row.delta_abs / std::abs(*base_value);
            }
            table.rows.push_back(std::move(row));
        }
    }
    std::stable_sort(table.rows.begin(), table.rows.end(),
                     [](const ComparisonRow& a, const ComparisonRow& b) {
                         return std::tie(a.indicator, a.scenario) < std::tie(b.indicator, b.scenario);
                     });
    return table;
}

/// Aligned plain-text rendering.
inline std::string format_table(const ComparisonTable& table) {
    std::vector<std::vector<std::string>> cells{
        {"indicator", "scenario", "value", "delta_abs", "delta_rel"}};
    auto num = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string("-"); };
    for (const auto& r : table.rows)
        cells.push_back({r.indicator, r.scenario, num(r.value), num(r.delta_abs), num(r.delta_rel)});
    std::vector<std::size_t> width(5, 0);
    for (const auto& row : cells)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    std::string out = "baseline: " + table.baseline + "\n";
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out += row[c];
            if (c + 1 < row.size()) out += std::string(width[c] - row[c].size() + 2, ' ');
        }
        out += "\n";
    }
    return out;
}

} // namespace qqm
