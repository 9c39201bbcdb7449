#pragma once

/**
 * @file data.hpp
 * @brief Exogenous time series (CSV ingestion, sampling) and lookup tables.
 *
 * CSV dialect: comma separator, '.' decimal point, first non-comment row is
 * the header, UTF-8, lines starting with '#' are comments. Empty cells are
 * errors; rows must already be in strictly increasing time order.
 */

#include "qqm/diagnostic.hpp"
#include "qqm/number.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qqm {

enum class Interp { hold, linear };
enum class Extrapolation { error, hold_ends };

inline std::string_view to_string(Interp i) { return i == Interp::hold ? "hold" : "linear"; }
inline std::string_view to_string(Extrapolation e) {
    return e == Extrapolation::error ? "error" : "hold_ends";
}

struct TimeSeries {
    std::string id;
    std::vector<double> times;
    std::vector<double> values;
    Interp interp = Interp::linear;
    Extrapolation extrapolation = Extrapolation::error;

    friend bool operator==(const TimeSeries&, const TimeSeries&) = default;
};

struct Breakpoint {
    double x;
    double y;

    friend bool operator==(const Breakpoint&, const Breakpoint&) = default;
};

/// Piecewise-linear table with held ends.
struct LookupTable {
    std::string id;
    std::vector<Breakpoint> points;
    std::string doc;

    friend bool operator==(const LookupTable&, const LookupTable&) = default;
};

struct SeriesOptions {
    Interp interp = Interp::linear;
    Extrapolation extrapolation = Extrapolation::error;
    std::string id; ///< defaults to the value column name
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            cells.push_back(trim(line.substr(start)));
            return cells;
        }
        cells.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
}

inline Diagnostic csv_error(std::string code, std::string msg, int line, const std::string& source) {
    Diagnostic d = make_error(std::move(code), std::move(msg), source);
    d.span = Span{line, 1, 0};
    return d;
}

} // namespace detail

/// Parses CSV text; `source` names the origin in diagnostics.
inline TimeSeries parse_series(std::string_view text, std::string_view time_column,
                               std::string_view value_column, const SeriesOptions& options = {},
                               const std::string& source = {}) {
    std::vector<std::string_view> header;
    std::size_t time_idx = 0;
    std::size_t value_idx = 0;
    TimeSeries series;
    series.id = options.id.empty() ? std::string(value_column) : options.id;
    series.interp = options.interp;
    series.extrapolation = options.extrapolation;

    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        auto trimmed = detail::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;

        auto cells = detail::split_commas(trimmed);
        if (header.empty()) {
            header = cells;
            auto find = [&](std::string_view name) -> std::size_t {
                auto it = std::find(header.begin(), header.end(), name);
                if (it == header.end())
                    throw Error(detail::csv_error("E-MISSING-COLUMN",
                                                  "column '" + std::string(name) + "' not found",
                                                  line_no, source));
                return static_cast<std::size_t>(it - header.begin());
            };
            time_idx = find(time_column);
            value_idx = find(value_column);
            continue;
        }
        if (cells.size() != header.size())
            throw Error(detail::csv_error("E-CSV-PARSE",
                                          "line " + std::to_string(line_no) + ": expected " +
                                              std::to_string(header.size()) + " cells, found " +
                                              std::to_string(cells.size()),
                                          line_no, source));
        auto t = parse_number(cells[time_idx]);
        auto v = parse_number(cells[value_idx]);
        if (!t || !v || !std::isfinite(*t) || !std::isfinite(*v))
            throw Error(detail::csv_error("E-CSV-PARSE",
                                          "line " + std::to_string(line_no) +
                                              ": missing or non-numeric cell",
                                          line_no, source));
        if (!series.times.empty() && !(*t > series.times.back()))
            throw Error(detail::csv_error("E-NONMONOTONIC-TIME",
                                          "line " + std::to_string(line_no) +
                                              ": time not strictly increasing",
                                          line_no, source));
        series.times.push_back(*t);
        series.values.push_back(*v);
    }
    if (header.empty() || series.times.empty())
        throw Error(make_error("E-EMPTY", "no data rows", source));
    return series;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(make_error("E-IO", "cannot read " + path.string(), path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline TimeSeries load_series(const std::filesystem::path& path, std::string_view time_column,
                              std::string_view value_column, const SeriesOptions& options = {}) {
    return parse_series(read_text_file(path), time_column, value_column, options, path.string());
}

/// Header row names of a CSV text (first non-comment line).
inline std::vector<std::string> csv_header(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        std::vector<std::string> out;
        for (auto c : detail::split_commas(t)) out.emplace_back(c);
        return out;
    }
    return {};
}

inline std::string to_csv(const TimeSeries& s, std::string_view time_column = "t",
                          std::string_view value_column = {}) {
    std::string out;
    out += time_column;
    out += ',';
    out += value_column.empty() ? std::string_view(s.id) : value_column;
    out += '\n';
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        out += format_number(s.times[i]);
        out += ',';
        out += format_number(s.values[i]);
        out += '\n';
    }
    return out;
}

/// Value of the series at time t under its interpolation and extrapolation policy.
inline double sample(const TimeSeries& s, double t) {
    const auto& ts = s.times;
    if (t < ts.front() || t > ts.back()) {
        if (s.extrapolation == Extrapolation::error)
            throw Error(make_error("E-DATA-RANGE",
                                   "series '" + s.id + "' has no value at t=" + format_number(t),
                                   s.id));
        return t < ts.front() ? s.values.front() : s.values.back();
    }
    // greatest index with times[i] <= t
    auto it = std::upper_bound(ts.begin(), ts.end(), t);
    auto i = static_cast<std::size_t>(it - ts.begin()) - 1;
    if (ts[i] == t || s.interp == Interp::hold || i + 1 == ts.size()) return s.values[i];
    const double frac = (t - ts[i]) / (ts[i + 1] - ts[i]);
    return s.values[i] + frac * (s.values[i + 1] - s.values[i]);
}

inline double lookup_eval(const LookupTable& table, double x) {
    const auto& p = table.points;
    if (x <= p.front().x) return p.front().y;
    if (x >= p.back().x) return p.back().y;
    auto it = std::upper_bound(p.begin(), p.end(), x,
                               [](double v, const Breakpoint& b) { return v < b.x; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    if (lo.x == x) return lo.y;
    return lo.y + (x - lo.x) * (hi.y - lo.y) / (hi.x - lo.x);
}

/// Structural problems of a table, as diagnostics.
inline std::vector<Diagnostic> check_lookup(const LookupTable& table) {
    std::vector<Diagnostic> out;
    if (table.points.size() < 2)
        out.push_back(make_error("E-BAD-LOOKUP", "lookup '" + table.id + "' needs at least 2 points",
                                 table.id));
    for (std::size_t i = 1; i < table.points.size(); ++i) {
        if (!(table.points[i].x > table.points[i - 1].x)) {
            out.push_back(make_error("E-BAD-LOOKUP",
                                     "lookup '" + table.id + "' x values not strictly increasing",
                                     table.id));
            break;
        }
    }
    for (const auto& b : table.points)
        if (!std::isfinite(b.x) || !std::isfinite(b.y)) {
            out.push_back(make_error("E-NONFINITE", "lookup '" + table.id + "' has a non-finite point",
                                     table.id));
            break;
        }
    return out;
}

} // namespace qqm
