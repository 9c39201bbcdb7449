#pragma once

/**
 * @file diagnostic.hpp
 * @brief Diagnostics, the stable error-code registry, and the library error type.
 *
 * Every code emitted anywhere in the library, the CLI or the HTTP service is
 * listed in error_registry(). Tests check that list for completeness.
 */

#include <algorithm>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qqm {

enum class Severity { error, warning, info };

inline std::string_view to_string(Severity s) {
    switch (s) {
    case Severity::error: return "error";
    case Severity::warning: return "warning";
    case Severity::info: return "info";
    }
    return "error";
}

/// 1-based line/column position in a model text.
struct Span {
    int line = 0;
    int column = 0;
    int length = 0;

    friend bool operator==(const Span&, const Span&) = default;
};

struct Diagnostic {
    Severity severity = Severity::error;
    std::string code;
    std::string message;
    std::string element; ///< element id, empty when the location is a text span
    std::optional<Span> span;
    std::optional<double> time; ///< simulation time for run-time aborts

    friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

inline Diagnostic make_error(std::string code, std::string message, std::string element = {}) {
    return {Severity::error, std::move(code), std::move(message), std::move(element), std::nullopt,
            std::nullopt};
}

inline Diagnostic make_warning(std::string code, std::string message, std::string element = {}) {
    return {Severity::warning, std::move(code), std::move(message), std::move(element),
            std::nullopt, std::nullopt};
}

inline Diagnostic make_info(std::string code, std::string message, std::string element = {}) {
    return {Severity::info, std::move(code), std::move(message), std::move(element), std::nullopt,
            std::nullopt};
}

inline bool has_errors(std::span<const Diagnostic> diags) {
    return std::any_of(diags.begin(), diags.end(),
                       [](const Diagnostic& d) { return d.severity == Severity::error; });
}

inline bool has_code(std::span<const Diagnostic> diags, std::string_view code) {
    return std::any_of(diags.begin(), diags.end(),
                       [&](const Diagnostic& d) { return d.code == code; });
}

/// Thrown by operations that abort (engine run, loaders, scenario application).
class Error : public std::runtime_error {
public:
    explicit Error(Diagnostic d)
        : std::runtime_error(d.code + ": " + d.message), diagnostics_{std::move(d)} {}

    explicit Error(std::vector<Diagnostic> ds)
        : std::runtime_error(ds.empty() ? std::string("error")
                                        : ds.front().code + ": " + ds.front().message),
          diagnostics_(std::move(ds)) {}

    const std::string& code() const { return diagnostics_.front().code; }
    const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

private:
    std::vector<Diagnostic> diagnostics_;
};

struct CodeInfo {
    std::string_view code;
    Severity severity;
    std::string_view meaning;
};

inline std::span<const CodeInfo> error_registry() {
    static constexpr CodeInfo codes[] = {
        // model structure
        {"E-DUP-ID", Severity::error, "element id declared more than once"},
        {"E-UNKNOWN-REF", Severity::error, "reference to an undeclared element"},
        {"E-RESERVED-ID", Severity::error, "identifier collides with a builtin or keyword"},
        {"E-BAD-ID", Severity::error, "identifier is not lowercase snake case"},
        {"E-TIME-SPEC", Severity::error, "invalid time specification"},
        {"E-CONST-EXPR", Severity::error,
         "constant expression references variables or time-dependent builtins"},
        {"E-NONCONST-PARAM", Severity::error,
         "delay/smooth parameter or stock initial value is not constant-evaluable"},
        {"E-DATA-BINDING", Severity::error, "data binding missing or attached to a non-data variable"},
        {"E-DUP-LINK", Severity::error, "influence link declared more than once"},
        {"E-BAD-LOOKUP", Severity::error, "lookup table needs >= 2 strictly increasing breakpoints"},
        {"E-NONFINITE", Severity::error, "non-finite numeric literal"},
        {"E-ALGEBRAIC-LOOP", Severity::error, "instantaneous dependency cycle without stock or delay"},
        {"E-BAD-FLOW", Severity::error, "stock inflow/outflow does not name a variable"},
        // text format
        {"E-SYNTAX", Severity::error, "malformed model text"},
        {"E-ARITY", Severity::error, "builtin called with the wrong number of arguments"},
        {"E-DUP-SCENARIO", Severity::error, "scenario declared more than once"},
        // evaluation and simulation
        {"E-DIV-ZERO", Severity::error, "division by exactly zero"},
        {"E-DOMAIN", Severity::error, "math domain error"},
        {"E-DATA-RANGE", Severity::error, "exogenous series cannot answer the requested time"},
        {"E-TAU-TOO-SMALL", Severity::error, "smooth time constant smaller than dt"},
        {"E-DELAY-TOO-SMALL", Severity::error, "fixed delay rounds to zero steps"},
        {"E-INCOMPLETE", Severity::error, "variable has no expression yet"},
        {"E-MISSING-DATA", Severity::error, "no series supplied for an exogenous variable"},
        // scenarios
        {"E-BAD-TARGET", Severity::error, "scenario target does not exist or cannot be modified"},
        {"E-OVERRIDE-NONCONST", Severity::error, "override targets a non-constant"},
        {"E-BAD-INTERVENTION", Severity::error, "intervention outside the time span or duplicated"},
        {"E-NO-SCENARIO", Severity::error, "scenario name not found"},
        // data files
        {"E-CSV-PARSE", Severity::error, "malformed CSV row"},
        {"E-NONMONOTONIC-TIME", Severity::error, "CSV times not strictly increasing"},
        {"E-MISSING-COLUMN", Severity::error, "requested CSV column absent"},
        {"E-EMPTY", Severity::error, "CSV file has no data rows"},
        // graph
        {"E-EMPTY-TREE", Severity::error, "consequence tree is empty"},
        {"E-BAD-TREE", Severity::error, "consequence tree node is malformed"},
        {"E-BAD-ARGUMENT", Severity::error, "argument out of range"},
        // indicators and comparison
        {"E-UNKNOWN-SERIES", Severity::error, "indicator target series absent from the run"},
        {"E-BAD-INDICATOR", Severity::error, "malformed indicator definition"},
        {"E-GRID-MISMATCH", Severity::error, "runs do not share a time grid"},
        {"E-NO-BASELINE", Severity::error, "baseline scenario not among the runs"},
        {"E-LINEAGE-MISMATCH", Severity::error, "runs derive from different base models"},
        // service
        {"E-IO", Severity::error, "file could not be read or written"},
        {"E-BAD-REQUEST", Severity::error, "malformed request"},
        {"E-TOO-LARGE", Severity::error, "run exceeds the request size cap"},
        {"E-NOT-FOUND", Severity::error, "unknown endpoint or resource"},
        {"E-INTERNAL", Severity::error, "engine defect"},
        // warnings
        {"W-LINK-UNUSED", Severity::warning, "declared link not reflected in the target expression"},
        {"W-LINK-MISSING", Severity::warning, "expression reference without a declared link"},
        {"W-SELF-LINK", Severity::warning, "link from an element to itself"},
        {"W-LOOP-TRUNCATED", Severity::warning, "loop enumeration stopped at max_count"},
        {"W-CLAMP", Severity::warning, "non-negative stock clamped at zero"},
        {"W-DELAY-ROUND", Severity::warning, "fixed delay rounded to a multiple of dt"},
        // infos
        {"I-EMPTY", Severity::info, "model has no elements"},
        {"I-INCOMPLETE", Severity::info, "variable expression still to be quantified"},
    };
    return codes;
}

inline const CodeInfo* find_code(std::string_view code) {
    for (const auto& c : error_registry())
        if (c.code == code) return &c;
    return nullptr;
}

} // namespace qqm
