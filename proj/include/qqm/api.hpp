#pragma once

/**
 * @file api.hpp
 * @brief Transport-independent JSON request handlers shared by the HTTP
 *        service and the command-line tool.
 *
 * Every handler takes the parsed request body and returns a status code and
 * a JSON payload. Failures use one envelope:
 *   {"http_status": 422, "code": "E-...", "message": "...", "diagnostics": [...]}
 * The handlers keep no state between calls.
 */

#include "qqm/diagnostic.hpp"
#include "qqm/engine.hpp"
#include "qqm/graph.hpp"
#include "qqm/indicators.hpp"
#include "qqm/json_io.hpp"
#include "qqm/parser.hpp"
#include "qqm/reference_models.hpp"
#include "qqm/scenario.hpp"
#include "qqm/validate.hpp"

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qqm::api {

/// Upper bound on grid points times returned series for a single run.
inline constexpr std::size_t default_max_cells = 200000;

struct Options {
    std::size_t max_cells = default_max_cells;
    const std::vector<ReferenceExample>* examples = nullptr; ///< null: the bundled examples
};

struct Response {
    int status = 200;
    json body;
};

struct ApiError {
    int http_status = 400;
    std::string code;
    std::string message;
    std::vector<Diagnostic> diagnostics;
};

inline json to_json(const ApiError& e) {
    return {{"http_status", e.http_status},
            {"code", e.code},
            {"message", e.message},
            {"diagnostics", qqm::to_json(e.diagnostics)}};
}

/// Status for an error code: request-shape problems are 400, lookups 404,
/// size caps 413, internal defects 500, everything else (model and run
/// errors) 422.
inline int status_for(std::string_view code) {
    if (code == "E-BAD-REQUEST") return 400;
    if (code == "E-NOT-FOUND") return 404;
    if (code == "E-TOO-LARGE") return 413;
    if (code == "E-INTERNAL") return 500;
    return 422;
}

inline ApiError from_error(const Error& e) {
    ApiError out;
    out.code = e.code();
    out.http_status = status_for(out.code);
    out.message = e.what();
    out.diagnostics = e.diagnostics();
    return out;
}

inline Response error_response(const ApiError& e) { return {e.http_status, to_json(e)}; }

namespace detail {

inline const json& field(const json& body, const char* key) {
    if (!body.is_object() || !body.contains(key))
        throw Error(make_error("E-BAD-REQUEST", std::string("request needs field '") + key + "'"));
    return body[key];
}

/// `model` is either model text or the JSON mirror (optionally with scenarios).
inline ModelDocument document_from_request(const json& body) {
    const json& m = field(body, "model");
    if (m.is_string()) {
        auto parsed = parse_model(m.get<std::string>());
        if (!parsed.ok()) throw Error(parsed.diagnostics);
        return parsed.document();
    }
    if (m.is_object()) return document_from_json(m);
    throw Error(make_error("E-BAD-REQUEST", "'model' must be model text or a model object"));
}

inline DataStore data_from_request(const json& body, const Model& model) {
    std::map<std::string, std::string> files;
    if (body.contains("data_files") && !body["data_files"].is_null()) {
        const json& df = body["data_files"];
        if (!df.is_object()) throw Error(make_error("E-BAD-REQUEST", "'data_files' must map paths to CSV text"));
        for (const auto& [path, text] : df.items()) {
            if (!text.is_string())
                throw Error(make_error("E-BAD-REQUEST", "data file '" + path + "' must be a string"));
            files[path] = text.get<std::string>();
        }
    }
    return load_data(model, files);
}

/// A scenario given by name (resolved in the document) or inline.
inline Scenario scenario_from_request(const json& s, const ModelDocument& doc) {
    if (s.is_null()) return resolve_scenario(doc, "baseline");
    if (s.is_string()) return resolve_scenario(doc, s.get<std::string>());
    return scenario_from_json(s);
}

inline std::vector<std::string> string_list(const json& body, const char* key) {
    if (!body.contains(key) || body[key].is_null()) return {};
    const json& v = body[key];
    if (!v.is_array()) throw Error(make_error("E-BAD-REQUEST", std::string("'") + key + "' must be an array"));
    std::vector<std::string> out;
    for (const auto& e : v) {
        if (!e.is_string()) throw Error(make_error("E-BAD-REQUEST", std::string("'") + key + "' must hold strings"));
        out.push_back(e.get<std::string>());
    }
    return out;
}

inline void check_size(const Model& model, std::size_t selected, std::size_t max_cells) {
    const std::size_t series = selected ? selected : model.variables.size() + model.stocks.size();
    const double points = (model.time_spec.t_stop - model.time_spec.t_start) / model.time_spec.dt + 1.0;
    if (!std::isfinite(points) || !(model.time_spec.dt > 0.0)) return; // left to validation
    if (points * static_cast<double>(series) > static_cast<double>(max_cells))
        throw Error(make_error("E-TOO-LARGE", "run would return " + format_number(points) + " grid points x " +
                                                  std::to_string(series) + " series, above the limit of " +
                                                  std::to_string(max_cells)));
}

inline int int_field(const json& body, const char* key, int fallback) {
    if (!body.contains(key) || body[key].is_null()) return fallback;
    if (!body[key].is_number_integer())
        throw Error(make_error("E-BAD-REQUEST", std::string("'") + key + "' must be an integer"));
    return body[key].get<int>();
}

} // namespace detail

// --- handlers ---------------------------------------------------------------

/// POST /api/parse {text} -> {model, diagnostics}; 422 with spans on errors.
inline Response parse(const json& body) {
    const json& text = detail::field(body, "text");
    if (!text.is_string()) throw Error(make_error("E-BAD-REQUEST", "'text' must be a string"));
    auto parsed = parse_model(text.get<std::string>());
    if (!parsed.ok()) throw Error(parsed.diagnostics);
    return {200, {{"model", qqm::to_json(parsed.document())}, {"diagnostics", qqm::to_json(parsed.diagnostics)}}};
}

/// POST /api/validate {model} -> {diagnostics}. Parse errors are reported as diagnostics.
inline Response validate(const json& body) {
    const json& m = detail::field(body, "model");
    if (m.is_string()) {
        auto parsed = parse_model(m.get<std::string>());
        if (!parsed.ok()) return {200, {{"diagnostics", qqm::to_json(parsed.diagnostics)}}};
        return {200, {{"diagnostics", qqm::to_json(validate_model(*parsed.model))}}};
    }
    auto doc = detail::document_from_request(body);
    return {200, {{"diagnostics", qqm::to_json(validate_model(doc.model))}}};
}

/// POST /api/run {model, scenario?, selections?, data_files?} -> {run_result}.
inline Response run(const json& body, const Options& opt = {}) {
    auto doc = detail::document_from_request(body);
    auto selections = detail::string_list(body, "selections");
    detail::check_size(doc.model, selections.size(), opt.max_cells);
    auto scenario = detail::scenario_from_request(body.value("scenario", json()), doc);
    auto data = detail::data_from_request(body, doc.model);
    auto result = qqm::run(doc.model, scenario, data);
    return {200, {{"run_result", qqm::to_json(result, selections)}}};
}

/// POST /api/loops {model, max_len?, max_count?} -> loop report.
inline Response loops(const json& body) {
    auto doc = detail::document_from_request(body);
    auto report = enumerate_feedback_loops(doc.model, detail::int_field(body, "max_len", default_max_loop_length),
                                           detail::int_field(body, "max_count", default_max_loop_count));
    return {200, qqm::to_json(report)};
}

/// POST /api/compare {model, baseline, scenarios, indicators, data_files?} -> {comparison_table}.
inline Response compare(const json& body, const Options& opt = {}) {
    auto doc = detail::document_from_request(body);
    const json& base = detail::field(body, "baseline");
    if (!base.is_string()) throw Error(make_error("E-BAD-REQUEST", "'baseline' must be a scenario name"));
    const json& scs = detail::field(body, "scenarios");
    if (!scs.is_array()) throw Error(make_error("E-BAD-REQUEST", "'scenarios' must be an array"));
    std::vector<Scenario> scenarios;
    for (const auto& s : scs) scenarios.push_back(detail::scenario_from_request(s, doc));
    auto indicators = indicators_from_json(detail::field(body, "indicators"));
    detail::check_size(doc.model, 0, opt.max_cells);
    auto data = detail::data_from_request(body, doc.model);
    auto runs = run_scenarios(doc.model, scenarios, data);
    auto table = compare_runs(runs, base.get<std::string>(), indicators);
    return {200, {{"comparison_table", qqm::to_json(table)}}};
}

/// GET /api/examples -> {examples: [{id, description}]}.
inline Response examples(const Options& opt = {}) {
    json list = json::array();
    for (const auto& e : opt.examples ? *opt.examples : reference_examples()) list.push_back({{"id", e.id}, {"description", e.description}});
    return {200, {{"examples", std::move(list)}}};
}

/// GET /api/examples/{id} -> {id, description, text, data_files, indicators}.
inline Response example(std::string_view id, const Options& opt = {}) {
    const auto& e = find_reference_example(id, opt.examples ? *opt.examples : reference_examples());
    json files = json::object();
    for (const auto& [path, text] : e.data_files) files[path] = text;
    return {200,
            {{"id", e.id},
             {"description", e.description},
             {"text", e.text},
             {"data_files", std::move(files)},
             {"indicators", json::parse(e.indicators)}}};
}

/**
 * Routes one request. `body` is the raw request text; malformed JSON is 400.
 * Never throws.
 */
inline Response handle(std::string_view method, std::string_view path, std::string_view body,
                       const Options& opt = {}) {
    try {
        if (method == "GET") {
            if (path == "/api/examples") return examples(opt);
            constexpr std::string_view prefix = "/api/examples/";
            if (path.substr(0, prefix.size()) == prefix) return example(path.substr(prefix.size()), opt);
            throw Error(make_error("E-NOT-FOUND", "no endpoint GET " + std::string(path)));
        }
        if (method != "POST") throw Error(make_error("E-NOT-FOUND", "no endpoint " + std::string(method) + " " + std::string(path)));

        json request;
        try {
            request = json::parse(body);
        } catch (const json::parse_error& e) {
            throw Error(make_error("E-BAD-REQUEST", std::string("malformed JSON: ") + e.what()));
        }
        if (path == "/api/parse") return parse(request);
        if (path == "/api/validate") return validate(request);
        if (path == "/api/run") return run(request, opt);
        if (path == "/api/loops") return loops(request);
        if (path == "/api/compare") return compare(request, opt);
        throw Error(make_error("E-NOT-FOUND", "no endpoint POST " + std::string(path)));
    } catch (const Error& e) {
        return error_response(from_error(e));
    } catch (const json::exception& e) {
        return error_response({400, "E-BAD-REQUEST", e.what(), {make_error("E-BAD-REQUEST", e.what())}});
    } catch (const std::exception& e) {
        return error_response({500, "E-INTERNAL", e.what(), {make_error("E-INTERNAL", e.what())}});
    }
}

} // namespace qqm::api
