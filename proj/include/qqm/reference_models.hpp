#pragma once

/**
 * @file reference_models.hpp
 * @brief Bundled example models: the second-hand clothing platform and the
 *        efficiency rebound demo.
 *
 * The texts are the files under models/, embedded at configure time into
 * <qqm/embedded_models.hpp>.
 */

#include "qqm/data.hpp"
#include "qqm/diagnostic.hpp"
#include "qqm/embedded_models.hpp"
#include "qqm/engine.hpp"
#include "qqm/model.hpp"
#include "qqm/parser.hpp"
#include "qqm/scenario.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace qqm {

struct ReferenceExample {
    std::string id;
    std::string description;
    std::string text;                              ///< canonical .mag contents
    std::map<std::string, std::string> data_files; ///< binding path -> CSV contents
    std::string indicators = "[]";                 ///< JSON array of indicators
};

inline const std::vector<ReferenceExample>& reference_examples() {
    static const std::vector<ReferenceExample> examples{
        {"rebound_demo", "Minimal efficiency rebound (backfire above elasticity 1)",
         std::string(embedded::rebound_demo_mag), {}, std::string(embedded::rebound_demo_indicators_json)},
        {"second_hand_platform", "Second-hand clothing platform with four effect orders",
         std::string(embedded::second_hand_platform_mag), {{"users.csv", std::string(embedded::users_csv)}},
         std::string(embedded::second_hand_platform_indicators_json)},
    };
    return examples;
}

inline const ReferenceExample& find_reference_example(std::string_view id,
                                                      const std::vector<ReferenceExample>& catalog = reference_examples()) {
    for (const auto& e : catalog)
        if (e.id == id) return e;
    throw Error(make_error("E-NOT-FOUND", "no example '" + std::string(id) + "'"));
}

/**
 * Catalog from a directory: every `<stem>.mag` with the data files it binds
 * (paths relative to the directory) and an optional `<stem>.indicators.json`.
 * Throws E-IO when the directory or a bound file cannot be read.
 */
inline std::vector<ReferenceExample> load_example_directory(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(dir, ec))
        throw Error(make_error("E-IO", "cannot read model directory '" + dir.string() + "'"));
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir, ec))
        if (entry.path().extension() == ".mag") files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    std::vector<ReferenceExample> out;
    for (const auto& f : files) {
        ReferenceExample ex;
        ex.id = f.stem().string();
        ex.text = read_text_file(f);
        auto parsed = parse_model(ex.text);
        if (parsed.ok()) {
            ex.description = parsed.model->name;
            for (const auto& [id, b] : parsed.model->data_bindings)
                ex.data_files[b.path] = read_text_file(dir / b.path);
        }
        auto ind = dir / (ex.id + ".indicators.json");
        if (fs::exists(ind, ec)) ex.indicators = read_text_file(ind);
        out.push_back(std::move(ex));
    }
    return out;
}

/// Parses a bundled example; the shipped texts are known to be valid.
inline ModelDocument reference_document(std::string_view id) {
    auto parsed = parse_model(find_reference_example(id).text);
    if (!parsed.ok()) throw Error(parsed.diagnostics);
    return parsed.document();
}

inline DataStore reference_data(std::string_view id) {
    const auto& ex = find_reference_example(id);
    return load_data(reference_document(id).model, ex.data_files);
}

inline Model build_second_hand_model() { return reference_document("second_hand_platform").model; }

inline Model build_rebound_demo() { return reference_document("rebound_demo").model; }

} // namespace qqm
