#pragma once

#include "qqm/diagnostic.hpp"
#include "qqm/model.hpp"
#include "qqm/scenario.hpp"
#include "qqm/text_writer.hpp"
#include "qqm/validate.hpp"

#include <string>
#include <vector>

namespace qqm {

/// Canonical text of a model. Throws qqm::Error when the model has validation errors.
inline std::string serialize_model(const Model& model) {
    auto diags = validate_model(model);
    if (has_errors(diags)) {
        std::vector<Diagnostic> errors;
        for (auto& d : diags)
            if (d.severity == Severity::error) errors.push_back(std::move(d));
        throw Error(std::move(errors));
    }
    return write_model(model);
}

/// Canonical text of a model file including its scenarios.
inline std::string serialize_document(const ModelDocument& doc) {
    std::string text = serialize_model(doc.model);
    std::vector<const Scenario*> scs;
    for (const auto& s : doc.scenarios) scs.push_back(&s);
    std::sort(scs.begin(), scs.end(),
              [](const Scenario* a, const Scenario* b) { return a->name < b->name; });
    if (!scs.empty()) text += "\n";
    for (const auto* s : scs) text += write_scenario(*s);
    return text;
}

} // namespace qqm
