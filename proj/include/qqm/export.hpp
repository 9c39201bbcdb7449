#pragma once

#include "qqm/diagnostic.hpp"
#include "qqm/engine.hpp"
#include "qqm/number.hpp"

#include <set>
#include <string>
#include <vector>

namespace qqm {

/// CSV export of a run: column `t` then one column per selected series
/// (all series when `selections` is empty), ids in ascending order.
inline std::string to_csv(const RunResult& r, const std::vector<std::string>& selections = {}) {
    std::vector<const std::vector<double>*> cols;
    std::string out = "t";
    auto add = [&](const std::string& id) {
        const auto* v = r.find(id);
        if (!v) throw Error(make_error("E-UNKNOWN-SERIES", "no series '" + id + "' in the run", id));
        cols.push_back(v);
        out += ',';
        out += id;
    };
    if (selections.empty())
        for (const auto& [id, v] : r.series) add(id);
    else
        for (const auto& id : std::set<std::string>(selections.begin(), selections.end())) add(id);
    out += '\n';
    for (std::size_t k = 0; k < r.times.size(); ++k) {
        out += format_number(r.times[k]);
        for (const auto* c : cols) {
            out += ',';
            out += format_number((*c)[k]);
        }
        out += '\n';
    }
    return out;
}

} // namespace qqm
