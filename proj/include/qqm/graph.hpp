#pragma once

/**
 * @file graph.hpp
 * @brief Dependency graph, evaluation ordering, feedback-loop enumeration and
 *        consequence-tree import.
 */

#include "qqm/diagnostic.hpp"
#include "qqm/expression.hpp"
#include "qqm/model.hpp"

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qqm {

using Edge = std::pair<std::string, std::string>;

/**
 * Instantaneous edges: the target's expression reads the source in the same
 * step. Lagged edges: the read goes through a delay_fixed/smooth input or a
 * stock integrates the source as a flow. Stocks themselves are read at their
 * start-of-step value, so stock -> reader edges are instantaneous.
 */
struct DependencyGraph {
    std::vector<std::string> nodes; ///< variables and stocks, ascending
    std::set<Edge> instantaneous_edges;
    std::set<Edge> lagged_edges;
};

inline DependencyGraph build_dependency_graph(const Model& model) {
    DependencyGraph g;
    std::set<std::string> ids;
    for (const auto& v : model.variables) ids.insert(v.id);
    for (const auto& s : model.stocks) ids.insert(s.id);
    g.nodes.assign(ids.begin(), ids.end());

    for (const auto& v : model.variables) {
        if (!v.expression) continue;
        auto refs = collect_references(v.expression);
        for (const auto& r : refs.instantaneous)
            if (ids.count(r)) g.instantaneous_edges.emplace(r, v.id);
        for (const auto& r : refs.lagged)
            if (ids.count(r)) g.lagged_edges.emplace(r, v.id);
    }
    for (const auto& s : model.stocks) {
        for (const auto& f : s.inflows)
            if (ids.count(f)) g.lagged_edges.emplace(f, s.id);
        for (const auto& f : s.outflows)
            if (ids.count(f)) g.lagged_edges.emplace(f, s.id);
    }
    return g;
}

class AlgebraicLoopError : public Error {
public:
    explicit AlgebraicLoopError(std::vector<std::string> cycle)
        : Error(make_diag(cycle)), cycle_(std::move(cycle)) {}

    const std::vector<std::string>& cycle() const { return cycle_; }

private:
    static Diagnostic make_diag(const std::vector<std::string>& cycle) {
        std::string path;
        for (const auto& id : cycle) path += id + " -> ";
        path += cycle.front();
        return make_error("E-ALGEBRAIC-LOOP",
                          "instantaneous cycle without stock or delay: " + path, cycle.front());
    }
    std::vector<std::string> cycle_;
};

namespace detail {

/// A cycle inside `remaining`, where every node has a predecessor in `remaining`.
inline std::vector<std::string> extract_cycle(const std::set<std::string>& remaining,
                                              const std::map<std::string, std::set<std::string>>& preds) {
    std::vector<std::string> walk;
    std::map<std::string, std::size_t> seen;
    std::string u = *remaining.begin();
    while (!seen.count(u)) {
        seen[u] = walk.size();
        walk.push_back(u);
        const auto& ps = preds.at(u);
        auto it = std::find_if(ps.begin(), ps.end(),
                               [&](const std::string& p) { return remaining.count(p) > 0; });
        u = *it;
    }
    // walk[seen[u]..] follows predecessor edges; reverse for the forward direction
    std::vector<std::string> cycle(walk.begin() + static_cast<std::ptrdiff_t>(seen[u]), walk.end());
    std::reverse(cycle.begin(), cycle.end());
    auto smallest = std::min_element(cycle.begin(), cycle.end());
    std::rotate(cycle.begin(), smallest, cycle.end());
    return cycle;
}

} // namespace detail

/// Topological order of the instantaneous subgraph; ties broken by ascending id.
inline std::vector<std::string> evaluation_order(const DependencyGraph& g) {
    std::map<std::string, std::set<std::string>> succ;
    std::map<std::string, std::set<std::string>> preds;
    std::map<std::string, std::size_t> indegree;
    for (const auto& n : g.nodes) {
        succ[n];
        preds[n];
        indegree[n] = 0;
    }
    for (const auto& [from, to] : g.instantaneous_edges) {
        if (succ[from].insert(to).second) {
            preds[to].insert(from);
            ++indegree[to];
        }
    }
    std::set<std::string> ready;
    for (const auto& [n, d] : indegree)
        if (d == 0) ready.insert(n);
    std::vector<std::string> order;
    while (!ready.empty()) {
        auto n = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(n);
        for (const auto& m : succ[n])
            if (--indegree[m] == 0) ready.insert(m);
    }
    if (order.size() != g.nodes.size()) {
        std::set<std::string> remaining;
        for (const auto& [n, d] : indegree)
            if (d > 0) remaining.insert(n);
        throw AlgebraicLoopError(detail::extract_cycle(remaining, preds));
    }
    return order;
}

// ---------------------------------------------------------------------------
// feedback loops

enum class LoopClass { reinforcing, balancing, undetermined };

inline std::string_view to_string(LoopClass c) {
    switch (c) {
    case LoopClass::reinforcing: return "reinforcing";
    case LoopClass::balancing: return "balancing";
    case LoopClass::undetermined: return "undetermined";
    }
    return "undetermined";
}

/// Even number of negative links reinforces, odd balances; any unspecified link leaves it open.
inline LoopClass classify_polarities(std::span<const Polarity> polarities) {
    std::size_t negatives = 0;
    for (auto p : polarities) {
        if (p == Polarity::unspecified) return LoopClass::undetermined;
        if (p == Polarity::negative) ++negatives;
    }
    return negatives % 2 == 0 ? LoopClass::reinforcing : LoopClass::balancing;
}

struct FeedbackLoop {
    std::vector<InfluenceLink> cycle; ///< starts at the smallest id
    LoopClass classification = LoopClass::undetermined;
    bool contains_delay = false;
    std::set<EffectOrder> effect_orders;

    std::vector<std::string> nodes() const {
        std::vector<std::string> out;
        for (const auto& l : cycle) out.push_back(l.from);
        return out;
    }
};

struct LoopReport {
    std::vector<FeedbackLoop> loops;
    bool truncated = false;
    std::vector<Diagnostic> diagnostics;
};

inline constexpr int default_max_loop_length = 12;
inline constexpr int default_max_loop_count = 500;

namespace detail {

class CycleSearch {
public:
    CycleSearch(const std::map<std::string, std::vector<std::string>>& succ, int max_len,
                std::size_t max_count)
        : succ_(succ), max_len_(max_len), max_count_(max_count) {}

    /// Node sequences of simple cycles in lexicographic order; sets `truncated`.
    std::vector<std::vector<std::string>> run(bool& truncated) {
        std::set<std::string> all;
        for (const auto& [n, out] : succ_) {
            all.insert(n);
            all.insert(out.begin(), out.end());
        }
        for (const auto& s : all) {
            start_ = s;
            distances_to_start();
            path_ = {s};
            on_path_ = {s};
            if (!extend(s)) break;
        }
        truncated = truncated_;
        return std::move(found_);
    }

private:
    /// Edge distance from each node (>= start) to start, via reverse BFS.
    void distances_to_start() {
        dist_.clear();
        std::map<std::string, std::vector<std::string>> rev;
        for (const auto& [n, out] : succ_)
            if (n >= start_)
                for (const auto& m : out)
                    if (m >= start_) rev[m].push_back(n);
        std::deque<std::string> q{start_};
        dist_[start_] = 0;
        while (!q.empty()) {
            auto u = q.front();
            q.pop_front();
            for (const auto& p : rev[u]) {
                if (dist_.count(p)) continue;
                dist_[p] = dist_[u] + 1;
                q.push_back(p);
            }
        }
    }

    /// Returns false once the count cap stops the search.
    bool extend(const std::string& v) {
        auto it = succ_.find(v);
        if (it == succ_.end()) return true;
        for (const auto& w : it->second) {
            if (w < start_) continue;
            if (w == start_) {
                if (static_cast<int>(path_.size()) > max_len_) continue;
                if (found_.size() == max_count_) {
                    truncated_ = true;
                    return false;
                }
                found_.push_back(path_);
                continue;
            }
            if (on_path_.count(w)) continue;
            auto d = dist_.find(w);
            if (d == dist_.end()) continue;
            if (static_cast<int>(path_.size()) + d->second > max_len_) continue;
            path_.push_back(w);
            on_path_.insert(w);
            bool go_on = extend(w);
            on_path_.erase(w);
            path_.pop_back();
            if (!go_on) return false;
        }
        return true;
    }

    const std::map<std::string, std::vector<std::string>>& succ_;
    int max_len_;
    std::size_t max_count_;
    std::string start_;
    std::map<std::string, int> dist_;
    std::vector<std::string> path_;
    std::set<std::string> on_path_;
    std::vector<std::vector<std::string>> found_;
    bool truncated_ = false;
};

} // namespace detail

/**
 * Simple cycles of the declared link graph with at most `max_len` links,
 * in lexicographic order of their node sequence (each rotated to start at
 * its smallest id). Stops after `max_count` loops with W-LOOP-TRUNCATED when
 * more exist. The search is a bounded backtracking walk per start node that
 * only enters nodes able to return to the start within the remaining length.
 */
inline LoopReport enumerate_feedback_loops(const Model& model,
                                           int max_len = default_max_loop_length,
                                           int max_count = default_max_loop_count) {
    if (max_len < 2 || max_count < 1)
        throw Error(make_error("E-BAD-ARGUMENT", "max_len must be >= 2 and max_count >= 1"));

    std::map<Edge, const InfluenceLink*> by_edge;
    std::map<std::string, std::vector<std::string>> succ;
    for (const auto& l : model.links) {
        if (by_edge.emplace(Edge{l.from, l.to}, &l).second) succ[l.from].push_back(l.to);
    }
    for (auto& [n, out] : succ) std::sort(out.begin(), out.end());

    const auto deps = build_dependency_graph(model);
    LoopReport report;
    detail::CycleSearch search(succ, max_len, static_cast<std::size_t>(max_count));
    for (const auto& nodes : search.run(report.truncated)) {
        FeedbackLoop loop;
        std::vector<Polarity> pols;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const auto& from = nodes[i];
            const auto& to = nodes[(i + 1) % nodes.size()];
            const auto& link = *by_edge.at(Edge{from, to});
            loop.cycle.push_back(link);
            pols.push_back(link.polarity);
            loop.effect_orders.insert(link.effect_order);
            if (link.delayed || deps.lagged_edges.count(Edge{from, to})) loop.contains_delay = true;
        }
        loop.classification = classify_polarities(pols);
        report.loops.push_back(std::move(loop));
    }
    if (report.truncated)
        report.diagnostics.push_back(make_warning(
            "W-LOOP-TRUNCATED",
            "loop enumeration stopped after " + std::to_string(max_count) + " loops"));
    return report;
}

/// Graphviz rendering: one cluster per loop, polarity as the edge label.
inline std::string loops_to_dot(const LoopReport& report, std::string_view graph_name = "loops") {
    std::string out = "digraph " + std::string(graph_name) + " {\n";
    for (std::size_t i = 0; i < report.loops.size(); ++i) {
        const auto& loop = report.loops[i];
        const std::string prefix = "L" + std::to_string(i + 1) + "_";
        out += "  subgraph cluster_" + std::to_string(i + 1) + " {\n";
        out += "    label=\"L" + std::to_string(i + 1) + " " +
               std::string(to_string(loop.classification)) + "\";\n";
        for (const auto& n : loop.nodes())
            out += "    \"" + prefix + n + "\" [label=\"" + n + "\"];\n";
        for (const auto& l : loop.cycle) {
            out += "    \"" + prefix + l.from + "\" -> \"" + prefix + l.to + "\" [label=\"" +
                   std::string(to_string(l.polarity)) + "\"";
            if (l.delayed) out += ", style=dashed";
            out += "];\n";
        }
        out += "  }\n";
    }
    out += "}\n";
    return out;
}

// ---------------------------------------------------------------------------
// consequence trees

struct ConsequenceNode {
    std::string label;
    std::optional<Polarity> polarity; ///< of the edge from the parent
    std::optional<EffectOrder> order;  ///< of the edge from the parent
    std::vector<ConsequenceNode> children;
};

/// Identifier derived from a free-text label.
inline std::string label_to_id(std::string_view label) {
    std::string id;
    bool pending_sep = false;
    for (unsigned char c : label) {
        if (std::isalnum(c) || c >= 0x80) {
            if (pending_sep && !id.empty()) id += '_';
            pending_sep = false;
            id += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
        } else {
            pending_sep = true;
        }
    }
    if (id.empty()) id = "node";
    if (std::isdigit(static_cast<unsigned char>(id.front()))) id = "v_" + id;
    if (find_builtin(id) || id == "and" || id == "or" || id == "not") id += "_var";
    return id;
}

/**
 * Builds a model skeleton from a consequence tree (or forest): one
 * not-yet-quantified auxiliary per node and one link per parent -> child
 * edge. Duplicate labels get _2, _3, ... suffixes.
 */
inline Model import_consequence_tree(std::span<const ConsequenceNode> roots) {
    if (roots.empty()) throw Error(make_error("E-EMPTY-TREE", "consequence tree is empty"));
    Model m;
    m.id = "consequence_tree";
    m.name = "Imported consequence tree";
    m.time_spec = TimeSpec{0.0, 10.0, 1.0, "step"};
    std::set<std::string> used;

    auto unique_id = [&](const std::string& base) {
        std::string id = base;
        for (int k = 2; used.count(id); ++k) id = base + "_" + std::to_string(k);
        used.insert(id);
        return id;
    };
    auto visit = [&](auto&& self, const ConsequenceNode& node,
                     const std::string* parent) -> void {
        if (node.label.empty())
            throw Error(make_error("E-BAD-TREE", "consequence tree node with an empty label"));
        Variable v;
        v.id = unique_id(label_to_id(node.label));
        v.name = node.label;
        v.kind = VariableKind::auxiliary;
        m.variables.push_back(v);
        if (parent) {
            InfluenceLink l;
            l.from = *parent;
            l.to = v.id;
            l.polarity = node.polarity.value_or(Polarity::unspecified);
            l.effect_order = node.order.value_or(EffectOrder::untagged);
            m.links.push_back(l);
        }
        for (const auto& c : node.children) self(self, c, &v.id);
    };
    for (const auto& r : roots) visit(visit, r, nullptr);
    return m;
}

inline Model import_consequence_tree(const ConsequenceNode& root) {
    return import_consequence_tree(std::span<const ConsequenceNode>(&root, 1));
}

} // namespace qqm
