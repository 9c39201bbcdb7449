#pragma once

// Test-side helpers: model builders, a random valid-model generator,
// independent oracles, a JSON-schema subset validator and a subprocess
// runner. Nothing here calls the library's own algorithms that it is
// meant to check.

#include "qqm/diagnostic.hpp"
#include "qqm/json_io.hpp"
#include "qqm/model.hpp"
#include "qqm/parser.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace qqm_test {

using namespace qqm;

inline ExprPtr expr(const std::string& text) {
    auto p = parse_expression(text);
    if (!p.expr) throw std::runtime_error("bad test expression: " + text);
    return p.expr;
}

inline Model parse_ok(const std::string& text) {
    auto r = parse_model(text);
    if (!r.ok()) {
        std::string msg = "test model does not parse:";
        for (const auto& d : r.diagnostics) msg += "\n  " + d.code + " " + d.message;
        throw std::runtime_error(msg);
    }
    return *r.model;
}

// --- builders ----------------------------------------------------------------

struct ModelBuilder {
    Model m;

    explicit ModelBuilder(TimeSpec ts, std::string id = "test_model") {
        m.id = std::move(id);
        m.time_spec = ts;
    }
    ModelBuilder& constant(std::string id, double v) {
        Variable x;
        x.id = std::move(id);
        x.kind = VariableKind::constant;
        x.expression = lit(v);
        m.variables.push_back(std::move(x));
        return *this;
    }
    ModelBuilder& aux(std::string id, const std::string& text) {
        Variable x;
        x.id = std::move(id);
        x.kind = VariableKind::auxiliary;
        x.expression = expr(text);
        m.variables.push_back(std::move(x));
        return *this;
    }
    ModelBuilder& exogenous(std::string id, std::string path, std::string column) {
        Variable x;
        x.id = id;
        x.kind = VariableKind::exogenous;
        m.variables.push_back(std::move(x));
        m.data_bindings[id] = DataBinding{std::move(path), std::move(column), Interp::linear, Extrapolation::error};
        return *this;
    }
    ModelBuilder& stock(std::string id, const std::string& init, std::vector<std::string> in,
                        std::vector<std::string> out = {}, bool non_negative = false) {
        Stock s;
        s.id = std::move(id);
        s.initial = expr(init);
        s.inflows = std::move(in);
        s.outflows = std::move(out);
        s.non_negative = non_negative;
        m.stocks.push_back(std::move(s));
        return *this;
    }
    ModelBuilder& link(std::string from, std::string to, Polarity p = Polarity::positive, bool delayed = false) {
        InfluenceLink l;
        l.from = std::move(from);
        l.to = std::move(to);
        l.polarity = p;
        l.delayed = delayed;
        m.links.push_back(std::move(l));
        return *this;
    }
    Model build() const { return m; }
};

// --- random valid models -----------------------------------------------------

class RandomModels {
public:
    explicit RandomModels(std::uint64_t seed) : rng_(seed) {}

    int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }
    std::mt19937_64& engine() { return rng_; }

    /// Non-negative literal with a mix of short and full-precision values.
    double literal() {
        switch (uniform(0, 4)) {
        case 0: return uniform(0, 100);
        case 1: return uniform(0, 1000) / 8.0;
        case 2: return real(0.0, 10.0);
        case 3: return real(0.0, 1.0) * 1e-7;
        default: return real(0.0, 1.0) * 1e17;
        }
    }

    std::string text() {
        static const std::array<std::string, 8> pieces{"alpha", "beta \"quoted\"", "back\\slash", "tab\there",
                                                       "émission", "x", "line one\nline two", "50%"};
        return pieces[uniform(0, pieces.size() - 1)];
    }

    /// Expression over `values` (any reference) and `tables`, depth-limited.
    ExprPtr expression(const std::vector<std::string>& values, const std::vector<std::string>& tables,
                       const std::vector<std::string>& constants, int depth) {
        if (depth <= 0 || coin(0.25)) {
            if (values.empty() || coin(0.4)) return lit(literal());
            return ref(values[uniform(0, values.size() - 1)]);
        }
        auto sub = [&] { return expression(values, tables, constants, depth - 1); };
        auto const_param = [&]() -> ExprPtr {
            if (!constants.empty() && coin()) return ref(constants[uniform(0, constants.size() - 1)]);
            return lit(uniform(1, 5));
        };
        switch (uniform(0, 9)) {
        case 0: return unary(UnaryOp::neg, sub());
        case 1: return unary(UnaryOp::logical_not, sub());
        case 2:
        case 3:
        case 4: return binary(static_cast<BinaryOp>(uniform(0, 11)), sub(), sub());
        case 5: {
            const int b = uniform(0, 7);
            switch (b) {
            case 0: return call(Builtin::min, {sub(), sub()});
            case 1: return call(Builtin::max, {sub(), sub()});
            case 2: return call(Builtin::clamp, {sub(), sub(), sub()});
            case 3: return call(Builtin::abs, {sub()});
            case 4: return call(Builtin::if_then_else, {sub(), sub(), sub()});
            case 5: return call(Builtin::step, {sub(), sub()});
            case 6: return call(Builtin::pulse, {sub(), sub(), sub()});
            default: return call(Builtin::ramp, {sub(), sub()});
            }
        }
        case 6: return call(Builtin::time, {});
        case 7:
            if (!tables.empty()) return call(Builtin::lookup, {sub()}, tables[uniform(0, tables.size() - 1)]);
            return sub();
        case 8: return call(Builtin::delay_fixed, {sub(), const_param(), const_param()});
        default: return call(Builtin::smooth, {sub(), const_param(), const_param()});
        }
    }

    std::optional<QuantificationSource> source() {
        if (coin(0.6)) return std::nullopt;
        return QuantificationSource{static_cast<SourceTag>(uniform(0, 3)), coin() ? text() : ""};
    }

    /**
     * A model that validates without errors: constants first, auxiliaries
     * referencing only earlier auxiliaries instantaneously (later ones only
     * inside delays), stocks fed by auxiliaries, random links between
     * existing elements.
     */
    Model model() {
        Model m;
        m.id = "m" + std::to_string(uniform(0, 999));
        if (coin()) m.name = text();
        if (coin(0.3)) m.notes = coin() ? text() : "first\n\nthird";
        const double dt = std::array<double, 4>{0.25, 0.5, 1.0, 2.0}[uniform(0, 3)];
        const double start = uniform(-5, 5);
        m.time_spec = TimeSpec{start, start + dt * uniform(1, 40), dt, coin() ? "year" : ""};

        std::vector<std::string> constants, values, tables;
        const int n_const = uniform(0, 4), n_aux = uniform(0, 7), n_stock = uniform(0, 3);
        const int n_tables = uniform(0, 2), n_data = uniform(0, 2);
        for (int i = 0; i < n_tables; ++i) {
            LookupTable t;
            t.id = "tab_" + std::to_string(i);
            double x = real(-5, 5);
            for (int k = uniform(2, 5); k > 0; --k) {
                t.points.push_back({x, real(-3, 3)});
                x += real(0.1, 4.0);
            }
            if (coin(0.3)) t.doc = text();
            tables.push_back(t.id);
            m.lookups.push_back(std::move(t));
        }
        for (int i = 0; i < n_const; ++i) {
            Variable v;
            v.id = i == 0 && coin(0.3) ? "coût_" + std::to_string(i) : "c_" + std::to_string(i);
            v.kind = VariableKind::constant;
            v.expression = coin(0.7) ? lit(literal())
                                     : binary(BinaryOp::mul, lit(literal()), unary(UnaryOp::neg, lit(literal())));
            decorate(v);
            if (coin(0.3)) {
                double lo = real(-10, 0);
                v.slider = Slider{lo, lo + real(0.5, 20)};
            }
            constants.push_back(v.id);
            values.push_back(v.id);
            m.variables.push_back(std::move(v));
        }
        for (int i = 0; i < n_data; ++i) {
            Variable v;
            v.id = "data_" + std::to_string(i);
            v.kind = VariableKind::exogenous;
            decorate(v);
            m.data_bindings[v.id] = DataBinding{coin() ? "series.csv" : "dir/other file.csv", "col " + std::to_string(i),
                                                coin() ? Interp::hold : Interp::linear,
                                                coin() ? Extrapolation::error : Extrapolation::hold_ends};
            values.push_back(v.id);
            m.variables.push_back(std::move(v));
        }
        std::vector<std::string> stocks;
        for (int i = 0; i < n_stock; ++i) stocks.push_back("s_" + std::to_string(i));
        std::vector<std::string> aux_ids;
        for (int i = 0; i < n_aux; ++i) aux_ids.push_back("a_" + std::to_string(i));

        std::vector<std::string> visible = values;
        visible.insert(visible.end(), stocks.begin(), stocks.end());
        for (int i = 0; i < n_aux; ++i) {
            Variable v;
            v.id = aux_ids[i];
            v.kind = VariableKind::auxiliary;
            if (coin(0.1)) {
                v.expression = nullptr; // not yet quantified
            } else {
                v.expression = expression(visible, tables, constants, 3);
                // make later auxiliaries reachable only through a delay
                if (i + 1 < n_aux && coin(0.2))
                    v.expression = binary(BinaryOp::add, v.expression,
                                          call(Builtin::smooth, {ref(aux_ids[uniform(i + 1, n_aux - 1)]), lit(uniform(1, 4)) , lit(0)}));
            }
            decorate(v);
            visible.push_back(v.id);
            m.variables.push_back(std::move(v));
        }
        for (const auto& id : stocks) {
            Stock s;
            s.id = id;
            s.initial = constants.empty() || coin() ? lit(literal()) : ref(constants[uniform(0, constants.size() - 1)]);
            for (const auto& a : aux_ids)
                if (coin(0.3)) (coin() ? s.inflows : s.outflows).push_back(a);
            s.non_negative = coin();
            if (coin()) s.unit = "kg";
            s.provenance = source();
            if (coin(0.3)) s.doc = text();
            if (coin(0.3)) s.name = text();
            m.stocks.push_back(std::move(s));
        }
        std::vector<std::string> all = visible;
        std::set<std::pair<std::string, std::string>> seen;
        for (int k = uniform(0, 8); k > 0 && !all.empty(); --k) {
            InfluenceLink l;
            l.from = all[uniform(0, all.size() - 1)];
            l.to = all[uniform(0, all.size() - 1)];
            if (!seen.insert({l.from, l.to}).second) continue;
            l.polarity = static_cast<Polarity>(uniform(0, 2));
            l.delayed = coin(0.3);
            l.effect_order = static_cast<EffectOrder>(uniform(0, 4));
            m.links.push_back(std::move(l));
        }
        return m;
    }

    std::vector<Scenario> scenarios(const Model& m) {
        std::vector<Scenario> out;
        std::vector<std::string> constants;
        for (const auto& v : m.variables)
            if (v.kind == VariableKind::constant) constants.push_back(v.id);
        for (int k = uniform(0, 2); k > 0; --k) {
            Scenario s;
            s.name = "scen_" + std::to_string(k);
            if (coin()) s.description = text();
            for (const auto& c : constants)
                if (coin(0.4)) s.overrides[c] = real(-3, 3);
            for (int j = uniform(0, 2); j > 0 && !constants.empty(); --j)
                s.interventions.push_back({constants[uniform(0, constants.size() - 1)],
                                           m.time_spec.t_start + uniform(0, 3), coin() ? InterventionAction::set
                                                                                       : InterventionAction::scale,
                                           real(0, 2)});
            out.push_back(std::move(s));
        }
        return out;
    }

private:
    void decorate(Variable& v) {
        if (coin(0.3)) v.name = text();
        if (coin(0.4)) v.unit = coin() ? "kgCO2/month" : "1";
        v.provenance = source();
        if (coin(0.3)) v.doc = text();
    }

    std::mt19937_64 rng_;
};

// --- oracles ------------------------------------------------------------------

using Adjacency = std::map<int, std::set<int>>;

/**
 * Brute-force simple cycles: every subset of nodes, every ordering of it
 * that starts with its smallest element, kept when consecutive edges
 * (including last -> first) all exist. Each cycle is listed once.
 */
inline std::set<std::vector<int>> brute_force_cycles(const Adjacency& adj, int n) {
    std::set<std::vector<int>> out;
    auto has = [&](int a, int b) {
        auto it = adj.find(a);
        return it != adj.end() && it->second.count(b);
    };
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        std::vector<int> nodes;
        for (int i = 0; i < n; ++i)
            if (mask & (1u << i)) nodes.push_back(i);
        do {
            bool ok = true;
            for (std::size_t i = 0; i < nodes.size() && ok; ++i) ok = has(nodes[i], nodes[(i + 1) % nodes.size()]);
            if (ok) out.insert(nodes);
        } while (std::next_permutation(nodes.begin() + 1, nodes.end()));
    }
    return out;
}

/// Sign product: +1 for reinforcing, -1 for balancing.
inline int sign_product(const std::vector<int>& signs) {
    int p = 1;
    for (int s : signs) p *= s;
    return p;
}

/// Piecewise-linear interpolation written from scratch for comparison.
inline double oracle_interp(const std::vector<std::pair<double, double>>& pts, double x) {
    if (x <= pts.front().first) return pts.front().second;
    if (x >= pts.back().first) return pts.back().second;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (x <= pts[i].first) {
            const auto [x0, y0] = pts[i - 1];
            const auto [x1, y1] = pts[i];
            if (x == x1) return y1;
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        }
    }
    return pts.back().second;
}

// --- JSON schema subset ----------------------------------------------------------

/**
 * Validates instances against the draft 2020-12 keywords used by the shipped
 * schemas: $ref (local and cross-file), type, enum, properties, required,
 * additionalProperties, items, minItems, maxItems, minimum, maximum,
 * pattern, oneOf.
 */
class SchemaValidator {
public:
    explicit SchemaValidator(std::filesystem::path dir) : dir_(std::move(dir)) {}

    std::vector<std::string> validate(const json& instance, const std::string& schema_file) {
        std::vector<std::string> errors;
        check(instance, load(schema_file), schema_file, "$", errors);
        return errors;
    }

private:
    const json& load(const std::string& file) {
        auto it = cache_.find(file);
        if (it != cache_.end()) return it->second;
        std::ifstream in(dir_ / file);
        if (!in) throw std::runtime_error("missing schema " + file);
        return cache_[file] = json::parse(in);
    }

    const json& resolve(const std::string& ref, std::string& file) {
        auto hash = ref.find('#');
        std::string target = ref.substr(0, hash);
        if (!target.empty()) file = target;
        const json* node = &load(file);
        if (hash != std::string::npos) {
            std::string pointer = ref.substr(hash + 1);
            if (!pointer.empty()) node = &(*node)[json::json_pointer(pointer)];
        }
        return *node;
    }

    static bool type_matches(const json& v, const std::string& t) {
        if (t == "object") return v.is_object();
        if (t == "array") return v.is_array();
        if (t == "string") return v.is_string();
        if (t == "number") return v.is_number();
        if (t == "integer") return v.is_number_integer() || (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>());
        if (t == "boolean") return v.is_boolean();
        if (t == "null") return v.is_null();
        return false;
    }

    void check(const json& v, const json& schema, std::string file, const std::string& at,
               std::vector<std::string>& errors) {
        if (schema.contains("$ref")) {
            std::string f = file;
            const json& target = resolve(schema["$ref"].get<std::string>(), f);
            check(v, target, f, at, errors);
        }
        if (schema.contains("type")) {
            bool ok = false;
            if (schema["type"].is_array()) {
                for (const auto& t : schema["type"]) ok = ok || type_matches(v, t.get<std::string>());
            } else {
                ok = type_matches(v, schema["type"].get<std::string>());
            }
            if (!ok) {
                errors.push_back(at + ": expected type " + schema["type"].dump() + ", got " + v.type_name());
                return;
            }
        }
        if (schema.contains("enum")) {
            bool ok = false;
            for (const auto& e : schema["enum"]) ok = ok || e == v;
            if (!ok) errors.push_back(at + ": " + v.dump() + " not in enum");
        }
        if (schema.contains("oneOf")) {
            int matches = 0;
            for (const auto& alt : schema["oneOf"]) {
                std::vector<std::string> sub;
                check(v, alt, file, at, sub);
                if (sub.empty()) ++matches;
            }
            if (matches != 1) errors.push_back(at + ": matches " + std::to_string(matches) + " oneOf branches");
        }
        if (v.is_string() && schema.contains("pattern")) {
            if (!std::regex_search(v.get<std::string>(), std::regex(schema["pattern"].get<std::string>())))
                errors.push_back(at + ": does not match pattern");
        }
        if (v.is_number()) {
            if (schema.contains("minimum") && v.get<double>() < schema["minimum"].get<double>())
                errors.push_back(at + ": below minimum");
            if (schema.contains("maximum") && v.get<double>() > schema["maximum"].get<double>())
                errors.push_back(at + ": above maximum");
        }
        if (v.is_object()) {
            if (schema.contains("required"))
                for (const auto& r : schema["required"])
                    if (!v.contains(r.get<std::string>())) errors.push_back(at + ": missing '" + r.get<std::string>() + "'");
            const json props = schema.value("properties", json::object());
            for (const auto& [k, sub] : v.items()) {
                if (props.contains(k)) {
                    check(sub, props[k], file, at + "." + k, errors);
                } else if (schema.contains("additionalProperties")) {
                    const auto& ap = schema["additionalProperties"];
                    if (ap.is_boolean()) {
                        if (!ap.get<bool>()) errors.push_back(at + ": unexpected property '" + k + "'");
                    } else {
                        check(sub, ap, file, at + "." + k, errors);
                    }
                }
            }
        }
        if (v.is_array()) {
            if (schema.contains("minItems") && v.size() < schema["minItems"].get<std::size_t>())
                errors.push_back(at + ": too few items");
            if (schema.contains("maxItems") && v.size() > schema["maxItems"].get<std::size_t>())
                errors.push_back(at + ": too many items");
            if (schema.contains("items"))
                for (std::size_t i = 0; i < v.size(); ++i)
                    check(v[i], schema["items"], file, at + "[" + std::to_string(i) + "]", errors);
        }
    }

    std::filesystem::path dir_;
    std::map<std::string, json> cache_;
};

// --- processes and files -----------------------------------------------------------

struct CommandResult {
    int exit_code = -1;
    std::string out;
};

/// Runs a shell command, capturing standard output (standard error is discarded).
inline CommandResult run_command(const std::string& cmd) {
    CommandResult r;
    FILE* pipe = ::popen((cmd + " 2>/dev/null").c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    const int status = ::pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

inline std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'')
            out += "'\\''";
        else
            out += c;
    }
    return out + "'";
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("qqm_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace qqm_test
