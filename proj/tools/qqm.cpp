// qqm: command-line front end and HTTP service for qualitative-quantitative
// system models.
//
//   qqm check   model.mag [--format text|json]
//   qqm run     model.mag [--scenario name | --scenario-file s.json] [--out dir] [--format csv|json]
//   qqm loops   model.mag [--max-len n] [--max-count n] [--format text|json|dot]
//   qqm compare model.mag --baseline name [--scenario a b ...] --indicators file [--format text|json]
//   qqm fmt     model.mag [--write | --check]
//   qqm import-tree tree.json [-o model.mag]
//   qqm serve   [--port n] [--host h] [--model-dir dir] [--cors-origin o | --no-cors]
//
// Exit codes: 0 ok, 1 validation or engine errors, 2 I/O failures.

#include "qqm/api.hpp"
#include "qqm/data.hpp"
#include "qqm/engine.hpp"
#include "qqm/export.hpp"
#include "qqm/graph.hpp"
#include "qqm/indicators.hpp"
#include "qqm/json_io.hpp"
#include "qqm/parser.hpp"
#include "qqm/serialize.hpp"
#include "qqm/validate.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_model = 1;
constexpr int exit_io = 2;

void print_diagnostics(const std::vector<qqm::Diagnostic>& diags, std::ostream& os) {
    for (const auto& d : diags) {
        os << qqm::to_string(d.severity) << ' ' << d.code;
        if (d.span) os << " [" << d.span->line << ':' << d.span->column << ']';
        os << ": " << d.message << '\n';
    }
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw qqm::Error(qqm::make_error("E-IO", "cannot write '" + path.string() + "'"));
    out << text;
    if (!out) throw qqm::Error(qqm::make_error("E-IO", "failed writing '" + path.string() + "'"));
}

qqm::json read_json_file(const fs::path& path) {
    auto text = qqm::read_text_file(path);
    try {
        return qqm::json::parse(text);
    } catch (const qqm::json::parse_error& e) {
        throw qqm::Error(qqm::make_error("E-BAD-REQUEST", path.string() + ": " + e.what()));
    }
}

/// Parses a model file; parse errors are printed and rethrown.
qqm::ModelDocument load_document(const fs::path& path) {
    auto parsed = qqm::parse_model(qqm::read_text_file(path));
    if (!parsed.ok()) throw qqm::Error(parsed.diagnostics);
    return parsed.document();
}

fs::path model_dir(const fs::path& model_path) {
    auto dir = model_path.parent_path();
    return dir.empty() ? fs::path(".") : dir;
}

// --- commands ------------------------------------------------------------

struct CheckArgs {
    std::string model;
    std::string format = "text";
};

int cmd_check(const CheckArgs& a) {
    auto parsed = qqm::parse_model(qqm::read_text_file(a.model));
    auto diags = parsed.ok() ? qqm::validate_model(*parsed.model) : parsed.diagnostics;
    if (a.format == "json")
        std::cout << qqm::json{{"diagnostics", qqm::to_json(diags)}}.dump(2) << '\n';
    else {
        print_diagnostics(diags, std::cout);
        if (!qqm::has_errors(diags)) std::cout << a.model << ": ok\n";
    }
    return qqm::has_errors(diags) ? exit_model : exit_ok;
}

struct RunArgs {
    std::string model;
    std::string scenario = "baseline";
    std::string scenario_file;
    std::string out = ".";
    std::string format = "csv";
    std::vector<std::string> select;
    std::string indicators;
};

int cmd_run(const RunArgs& a) {
    auto doc = load_document(a.model);
    qqm::Scenario scenario = a.scenario_file.empty() ? qqm::resolve_scenario(doc, a.scenario)
                                                     : qqm::scenario_from_json(read_json_file(a.scenario_file));
    std::vector<qqm::Indicator> indicators;
    if (!a.indicators.empty()) indicators = qqm::indicators_from_json(read_json_file(a.indicators));

    auto data = qqm::load_data(doc.model, model_dir(a.model));
    auto result = qqm::run(doc.model, scenario, data);
    print_diagnostics(result.diagnostics, std::cerr);

    const std::string text = a.format == "json" ? qqm::to_json(result, a.select).dump(2) + "\n"
                                                : qqm::to_csv(result, a.select);
    fs::create_directories(a.out);
    const fs::path target = fs::path(a.out) / (doc.model.id + "__" + scenario.name + "." + a.format);
    write_file(target, text);

    std::cout << "wrote " << target.string() << " (" << result.times.size() << " rows)\n";
    if (indicators.empty()) {
        for (const auto& s : doc.model.stocks)
            std::cout << "  " << s.id << " final = " << qqm::format_number(result.series.at(s.id).back()) << '\n';
    } else {
        for (const auto& ind : indicators) {
            auto v = qqm::compute_indicator(result, ind);
            std::cout << "  " << ind.name << " (" << qqm::to_string(ind.kind) << " of " << ind.target
                      << ") = " << (v ? qqm::format_number(*v) : std::string("-")) << '\n';
        }
    }
    return exit_ok;
}

struct LoopArgs {
    std::string model;
    int max_len = qqm::default_max_loop_length;
    int max_count = qqm::default_max_loop_count;
    std::string format = "text";
};

int cmd_loops(const LoopArgs& a) {
    auto doc = load_document(a.model);
    auto report = qqm::enumerate_feedback_loops(doc.model, a.max_len, a.max_count);
    print_diagnostics(report.diagnostics, std::cerr);
    if (a.format == "json") {
        std::cout << qqm::to_json(report).dump(2) << '\n';
    } else if (a.format == "dot") {
        std::cout << qqm::loops_to_dot(report, doc.model.id);
    } else {
        std::cout << report.loops.size() << " feedback loop(s)" << (report.truncated ? " (truncated)" : "") << '\n';
        for (std::size_t i = 0; i < report.loops.size(); ++i) {
            const auto& l = report.loops[i];
            std::cout << "  L" << i + 1 << ' ' << qqm::to_string(l.classification) << ": ";
            for (const auto& n : l.nodes()) std::cout << n << " -> ";
            std::cout << l.nodes().front() << (l.contains_delay ? "  [delayed]" : "") << '\n';
        }
    }
    return exit_ok;
}

struct CompareArgs {
    std::string model;
    std::string baseline = "baseline";
    std::vector<std::string> scenarios;
    std::string indicators;
    std::string format = "text";
};

int cmd_compare(const CompareArgs& a) {
    auto doc = load_document(a.model);
    auto indicators = qqm::indicators_from_json(read_json_file(a.indicators));
    std::vector<std::string> names = a.scenarios;
    if (names.empty()) {
        names.push_back("baseline");
        for (const auto& s : doc.scenarios)
            if (s.name != "baseline") names.push_back(s.name);
    }
    std::vector<qqm::Scenario> scenarios;
    for (const auto& n : names) scenarios.push_back(qqm::resolve_scenario(doc, n));
    auto data = qqm::load_data(doc.model, model_dir(a.model));
    auto runs = qqm::run_scenarios(doc.model, scenarios, data, true);
    auto table = qqm::compare_runs(runs, a.baseline, indicators);
    if (a.format == "json")
        std::cout << qqm::to_json(table).dump(2) << '\n';
    else
        std::cout << qqm::format_table(table);
    return exit_ok;
}

struct FmtArgs {
    std::string model;
    bool write = false;
    bool check = false;
};

int cmd_fmt(const FmtArgs& a) {
    const auto original = qqm::read_text_file(a.model);
    auto parsed = qqm::parse_model(original);
    if (!parsed.ok()) throw qqm::Error(parsed.diagnostics);
    const auto canonical = qqm::serialize_document(parsed.document());
    if (a.check) {
        if (canonical != original) {
            std::cerr << a.model << ": not in canonical form\n";
            return exit_model;
        }
        return exit_ok;
    }
    if (a.write)
        write_file(a.model, canonical);
    else
        std::cout << canonical;
    return exit_ok;
}

struct ImportArgs {
    std::string tree;
    std::string out;
};

int cmd_import(const ImportArgs& a) {
    auto model = qqm::import_consequence_tree(read_json_file(a.tree));
    auto text = qqm::write_model(model);
    if (a.out.empty())
        std::cout << text;
    else
        write_file(a.out, text);
    return exit_ok;
}

struct ServeArgs {
    int port = 8080;
    std::string host = "127.0.0.1";
    std::string model_dir;
    std::string cors_origin = "http://localhost:5173";
    bool no_cors = false;
    std::size_t max_cells = qqm::api::default_max_cells;
};

int cmd_serve(const ServeArgs& a) {
    std::optional<std::vector<qqm::ReferenceExample>> catalog;
    if (!a.model_dir.empty()) catalog = qqm::load_example_directory(a.model_dir);
    qqm::api::Options opt;
    opt.max_cells = a.max_cells;
    if (catalog) opt.examples = &*catalog;

    httplib::Server server;
    server.set_payload_max_length(16 * 1024 * 1024);
    auto cors = [&](httplib::Response& res) {
        if (a.no_cors) return;
        res.set_header("Access-Control-Allow-Origin", a.cors_origin);
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
    };
    auto dispatch = [&](const httplib::Request& req, httplib::Response& res) {
        auto r = qqm::api::handle(req.method, req.path, req.body, opt);
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
        cors(res);
    };
    server.Get(R"(/api/.*)", dispatch);
    server.Post(R"(/api/.*)", dispatch);
    server.Options(R"(/api/.*)", [&](const httplib::Request&, httplib::Response& res) {
        res.status = 204;
        cors(res);
    });

    if (!server.bind_to_port(a.host, a.port)) {
        std::cerr << "cannot listen on " << a.host << ':' << a.port << '\n';
        return exit_io;
    }
    std::cout << "listening on http://" << a.host << ':' << a.port << std::endl;
    return server.listen_after_bind() ? exit_ok : exit_io;
}

int default_port() {
    if (const char* p = std::getenv("QQM_PORT")) {
        try {
            return std::stoi(p);
        } catch (const std::exception&) {
        }
    }
    return 8080;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Build, check, simulate and compare system models with feedback loops"};
    app.require_subcommand(1);

    CheckArgs check;
    auto* c_check = app.add_subcommand("check", "Parse and validate a model");
    c_check->add_option("model", check.model, "Model file (.mag)")->required();
    c_check->add_option("--format", check.format)->check(CLI::IsMember({"text", "json"}));

    RunArgs run;
    auto* c_run = app.add_subcommand("run", "Simulate one scenario and write the result");
    c_run->add_option("model", run.model, "Model file (.mag)")->required();
    auto* sc_name = c_run->add_option("--scenario", run.scenario, "Scenario declared in the model file");
    c_run->add_option("--scenario-file", run.scenario_file, "Scenario as JSON")->excludes(sc_name);
    c_run->add_option("--out", run.out, "Output directory");
    c_run->add_option("--format", run.format)->check(CLI::IsMember({"csv", "json"}));
    c_run->add_option("--select", run.select, "Series to export (default: all)");
    c_run->add_option("--indicators", run.indicators, "Indicators JSON for the printed summary");

    LoopArgs loops;
    auto* c_loops = app.add_subcommand("loops", "Enumerate feedback loops");
    c_loops->add_option("model", loops.model, "Model file (.mag)")->required();
    c_loops->add_option("--max-len", loops.max_len);
    c_loops->add_option("--max-count", loops.max_count);
    c_loops->add_option("--format", loops.format)->check(CLI::IsMember({"text", "json", "dot"}));

    CompareArgs compare;
    auto* c_compare = app.add_subcommand("compare", "Run scenarios and compare indicators with a baseline");
    c_compare->add_option("model", compare.model, "Model file (.mag)")->required();
    c_compare->add_option("--baseline", compare.baseline);
    c_compare->add_option("--scenario", compare.scenarios, "Scenarios to run (default: all declared)");
    c_compare->add_option("--indicators", compare.indicators, "Indicators JSON")->required();
    c_compare->add_option("--format", compare.format)->check(CLI::IsMember({"text", "json"}));

    FmtArgs fmt;
    auto* c_fmt = app.add_subcommand("fmt", "Print a model in canonical form");
    c_fmt->add_option("model", fmt.model, "Model file (.mag)")->required();
    auto* fmt_write = c_fmt->add_flag("--write", fmt.write, "Rewrite the file in place");
    c_fmt->add_flag("--check", fmt.check, "Exit 1 when the file is not canonical")->excludes(fmt_write);

    ImportArgs import;
    auto* c_import = app.add_subcommand("import-tree", "Convert a consequence tree (JSON) into a model skeleton");
    c_import->add_option("tree", import.tree, "Tree JSON")->required();
    c_import->add_option("-o,--out", import.out, "Output .mag file (default: stdout)");

    ServeArgs serve;
    serve.port = default_port();
    auto* c_serve = app.add_subcommand("serve", "Serve the JSON API over HTTP");
    c_serve->add_option("--port", serve.port, "Port (default: $QQM_PORT or 8080)");
    c_serve->add_option("--host", serve.host);
    c_serve->add_option("--model-dir", serve.model_dir, "Directory listed by /api/examples (default: bundled)");
    auto* cors_origin = c_serve->add_option("--cors-origin", serve.cors_origin, "Allowed browser origin");
    c_serve->add_flag("--no-cors", serve.no_cors, "Send no CORS headers")->excludes(cors_origin);
    c_serve->add_option("--max-cells", serve.max_cells, "Largest grid points x series per run");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e); // prints help or the usage error
        return code == 0 ? exit_ok : exit_io;
    }

    try {
        if (*c_check) return cmd_check(check);
        if (*c_run) return cmd_run(run);
        if (*c_loops) return cmd_loops(loops);
        if (*c_compare) return cmd_compare(compare);
        if (*c_fmt) return cmd_fmt(fmt);
        if (*c_import) return cmd_import(import);
        if (*c_serve) return cmd_serve(serve);
    } catch (const qqm::Error& e) {
        print_diagnostics(e.diagnostics(), std::cerr);
        return e.code() == "E-IO" ? exit_io : exit_model;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_io;
    }
    return exit_ok;
}
