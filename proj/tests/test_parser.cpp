#include "support.hpp"

#include "qqm/parser.hpp"

#include <catch_amalgamated.hpp>

using namespace qqm;

namespace {

const char* const sample_text = R"(model "second_hand" { time 0 .. 60 dt 1 unit "month" }
const emission_factor = 0.12 unit "kgCO2/km" source literature "cite..."
const purchase_rate = 0.3
data  monthly_users from "users.csv" column "users"
aux   items_sold = monthly_users * purchase_rate
aux   transport_km = items_sold * 40
aux   discards = wardrobe / 24
stock wardrobe init 50 inflow items_sold outflow discards non_negative
link  items_sold -> transport_km polarity + order first-order
link  items_sold -> wardrobe polarity + delayed order indirect-rebound
lookup price_effect = [(0,1.0), (10,0.8), (30,0.5)] interp linear
scenario cheaper "lower rate" {
  override purchase_rate = 0.2
  at 12 scale purchase_rate by 0.5
}
)";

const Diagnostic* first_with(const std::vector<Diagnostic>& ds, std::string_view code) {
    for (const auto& d : ds)
        if (d.code == code) return &d;
    return nullptr;
}

} // namespace

TEST_CASE("parses every statement kind", "[parser]") {
    auto r = parse_model(sample_text);
    REQUIRE(r.ok());
    const Model& m = *r.model;
    CHECK(m.id == "second_hand");
    CHECK(m.time_spec == TimeSpec{0, 60, 1, "month"});
    REQUIRE(m.find_variable("emission_factor"));
    CHECK(m.find_variable("emission_factor")->provenance->tag == SourceTag::literature);
    CHECK(m.find_variable("emission_factor")->provenance->citation == "cite...");
    CHECK(m.find_variable("monthly_users")->kind == VariableKind::exogenous);
    CHECK(m.data_bindings.at("monthly_users").column == "users");
    CHECK(m.data_bindings.at("monthly_users").interp == Interp::linear);
    const Stock* w = m.find_stock("wardrobe");
    REQUIRE(w);
    CHECK(w->non_negative);
    CHECK(w->inflows == std::vector<std::string>{"items_sold"});
    CHECK(w->outflows == std::vector<std::string>{"discards"});
    REQUIRE(m.links.size() == 2);
    CHECK(m.links[1].delayed);
    CHECK(m.links[1].effect_order == EffectOrder::indirect_rebound);
    CHECK(m.links[0].effect_order == EffectOrder::first_order);
    REQUIRE(m.find_lookup("price_effect"));
    CHECK(m.find_lookup("price_effect")->points.size() == 3);
    REQUIRE(r.scenarios.size() == 1);
    CHECK(r.scenarios[0].overrides.at("purchase_rate") == 0.2);
    REQUIRE(r.scenarios[0].interventions.size() == 1);
    CHECK(r.scenarios[0].interventions[0].action == InterventionAction::scale);
}

TEST_CASE("duplicate ids are reported at the second declaration", "[parser]") {
    auto r = parse_model("model \"m\" { time 0 .. 1 dt 1 }\nconst a = 1\nconst a = 2\n");
    CHECK_FALSE(r.ok());
    const auto* d = first_with(r.diagnostics, "E-DUP-ID");
    REQUIRE(d);
    REQUIRE(d->span);
    CHECK(d->span->line == 3);
}

TEST_CASE("unknown references, reserved and malformed ids", "[parser]") {
    auto r = parse_model("model \"m\" { time 0 .. 1 dt 1 }\naux a = b + 1\nconst min = 1\nconst BadName = 2\n");
    CHECK(first_with(r.diagnostics, "E-UNKNOWN-REF"));
    CHECK(first_with(r.diagnostics, "E-RESERVED-ID"));
    CHECK(first_with(r.diagnostics, "E-BAD-ID"));
}

TEST_CASE("syntax errors carry spans and parsing recovers per line", "[parser]") {
    auto r = parse_model("model \"m\" { time 0 .. 1 dt 1 }\naux a = 1 +\naux b = (2\naux c = 3\n");
    CHECK_FALSE(r.ok());
    int syntax = 0;
    for (const auto& d : r.diagnostics)
        if (d.code == "E-SYNTAX") {
            ++syntax;
            REQUIRE(d.span);
        }
    CHECK(syntax >= 2);
    const auto* d = first_with(r.diagnostics, "E-SYNTAX");
    CHECK(d->span->line == 2);
    CHECK(d->span->column == 11);
}

TEST_CASE("missing header is a syntax error", "[parser]") {
    auto r = parse_model("const a = 1\n");
    CHECK(first_with(r.diagnostics, "E-SYNTAX"));
}

TEST_CASE("columns count code points", "[parser]") {
    auto r = parse_model("model \"m\" { time 0 .. 1 dt 1 }\nconst coût = 1 ?\n");
    const auto* d = first_with(r.diagnostics, "E-SYNTAX");
    REQUIRE(d);
    REQUIRE(d->span);
    CHECK(d->span->column == 16);
}

TEST_CASE("notes lines join with newlines", "[parser]") {
    auto r = parse_model("model \"m\" { time 0 .. 1 dt 1 }\nnotes \"\"\nnotes \"second\"\n");
    REQUIRE(r.ok());
    CHECK(r.model->notes == "\nsecond");
}

TEST_CASE("duplicate scenario names", "[parser]") {
    auto r = parse_model("model \"m\" { time 0 .. 1 dt 1 }\nconst a = 1\nscenario s {\n}\nscenario s {\n}\n");
    CHECK(first_with(r.diagnostics, "E-DUP-SCENARIO"));
}

TEST_CASE("comments and line continuation inside brackets", "[parser]") {
    auto r = parse_model("# header comment\nmodel \"m\" { time 0 .. 1 dt 1 }\n"
                         "lookup t = [(0, 1),\n   (1, 2)] # trailing\naux a = min(1,\n 2)\n");
    REQUIRE(r.ok());
    CHECK(r.model->find_lookup("t")->points.size() == 2);
}
