#include <gtest/gtest.h>

#include <random>

#include "modelgate/semantics.hpp"
#include "support/semantic_oracle.hpp"

using namespace modelgate;

namespace {

Value js(std::string_view text) { return parse_document(text).root; }

SemanticReport run(std::string_view rules, std::string_view request, std::string_view response,
                   const UnitTable& table = UnitTable::default_table()) {
    return evaluate_rules(parse_rules(js(rules), table), js(request), js(response), table);
}

const char* kWithin = R"([{"id":"power-range","subject":"/power","unit":{"path":"/unit"},"op":"within",
    "lower":{"path":"/minPower","unit":"kW"},"upper":{"path":"/maxPower","unit":"kW"}}])";

}  // namespace

TEST(UnitTable, DefaultEntries) {
    const auto& t = UnitTable::default_table();
    EXPECT_EQ(t.at("kW").dimension, "power");
    EXPECT_EQ(t.at("kW").scale_to_base, Decimal(1000));
    EXPECT_EQ(t.base_of("currency"), "EUR");
    EXPECT_EQ(t.at("ct").scale_to_base, Decimal::parse("0.01"));
    EXPECT_EQ(t.dimensions().size(), 4u);
}

TEST(UnitTable, RejectsBrokenTables) {
    EXPECT_THROW(load_unit_table(js(R"({"power":{"base":"W","units":{"W":1,"kW":1}}})")), UnitTableError);
    EXPECT_THROW(load_unit_table(js(R"({"power":{"base":"W","units":{"kW":1000}}})")), UnitTableError);
    EXPECT_THROW(load_unit_table(js(R"({"power":{"base":"W","units":{"W":1,"kW":0}}})")), UnitTableError);
    EXPECT_THROW(load_unit_table(js(R"({"power":{"base":"W","units":{"W":1,"kW":-1000}}})")), UnitTableError);
    EXPECT_THROW(load_unit_table(js(R"({"power":{"units":{"W":1}},"other":{"units":{"W":1}}})")), UnitTableError);
    EXPECT_THROW(load_unit_table(js(R"({"power":{"base":"W","units":{"W":1,"W":1}}})")), UnitTableError);
    EXPECT_THROW(load_unit_table(js(R"({"power":{"base":"kW","units":{"W":1,"kW":1000}}})")), UnitTableError);
}

TEST(UnitTable, CustomDimensionAccepted) {
    const auto t = load_unit_table(js(R"({"reactive-power":{"base":"Var","units":{"Var":1,"kVar":1000,"MVar":1e6}}})"));
    EXPECT_EQ(t.at("MVar").dimension, "reactive-power");
    EXPECT_EQ(t.normalize({Decimal(2), "MVar"}), (Quantity{Decimal(2000000), "Var"}));
}

TEST(UnitTable, Normalize) {
    const auto& t = UnitTable::default_table();
    EXPECT_EQ(t.normalize({Decimal(30), "kW"}), (Quantity{Decimal(30000), "W"}));
    EXPECT_EQ(t.normalize({Decimal(30000), "W"}), (Quantity{Decimal(30000), "W"}));
    EXPECT_EQ(t.normalize({Decimal::parse("1.5"), "h"}), (Quantity{Decimal(5400), "s"}));
    EXPECT_THROW(t.normalize({Decimal(1), "kVA"}), UnknownUnitError);
    EXPECT_THROW(t.convert({Decimal(1), "kW"}, "kWh"), UnitTableError);
}

TEST(UnitTable, NormalizationProperties) {
    const auto& t = UnitTable::default_table();
    std::mt19937 rng(7);
    for (int i = 0; i < 2000; ++i) {
        const auto dims = t.dimensions();
        const auto syms = t.symbols_of(dims[rng() % dims.size()]);
        const std::string unit = syms[rng() % syms.size()];
        // Values with up to four decimals, both signs.
        const Decimal v = Decimal(static_cast<std::int64_t>(rng() % 2000001) - 1000000) / Decimal(10000);
        const Quantity q{v, unit};
        const auto n = t.normalize(q);
        ASSERT_EQ(t.normalize(n), n);
        ASSERT_EQ(t.convert(n, unit), q) << v.to_string() << " " << unit;
    }
}

TEST(TableRoundTrip, ToJsonReloads) {
    const auto& t = UnitTable::default_table();
    const auto again = load_unit_table(t.to_json());
    EXPECT_EQ(serialize(again.to_json()), serialize(t.to_json()));
}

TEST(ParseRules, Errors) {
    const auto& t = UnitTable::default_table();
    EXPECT_THROW(parse_rules(js(R"([{"id":"r","subject":"/p","op":"within","lower":{"value":1}}])"), t), RuleError);
    EXPECT_THROW(parse_rules(js(R"([{"id":"r","subject":"/p","op":"<=","rhs":{"value":1}},
                                    {"id":"r","subject":"/q","op":"<=","rhs":{"value":1}}])"), t),
                 RuleError);
    try {
        parse_rules(js(R"([{"id":"r","subject":"/p","op":"<=","rhs":{"value":1,"unit":"kVA"}}])"), t);
        FAIL();
    } catch (const RuleError& e) {
        EXPECT_EQ(e.rule_id(), "r");
        EXPECT_EQ(e.path(), "/0/rhs/unit");
        EXPECT_NE(std::string(e.what()).find("unknown unit"), std::string::npos);
    }
    EXPECT_THROW(parse_rules(js(R"([{"id":"r","subject":"/p","op":"<=","rhs":{"value":1},"lower":{"value":0}}])"), t), RuleError);
    EXPECT_THROW(parse_rules(js(R"([{"id":"r","subject":"/p","op":"~","rhs":{"value":1}}])"), t), RuleError);
    EXPECT_THROW(parse_rules(js(R"([{"id":"r","subject":"p","op":"<=","rhs":{"value":1}}])"), t), RuleError);
    EXPECT_THROW(parse_rules(js(R"([{"id":"r","subject":"/p","op":"<=","rhs":{"path":"/a/*"}}])"), t), RuleError);
    EXPECT_THROW(parse_rules(js(R"([{"id":"r","subject":"/p","op":"in_set","rhs":{"value":1}}])"), t), RuleError);
    EXPECT_THROW(parse_rules(js(R"([{"id":"r","subject":"/p","op":"<=","rhs":{"value":1},"typo":1}])"), t), RuleError);
    EXPECT_THROW(parse_rules(js(R"({"id":"r"})"), t), RuleError);
    EXPECT_NO_THROW(parse_rules(js(R"([{"id":"r","subject":"/a/*/p","op":"<=","rhs":{"path":"/a/*/max"}}])"), t));
}

TEST(EvaluateRules, WithinPasses) {
    const auto r = run(kWithin, R"({"minPower":10,"maxPower":50})", R"({"power":30,"unit":"kW"})");
    EXPECT_TRUE(r.pass);
    ASSERT_EQ(r.findings.size(), 1u);
    EXPECT_EQ(r.findings[0].outcome, Outcome::Pass);
}

TEST(EvaluateRules, AboveUpperFailsWithNormalizedValues) {
    const auto r = run(kWithin, R"({"minPower":10,"maxPower":50})", R"({"power":60,"unit":"kW"})");
    EXPECT_FALSE(r.pass);
    ASSERT_EQ(r.findings.size(), 1u);
    const auto& f = r.findings[0];
    EXPECT_EQ(f.outcome, Outcome::Fail);
    EXPECT_EQ(f.subject_path, "/power");
    EXPECT_EQ(f.observed->value, Value(60000));
    EXPECT_EQ(*f.observed->unit, "W");
    ASSERT_EQ(f.bounds.size(), 2u);
    EXPECT_EQ(f.bounds[1].first, "upper");
    EXPECT_EQ(f.bounds[1].second.value, Value(50000));
    EXPECT_NE(f.note.find("above upper"), std::string::npos);
}

TEST(EvaluateRules, NormalizationAcrossUnits) {
    EXPECT_TRUE(run(kWithin, R"({"minPower":10,"maxPower":50})", R"({"power":30000,"unit":"W"})").pass);
    EXPECT_FALSE(run(kWithin, R"({"minPower":10,"maxPower":50})", R"({"power":30000,"unit":"kW"})").pass);
}

TEST(EvaluateRules, DimensionMismatchIsAFinding) {
    const auto r = run(kWithin, R"({"minPower":10,"maxPower":50})", R"({"power":30,"unit":"kWh"})");
    EXPECT_FALSE(r.pass);
    EXPECT_NE(r.findings[0].note.find("dimension mismatch"), std::string::npos);
}

TEST(EvaluateRules, UnknownOrMissingUnitIsAFinding) {
    EXPECT_NE(run(kWithin, R"({"minPower":10,"maxPower":50})", R"({"power":30,"unit":"kVA"})").findings[0].note.find("unknown unit"),
              std::string::npos);
    EXPECT_NE(run(kWithin, R"({"minPower":10,"maxPower":50})", R"({"power":30})").findings[0].note.find("ambiguous/missing unit"),
              std::string::npos);
    const auto r = run(R"([{"id":"r","subject":"/power","op":"<=","rhs":{"path":"/max","unit":"kW"}}])", R"({"max":5})",
                       R"({"power":3})");
    EXPECT_FALSE(r.pass);
    EXPECT_NE(r.findings[0].note.find("unit missing on subject"), std::string::npos);
}

TEST(EvaluateRules, BoundMustBeUnique) {
    const auto missing = run(kWithin, R"({"minPower":10})", R"({"power":30,"unit":"kW"})");
    EXPECT_FALSE(missing.pass);
    EXPECT_NE(missing.findings[0].note.find("ambiguous/missing bound"), std::string::npos);
}

TEST(EvaluateRules, VacuousForAllIsInapplicable) {
    const auto r = run(R"([{"id":"r","subject":"/items/*/p","op":"<=","rhs":{"value":1}}])", "{}", R"({"items":[]})");
    EXPECT_TRUE(r.pass);
    ASSERT_EQ(r.findings.size(), 1u);
    EXPECT_EQ(r.findings[0].outcome, Outcome::Inapplicable);
    const auto e = run(R"([{"id":"r","quantifier":"exists","subject":"/items/*/p","op":"<=","rhs":{"value":1}}])", "{}",
                       R"({"items":[]})");
    EXPECT_FALSE(e.pass);
}

TEST(EvaluateRules, ExistsNeedsOneWitness) {
    const char* rules = R"([{"id":"r","quantifier":"exists","subject":"/items/*","op":">=","rhs":{"value":5}}])";
    const auto r = run(rules, "{}", R"({"items":[1,7,2]})");
    EXPECT_TRUE(r.pass);
    EXPECT_EQ(r.findings[0].outcome, Outcome::Inapplicable);
    EXPECT_EQ(r.findings[1].outcome, Outcome::Pass);
    EXPECT_FALSE(run(rules, "{}", R"({"items":[1,2]})").pass);
}

TEST(EvaluateRules, WildcardBindingAcrossDocuments) {
    const char* rules = R"([{"id":"r","subject":"/slots/*/power","unit":{"path":"/slots/*/unit"},"op":"<=",
                             "rhs":{"path":"/limits/*","unit":"kW"}}])";
    const auto r = run(rules, R"({"limits":[1,2]})",
                       R"({"slots":[{"power":900,"unit":"W"},{"power":3,"unit":"kW"}]})");
    EXPECT_FALSE(r.pass);
    EXPECT_EQ(r.findings[0].outcome, Outcome::Pass);
    EXPECT_EQ(r.findings[1].outcome, Outcome::Fail);
    EXPECT_EQ(r.findings[1].subject_path, "/slots/1/power");
}

TEST(EvaluateRules, EqualityAndSets) {
    EXPECT_TRUE(run(R"([{"id":"r","subject":"/s","op":"==","rhs":{"path":"/s"}}])", R"({"s":"kW"})", R"({"s":"kW"})").pass);
    EXPECT_TRUE(run(R"([{"id":"r","subject":"/n","op":"==","rhs":{"value":1}}])", "{}", R"({"n":1.00})").pass);
    EXPECT_TRUE(run(R"([{"id":"r","subject":"/s","op":"in_set","rhs":{"value":["a","b"]}}])", "{}", R"({"s":"b"})").pass);
    EXPECT_FALSE(run(R"([{"id":"r","subject":"/s","op":"in_set","rhs":{"value":["a","b"]}}])", "{}", R"({"s":"c"})").pass);
    EXPECT_TRUE(run(R"([{"id":"r","subject":"/p","unit":"W","op":"in_set","rhs":{"value":[1,2],"unit":"kW"}}])", "{}",
                    R"({"p":2000})")
                    .pass);
    EXPECT_FALSE(run(R"([{"id":"r","subject":"/p","op":"<=","rhs":{"value":"x"}}])", "{}", R"({"p":1})").pass);
}

TEST(SemanticReportJson, RoundTrips) {
    const auto r = run(kWithin, R"({"minPower":10,"maxPower":50})", R"({"power":60,"unit":"kW"})");
    EXPECT_EQ(serialize(SemanticReport::from_json(r.to_json()).to_json()), serialize(r.to_json()));
}

TEST(InstanceUniqueness, Examples) {
    const PathExpr id = parse_path("/flexibilitySpaceID");
    auto doc = [](std::string_view text, std::string name) { return parse_document(text, std::move(name)); };
    EXPECT_TRUE(check_instance_uniqueness({doc(R"({"flexibilitySpaceID":"A"})", "a"), doc(R"({"flexibilitySpaceID":"B"})", "b")}, id).pass);

    const auto dup = check_instance_uniqueness({doc(R"({"flexibilitySpaceID":"A"})", "a"), doc(R"({"flexibilitySpaceID":"A"})", "b")}, id);
    EXPECT_FALSE(dup.pass);
    ASSERT_EQ(dup.duplicates.size(), 1u);
    EXPECT_EQ(dup.duplicates[0].id, Value("A"));
    EXPECT_EQ(dup.duplicates[0].instances, (std::vector<std::string>{"a", "b"}));

    const auto miss = check_instance_uniqueness({doc(R"({"flexibilitySpaceID":"A"})", "a"), doc(R"({"other":1})", "")}, id);
    EXPECT_FALSE(miss.pass);
    EXPECT_TRUE(miss.duplicates.empty());
    EXPECT_EQ(miss.missing, (std::vector<std::string>{"#1"}));

    EXPECT_THROW(check_instance_uniqueness({}, parse_path("/a/*")), std::invalid_argument);
}

// ---- brute-force and unit-invariance properties ----

using namespace testsupport;

TEST(SemanticProperties, AgreesWithExhaustiveOracle) {
    std::mt19937 rng(2024);
    const auto& table = UnitTable::default_table();
    int fails = 0;
    for (int i = 0; i < 3000; ++i) {
        Scenario s = random_scenario(rng);
        normalize_scenario(s);
        const auto [rules, docs] = render(s, false, [] { return std::string("W"); });
        const auto report = evaluate_rules(parse_rules(js(rules), table), js(docs.first), js(docs.second), table);
        ASSERT_EQ(report.pass, oracle(s)) << rules << "\n" << docs.first << "\n" << docs.second;
        fails += !report.pass;
    }
    EXPECT_GT(fails, 500);
    EXPECT_LT(fails, 2500);
}

TEST(SemanticProperties, VerdictsAreUnitInvariant) {
    std::mt19937 rng(77);
    const auto& table = UnitTable::default_table();
    const std::vector<std::string> units = {"W", "kW", "MW"};
    for (int i = 0; i < 1500; ++i) {
        Scenario s = random_scenario(rng);
        normalize_scenario(s);
        const auto [base_rules, base_docs] = render(s, true, [] { return std::string("W"); });
        const bool base = evaluate_rules(parse_rules(js(base_rules), table), js(base_docs.first), js(base_docs.second), table).pass;
        ASSERT_EQ(base, oracle(s));
        for (int k = 0; k < 3; ++k) {
            const auto [rules, docs] = render(s, true, [&] { return units[rng() % units.size()]; });
            const auto report = evaluate_rules(parse_rules(js(rules), table), js(docs.first), js(docs.second), table);
            ASSERT_EQ(report.pass, base) << rules << "\n" << docs.first << "\n" << docs.second;
        }
    }
}
