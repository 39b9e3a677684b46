#include "doctest.h"
#include "support.hpp"

using namespace testing;

TEST_CASE("text helpers") {
    CHECK(text::metric_words("  Hello, World! -- x ") == std::vector<std::string>{"hello", "world", "x"});
    CHECK(text::alnum_key("I.B.M.") == "ibm");
    CHECK(text::snake_label(" Works  At ") == "works_at");
    CHECK(text::pad(7, 4) == "0007");
    CHECK(text::contains_ci("Alpha Beta", "beta"));
    CHECK(text::hex64(text::fnv1a64("")) == "cbf29ce484222325");
}

TEST_CASE("qualifier set serializes exactly eight keys") {
    QualifierSet q;
    json j = q;
    CHECK(j.size() == 8);
    for (const auto& [k, v] : j.items()) CHECK(v.is_null());
    q.set(Qualifier::Temporal, "during ramp-up");
    j = q;
    CHECK(j.size() == 8);
    CHECK(j["TemporalQualifier"] == "during ramp-up");
    CHECK(j.get<QualifierSet>() == q);
    CHECK(qualifier_keys().size() == 8);
}

TEST_CASE("hint vocabulary has thirteen tokens") {
    CHECK(relation_hint_tokens().size() == 13);
    CHECK(relation_hint_from_string("ROLE") == RelationHint::Role);
    CHECK_FALSE(relation_hint_from_string("role-ish").has_value());
}

TEST_CASE("schema id helpers") {
    CHECK(relation_class_id("material flow") == "RC_material_flow");
    CHECK(relation_group_id("ROLE") == "RCG_role");
    CHECK(entity_group_id("Agent") == "ECG_agent");
}

TEST_CASE("core types round-trip through JSON") {
    auto g = graph_of({"Alpha Pump", "Beta Tank", "Gamma Valve"}, {{0, 1}, {1, 2}});
    g.entities[0].intrinsic.push_back({"capacity", "40", ValueKind::Quantity, "liters", {"has a capacity of 40 liters"}});
    g.relations[0].qualifiers.set(Qualifier::Spatial, "in the hall");
    g.relations[0].remarks = {"merged duplicate x"};
    const json j = g;
    CHECK(j.get<ContextEnrichedGraph>() == g);

    Chunk c = make_chunk("d_C0000", "Alice works at Acme.");
    c.provenance.push_back({"d.json", 3, "table-1", ElementKind::Table});
    CHECK(json(c).get<Chunk>() == c);

    Mention m = make_mention("Mn_d_C0000_000", "d_C0000", "Alice", "Person");
    m.type_hint.reset();
    CHECK(json(m).get<Mention>() == m);

    ActionRecord a{Stage::RelRes, "merge_relations", json{{"x", 1}}, "dup", ActionStatus::Rejected, "stale id", 4, "b0"};
    CHECK(json(a).get<ActionRecord>() == a);
}

TEST_CASE("validate_graph") {
    SUBCASE("well-formed 2-node 1-edge graph is clean") {
        const auto g = graph_of({"A", "B"}, {{0, 1}});
        CHECK(validate_graph(g).ok());
    }
    SUBCASE("dangling object endpoint") {
        auto g = graph_of({"A", "B"}, {{0, 1}});
        g.relations[0].object_entity = "En_missing";
        const auto r = validate_graph(g);
        REQUIRE(r.violations.size() == 1);
        CHECK(r.violations[0].invariant == "dangling endpoint");
        CHECK(r.violations[0].id == g.relations[0].id);
    }
    SUBCASE("class_id unset after schema stage") {
        auto g = graph_of({"A", "B"}, {{0, 1}});
        g.entities[1].class_id.reset();
        const auto r = validate_graph(g);
        std::size_t expected = 0;
        for (const auto& e : g.entities) expected += e.class_id ? 0 : 1;
        std::size_t found = 0;
        for (const auto& v : r.violations) found += v.invariant == "tau_ent total";
        CHECK(found == expected);
        CHECK(found == 1);
    }
    SUBCASE("missing description is a warning only") {
        auto g = graph_of({"A"}, {});
        g.entities[0].description.clear();
        const auto r = validate_graph(g);
        CHECK(r.ok());
        CHECK(r.warnings.size() == 1);
    }
    SUBCASE("unresolvable provenance") {
        auto g = graph_of({"A", "B"}, {{0, 1}});
        const std::vector<Chunk> chunks = {make_chunk("other", "x")};
        ValidationContext ctx{&chunks, nullptr};
        const auto r = validate_graph(g, ctx);
        CHECK_FALSE(r.ok());
        CHECK(r.violations[0].invariant == "provenance resolvable");
    }
    SUBCASE("confidence out of range") {
        auto g = graph_of({"A", "B"}, {{0, 1}});
        g.relations[0].confidence = 1.5;
        CHECK(validate_graph(g).violations.at(0).invariant == "confidence in [0,1]");
    }
    SUBCASE("self-loops and parallel edges are allowed") {
        const auto g = graph_of({"A", "B"}, {{0, 1}, {0, 1}, {1, 1}});
        CHECK(validate_graph(g).ok());
    }
}
