#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"
#include "tracekg/relation_stage.hpp"

using namespace testing;
using namespace tracekg::relation_stage;

namespace {

QualifierSet q(std::initializer_list<std::pair<Qualifier, const char*>> kv) {
    QualifierSet s;
    for (const auto& [k, v] : kv) s.set(k, std::string(v));
    return s;
}

}  // namespace

TEST_CASE("relation ids") { CHECK(relation_id("d_C0001", 3) == "Rl_d_C0001_003"); }

TEST_CASE("qualifier normalization") {
    SUBCASE("unknown keys fold into OtherQualifier in sorted order") {
        const auto s = normalize_qualifiers(json{{"Foo", "x"}, {"Bar", "y"}});
        CHECK(s.get(Qualifier::Other) == "Bar: y; Foo: x");
        CHECK(s.populated() == 1);
    }
    SUBCASE("explicit other value comes first and blanks are dropped") {
        const auto s = normalize_qualifiers(
            json{{"OtherQualifier", "note"}, {"Zed", 3}, {"Empty", "  "}, {"TemporalQualifier", " in 2019 "}, {"SpatialQualifier", nullptr}});
        CHECK(s.get(Qualifier::Other) == "note; Zed: 3");
        CHECK(s.get(Qualifier::Temporal) == "in 2019");
        CHECK_FALSE(s.get(Qualifier::Spatial).has_value());
    }
    SUBCASE("non-objects give an empty set") { CHECK(normalize_qualifiers(json::array()).empty()); }
    CHECK(json(normalize_qualifiers(json{{"Foo", "x"}})).size() == 8);
}

TEST_CASE("relation validation against the chunk") {
    const Chunk c = make_chunk("d_C0000", "Alice works at Acme since 2019.");
    const std::set<std::string> ents = {"En_a", "En_b"};
    RunLog log;
    const json reply = json::array({
        {{"subject_id", "En_a"}, {"object_id", "En_b"}, {"label", "works at"}, {"hint_type", "ROLE"},
         {"qualifiers", {{"TemporalQualifier", "2019"}}}, {"evidence", {"works at Acme"}}},
        {{"subject_id", "En_a"}, {"object_id", "En_zzz"}, {"label", "knows"}},
        {{"subject_id", "En_a"}, {"object_id", "En_b"}, {"label", "  "}},
        {{"subject_id", "En_a"}, {"object_id", "En_b"}, {"label", "employs"}, {"evidence", {"fabricated"}}},
        {{"subject_id", "En_b"}, {"object_id", "En_a"}, {"label", "employs"}, {"hint_type", "VIBES"}},
    });
    const auto rs = relations_from_reply(c, ents, reply, log);
    REQUIRE(rs.size() == 2);
    CHECK(rs[0].id == "Rl_d_C0000_000");
    CHECK(rs[0].hint_type == RelationHint::Role);
    CHECK(rs[0].qualifiers.get(Qualifier::Temporal) == "2019");
    CHECK(rs[1].id == "Rl_d_C0000_001");
    CHECK(rs[1].hint_type == RelationHint::Association);
    CHECK(rs[1].provenance_chunks == std::vector<std::string>{"d_C0000"});
    std::size_t dropped = 0, coerced = 0;
    for (const auto& e : log.events) {
        dropped += e.at("event") == "relation_dropped";
        coerced += e.at("event") == "hint_coerced";
    }
    CHECK(dropped == 3);
    CHECK(coerced == 1);
}

TEST_CASE("direction normalization") {
    auto r1 = make_relation("R1", "En_a", "En_b", "works at");
    r1.canonical_label = "works_at";
    const auto r2 = make_relation("R2", "En_b", "En_a", "employs");
    const auto [a, b] = normalize_direction(r1, r2);
    CHECK(b.subject_entity == "En_a");
    CHECK(b.object_entity == "En_b");
    CHECK(b.canonical_label == "works_at");
    CHECK(b.raw_label == "employs");
    const auto same = normalize_direction(r1, r1);
    CHECK(same.second == r1);
    CHECK_THROWS(normalize_direction(r1, make_relation("R3", "En_a", "En_c", "x")));
}

TEST_CASE("qualifier merge decision table") {
    CHECK_FALSE(merge_qualifiers({}, {}).conflict);
    const auto disjoint = merge_qualifiers(q({{Qualifier::Temporal, "2019"}}), q({{Qualifier::Spatial, "Paris"}}));
    CHECK_FALSE(disjoint.conflict);
    CHECK(disjoint.merged == q({{Qualifier::Temporal, "2019"}, {Qualifier::Spatial, "Paris"}}));
    CHECK_FALSE(merge_qualifiers(q({{Qualifier::Temporal, "2019"}}), q({{Qualifier::Temporal, " 2019 "}})).conflict);
    const auto clash = merge_qualifiers(q({{Qualifier::Temporal, "2019"}}), q({{Qualifier::Temporal, "2020"}}));
    CHECK(clash.conflict);
    CHECK(clash.conflicting == std::vector<std::string>{"TemporalQualifier"});

    // Exhaustive over single-field sets on both sides against the oracle.
    const auto sets = oracle::qualifier_sets({"a", "b"}, 1);
    for (const auto& x : sets)
        for (const auto& y : sets) {
            const auto got = merge_qualifiers(x, y);
            const auto want = oracle::merge(x, y);
            CHECK(got.conflict == want.conflict);
            CHECK(got.merged == want.merged);
        }
}

TEST_CASE("relation actions") {
    auto r1 = make_relation("R1", "En_a", "En_b", "works at", "c1");
    auto r2 = make_relation("R2", "En_a", "En_b", "is employed at", "c2");
    auto r3 = make_relation("R3", "En_b", "En_a", "employs", "c3");
    auto r4 = make_relation("R4", "En_a", "En_b", "worked at", "c4");
    r4.qualifiers.set(Qualifier::Temporal, "2010");
    r1.qualifiers.set(Qualifier::Temporal, "2019");
    auto s = make_relation_state({r1, r2, r3, r4});
    const std::set<std::string> scope = {"R1", "R2", "R3", "R4"};

    SUBCASE("compatible merge keeps the first id and unions provenance") {
        const auto r = apply_relation_action(s, {{"action", "merge_relations"}, {"relation_ids", {"R1", "R2"}}}, scope);
        CHECK(r.status == ActionStatus::Applied);
        CHECK_FALSE(s.relations.count("R2"));
        CHECK(s.relations.at("R1").provenance_chunks == std::vector<std::string>{"c1", "c2"});
    }
    SUBCASE("reversed duplicates need direction normalization") {
        CHECK(apply_relation_action(s, {{"action", "merge_relations"}, {"relation_ids", {"R1", "R3"}}}, scope).status ==
              ActionStatus::Rejected);
        CHECK(apply_relation_action(s, {{"action", "merge_relations"}, {"relation_ids", {"R1", "R3"}}, {"normalize_direction", true}},
                                    scope)
                  .status == ActionStatus::Applied);
        CHECK(s.relations.size() == 3);
    }
    SUBCASE("conflicting qualifiers block the merge and remark both") {
        const auto r = apply_relation_action(s, {{"action", "merge_relations"}, {"relation_ids", {"R1", "R4"}}}, scope);
        CHECK(r.status == ActionStatus::Rejected);
        CHECK(s.relations.size() == 4);
        CHECK(s.relations.at("R1").remarks.size() == 1);
        CHECK(s.relations.at("R4").remarks.size() == 1);
    }
    SUBCASE("schema edits") {
        CHECK(apply_relation_action(s, {{"action", "set_canonical_rel"}, {"relation_id", "R2"}, {"canonical_label", "works_at"}}, scope)
                  .status == ActionStatus::Applied);
        CHECK(s.relations.at("R2").canonical_label == "works_at");
        CHECK(apply_relation_action(s, {{"action", "set_rel_cls_group"}, {"relation_id", "R2"}, {"rel_cls_group", "ROLE"}}, scope)
                  .status == ActionStatus::Applied);
        CHECK(s.relations.at("R2").hint_type == RelationHint::Role);
        CHECK(apply_relation_action(s, {{"action", "modify_rel_schema"}, {"relation_id", "R2"}}, scope).status ==
              ActionStatus::Rejected);
        CHECK(apply_relation_action(s, {{"action", "set_rel_cls"}, {"relation_id", "R9"}, {"rel_cls", "x"}}, scope).status ==
              ActionStatus::Rejected);
        CHECK(apply_relation_action(s, {{"action", "set_rel_cls"}, {"relation_id", "R2"}, {"rel_cls", "x"}}, {"R1"}).status ==
              ActionStatus::Rejected);
    }
    SUBCASE("counts exclude remarks") {
        RunLog log;
        const json reply = json::array({{{"action", "add_rel_remark"}, {"relation_id", "R1"}, {"remark", "checked"}},
                                        {{"action", "merge_relations"}, {"relation_ids", {"R1", "R2"}}},
                                        {{"action", "set_rel_cls"}, {"relation_id", "R3"}, {"rel_cls", "employment"}}});
        const auto c = apply_relation_actions(s, reply, scope, "b", log);
        CHECK(c.edits == 2);
        CHECK(c.merges == 1);
        CHECK(log.actions.size() == 3);
    }
}

TEST_CASE("finalization harmonizes tau and gamma by majority") {
    std::vector<RelationInstance> rs;
    for (int i = 0; i < 3; ++i) {
        auto r = make_relation("R" + std::to_string(i), "En_a", "En_b", "feeds");
        r.canonical_label = "feeds";
        r.rel_cls = i < 2 ? "material flow" : "supply";
        r.rel_cls_group = i == 0 ? "DEPENDENCY" : "COUPLING";
        rs.push_back(r);
    }
    auto bare = make_relation("R9", "En_a", "En_b", "Is Part Of");
    bare.hint_type = RelationHint::Composition;
    rs.push_back(bare);
    Schema schema;
    RunLog log;
    const auto out = finalize_relations(make_relation_state(rs), schema, log);
    for (const auto& r : out) {
        REQUIRE(r.canonical_label.has_value());
        REQUIRE(r.rel_cls.has_value());
        REQUIRE(r.rel_cls_group.has_value());
        CHECK(schema.relation_class_of.count(*r.canonical_label));
    }
    CHECK(out[0].rel_cls == "material flow");
    CHECK(out[2].rel_cls == "material flow");
    CHECK(out[0].rel_cls_group == "COUPLING");
    CHECK(out[3].canonical_label == "is_part_of");
    CHECK(out[3].rel_cls_group == "COMPOSITION");
    CHECK(schema.relation_class_of.at("feeds") == "RC_material_flow");
    CHECK(schema.relation_group_of.at("RC_material_flow") == "RCG_coupling");
}

TEST_CASE("stub recognition and resolution end to end on one chunk") {
    StubWorld w;
    const Chunk c = make_chunk("d_C0000", "Alice works at Acme. Acme employs Alice.");
    const std::vector<Mention> ms = {make_mention("Mn_d_C0000_000", c.id, "Alice", "Person"),
                                     make_mention("Mn_d_C0000_001", c.id, "Acme", "Organization")};
    std::vector<Entity> ents = {make_entity("En_d_C0000_000", "Alice", c.id, "Person"),
                                make_entity("En_d_C0000_001", "Acme", c.id, "Organization")};
    const auto raw = recognize_relations({c}, ents, ms, w.ctx);
    REQUIRE(raw.size() == 2);
    Schema schema;
    auto state = run_relation_resolution(raw, ents, schema, w.ctx);
    const auto merged = finalize_relations(state, schema, w.log);
    std::size_t merges = 0;
    for (const auto& a : w.log.actions) merges += a.kind == "merge_relations" && a.status == ActionStatus::Applied;
    CHECK(merged.size() == raw.size() - merges);
    CHECK(merged.size() == 1);
}
