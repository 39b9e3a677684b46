#include "tracekg/model.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "tracekg/text.hpp"

namespace tracekg {

namespace {

constexpr std::array<std::string_view, 5> kElementKinds = {"narrative", "figure", "table", "equation", "other"};
constexpr std::array<std::string_view, 6> kValueKinds = {"number", "string", "quantity", "identifier", "date", "other"};
constexpr std::array<std::string_view, kQualifierCount> kQualifierKeys = {
    "TemporalQualifier",    "SpatialQualifier", "OperationalConstraint", "ConditionExpression",
    "UncertaintyQualifier", "CausalHint",       "LogicalMarker",         "OtherQualifier",
};
constexpr std::array<std::string_view, 13> kHints = {
    "IDENTITY", "COMPOSITION",    "CAUSALITY",  "TEMPORALITY", "SPATIALITY", "ROLE",        "PURPOSE",
    "DEPENDENCY", "COUPLING", "TRANSFORMATION", "COMPARISON", "INFORMATION", "ASSOCIATION",
};
constexpr std::array<std::string_view, 6> kStages = {"EntRec", "EntRes", "EntClsRec", "EntClsRes", "RelRec", "RelRes"};

template <std::size_t N>
std::size_t lookup(const std::array<std::string_view, N>& table, std::string_view s, std::string_view what) {
    for (std::size_t i = 0; i < N; ++i)
        if (table[i] == s) return i;
    throw Error("unknown " + std::string(what) + ": '" + std::string(s) + "'");
}

std::vector<std::string> string_list(const json& j, std::string_view key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return {};
    return it->get<std::vector<std::string>>();
}

template <typename T>
std::vector<T> object_list(const json& j, std::string_view key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return {};
    return it->get<std::vector<T>>();
}

std::string str_or(const json& j, std::string_view key, std::string fallback = {}) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    return it->get<std::string>();
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(ElementKind k) { return kElementKinds[static_cast<std::size_t>(k)]; }
ElementKind element_kind_from_string(std::string_view s) {
    return static_cast<ElementKind>(lookup(kElementKinds, s, "element kind"));
}

std::string_view to_string(ValueKind k) { return kValueKinds[static_cast<std::size_t>(k)]; }
ValueKind value_kind_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kValueKinds.size(); ++i)
        if (kValueKinds[i] == s) return static_cast<ValueKind>(i);
    return ValueKind::Other;
}

const std::array<std::string_view, kQualifierCount>& qualifier_keys() { return kQualifierKeys; }

std::optional<Qualifier> qualifier_from_key(std::string_view key) {
    for (std::size_t i = 0; i < kQualifierKeys.size(); ++i)
        if (kQualifierKeys[i] == key) return static_cast<Qualifier>(i);
    return std::nullopt;
}

void QualifierSet::set(Qualifier q, std::optional<std::string> v) {
    if (v && text::trim(*v).empty()) v.reset();
    values_[index(q)] = std::move(v);
}

std::size_t QualifierSet::populated() const {
    return static_cast<std::size_t>(std::count_if(values_.begin(), values_.end(), [](const auto& v) { return v.has_value(); }));
}

const std::array<std::string_view, 13>& relation_hint_tokens() { return kHints; }
std::string_view to_string(RelationHint h) { return kHints[static_cast<std::size_t>(h)]; }
std::optional<RelationHint> relation_hint_from_string(std::string_view s) {
    std::string upper(text::trim(s));
    for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (std::size_t i = 0; i < kHints.size(); ++i)
        if (kHints[i] == upper) return static_cast<RelationHint>(i);
    return std::nullopt;
}

std::string_view to_string(Stage s) { return kStages[static_cast<std::size_t>(s)]; }
Stage stage_from_string(std::string_view s) { return static_cast<Stage>(lookup(kStages, s, "stage")); }

std::string relation_class_id(std::string_view label) { return "RC_" + text::snake_label(label); }
std::string relation_group_id(std::string_view label) { return "RCG_" + text::snake_label(label); }
std::string entity_group_id(std::string_view label) { return "ECG_" + text::snake_label(label); }

// ---------------------------------------------------------------------------
// helpers

json opt_to_json(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }

std::optional<std::string> opt_string(const json& j, std::string_view key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) return it->dump();
    return it->get<std::string>();
}

void insert_sorted_unique(std::vector<std::string>& v, const std::string& item) {
    auto it = std::lower_bound(v.begin(), v.end(), item);
    if (it == v.end() || *it != item) v.insert(it, item);
}

std::vector<std::string> sorted_union(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::string> out(a);
    out.insert(out.end(), b.begin(), b.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// serialization

void to_json(json& j, const SourceRegion& v) {
    j = json{{"source", v.source},
             {"page", v.page ? json(*v.page) : json(nullptr)},
             {"region", v.region},
             {"kind", to_string(v.kind)}};
}
void from_json(const json& j, SourceRegion& v) {
    v.source = str_or(j, "source");
    v.page = j.contains("page") && !j.at("page").is_null() ? std::optional<int>(j.at("page").get<int>()) : std::nullopt;
    v.region = str_or(j, "region");
    v.kind = element_kind_from_string(str_or(j, "kind", "narrative"));
}

void to_json(json& j, const Chunk& v) {
    j = json{{"id", v.id}, {"doc_id", v.doc_id}, {"text", v.text}, {"token_count", v.token_count}, {"provenance", v.provenance}};
}
void from_json(const json& j, Chunk& v) {
    v.id = j.at("id").get<std::string>();
    v.doc_id = j.at("doc_id").get<std::string>();
    v.text = j.at("text").get<std::string>();
    v.token_count = j.at("token_count").get<std::size_t>();
    v.provenance = object_list<SourceRegion>(j, "provenance");
}

void to_json(json& j, const IntrinsicProperty& v) {
    j = json{{"key", v.key},
             {"value", v.value},
             {"value_kind", to_string(v.value_kind)},
             {"unit", opt_to_json(v.unit)},
             {"evidence", v.evidence}};
}
void from_json(const json& j, IntrinsicProperty& v) {
    v.key = j.at("key").get<std::string>();
    v.value = str_or(j, "value");
    v.value_kind = value_kind_from_string(str_or(j, "value_kind", "string"));
    v.unit = opt_string(j, "unit");
    v.evidence = string_list(j, "evidence");
}

void to_json(json& j, const Mention& v) {
    j = json{{"id", v.id},
             {"chunk_id", v.chunk_id},
             {"span", json::array({v.span.begin, v.span.end})},
             {"name", v.name},
             {"description", v.description},
             {"type_hint", opt_to_json(v.type_hint)},
             {"confidence", v.confidence},
             {"evidence", v.evidence},
             {"intrinsic_candidates", v.intrinsic_candidates}};
}
void from_json(const json& j, Mention& v) {
    v.id = j.at("id").get<std::string>();
    v.chunk_id = j.at("chunk_id").get<std::string>();
    const auto& span = j.at("span");
    v.span = {span.at(0).get<std::size_t>(), span.at(1).get<std::size_t>()};
    v.name = j.at("name").get<std::string>();
    v.description = str_or(j, "description");
    v.type_hint = opt_string(j, "type_hint");
    v.confidence = j.value("confidence", 1.0);
    v.evidence = string_list(j, "evidence");
    v.intrinsic_candidates = object_list<IntrinsicProperty>(j, "intrinsic_candidates");
}

void to_json(json& j, const Entity& v) {
    j = json{{"id", v.id},
             {"canonical_name", v.canonical_name},
             {"description", v.description},
             {"type_hint", opt_to_json(v.type_hint)},
             {"intrinsic", v.intrinsic},
             {"member_mentions", v.member_mentions},
             {"confidence", v.confidence},
             {"provenance_chunks", v.provenance_chunks},
             {"evidence", v.evidence},
             {"class_id", opt_to_json(v.class_id)},
             {"remarks", v.remarks}};
}
void from_json(const json& j, Entity& v) {
    v.id = j.at("id").get<std::string>();
    v.canonical_name = j.at("canonical_name").get<std::string>();
    v.description = str_or(j, "description");
    v.type_hint = opt_string(j, "type_hint");
    v.intrinsic = object_list<IntrinsicProperty>(j, "intrinsic");
    v.member_mentions = string_list(j, "member_mentions");
    v.confidence = j.value("confidence", 1.0);
    v.provenance_chunks = string_list(j, "provenance_chunks");
    v.evidence = string_list(j, "evidence");
    v.class_id = opt_string(j, "class_id");
    v.remarks = string_list(j, "remarks");
}

void to_json(json& j, const QualifierSet& v) {
    j = json::object();
    for (std::size_t i = 0; i < kQualifierCount; ++i) j[std::string(kQualifierKeys[i])] = opt_to_json(v.at(i));
}
void from_json(const json& j, QualifierSet& v) {
    v = QualifierSet{};
    for (std::size_t i = 0; i < kQualifierCount; ++i)
        v.set(static_cast<Qualifier>(i), opt_string(j, kQualifierKeys[i]));
}

void to_json(json& j, const RelationInstance& v) {
    j = json{{"id", v.id},
             {"subject_entity", v.subject_entity},
             {"object_entity", v.object_entity},
             {"raw_label", v.raw_label},
             {"description", v.description},
             {"hint_type", to_string(v.hint_type)},
             {"qualifiers", v.qualifiers},
             {"confidence", v.confidence},
             {"provenance_chunks", v.provenance_chunks},
             {"evidence", v.evidence},
             {"canonical_label", opt_to_json(v.canonical_label)},
             {"rel_cls", opt_to_json(v.rel_cls)},
             {"rel_cls_group", opt_to_json(v.rel_cls_group)},
             {"remarks", v.remarks}};
}
void from_json(const json& j, RelationInstance& v) {
    v.id = j.at("id").get<std::string>();
    v.subject_entity = j.at("subject_entity").get<std::string>();
    v.object_entity = j.at("object_entity").get<std::string>();
    v.raw_label = j.at("raw_label").get<std::string>();
    v.description = str_or(j, "description");
    auto hint = relation_hint_from_string(str_or(j, "hint_type", "ASSOCIATION"));
    if (!hint) throw Error("relation " + v.id + ": hint_type outside vocabulary");
    v.hint_type = *hint;
    v.qualifiers = j.contains("qualifiers") ? j.at("qualifiers").get<QualifierSet>() : QualifierSet{};
    v.confidence = j.value("confidence", 1.0);
    v.provenance_chunks = string_list(j, "provenance_chunks");
    v.evidence = string_list(j, "evidence");
    v.canonical_label = opt_string(j, "canonical_label");
    v.rel_cls = opt_string(j, "rel_cls");
    v.rel_cls_group = opt_string(j, "rel_cls_group");
    v.remarks = string_list(j, "remarks");
}

void to_json(json& j, const EntityClass& v) {
    j = json{{"id", v.id},
             {"label", v.label},
             {"description", v.description},
             {"group_id", opt_to_json(v.group_id)},
             {"member_entities", v.member_entities}};
}
void from_json(const json& j, EntityClass& v) {
    v.id = j.at("id").get<std::string>();
    v.label = j.at("label").get<std::string>();
    v.description = str_or(j, "description");
    v.group_id = opt_string(j, "group_id");
    v.member_entities = string_list(j, "member_entities");
}

void to_json(json& j, const EntityClassGroup& v) {
    j = json{{"id", v.id}, {"label", v.label}, {"description", v.description}};
}
void from_json(const json& j, EntityClassGroup& v) {
    v.id = j.at("id").get<std::string>();
    v.label = j.at("label").get<std::string>();
    v.description = str_or(j, "description");
}

void to_json(json& j, const CanonicalRelation& v) { j = json{{"label", v.label}, {"description", v.description}}; }
void from_json(const json& j, CanonicalRelation& v) {
    v.label = j.at("label").get<std::string>();
    v.description = str_or(j, "description");
}

void to_json(json& j, const RelationClass& v) { j = json{{"id", v.id}, {"label", v.label}, {"group_id", v.group_id}}; }
void from_json(const json& j, RelationClass& v) {
    v.id = j.at("id").get<std::string>();
    v.label = j.at("label").get<std::string>();
    v.group_id = str_or(j, "group_id");
}

void to_json(json& j, const RelationClassGroup& v) { j = json{{"id", v.id}, {"label", v.label}}; }
void from_json(const json& j, RelationClassGroup& v) {
    v.id = j.at("id").get<std::string>();
    v.label = j.at("label").get<std::string>();
}

void to_json(json& j, const Schema& v) {
    j = json{{"entity_classes", v.entity_classes},
             {"entity_class_groups", v.entity_class_groups},
             {"canonical_relations", v.canonical_relations},
             {"relation_classes", v.relation_classes},
             {"relation_class_groups", v.relation_class_groups},
             {"entity_class_of", v.entity_class_of},
             {"class_group_of", v.class_group_of},
             {"relation_class_of", v.relation_class_of},
             {"relation_group_of", v.relation_group_of}};
}
void from_json(const json& j, Schema& v) {
    v.entity_classes = object_list<EntityClass>(j, "entity_classes");
    v.entity_class_groups = object_list<EntityClassGroup>(j, "entity_class_groups");
    v.canonical_relations = object_list<CanonicalRelation>(j, "canonical_relations");
    v.relation_classes = object_list<RelationClass>(j, "relation_classes");
    v.relation_class_groups = object_list<RelationClassGroup>(j, "relation_class_groups");
    using Map = std::map<std::string, std::string>;
    v.entity_class_of = j.value("entity_class_of", Map{});
    v.class_group_of = j.value("class_group_of", Map{});
    v.relation_class_of = j.value("relation_class_of", Map{});
    v.relation_group_of = j.value("relation_group_of", Map{});
}

void to_json(json& j, const ContextEnrichedGraph& v) {
    j = json{{"entities", v.entities}, {"relations", v.relations}, {"schema", v.schema}, {"schema_complete", v.schema_complete}};
}
void from_json(const json& j, ContextEnrichedGraph& v) {
    v.entities = object_list<Entity>(j, "entities");
    v.relations = object_list<RelationInstance>(j, "relations");
    v.schema = j.value("schema", json::object()).get<Schema>();
    v.schema_complete = j.value("schema_complete", false);
}

void to_json(json& j, const ActionRecord& v) {
    j = json{{"stage", to_string(v.stage)},
             {"kind", v.kind},
             {"payload", v.payload},
             {"rationale", v.rationale},
             {"status", v.status == ActionStatus::Applied ? "applied" : "rejected"},
             {"rejection_reason", opt_to_json(v.rejection_reason)},
             {"sequence_number", v.sequence_number},
             {"batch_id", v.batch_id}};
}
void from_json(const json& j, ActionRecord& v) {
    v.stage = stage_from_string(j.at("stage").get<std::string>());
    v.kind = j.at("kind").get<std::string>();
    v.payload = j.value("payload", json(nullptr));
    v.rationale = str_or(j, "rationale");
    const auto status = j.at("status").get<std::string>();
    if (status != "applied" && status != "rejected") throw Error("unknown action status '" + status + "'");
    v.status = status == "applied" ? ActionStatus::Applied : ActionStatus::Rejected;
    v.rejection_reason = opt_string(j, "rejection_reason");
    v.sequence_number = j.at("sequence_number").get<std::uint64_t>();
    v.batch_id = str_or(j, "batch_id");
}

void to_json(json& j, const Violation& v) { j = json{{"id", v.id}, {"invariant", v.invariant}, {"detail", v.detail}}; }
void to_json(json& j, const ValidationReport& v) { j = json{{"violations", v.violations}, {"warnings", v.warnings}}; }

// ---------------------------------------------------------------------------
// validate_graph

ValidationReport validate_graph(const ContextEnrichedGraph& g, const ValidationContext& ctx) {
    ValidationReport report;
    auto violation = [&](std::string id, std::string inv, std::string detail = {}) {
        report.violations.push_back({std::move(id), std::move(inv), std::move(detail)});
    };
    auto warning = [&](std::string id, std::string inv, std::string detail = {}) {
        report.warnings.push_back({std::move(id), std::move(inv), std::move(detail)});
    };

    std::unordered_set<std::string> chunk_ids;
    if (ctx.chunks)
        for (const auto& c : *ctx.chunks) chunk_ids.insert(c.id);
    std::unordered_map<std::string, const Mention*> mentions;
    if (ctx.mentions)
        for (const auto& m : *ctx.mentions) mentions.emplace(m.id, &m);

    auto check_provenance = [&](const std::string& id, const std::vector<std::string>& prov) {
        if (prov.empty()) violation(id, "provenance non-empty");
        if (ctx.chunks)
            for (const auto& c : prov)
                if (!chunk_ids.count(c)) violation(id, "provenance resolvable", "unknown chunk " + c);
    };
    auto check_confidence = [&](const std::string& id, double c) {
        if (!(c >= 0.0 && c <= 1.0)) violation(id, "confidence in [0,1]", std::to_string(c));
    };

    std::unordered_map<std::string, const Entity*> entities;
    for (const auto& e : g.entities) {
        if (!entities.emplace(e.id, &e).second) violation(e.id, "unique entity id");
        if (e.member_mentions.empty()) violation(e.id, "member_mentions non-empty");
        check_confidence(e.id, e.confidence);
        check_provenance(e.id, e.provenance_chunks);
        if (e.description.empty()) warning(e.id, "entity description present");
        if (ctx.mentions) {
            std::vector<std::string> expected;
            for (const auto& mid : e.member_mentions) {
                auto it = mentions.find(mid);
                if (it == mentions.end()) {
                    violation(e.id, "member mention exists", mid);
                    continue;
                }
                insert_sorted_unique(expected, it->second->chunk_id);
            }
            if (expected != e.provenance_chunks) violation(e.id, "provenance equals mention chunks");
        }
    }

    std::unordered_map<std::string, const EntityClass*> classes;
    for (const auto& c : g.schema.entity_classes)
        if (!classes.emplace(c.id, &c).second) violation(c.id, "unique class id");
    std::unordered_set<std::string> groups;
    for (const auto& grp : g.schema.entity_class_groups) groups.insert(grp.id);

    std::unordered_map<std::string, std::string> membership;
    for (const auto& c : g.schema.entity_classes) {
        if (c.description.empty()) warning(c.id, "class description present");
        for (const auto& eid : c.member_entities) {
            if (!entities.count(eid)) violation(c.id, "dangling class member", eid);
            auto [it, fresh] = membership.emplace(eid, c.id);
            if (!fresh) violation(eid, "tau_ent single-valued", it->second + " and " + c.id);
        }
        if (c.group_id && !groups.count(*c.group_id)) violation(c.id, "dangling class group", *c.group_id);
        if (g.schema_complete) {
            if (!c.group_id) violation(c.id, "gamma_ent total");
            if (c.member_entities.empty()) violation(c.id, "no empty classes");
        }
    }
    for (const auto& [eid, cid] : g.schema.entity_class_of) {
        if (!entities.count(eid)) violation(eid, "tau_ent domain", "unknown entity");
        auto it = membership.find(eid);
        if (it == membership.end() || it->second != cid) violation(eid, "tau_ent matches class membership", cid);
    }
    for (const auto& [cid, gid] : g.schema.class_group_of) {
        auto it = classes.find(cid);
        if (it == classes.end()) violation(cid, "gamma_ent domain", "unknown class");
        else if (it->second->group_id != gid) violation(cid, "gamma_ent matches class group", gid);
        if (!groups.count(gid)) violation(cid, "dangling class group", gid);
    }

    if (g.schema_complete) {
        for (const auto& e : g.entities) {
            if (!e.class_id) {
                violation(e.id, "tau_ent total", "class_id unset");
                continue;
            }
            auto it = membership.find(e.id);
            if (!classes.count(*e.class_id)) violation(e.id, "dangling class", *e.class_id);
            else if (it == membership.end() || it->second != *e.class_id)
                violation(e.id, "class_id matches class membership", *e.class_id);
            auto mapped = g.schema.entity_class_of.find(e.id);
            if (mapped == g.schema.entity_class_of.end() || mapped->second != *e.class_id)
                violation(e.id, "tau_ent total", "schema map missing entity");
        }
    }

    std::unordered_map<std::string, const RelationClass*> rel_classes;
    for (const auto& rc : g.schema.relation_classes) rel_classes.emplace(rc.id, &rc);
    std::unordered_map<std::string, const RelationClassGroup*> rel_groups;
    for (const auto& rg : g.schema.relation_class_groups) rel_groups.emplace(rg.id, &rg);
    for (const auto& rc : g.schema.relation_classes)
        if (!rel_groups.count(rc.group_id)) violation(rc.id, "dangling relation class group", rc.group_id);
    for (const auto& [label, cid] : g.schema.relation_class_of)
        if (!rel_classes.count(cid)) violation(label, "dangling relation class", cid);
    for (const auto& [cid, gid] : g.schema.relation_group_of)
        if (!rel_groups.count(gid)) violation(cid, "dangling relation class group", gid);
    if (g.schema_complete)
        for (const auto& rc : g.schema.relation_classes)
            if (!g.schema.relation_group_of.count(rc.id)) violation(rc.id, "gamma_rel total");

    std::unordered_set<std::string> rel_ids;
    for (const auto& r : g.relations) {
        if (!rel_ids.insert(r.id).second) violation(r.id, "unique relation id");
        if (!entities.count(r.subject_entity)) violation(r.id, "dangling endpoint", "subject " + r.subject_entity);
        if (!entities.count(r.object_entity)) violation(r.id, "dangling endpoint", "object " + r.object_entity);
        check_confidence(r.id, r.confidence);
        check_provenance(r.id, r.provenance_chunks);
        if (!g.schema_complete) continue;
        if (!r.canonical_label || !r.rel_cls || !r.rel_cls_group) {
            violation(r.id, "CanonicalRel total", "canonical/schema fields unset");
            continue;
        }
        auto cls = g.schema.relation_class_of.find(*r.canonical_label);
        if (cls == g.schema.relation_class_of.end()) {
            violation(r.id, "tau_rel total", *r.canonical_label);
            continue;
        }
        auto rc = rel_classes.find(cls->second);
        if (rc == rel_classes.end() || rc->second->label != *r.rel_cls) {
            violation(r.id, "rel_cls matches tau_rel", *r.rel_cls);
            continue;
        }
        auto grp = g.schema.relation_group_of.find(cls->second);
        if (grp == g.schema.relation_group_of.end()) {
            violation(r.id, "gamma_rel total", cls->second);
            continue;
        }
        auto rg = rel_groups.find(grp->second);
        if (rg == rel_groups.end() || rg->second->label != *r.rel_cls_group)
            violation(r.id, "rel_cls_group matches gamma_rel", *r.rel_cls_group);
    }
    return report;
}

}  // namespace tracekg
