#pragma once

// Shared data model: chunks, mentions, entities, qualified relation
// instances, the induced two-hierarchy schema and the constrained-action
// log. All types are plain values; stages own mutation.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace tracekg {

using json = nlohmann::json;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Chunks

enum class ElementKind { Narrative, Figure, Table, Equation, Other };

std::string_view to_string(ElementKind k);
ElementKind element_kind_from_string(std::string_view s);

struct SourceRegion {
    std::string source;
    std::optional<int> page;
    std::string region;
    ElementKind kind = ElementKind::Narrative;

    bool operator==(const SourceRegion&) const = default;
};

struct Chunk {
    std::string id;
    std::string doc_id;
    std::string text;
    std::size_t token_count = 0;
    std::vector<SourceRegion> provenance;

    bool operator==(const Chunk&) const = default;
};

// ---------------------------------------------------------------------------
// Mentions and entities

enum class ValueKind { Number, String, Quantity, Identifier, Date, Other };

std::string_view to_string(ValueKind k);
ValueKind value_kind_from_string(std::string_view s);

struct IntrinsicProperty {
    std::string key;
    std::string value;
    ValueKind value_kind = ValueKind::String;
    std::optional<std::string> unit;
    std::vector<std::string> evidence;

    bool operator==(const IntrinsicProperty&) const = default;
};

// Half-open character interval [begin, end) into the chunk text.
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;

    bool operator==(const Span&) const = default;
};

struct Mention {
    std::string id;
    std::string chunk_id;
    Span span;
    std::string name;
    std::string description;
    std::optional<std::string> type_hint;
    double confidence = 1.0;
    std::vector<std::string> evidence;
    std::vector<IntrinsicProperty> intrinsic_candidates;

    bool operator==(const Mention&) const = default;
};

struct Entity {
    std::string id;
    std::string canonical_name;
    std::string description;
    std::optional<std::string> type_hint;
    std::vector<IntrinsicProperty> intrinsic;
    std::vector<std::string> member_mentions;    // sorted, unique
    double confidence = 1.0;
    std::vector<std::string> provenance_chunks;  // sorted, unique
    std::vector<std::string> evidence;
    std::optional<std::string> class_id;
    std::vector<std::string> remarks;

    bool operator==(const Entity&) const = default;
};

// ---------------------------------------------------------------------------
// Qualifiers

enum class Qualifier {
    Temporal,
    Spatial,
    OperationalConstraint,
    ConditionExpression,
    Uncertainty,
    CausalHint,
    LogicalMarker,
    Other,
};

inline constexpr std::size_t kQualifierCount = 8;

// Serialized key names, in declaration order.
const std::array<std::string_view, kQualifierCount>& qualifier_keys();
std::optional<Qualifier> qualifier_from_key(std::string_view key);

class QualifierSet {
public:
    const std::optional<std::string>& get(Qualifier q) const { return values_[index(q)]; }
    void set(Qualifier q, std::optional<std::string> v);

    const std::optional<std::string>& at(std::size_t i) const { return values_.at(i); }
    std::size_t populated() const;
    bool empty() const { return populated() == 0; }

    bool operator==(const QualifierSet&) const = default;

private:
    static std::size_t index(Qualifier q) { return static_cast<std::size_t>(q); }
    std::array<std::optional<std::string>, kQualifierCount> values_{};
};

// ---------------------------------------------------------------------------
// Relations

enum class RelationHint {
    Identity,
    Composition,
    Causality,
    Temporality,
    Spatiality,
    Role,
    Purpose,
    Dependency,
    Coupling,
    Transformation,
    Comparison,
    Information,
    Association,
};

const std::array<std::string_view, 13>& relation_hint_tokens();
std::string_view to_string(RelationHint h);
std::optional<RelationHint> relation_hint_from_string(std::string_view s);

struct RelationInstance {
    std::string id;
    std::string subject_entity;
    std::string object_entity;
    std::string raw_label;
    std::string description;
    RelationHint hint_type = RelationHint::Association;
    QualifierSet qualifiers;
    double confidence = 1.0;
    std::vector<std::string> provenance_chunks;  // sorted, unique
    std::vector<std::string> evidence;
    std::optional<std::string> canonical_label;
    std::optional<std::string> rel_cls;        // relation class label
    std::optional<std::string> rel_cls_group;  // relation class group label
    std::vector<std::string> remarks;

    // canonical_label when set, otherwise raw_label.
    const std::string& predicate() const { return canonical_label ? *canonical_label : raw_label; }

    bool operator==(const RelationInstance&) const = default;
};

// ---------------------------------------------------------------------------
// Schema

struct EntityClass {
    std::string id;
    std::string label;
    std::string description;
    std::optional<std::string> group_id;
    std::vector<std::string> member_entities;  // sorted, unique

    bool operator==(const EntityClass&) const = default;
};

struct EntityClassGroup {
    std::string id;
    std::string label;
    std::string description;

    bool operator==(const EntityClassGroup&) const = default;
};

struct CanonicalRelation {
    std::string label;
    std::string description;

    bool operator==(const CanonicalRelation&) const = default;
};

struct RelationClass {
    std::string id;
    std::string label;
    std::string group_id;

    bool operator==(const RelationClass&) const = default;
};

struct RelationClassGroup {
    std::string id;
    std::string label;

    bool operator==(const RelationClassGroup&) const = default;
};

struct Schema {
    std::vector<EntityClass> entity_classes;
    std::vector<EntityClassGroup> entity_class_groups;
    std::vector<CanonicalRelation> canonical_relations;
    std::vector<RelationClass> relation_classes;
    std::vector<RelationClassGroup> relation_class_groups;

    std::map<std::string, std::string> entity_class_of;     // entity id -> class id
    std::map<std::string, std::string> class_group_of;      // class id -> group id
    std::map<std::string, std::string> relation_class_of;   // canonical label -> relation class id
    std::map<std::string, std::string> relation_group_of;   // relation class id -> group id

    bool operator==(const Schema&) const = default;
};

std::string relation_class_id(std::string_view label);
std::string relation_group_id(std::string_view label);
std::string entity_group_id(std::string_view label);

struct ContextEnrichedGraph {
    std::vector<Entity> entities;
    std::vector<RelationInstance> relations;
    Schema schema;
    // Set once entity-schema and relation-schema stages have completed.
    bool schema_complete = false;

    bool operator==(const ContextEnrichedGraph&) const = default;
};

// ---------------------------------------------------------------------------
// Constrained actions

enum class Stage { EntRec, EntRes, EntClsRec, EntClsRes, RelRec, RelRes };

std::string_view to_string(Stage s);
Stage stage_from_string(std::string_view s);

enum class ActionStatus { Applied, Rejected };

struct ActionRecord {
    Stage stage = Stage::EntRes;
    std::string kind;
    json payload;
    std::string rationale;
    ActionStatus status = ActionStatus::Applied;
    std::optional<std::string> rejection_reason;
    std::uint64_t sequence_number = 0;
    // Actions emitted in one provider reply share a batch id; provisional
    // identifiers are scoped to it.
    std::string batch_id;

    bool operator==(const ActionRecord&) const = default;
};

// ---------------------------------------------------------------------------
// Validation

struct Violation {
    std::string id;
    std::string invariant;
    std::string detail;

    bool operator==(const Violation&) const = default;
};

struct ValidationReport {
    std::vector<Violation> violations;
    std::vector<Violation> warnings;

    bool ok() const { return violations.empty(); }
};

// Optional stores the graph is checked against.
struct ValidationContext {
    const std::vector<Chunk>* chunks = nullptr;
    const std::vector<Mention>* mentions = nullptr;
};

ValidationReport validate_graph(const ContextEnrichedGraph& g, const ValidationContext& ctx = {});

// ---------------------------------------------------------------------------
// Serialization (keys always emitted; absent optionals are explicit nulls)

void to_json(json& j, const SourceRegion& v);
void from_json(const json& j, SourceRegion& v);
void to_json(json& j, const Chunk& v);
void from_json(const json& j, Chunk& v);
void to_json(json& j, const IntrinsicProperty& v);
void from_json(const json& j, IntrinsicProperty& v);
void to_json(json& j, const Mention& v);
void from_json(const json& j, Mention& v);
void to_json(json& j, const Entity& v);
void from_json(const json& j, Entity& v);
void to_json(json& j, const QualifierSet& v);
void from_json(const json& j, QualifierSet& v);
void to_json(json& j, const RelationInstance& v);
void from_json(const json& j, RelationInstance& v);
void to_json(json& j, const EntityClass& v);
void from_json(const json& j, EntityClass& v);
void to_json(json& j, const EntityClassGroup& v);
void from_json(const json& j, EntityClassGroup& v);
void to_json(json& j, const CanonicalRelation& v);
void from_json(const json& j, CanonicalRelation& v);
void to_json(json& j, const RelationClass& v);
void from_json(const json& j, RelationClass& v);
void to_json(json& j, const RelationClassGroup& v);
void from_json(const json& j, RelationClassGroup& v);
void to_json(json& j, const Schema& v);
void from_json(const json& j, Schema& v);
void to_json(json& j, const ContextEnrichedGraph& v);
void from_json(const json& j, ContextEnrichedGraph& v);
void to_json(json& j, const ActionRecord& v);
void from_json(const json& j, ActionRecord& v);
void to_json(json& j, const Violation& v);
void to_json(json& j, const ValidationReport& v);

// Small helpers shared by the stages.
json opt_to_json(const std::optional<std::string>& v);
std::optional<std::string> opt_string(const json& j, std::string_view key);
void insert_sorted_unique(std::vector<std::string>& v, const std::string& item);
std::vector<std::string> sorted_union(const std::vector<std::string>& a, const std::vector<std::string>& b);

}  // namespace tracekg
