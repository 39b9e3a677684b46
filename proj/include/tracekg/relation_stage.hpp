#pragma once

// RelRec (chunk-local qualified relation extraction) and RelRes (relation
// canonicalization, relation-schema induction, safe duplicate merging).

#include <map>
#include <set>
#include <string>
#include <vector>

#include "tracekg/entity_stage.hpp"

namespace tracekg::relation_stage {

std::string relation_id(const std::string& chunk_id, std::size_t ordinal);

// Exactly the eight canonical keys. Unknown keys with non-empty values are
// folded into OtherQualifier as "Key: value" pairs in sorted key order,
// after any explicit OtherQualifier value, joined by "; ".
QualifierSet normalize_qualifiers(const json& raw);

// Validates one RelRec reply: endpoints must belong to E(c), evidence must
// be verbatim chunk text. Offending relations are dropped and logged.
std::vector<RelationInstance> relations_from_reply(const Chunk& chunk, const std::set<std::string>& chunk_entities,
                                                   const json& reply, RunLog& log);

std::vector<RelationInstance> recognize_relations(const std::vector<Chunk>& chunks, const std::vector<Entity>& entities,
                                                  const std::vector<Mention>& mentions, StageContext& ctx);

// Re-orients r2 to r1's direction (endpoints swapped, canonical label taken
// from r1). Pairs that already agree are returned unchanged. Throws when the
// two relations do not connect the same unordered entity pair.
std::pair<RelationInstance, RelationInstance> normalize_direction(const RelationInstance& r1, const RelationInstance& r2);

struct QualifierMerge {
    bool conflict = false;
    QualifierSet merged;                     // union when not in conflict
    std::vector<std::string> conflicting;    // keys whose trimmed values differ
};
QualifierMerge merge_qualifiers(const QualifierSet& a, const QualifierSet& b);

struct RelationState {
    std::map<std::string, RelationInstance> relations;
    std::map<std::string, std::string> canonical_descriptions;
};

RelationState make_relation_state(const std::vector<RelationInstance>& relations);
std::vector<RelationInstance> relations_of(const RelationState& state);

// Applies one RelRes action. A merge whose qualifier sets conflict is
// recorded as rejected and both instances receive a conflict remark.
entity_stage::ApplyResult apply_relation_action(RelationState& state, const json& payload, const std::set<std::string>& scope);

struct ApplyCounts {
    std::size_t edits = 0;   // applied actions other than remarks
    std::size_t merges = 0;  // applied merge_relations
};
ApplyCounts apply_relation_actions(RelationState& state, const json& reply, const std::set<std::string>& scope,
                                   const std::string& batch_id, RunLog& log);

// Multi-run resolution until edits plateau. `schema` supplies entity class
// labels for the endpoint context. Returns the state before finalization.
RelationState run_relation_resolution(const std::vector<RelationInstance>& relations, const std::vector<Entity>& entities,
                                      const Schema& schema, StageContext& ctx);

// Fills missing canonical_label / rel_cls / rel_cls_group, harmonizes
// tau_rel and gamma_rel by majority (ties: lexicographically smallest) and
// writes the relation half of `schema`.
std::vector<RelationInstance> finalize_relations(RelationState state, Schema& schema, RunLog& log);

}  // namespace tracekg::relation_stage
