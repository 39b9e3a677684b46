#pragma once

// EntClsRec (candidate entity classes) and EntClsRes (class / class-group
// consolidation through constrained actions).

#include <map>
#include <set>
#include <string>
#include <vector>

#include "tracekg/entity_stage.hpp"

namespace tracekg::schema_stage {

std::string class_id(std::size_t ordinal);

// Candidate classes covering every entity. Members are sorted; group_id is
// unset. Ids are EC_0001, EC_0002, ... in creation order.
std::vector<EntityClass> recognize_classes(const std::vector<Entity>& entities, StageContext& ctx);

struct ClassState {
    std::map<std::string, EntityClass> classes;
    std::map<std::string, EntityClassGroup> groups;
    std::set<std::string> entity_ids;
    std::size_t next_ordinal = 1;

    std::string fresh_id() { return class_id(next_ordinal++); }
};

ClassState make_class_state(const std::vector<EntityClass>& classes, const std::vector<Entity>& entities);

// Applies one EntClsRes action. `scope` holds the class ids shown to the
// proposing batch; `provisional` maps provisional ids introduced earlier in
// the same reply to real ids and is extended by merge/split/create.
entity_stage::ApplyResult apply_class_action(ClassState& state, const json& payload, const std::set<std::string>& scope,
                                             std::map<std::string, std::string>& provisional);

// Applies a reply in order, logging each action; returns applied count.
std::size_t apply_class_actions(ClassState& state, const json& reply, const std::set<std::string>& scope,
                                const std::string& batch_id, RunLog& log);

// Multi-run consolidation until edits plateau. Returns the state before
// finalization.
ClassState run_class_resolution(const std::vector<EntityClass>& candidates, const std::vector<Entity>& entities,
                                StageContext& ctx);

// Makes the hierarchy total and single-valued: drops empty classes, gives
// uncovered entities a singleton class, keeps a multi-assigned entity only
// in the class whose centroid is closest (ties: smallest class id) and gives
// orphan classes a singleton group. Fills the entity half of a Schema.
Schema finalize_classes(ClassState state, const std::vector<Entity>& entities, Embedder& embedder,
                        const neighborhood::Weights& entity_weights, RunLog& log);

}  // namespace tracekg::schema_stage
