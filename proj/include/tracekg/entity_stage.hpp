#pragma once

// EntRec (chunk-local mention extraction) and EntRes (iterative
// constrained-action entity resolution).

#include <map>
#include <set>
#include <string>
#include <vector>

#include "tracekg/neighborhood.hpp"
#include "tracekg/stage.hpp"

namespace tracekg::entity_stage {

std::string mention_id(const std::string& chunk_id, std::size_t ordinal);
// Entity ids share the mention id suffix: Mn_X -> En_X.
std::string entity_id_for_mention(const std::string& mention_id);

// Validates one EntRec reply against the focus chunk. Mentions with an
// out-of-bounds span or evidence that is not verbatim chunk text are dropped
// and logged.
std::vector<Mention> mentions_from_reply(const Chunk& chunk, const json& reply, RunLog& log);

// Runs EntRec over every chunk; each request carries up to
// config.context_chunks preceding chunks of the same document as context.
std::vector<Mention> recognize_entities(const std::vector<Chunk>& chunks, StageContext& ctx);

struct EntityState {
    std::map<std::string, Entity> entities;
    std::map<std::string, std::string> mention_names;  // mention id -> name
};

// One entity per mention.
EntityState initial_state(const std::vector<Mention>& mentions);
std::vector<Entity> entities_of(const EntityState& state);

struct ApplyResult {
    ActionStatus status = ActionStatus::Applied;
    std::optional<std::string> reason;
};

// Validates and applies one EntRes action. `scope` holds the entity ids the
// proposing batch was shown; ids outside it are rejected.
ApplyResult apply_entity_action(EntityState& state, const json& payload, const std::set<std::string>& scope);

// Applies a reply array in order and logs every action. A reply that is
// not an array is a logged no-op. Returns the number of applied merges.
std::size_t apply_entity_actions(EntityState& state, const json& reply, const std::set<std::string>& scope,
                                 const std::string& batch_id, RunLog& log);

std::vector<neighborhood::Field> entity_fields(const Entity& e, const neighborhood::Weights& weights);

std::vector<Entity> run_entity_resolution(const std::vector<Mention>& mentions, StageContext& ctx);

// ResolvedEnt: mention id -> entity id.
std::map<std::string, std::string> resolved_ent(const std::vector<Entity>& entities);
// E(c): chunk id -> sorted entity ids having a mention in that chunk.
std::map<std::string, std::vector<std::string>> entities_by_chunk(const std::vector<Entity>& entities,
                                                                   const std::vector<Mention>& mentions);

}  // namespace tracekg::entity_stage
