#include "tracekg/entity_stage.hpp"

#include <algorithm>

#include "tracekg/text.hpp"

namespace tracekg::entity_stage {

using neighborhood::Field;

std::string mention_id(const std::string& chunk_id, std::size_t ordinal) { return "Mn_" + chunk_id + "_" + text::pad(ordinal, 3); }

std::string entity_id_for_mention(const std::string& mention_id) { return "En_" + mention_id.substr(3); }

namespace {

bool is_excerpt(const std::string& chunk_text, const std::string& excerpt) {
    return !excerpt.empty() && chunk_text.find(excerpt) != std::string::npos;
}

std::vector<std::string> string_list(const json& j, const char* key) {
    std::vector<std::string> out;
    if (!j.contains(key) || j.at(key).is_null()) return out;
    for (const auto& v : j.at(key)) out.push_back(v.get<std::string>());
    return out;
}

double confidence_of(const json& j) {
    if (!j.contains("confidence") || j.at("confidence").is_null()) return 1.0;
    return std::clamp(j.at("confidence").get<double>(), 0.0, 1.0);
}

void append_unique(std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
}

}  // namespace

std::vector<Mention> mentions_from_reply(const Chunk& chunk, const json& reply, RunLog& log) {
    std::vector<Mention> out;
    if (!reply.is_array()) {
        log.event(Stage::EntRec, "parse_failure", {{"chunk_id", chunk.id}, {"detail", "reply is not an array"}});
        return out;
    }
    for (const auto& item : reply) {
        auto drop = [&](const std::string& why) {
            log.event(Stage::EntRec, "mention_dropped", {{"chunk_id", chunk.id}, {"detail", why}, {"item", item}});
        };
        try {
            Mention m;
            m.chunk_id = chunk.id;
            m.name = text::trim(item.at("name").get<std::string>());
            if (m.name.empty()) {
                drop("empty name");
                continue;
            }
            const auto& span = item.at("span");
            m.span = {span.at(0).get<std::size_t>(), span.at(1).get<std::size_t>()};
            if (m.span.begin >= m.span.end || m.span.end > chunk.text.size()) {
                drop("span outside the focus chunk");
                continue;
            }
            m.description = item.value("description", "");
            m.type_hint = opt_string(item, "type_hint");
            m.confidence = confidence_of(item);
            m.evidence = string_list(item, "evidence");
            if (std::any_of(m.evidence.begin(), m.evidence.end(), [&](const std::string& e) { return !is_excerpt(chunk.text, e); })) {
                drop("evidence is not a verbatim excerpt of the chunk");
                continue;
            }
            if (m.evidence.empty()) m.evidence.push_back(chunk.text.substr(m.span.begin, m.span.end - m.span.begin));
            if (item.contains("intrinsic") && item.at("intrinsic").is_array()) {
                for (const auto& p : item.at("intrinsic")) {
                    IntrinsicProperty prop;
                    from_json(p, prop);
                    if (text::trim(prop.key).empty() ||
                        std::any_of(prop.evidence.begin(), prop.evidence.end(), [&](const std::string& e) { return !is_excerpt(chunk.text, e); })) {
                        log.event(Stage::EntRec, "property_dropped", {{"chunk_id", chunk.id}, {"item", p}});
                        continue;
                    }
                    m.intrinsic_candidates.push_back(std::move(prop));
                }
            }
            m.id = mention_id(chunk.id, out.size());
            out.push_back(std::move(m));
        } catch (const std::exception& e) {
            drop(std::string("malformed mention: ") + e.what());
        }
    }
    return out;
}

std::vector<Mention> recognize_entities(const std::vector<Chunk>& chunks, StageContext& ctx) {
    std::vector<Request> requests;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        json context = json::array();
        std::size_t first = i;
        while (first > 0 && i - first < ctx.config.context_chunks && chunks[first - 1].doc_id == chunks[i].doc_id) --first;
        for (std::size_t k = first; k < i; ++k) context.push_back({{"id", chunks[k].id}, {"text", chunks[k].text}});
        requests.push_back({"EntRec-" + chunks[i].id,
                            expect::kEntityRecognition,
                            {{"context_chunks", context}, {"focus_chunk", {{"id", chunks[i].id}, {"text", chunks[i].text}}}},
                            ctx.config.recognition_budget});
    }
    const auto replies = ask_all(ctx, Stage::EntRec, requests);
    std::vector<Mention> mentions;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        if (!replies[i]) continue;
        for (auto& m : mentions_from_reply(chunks[i], *replies[i], ctx.log)) mentions.push_back(std::move(m));
    }
    return mentions;
}

EntityState initial_state(const std::vector<Mention>& mentions) {
    EntityState s;
    for (const auto& m : mentions) {
        Entity e;
        e.id = entity_id_for_mention(m.id);
        e.canonical_name = m.name;
        e.description = m.description;
        e.type_hint = m.type_hint;
        e.intrinsic = m.intrinsic_candidates;
        e.member_mentions = {m.id};
        e.confidence = m.confidence;
        e.provenance_chunks = {m.chunk_id};
        e.evidence = m.evidence;
        s.mention_names[m.id] = m.name;
        s.entities.emplace(e.id, std::move(e));
    }
    return s;
}

std::vector<Entity> entities_of(const EntityState& state) {
    std::vector<Entity> out;
    out.reserve(state.entities.size());
    for (const auto& [id, e] : state.entities) out.push_back(e);
    return out;
}

namespace {

void merge_intrinsic(Entity& target, const std::vector<IntrinsicProperty>& extra) {
    for (const auto& p : extra) {
        auto same = std::find_if(target.intrinsic.begin(), target.intrinsic.end(), [&](const IntrinsicProperty& q) {
            return q.key == p.key && q.value == p.value && q.unit == p.unit && q.value_kind == p.value_kind;
        });
        if (same != target.intrinsic.end()) {
            for (const auto& ev : p.evidence) append_unique(same->evidence, ev);
            continue;
        }
        target.intrinsic.push_back(p);
    }
    std::map<std::string, std::vector<std::string>> values;
    for (const auto& p : target.intrinsic) append_unique(values[p.key], p.value + (p.unit ? " " + *p.unit : ""));
    for (const auto& [key, vals] : values)
        if (vals.size() > 1) append_unique(target.remarks, "conflicting values for intrinsic property '" + key + "': " + text::join(vals, " | "));
}

std::optional<std::string> nullable_string(const json& payload, const char* key) {
    if (!payload.contains(key) || payload.at(key).is_null()) return std::nullopt;
    return payload.at(key).get<std::string>();
}

ApplyResult reject(std::string why) { return {ActionStatus::Rejected, std::move(why)}; }

std::optional<std::string> check_id(const EntityState& state, const std::set<std::string>& scope, const std::string& id) {
    if (!scope.count(id)) return "id outside batch: " + id;
    if (!state.entities.count(id)) return "stale id: " + id;
    return std::nullopt;
}

}  // namespace

ApplyResult apply_entity_action(EntityState& state, const json& payload, const std::set<std::string>& scope) {
    try {
        if (!payload.is_object() || !payload.contains("action")) return reject("malformed payload: missing action");
        const std::string kind = payload.at("action").get<std::string>();
        if (kind == "MergeEntities") {
            auto ids = payload.at("entity_ids").get<std::vector<std::string>>();
            std::sort(ids.begin(), ids.end());
            if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) return reject("duplicate id in merge");
            if (ids.size() < 2) return reject("merge needs at least two entities");
            for (const auto& id : ids)
                if (auto why = check_id(state, scope, id)) return reject(*why);
            const auto name = nullable_string(payload, "canonical_name");
            const auto description = nullable_string(payload, "canonical_description");
            const auto type = nullable_string(payload, "canonical_type");

            Entity merged = state.entities.at(ids.front());
            for (std::size_t i = 1; i < ids.size(); ++i) {
                const Entity& other = state.entities.at(ids[i]);
                merged.member_mentions = sorted_union(merged.member_mentions, other.member_mentions);
                merged.provenance_chunks = sorted_union(merged.provenance_chunks, other.provenance_chunks);
                for (const auto& ev : other.evidence) append_unique(merged.evidence, ev);
                for (const auto& r : other.remarks) append_unique(merged.remarks, r);
                merge_intrinsic(merged, other.intrinsic);
                merged.confidence = std::max(merged.confidence, other.confidence);
                if (merged.description.empty()) merged.description = other.description;
                if (!merged.type_hint) merged.type_hint = other.type_hint;
            }
            if (name && !text::trim(*name).empty()) {
                merged.canonical_name = text::trim(*name);
            } else {
                std::string best;
                for (const auto& m : merged.member_mentions) {
                    const auto& n = state.mention_names.at(m);
                    if (best.empty() || n < best) best = n;
                }
                merged.canonical_name = best;
            }
            if (description) merged.description = *description;
            if (type) merged.type_hint = *type;
            for (std::size_t i = 1; i < ids.size(); ++i) state.entities.erase(ids[i]);
            state.entities[ids.front()] = std::move(merged);
            return {};
        }
        if (kind == "ModifyEntity") {
            const std::string id = payload.at("entity_id").get<std::string>();
            if (auto why = check_id(state, scope, id)) return reject(*why);
            const auto name = nullable_string(payload, "new_name");
            if (name && text::trim(*name).empty()) return reject("empty new_name");
            Entity& e = state.entities.at(id);
            if (name) e.canonical_name = text::trim(*name);
            if (auto d = nullable_string(payload, "new_description")) e.description = *d;
            if (auto t = nullable_string(payload, "new_type_hint")) e.type_hint = *t;
            return {};
        }
        if (kind == "KeepEntity") {
            const std::string id = payload.at("entity_id").get<std::string>();
            if (auto why = check_id(state, scope, id)) return reject(*why);
            return {};
        }
        return reject("unknown action '" + kind + "'");
    } catch (const json::exception& e) {
        return reject(std::string("malformed payload: ") + e.what());
    }
}

std::size_t apply_entity_actions(EntityState& state, const json& reply, const std::set<std::string>& scope,
                                 const std::string& batch_id, RunLog& log) {
    if (!reply.is_array()) {
        log.event(Stage::EntRes, "parse_failure", {{"batch_id", batch_id}, {"detail", "reply is not an array"}});
        return 0;
    }
    std::size_t merges = 0;
    for (const auto& payload : reply) {
        const auto result = apply_entity_action(state, payload, scope);
        log.record(Stage::EntRes, payload, batch_id, result.status, result.reason);
        if (result.status == ActionStatus::Applied && payload.value("action", "") == "MergeEntities") ++merges;
    }
    return merges;
}

std::vector<Field> entity_fields(const Entity& e, const neighborhood::Weights& weights) {
    auto w = [&](const char* key) {
        auto it = weights.find(key);
        return it == weights.end() ? 0.0 : it->second;
    };
    std::vector<std::string> props;
    for (const auto& p : e.intrinsic) props.push_back(p.key + " " + p.value + (p.unit ? " " + *p.unit : ""));
    return {{"name", e.canonical_name, w("name")},
            {"description", e.description, w("description")},
            {"type_hint", e.type_hint.value_or(""), w("type_hint")},
            {"intrinsic", text::join(props, "; "), w("intrinsic")},
            {"evidence", text::join(e.evidence, " "), w("evidence")}};
}

std::vector<Entity> run_entity_resolution(const std::vector<Mention>& mentions, StageContext& ctx) {
    EntityState state = initial_state(mentions);
    const auto& cfg = ctx.config;
    for (std::size_t round = 1; round <= cfg.entres_max_rounds; ++round) {
        if (state.entities.size() < 2) break;
        std::vector<std::pair<std::string, std::vector<Field>>> items;
        for (const auto& [id, e] : state.entities) items.push_back({id, entity_fields(e, cfg.entity_weights)});
        const auto reps = neighborhood::build_representations(items, ctx.embedder);
        const auto hoods = neighborhood::neighborhoods(reps, cfg.cluster, cfg.max_cluster_size);

        // Clustered neighborhoods first, then the noise items in residual
        // batches so that no entity is left unseen.
        std::vector<std::pair<std::string, std::vector<std::string>>> batches;
        neighborhood::Neighborhood residual{"noise", {}, true};
        for (const auto& n : hoods) {
            if (n.is_noise) {
                residual.members.push_back(n.members.front());
                continue;
            }
            const auto parts = neighborhood::batch(n, cfg.batch_size);
            for (std::size_t b = 0; b < parts.size(); ++b) batches.push_back({n.id + "-b" + std::to_string(b), parts[b]});
        }
        const auto rest = neighborhood::batch(residual, cfg.batch_size);
        for (std::size_t b = 0; b < rest.size(); ++b) batches.push_back({"noise-b" + std::to_string(b), rest[b]});
        std::erase_if(batches, [](const auto& b) { return b.second.size() < 2; });

        std::vector<Request> requests;
        for (const auto& [tag, ids] : batches) {
            json input = json::array();
            for (const auto& id : ids) {
                const Entity& e = state.entities.at(id);
                input.push_back({{"id", e.id},
                                 {"name", e.canonical_name},
                                 {"description", e.description},
                                 {"type_hint", opt_to_json(e.type_hint)},
                                 {"intrinsic", e.intrinsic},
                                 {"evidence", e.evidence}});
            }
            requests.push_back({"EntRes-r" + std::to_string(round) + "-" + tag, expect::kEntityResolution, {{"items", input}},
                                cfg.resolution_budget});
        }
        const auto replies = ask_all(ctx, Stage::EntRes, requests);

        std::size_t merges = 0;
        for (std::size_t i = 0; i < batches.size(); ++i) {
            const auto& batch_id = requests[i].request_id;
            log_batch(ctx.log, Stage::EntRes, batch_id, batches[i].second);
            if (!replies[i]) continue;
            const std::set<std::string> scope(batches[i].second.begin(), batches[i].second.end());
            merges += apply_entity_actions(state, *replies[i], scope, batch_id, ctx.log);
        }
        ctx.log.event(Stage::EntRes, "round", {{"round", round}, {"merges", merges}, {"entities", state.entities.size()}});
        if (merges <= cfg.entres_merge_threshold) break;
    }
    return entities_of(state);
}

std::map<std::string, std::string> resolved_ent(const std::vector<Entity>& entities) {
    std::map<std::string, std::string> out;
    for (const auto& e : entities)
        for (const auto& m : e.member_mentions) out[m] = e.id;
    return out;
}

std::map<std::string, std::vector<std::string>> entities_by_chunk(const std::vector<Entity>& entities,
                                                                   const std::vector<Mention>& mentions) {
    const auto owner = resolved_ent(entities);
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& m : mentions) {
        auto it = owner.find(m.id);
        if (it != owner.end()) insert_sorted_unique(out[m.chunk_id], it->second);
    }
    return out;
}

}  // namespace tracekg::entity_stage
