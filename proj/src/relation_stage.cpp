#include "tracekg/relation_stage.hpp"

#include <algorithm>

#include "tracekg/text.hpp"

namespace tracekg::relation_stage {

using entity_stage::ApplyResult;
using neighborhood::Field;

std::string relation_id(const std::string& chunk_id, std::size_t ordinal) { return "Rl_" + chunk_id + "_" + text::pad(ordinal, 3); }

namespace {

ApplyResult reject(std::string why) { return {ActionStatus::Rejected, std::move(why)}; }

std::optional<std::string> nullable_string(const json& payload, const char* key) {
    if (!payload.contains(key) || payload.at(key).is_null()) return std::nullopt;
    return payload.at(key).get<std::string>();
}

std::optional<std::string> value_text(const json& v) {
    if (v.is_null()) return std::nullopt;
    std::string s = v.is_string() ? v.get<std::string>() : v.dump();
    s = text::trim(s);
    if (s.empty()) return std::nullopt;
    return s;
}

void append_unique(std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
}

}  // namespace

QualifierSet normalize_qualifiers(const json& raw) {
    QualifierSet q;
    if (!raw.is_object()) return q;
    std::vector<std::string> folded;
    for (const auto& [key, value] : raw.items()) {  // object keys iterate in sorted order
        auto v = value_text(value);
        if (auto known = qualifier_from_key(key)) {
            if (*known != Qualifier::Other) q.set(*known, v);
            continue;
        }
        if (v) folded.push_back(key + ": " + *v);
    }
    std::vector<std::string> other;
    if (raw.contains("OtherQualifier"))
        if (auto v = value_text(raw.at("OtherQualifier"))) other.push_back(*v);
    other.insert(other.end(), folded.begin(), folded.end());
    if (!other.empty()) q.set(Qualifier::Other, text::join(other, "; "));
    return q;
}

std::vector<RelationInstance> relations_from_reply(const Chunk& chunk, const std::set<std::string>& chunk_entities,
                                                   const json& reply, RunLog& log) {
    std::vector<RelationInstance> out;
    if (!reply.is_array()) {
        log.event(Stage::RelRec, "parse_failure", {{"chunk_id", chunk.id}, {"detail", "reply is not an array"}});
        return out;
    }
    for (const auto& item : reply) {
        auto drop = [&](const std::string& why) {
            log.event(Stage::RelRec, "relation_dropped", {{"chunk_id", chunk.id}, {"detail", why}, {"item", item}});
        };
        try {
            RelationInstance r;
            r.subject_entity = item.at("subject_id").get<std::string>();
            r.object_entity = item.at("object_id").get<std::string>();
            if (!chunk_entities.count(r.subject_entity) || !chunk_entities.count(r.object_entity)) {
                drop("endpoint outside the chunk's entities");
                continue;
            }
            r.raw_label = text::trim(item.at("label").get<std::string>());
            if (r.raw_label.empty()) {
                drop("empty label");
                continue;
            }
            r.description = item.value("description", "");
            const std::string hint = item.value("hint_type", "ASSOCIATION");
            if (auto h = relation_hint_from_string(hint)) {
                r.hint_type = *h;
            } else {
                r.hint_type = RelationHint::Association;
                log.event(Stage::RelRec, "hint_coerced", {{"chunk_id", chunk.id}, {"hint_type", hint}});
            }
            r.qualifiers = normalize_qualifiers(item.value("qualifiers", json::object()));
            r.confidence = item.contains("confidence") && !item.at("confidence").is_null()
                               ? std::clamp(item.at("confidence").get<double>(), 0.0, 1.0)
                               : 1.0;
            for (const auto& e : item.value("evidence", json::array())) r.evidence.push_back(e.get<std::string>());
            if (std::any_of(r.evidence.begin(), r.evidence.end(),
                            [&](const std::string& e) { return e.empty() || chunk.text.find(e) == std::string::npos; })) {
                drop("evidence is not a verbatim excerpt of the chunk");
                continue;
            }
            r.provenance_chunks = {chunk.id};
            r.id = relation_id(chunk.id, out.size());
            out.push_back(std::move(r));
        } catch (const std::exception& e) {
            drop(std::string("malformed relation: ") + e.what());
        }
    }
    return out;
}

std::vector<RelationInstance> recognize_relations(const std::vector<Chunk>& chunks, const std::vector<Entity>& entities,
                                                  const std::vector<Mention>& mentions, StageContext& ctx) {
    const auto by_chunk = entity_stage::entities_by_chunk(entities, mentions);
    std::map<std::string, const Entity*> by_id;
    for (const auto& e : entities) by_id[e.id] = &e;
    std::map<std::string, std::string> mention_name;
    for (const auto& m : mentions) mention_name[m.id] = m.name;

    std::vector<const Chunk*> targets;
    std::vector<Request> requests;
    for (const auto& c : chunks) {
        auto it = by_chunk.find(c.id);
        if (it == by_chunk.end() || it->second.size() < 2) continue;
        json ents = json::array();
        for (const auto& eid : it->second) {
            const Entity& e = *by_id.at(eid);
            std::vector<std::string> forms{e.canonical_name};
            for (const auto& m : e.member_mentions) insert_sorted_unique(forms, mention_name.at(m));
            std::sort(forms.begin(), forms.end());
            forms.erase(std::unique(forms.begin(), forms.end()), forms.end());
            ents.push_back({{"id", e.id},
                            {"name", e.canonical_name},
                            {"surface_forms", forms},
                            {"type_hint", opt_to_json(e.type_hint)},
                            {"description", e.description}});
        }
        targets.push_back(&c);
        requests.push_back({"RelRec-" + c.id, expect::kRelationRecognition, {{"chunk", {{"id", c.id}, {"text", c.text}}}, {"entities", ents}},
                            ctx.config.recognition_budget});
    }
    const auto replies = ask_all(ctx, Stage::RelRec, requests);
    std::vector<RelationInstance> out;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (!replies[i]) continue;
        const auto& ids = by_chunk.at(targets[i]->id);
        const std::set<std::string> allowed(ids.begin(), ids.end());
        for (auto& r : relations_from_reply(*targets[i], allowed, *replies[i], ctx.log)) out.push_back(std::move(r));
    }
    return out;
}

std::pair<RelationInstance, RelationInstance> normalize_direction(const RelationInstance& r1, const RelationInstance& r2) {
    if (r1.subject_entity == r2.subject_entity && r1.object_entity == r2.object_entity) return {r1, r2};
    if (r1.subject_entity != r2.object_entity || r1.object_entity != r2.subject_entity)
        throw Error("normalize_direction: " + r1.id + " and " + r2.id + " connect different entity pairs");
    RelationInstance flipped = r2;
    std::swap(flipped.subject_entity, flipped.object_entity);
    flipped.canonical_label = r1.canonical_label ? *r1.canonical_label : r1.raw_label;
    return {r1, flipped};
}

QualifierMerge merge_qualifiers(const QualifierSet& a, const QualifierSet& b) {
    QualifierMerge out;
    out.merged = a;
    const auto& keys = qualifier_keys();
    for (std::size_t i = 0; i < kQualifierCount; ++i) {
        const auto& va = a.at(i);
        const auto& vb = b.at(i);
        if (!vb) continue;
        if (!va) {
            out.merged.set(static_cast<Qualifier>(i), vb);
            continue;
        }
        if (text::trim(*va) != text::trim(*vb)) {
            out.conflict = true;
            out.conflicting.emplace_back(keys[i]);
        }
    }
    if (out.conflict) out.merged = a;
    return out;
}

RelationState make_relation_state(const std::vector<RelationInstance>& relations) {
    RelationState s;
    for (const auto& r : relations) s.relations[r.id] = r;
    return s;
}

std::vector<RelationInstance> relations_of(const RelationState& state) {
    std::vector<RelationInstance> out;
    out.reserve(state.relations.size());
    for (const auto& [id, r] : state.relations) out.push_back(r);
    return out;
}

namespace {

std::optional<std::string> check_id(const RelationState& s, const std::set<std::string>& scope, const std::string& id) {
    if (!scope.count(id)) return "id outside batch: " + id;
    if (!s.relations.count(id)) return "stale id: " + id;
    return std::nullopt;
}

std::optional<std::string> non_empty(const json& payload, const char* key) {
    auto v = nullable_string(payload, key);
    if (v) *v = text::trim(*v);
    if (v && v->empty()) return std::nullopt;
    return v;
}

void set_group(RelationInstance& r, const std::string& group) {
    r.rel_cls_group = group;
    if (auto h = relation_hint_from_string(group)) r.hint_type = *h;
}

}  // namespace

ApplyResult apply_relation_action(RelationState& s, const json& payload, const std::set<std::string>& scope) {
    try {
        if (!payload.is_object() || !payload.contains("action")) return reject("malformed payload: missing action");
        const std::string kind = payload.at("action").get<std::string>();

        if (kind == "merge_relations") {
            const auto ids = payload.at("relation_ids").get<std::vector<std::string>>();
            if (ids.size() != 2 || ids[0] == ids[1]) return reject("merge needs exactly two distinct relations");
            for (const auto& id : ids)
                if (auto why = check_id(s, scope, id)) return reject(*why);
            const bool flip = payload.value("normalize_direction", false);
            RelationInstance keep = s.relations.at(ids[0]);
            RelationInstance drop = s.relations.at(ids[1]);
            const bool same = keep.subject_entity == drop.subject_entity && keep.object_entity == drop.object_entity;
            const bool reversed = keep.subject_entity == drop.object_entity && keep.object_entity == drop.subject_entity;
            if (!same && !(reversed && flip)) return reject("different endpoint pairs");
            if (!same) drop = normalize_direction(keep, drop).second;

            const auto q = merge_qualifiers(keep.qualifiers, drop.qualifiers);
            if (q.conflict) {
                const std::string keys = text::join(q.conflicting, ", ");
                append_unique(s.relations.at(ids[0]).remarks, "qualifier conflict with " + ids[1] + " on " + keys);
                append_unique(s.relations.at(ids[1]).remarks, "qualifier conflict with " + ids[0] + " on " + keys);
                return reject("qualifier conflict on " + keys);
            }
            keep.qualifiers = q.merged;
            keep.provenance_chunks = sorted_union(keep.provenance_chunks, drop.provenance_chunks);
            for (const auto& ev : drop.evidence) append_unique(keep.evidence, ev);
            for (const auto& r : drop.remarks) append_unique(keep.remarks, r);
            append_unique(keep.remarks, "merged duplicate " + drop.id);
            keep.confidence = std::max(keep.confidence, drop.confidence);
            if (keep.description.empty()) keep.description = drop.description;
            if (!keep.canonical_label) keep.canonical_label = drop.canonical_label;
            if (!keep.rel_cls) keep.rel_cls = drop.rel_cls;
            if (!keep.rel_cls_group) keep.rel_cls_group = drop.rel_cls_group;
            s.relations.erase(ids[1]);
            s.relations[ids[0]] = std::move(keep);
            return {};
        }

        const std::string id = payload.at("relation_id").get<std::string>();
        if (auto why = check_id(s, scope, id)) return reject(*why);
        RelationInstance& r = s.relations.at(id);

        if (kind == "set_canonical_rel") {
            auto label = non_empty(payload, "canonical_label");
            if (!label) return reject("empty canonical_label");
            r.canonical_label = *label;
            if (auto d = non_empty(payload, "canonical_description")) s.canonical_descriptions[*label] = *d;
            return {};
        }
        if (kind == "set_rel_cls") {
            auto cls = non_empty(payload, "rel_cls");
            if (!cls) return reject("empty rel_cls");
            r.rel_cls = *cls;
            return {};
        }
        if (kind == "set_rel_cls_group") {
            auto group = non_empty(payload, "rel_cls_group");
            if (!group) return reject("empty rel_cls_group");
            set_group(r, *group);
            return {};
        }
        if (kind == "modify_rel_schema") {
            auto label = non_empty(payload, "canonical_label");
            auto cls = non_empty(payload, "rel_cls");
            auto group = non_empty(payload, "rel_cls_group");
            if (!label && !cls && !group) return reject("modify_rel_schema changes nothing");
            if (label) r.canonical_label = *label;
            if (cls) r.rel_cls = *cls;
            if (group) set_group(r, *group);
            return {};
        }
        if (kind == "add_rel_remark") {
            auto remark = non_empty(payload, "remark");
            if (!remark) return reject("empty remark");
            append_unique(r.remarks, *remark);
            return {};
        }
        return reject("unknown action '" + kind + "'");
    } catch (const std::exception& e) {
        return reject(std::string("malformed payload: ") + e.what());
    }
}

ApplyCounts apply_relation_actions(RelationState& state, const json& reply, const std::set<std::string>& scope,
                                   const std::string& batch_id, RunLog& log) {
    ApplyCounts counts;
    if (!reply.is_array()) {
        log.event(Stage::RelRes, "parse_failure", {{"batch_id", batch_id}, {"detail", "reply is not an array"}});
        return counts;
    }
    for (const auto& payload : reply) {
        const auto result = apply_relation_action(state, payload, scope);
        log.record(Stage::RelRes, payload, batch_id, result.status, result.reason);
        if (result.status != ActionStatus::Applied) continue;
        const std::string kind = payload.value("action", "");
        if (kind != "add_rel_remark") ++counts.edits;
        if (kind == "merge_relations") ++counts.merges;
    }
    return counts;
}

namespace {

std::string qualifier_text(const QualifierSet& q) {
    std::vector<std::string> parts;
    for (std::size_t i = 0; i < kQualifierCount; ++i)
        if (q.at(i)) parts.push_back(*q.at(i));
    return text::join(parts, "; ");
}

}  // namespace

RelationState run_relation_resolution(const std::vector<RelationInstance>& relations, const std::vector<Entity>& entities,
                                      const Schema& schema, StageContext& ctx) {
    RelationState state = make_relation_state(relations);
    std::map<std::string, const Entity*> by_id;
    for (const auto& e : entities) by_id[e.id] = &e;
    std::map<std::string, std::string> class_label;
    for (const auto& c : schema.entity_classes) class_label[c.id] = c.label;
    auto endpoint = [&](const std::string& eid) {
        json j{{"id", eid}, {"name", ""}, {"class", nullptr}};
        if (auto it = by_id.find(eid); it != by_id.end()) j["name"] = it->second->canonical_name;
        if (auto it = schema.entity_class_of.find(eid); it != schema.entity_class_of.end()) j["class"] = class_label[it->second];
        return j;
    };
    auto endpoint_text = [&](const json& j) {
        std::string s = j.at("name").get<std::string>();
        if (j.at("class").is_string()) s += " (" + j.at("class").get<std::string>() + ")";
        return s;
    };
    const auto& cfg = ctx.config;
    auto w = [&](const char* key) {
        auto it = cfg.relation_weights.find(key);
        return it == cfg.relation_weights.end() ? 0.0 : it->second;
    };

    std::size_t quiet_runs = 0;
    for (std::size_t run = 1; run <= cfg.relation_resolution.max_runs; ++run) {
        if (state.relations.empty()) break;
        std::vector<std::pair<std::string, std::vector<Field>>> items;
        for (const auto& [id, r] : state.relations) {
            const std::string ends = endpoint_text(endpoint(r.subject_entity)) + " -> " + endpoint_text(endpoint(r.object_entity));
            items.push_back({id,
                             // Later runs embed the canonical label once one is assigned.
                             {{"raw_label", r.canonical_label ? *r.canonical_label : r.raw_label, w("raw_label")},
                              {"description", r.description, w("description")},
                              {"endpoints", ends, w("endpoints")},
                              {"hints", std::string(to_string(r.hint_type)), w("hints")},
                              {"qualifiers", qualifier_text(r.qualifiers), w("qualifiers")}}});
        }
        const auto reps = neighborhood::build_representations(items, ctx.embedder);

        std::vector<std::pair<std::string, std::vector<std::string>>> batches;
        neighborhood::Neighborhood residual{"noise", {}, true};
        for (const auto& n : neighborhood::neighborhoods(reps, cfg.cluster, cfg.max_cluster_size)) {
            if (n.is_noise) {
                residual.members.push_back(n.members.front());
                continue;
            }
            const auto parts = neighborhood::batch(n, cfg.batch_size);
            for (std::size_t b = 0; b < parts.size(); ++b) batches.push_back({n.id + "-b" + std::to_string(b), parts[b]});
        }
        const auto rest = neighborhood::batch(residual, cfg.batch_size);
        for (std::size_t b = 0; b < rest.size(); ++b) batches.push_back({"noise-b" + std::to_string(b), rest[b]});

        std::vector<Request> requests;
        for (const auto& [tag, ids] : batches) {
            json input = json::array();
            for (const auto& id : ids) {
                const auto& r = state.relations.at(id);
                input.push_back({{"id", r.id},
                                 {"raw_label", r.raw_label},
                                 {"description", r.description},
                                 {"hint_type", std::string(to_string(r.hint_type))},
                                 {"subject", endpoint(r.subject_entity)},
                                 {"object", endpoint(r.object_entity)},
                                 {"qualifiers", r.qualifiers},
                                 {"canonical_label", opt_to_json(r.canonical_label)},
                                 {"rel_cls", opt_to_json(r.rel_cls)},
                                 {"rel_cls_group", opt_to_json(r.rel_cls_group)}});
            }
            requests.push_back({"RelRes-r" + std::to_string(run) + "-" + tag, expect::kRelationResolution, {{"items", input}},
                                cfg.resolution_budget});
        }
        const auto replies = ask_all(ctx, Stage::RelRes, requests);

        ApplyCounts total;
        for (std::size_t i = 0; i < batches.size(); ++i) {
            const auto& batch_id = requests[i].request_id;
            log_batch(ctx.log, Stage::RelRes, batch_id, batches[i].second);
            if (!replies[i]) continue;
            const std::set<std::string> scope(batches[i].second.begin(), batches[i].second.end());
            const auto c = apply_relation_actions(state, *replies[i], scope, batch_id, ctx.log);
            total.edits += c.edits;
            total.merges += c.merges;
        }
        ctx.log.event(Stage::RelRes, "run",
                      {{"run", run}, {"edits", total.edits}, {"merges", total.merges}, {"relations", state.relations.size()}});
        quiet_runs = total.edits <= cfg.relation_resolution.edit_threshold ? quiet_runs + 1 : 0;
        if (quiet_runs >= cfg.relation_resolution.patience) break;
    }
    return state;
}

namespace {

// Most frequent value; ties go to the lexicographically smallest.
std::string majority(const std::map<std::string, std::size_t>& counts) {
    std::string best;
    std::size_t best_n = 0;
    for (const auto& [v, n] : counts)
        if (n > best_n) {
            best = v;
            best_n = n;
        }
    return best;
}

}  // namespace

std::vector<RelationInstance> finalize_relations(RelationState state, Schema& schema, RunLog& log) {
    for (auto& [id, r] : state.relations) {
        if (!r.canonical_label) r.canonical_label = text::snake_label(text::to_lower(r.raw_label));
        if (!r.rel_cls) r.rel_cls = *r.canonical_label;
        if (!r.rel_cls_group) r.rel_cls_group = std::string(to_string(r.hint_type));
    }

    std::map<std::string, std::map<std::string, std::size_t>> cls_votes;
    for (const auto& [id, r] : state.relations) ++cls_votes[*r.canonical_label][*r.rel_cls];
    std::map<std::string, std::string> tau;
    for (const auto& [label, votes] : cls_votes) {
        tau[label] = majority(votes);
        if (votes.size() > 1) log.event(Stage::RelRes, "tau_rel_harmonized", {{"canonical_label", label}, {"votes", votes}, {"chosen", tau[label]}});
    }
    // Labels that share an id slug collapse onto the first one.
    std::map<std::string, std::string> cls_by_slug;
    for (auto& [label, cls] : tau) cls = cls_by_slug.emplace(relation_class_id(cls), cls).first->second;
    for (auto& [id, r] : state.relations) r.rel_cls = tau.at(*r.canonical_label);

    std::map<std::string, std::map<std::string, std::size_t>> group_votes;
    for (const auto& [id, r] : state.relations) ++group_votes[*r.rel_cls][*r.rel_cls_group];
    std::map<std::string, std::string> gamma;
    for (const auto& [cls, votes] : group_votes) {
        gamma[cls] = majority(votes);
        if (votes.size() > 1) log.event(Stage::RelRes, "gamma_rel_harmonized", {{"rel_cls", cls}, {"votes", votes}, {"chosen", gamma[cls]}});
    }
    std::map<std::string, std::string> group_by_slug;
    for (auto& [cls, group] : gamma) group = group_by_slug.emplace(relation_group_id(group), group).first->second;
    for (auto& [id, r] : state.relations) r.rel_cls_group = gamma.at(*r.rel_cls);

    schema.canonical_relations.clear();
    schema.relation_classes.clear();
    schema.relation_class_groups.clear();
    schema.relation_class_of.clear();
    schema.relation_group_of.clear();
    std::map<std::string, RelationClass> classes;
    std::map<std::string, RelationClassGroup> groups;
    for (const auto& [label, cls] : tau) {
        auto d = state.canonical_descriptions.find(label);
        schema.canonical_relations.push_back({label, d == state.canonical_descriptions.end() ? "" : d->second});
        const std::string cid = relation_class_id(cls);
        const std::string gid = relation_group_id(gamma.at(cls));
        classes.emplace(cid, RelationClass{cid, cls, gid});
        groups.emplace(gid, RelationClassGroup{gid, gamma.at(cls)});
        schema.relation_class_of[label] = cid;
    }
    for (const auto& [cid, c] : classes) {
        schema.relation_classes.push_back(c);
        schema.relation_group_of[cid] = c.group_id;
    }
    for (const auto& [gid, g] : groups) schema.relation_class_groups.push_back(g);
    return relations_of(state);
}

}  // namespace tracekg::relation_stage
