#include "tracekg/schema_stage.hpp"

#include <algorithm>

#include "tracekg/text.hpp"

namespace tracekg::schema_stage {

using entity_stage::ApplyResult;
using neighborhood::Field;

std::string class_id(std::size_t ordinal) { return "EC_" + text::pad(ordinal, 4); }

namespace {

constexpr std::size_t kMembersShown = 25;

ApplyResult reject(std::string why) { return {ActionStatus::Rejected, std::move(why)}; }

std::optional<std::string> nullable_string(const json& payload, const char* key) {
    if (!payload.contains(key) || payload.at(key).is_null()) return std::nullopt;
    return payload.at(key).get<std::string>();
}

json entity_brief(const Entity& e) {
    return {{"id", e.id},
            {"name", e.canonical_name},
            {"description", e.description},
            {"type_hint", opt_to_json(e.type_hint)},
            {"evidence", e.evidence.empty() ? json("") : json(e.evidence.front())}};
}

std::string fallback_label(const Entity& e) {
    if (e.type_hint && !text::trim(*e.type_hint).empty()) return text::trim(*e.type_hint);
    return e.canonical_name;
}

struct Recognizer {
    const std::map<std::string, const Entity*>& by_id;
    StageContext& ctx;
    std::vector<EntityClass> classes;
    std::set<std::string> assigned;

    // Returns the number of newly covered entities.
    std::size_t propose(const std::vector<std::pair<std::string, std::vector<std::string>>>& batches) {
        std::vector<Request> requests;
        for (const auto& [tag, ids] : batches) {
            json items = json::array();
            for (const auto& id : ids) items.push_back(entity_brief(*by_id.at(id)));
            requests.push_back({"EntClsRec-" + tag, expect::kClassRecognition, {{"items", items}}, ctx.config.recognition_budget});
        }
        const auto replies = ask_all(ctx, Stage::EntClsRec, requests);
        std::size_t covered = 0;
        for (std::size_t i = 0; i < batches.size(); ++i) {
            if (!replies[i]) continue;
            const auto& reply = *replies[i];
            if (!reply.is_array()) {
                ctx.log.event(Stage::EntClsRec, "parse_failure", {{"request_id", requests[i].request_id}});
                continue;
            }
            const std::set<std::string> scope(batches[i].second.begin(), batches[i].second.end());
            for (const auto& cand : reply) {
                try {
                    EntityClass c;
                    c.label = text::trim(cand.at("label").get<std::string>());
                    c.description = cand.value("description", "");
                    for (const auto& m : cand.at("member_ids")) {
                        const auto id = m.get<std::string>();
                        if (scope.count(id)) insert_sorted_unique(c.member_entities, id);
                        else ctx.log.event(Stage::EntClsRec, "member_dropped", {{"request_id", requests[i].request_id}, {"entity_id", id}});
                    }
                    if (c.label.empty() || c.member_entities.empty()) {
                        ctx.log.event(Stage::EntClsRec, "candidate_dropped", {{"request_id", requests[i].request_id}, {"item", cand}});
                        continue;
                    }
                    for (const auto& m : c.member_entities) covered += assigned.insert(m).second ? 1 : 0;
                    c.id = class_id(classes.size() + 1);
                    classes.push_back(std::move(c));
                } catch (const std::exception& e) {
                    ctx.log.event(Stage::EntClsRec, "candidate_dropped",
                                  {{"request_id", requests[i].request_id}, {"detail", e.what()}});
                }
            }
        }
        return covered;
    }

    std::vector<std::string> unassigned() const {
        std::vector<std::string> out;
        for (const auto& [id, e] : by_id)
            if (!assigned.count(id)) out.push_back(id);
        return out;
    }
};

}  // namespace

std::vector<EntityClass> recognize_classes(const std::vector<Entity>& entities, StageContext& ctx) {
    std::map<std::string, const Entity*> by_id;
    for (const auto& e : entities) by_id[e.id] = &e;
    Recognizer rec{by_id, ctx, {}, {}};
    const auto& cfg = ctx.config;

    // Clustered neighborhoods, re-clustering whatever is still unassigned.
    for (std::size_t round = 1; round <= cfg.class_recognition_rounds; ++round) {
        const auto pending = rec.unassigned();
        if (pending.size() < 2) break;
        std::vector<std::pair<std::string, std::vector<Field>>> items;
        for (const auto& id : pending) items.push_back({id, entity_stage::entity_fields(*by_id.at(id), cfg.class_recognition_weights)});
        const auto reps = neighborhood::build_representations(items, ctx.embedder);
        std::vector<std::pair<std::string, std::vector<std::string>>> batches;
        for (const auto& n : neighborhood::neighborhoods(reps, cfg.cluster, cfg.max_cluster_size)) {
            if (n.is_noise) continue;
            const auto parts = neighborhood::batch(n, cfg.batch_size);
            for (std::size_t b = 0; b < parts.size(); ++b)
                batches.push_back({"r" + std::to_string(round) + "-" + n.id + "-b" + std::to_string(b), parts[b]});
        }
        if (batches.empty()) break;
        const auto covered = rec.propose(batches);
        ctx.log.event(Stage::EntClsRec, "round", {{"round", round}, {"covered", covered}});
        if (covered == 0) break;
    }

    // Residual pass over the leftovers in stable id order.
    {
        neighborhood::Neighborhood rest{"residual", rec.unassigned(), true};
        std::vector<std::pair<std::string, std::vector<std::string>>> batches;
        const auto parts = neighborhood::batch(rest, cfg.batch_size);
        for (std::size_t b = 0; b < parts.size(); ++b)
            if (parts[b].size() >= 2) batches.push_back({"residual-b" + std::to_string(b), parts[b]});
        if (!batches.empty()) rec.propose(batches);
    }

    // Single-entity fallback: one request per entity, then a deterministic
    // singleton class for anything still uncovered.
    {
        std::vector<std::pair<std::string, std::vector<std::string>>> batches;
        for (const auto& id : rec.unassigned()) batches.push_back({"single-" + id, {id}});
        if (!batches.empty()) rec.propose(batches);
        for (const auto& id : rec.unassigned()) {
            const Entity& e = *by_id.at(id);
            EntityClass c{class_id(rec.classes.size() + 1), fallback_label(e), "", std::nullopt, {id}};
            ctx.log.event(Stage::EntClsRec, "fallback_class", {{"entity_id", id}, {"class_id", c.id}, {"label", c.label}});
            rec.assigned.insert(id);
            rec.classes.push_back(std::move(c));
        }
    }
    return rec.classes;
}

// ---------------------------------------------------------------------------

ClassState make_class_state(const std::vector<EntityClass>& classes, const std::vector<Entity>& entities) {
    ClassState s;
    for (const auto& e : entities) s.entity_ids.insert(e.id);
    std::size_t max_ordinal = 0;
    for (const auto& c : classes) {
        s.classes[c.id] = c;
        if (c.id.rfind("EC_", 0) == 0) {
            try {
                max_ordinal = std::max<std::size_t>(max_ordinal, std::stoul(c.id.substr(3)));
            } catch (const std::exception&) {
            }
        }
    }
    s.next_ordinal = max_ordinal + 1;
    return s;
}

namespace {

std::string ensure_group(ClassState& s, const std::string& label) {
    const std::string id = entity_group_id(label);
    s.groups.emplace(id, EntityClassGroup{id, label, ""});
    return id;
}

// Resolves a class reference: provisional ids first, then ids in scope.
std::optional<std::string> resolve_class(const ClassState& s, const std::set<std::string>& scope,
                                         const std::map<std::string, std::string>& provisional, const std::string& ref,
                                         std::string& why) {
    if (auto it = provisional.find(ref); it != provisional.end()) {
        if (!s.classes.count(it->second)) {
            why = "stale provisional id: " + ref;
            return std::nullopt;
        }
        return it->second;
    }
    if (!scope.count(ref)) {
        why = "class id outside batch: " + ref;
        return std::nullopt;
    }
    if (!s.classes.count(ref)) {
        why = "stale class id: " + ref;
        return std::nullopt;
    }
    return ref;
}

std::optional<std::string> check_provisional(const ClassState& s, const std::map<std::string, std::string>& provisional,
                                             const std::optional<std::string>& tmp) {
    if (!tmp) return std::nullopt;
    if (tmp->empty()) return "empty provisional id";
    if (provisional.count(*tmp)) return "provisional id reused: " + *tmp;
    if (s.classes.count(*tmp)) return "provisional id collides with a class id: " + *tmp;
    return std::nullopt;
}

}  // namespace

ApplyResult apply_class_action(ClassState& s, const json& payload, const std::set<std::string>& scope,
                               std::map<std::string, std::string>& provisional) {
    try {
        if (!payload.is_object() || !payload.contains("action")) return reject("malformed payload: missing action");
        const std::string kind = payload.at("action").get<std::string>();
        std::string why;

        if (kind == "merge_classes") {
            std::vector<std::string> ids;
            for (const auto& ref : payload.at("class_ids")) {
                auto id = resolve_class(s, scope, provisional, ref.get<std::string>(), why);
                if (!id) return reject(why);
                if (std::find(ids.begin(), ids.end(), *id) != ids.end()) return reject("duplicate class id: " + *id);
                ids.push_back(*id);
            }
            if (ids.size() < 2) return reject("merge needs at least two classes");
            const auto tmp = nullable_string(payload, "provisional_id");
            if (auto bad = check_provisional(s, provisional, tmp)) return reject(*bad);
            std::sort(ids.begin(), ids.end());
            EntityClass merged;
            merged.id = s.fresh_id();
            merged.label = s.classes.at(ids.front()).label;
            for (const auto& id : ids) {
                const auto& c = s.classes.at(id);
                merged.member_entities = sorted_union(merged.member_entities, c.member_entities);
                if (merged.description.empty()) merged.description = c.description;
                if (!merged.group_id) merged.group_id = c.group_id;
            }
            if (auto l = nullable_string(payload, "new_label"); l && !text::trim(*l).empty()) merged.label = text::trim(*l);
            if (auto d = nullable_string(payload, "new_description")) merged.description = *d;
            for (const auto& id : ids) s.classes.erase(id);
            if (tmp) provisional[*tmp] = merged.id;
            s.classes[merged.id] = std::move(merged);
            return {};
        }

        if (kind == "split_class") {
            auto id = resolve_class(s, scope, provisional, payload.at("class_id").get<std::string>(), why);
            if (!id) return reject(why);
            const auto& parent = s.classes.at(*id);
            std::vector<std::string> covered;
            std::set<std::string> tmps;
            const auto& parts = payload.at("parts");
            if (!parts.is_array() || parts.size() < 2) return reject("split needs at least two parts");
            for (const auto& p : parts) {
                if (text::trim(p.at("label").get<std::string>()).empty()) return reject("split part without label");
                const auto tmp = nullable_string(p, "provisional_id");
                if (auto bad = check_provisional(s, provisional, tmp)) return reject(*bad);
                if (tmp && !tmps.insert(*tmp).second) return reject("provisional id reused: " + *tmp);
                const auto members = p.at("member_ids").get<std::vector<std::string>>();
                if (members.empty()) return reject("split part without members");
                covered.insert(covered.end(), members.begin(), members.end());
            }
            std::sort(covered.begin(), covered.end());
            if (covered != parent.member_entities) return reject("split parts do not partition the class");
            const auto group = parent.group_id;
            s.classes.erase(*id);
            for (const auto& p : parts) {
                EntityClass c;
                c.id = s.fresh_id();
                c.label = text::trim(p.at("label").get<std::string>());
                c.description = p.value("description", "");
                c.group_id = group;
                for (const auto& m : p.at("member_ids")) insert_sorted_unique(c.member_entities, m.get<std::string>());
                if (auto tmp = nullable_string(p, "provisional_id")) provisional[*tmp] = c.id;
                s.classes[c.id] = std::move(c);
            }
            return {};
        }

        if (kind == "create_class") {
            const auto tmp = nullable_string(payload, "provisional_id");
            if (auto bad = check_provisional(s, provisional, tmp)) return reject(*bad);
            const std::string label = text::trim(payload.at("label").get<std::string>());
            if (label.empty()) return reject("create_class without label");
            EntityClass c;
            for (const auto& m : payload.value("member_ids", json::array())) {
                const auto eid = m.get<std::string>();
                if (!s.entity_ids.count(eid)) return reject("unknown entity id: " + eid);
                insert_sorted_unique(c.member_entities, eid);
            }
            c.id = s.fresh_id();
            c.label = label;
            c.description = payload.value("description", "");
            if (auto g = nullable_string(payload, "class_group"); g && !text::trim(*g).empty()) c.group_id = ensure_group(s, text::trim(*g));
            if (tmp) provisional[*tmp] = c.id;
            s.classes[c.id] = std::move(c);
            return {};
        }

        if (kind == "reassign_entities") {
            const auto entity_ids = payload.at("entity_ids").get<std::vector<std::string>>();
            if (entity_ids.empty()) return reject("no entities to reassign");
            for (const auto& eid : entity_ids)
                if (!s.entity_ids.count(eid)) return reject("unknown entity id: " + eid);
            auto to = resolve_class(s, scope, provisional, payload.at("to_class_id").get<std::string>(), why);
            if (!to) return reject(why);
            std::optional<std::string> from;
            if (auto f = nullable_string(payload, "from_class_id")) {
                from = resolve_class(s, scope, provisional, *f, why);
                if (!from) return reject(why);
                const auto& members = s.classes.at(*from).member_entities;
                for (const auto& eid : entity_ids)
                    if (!std::binary_search(members.begin(), members.end(), eid)) return reject(eid + " is not a member of " + *from);
            }
            for (auto& [cid, c] : s.classes) {
                if (cid == *to || (from && cid != *from)) continue;
                std::erase_if(c.member_entities, [&](const std::string& m) {
                    return std::find(entity_ids.begin(), entity_ids.end(), m) != entity_ids.end();
                });
            }
            for (const auto& eid : entity_ids) insert_sorted_unique(s.classes.at(*to).member_entities, eid);
            return {};
        }

        if (kind == "modify_class") {
            auto id = resolve_class(s, scope, provisional, payload.at("class_id").get<std::string>(), why);
            if (!id) return reject(why);
            auto& c = s.classes.at(*id);
            if (auto l = nullable_string(payload, "new_label")) {
                if (text::trim(*l).empty()) return reject("empty new_label");
                c.label = text::trim(*l);
            }
            if (auto d = nullable_string(payload, "new_description")) c.description = *d;
            if (auto g = nullable_string(payload, "new_class_group")) {
                if (text::trim(*g).empty()) return reject("empty new_class_group");
                c.group_id = ensure_group(s, text::trim(*g));
            }
            return {};
        }
        return reject("unknown action '" + kind + "'");
    } catch (const json::exception& e) {
        return reject(std::string("malformed payload: ") + e.what());
    }
}

std::size_t apply_class_actions(ClassState& state, const json& reply, const std::set<std::string>& scope,
                                const std::string& batch_id, RunLog& log) {
    if (!reply.is_array()) {
        log.event(Stage::EntClsRes, "parse_failure", {{"batch_id", batch_id}, {"detail", "reply is not an array"}});
        return 0;
    }
    std::map<std::string, std::string> provisional;
    std::size_t applied = 0;
    for (const auto& payload : reply) {
        const auto result = apply_class_action(state, payload, scope, provisional);
        log.record(Stage::EntClsRes, payload, batch_id, result.status, result.reason);
        if (result.status == ActionStatus::Applied) ++applied;
    }
    return applied;
}

namespace {

std::vector<Field> class_fields(const EntityClass& c, const std::map<std::string, const Entity*>& by_id,
                                const neighborhood::Weights& weights) {
    auto w = [&](const char* key) {
        auto it = weights.find(key);
        return it == weights.end() ? 0.0 : it->second;
    };
    std::vector<std::string> names;
    std::vector<std::string> evidence;
    for (const auto& m : c.member_entities) {
        if (names.size() >= kMembersShown) break;
        auto it = by_id.find(m);
        if (it == by_id.end()) continue;
        names.push_back(it->second->canonical_name);
        if (!it->second->evidence.empty() && evidence.size() < 5) evidence.push_back(it->second->evidence.front());
    }
    return {{"label", c.label, w("label")},
            {"description", c.description, w("description")},
            {"evidence", text::join(evidence, " "), w("evidence")},
            {"members", text::join(names, ", "), w("members")}};
}

}  // namespace

ClassState run_class_resolution(const std::vector<EntityClass>& candidates, const std::vector<Entity>& entities,
                                StageContext& ctx) {
    ClassState state = make_class_state(candidates, entities);
    std::map<std::string, const Entity*> by_id;
    for (const auto& e : entities) by_id[e.id] = &e;
    const auto& cfg = ctx.config;
    const auto& plateau = cfg.class_resolution;

    std::size_t quiet_runs = 0;
    for (std::size_t run = 1; run <= plateau.max_runs; ++run) {
        if (state.classes.empty()) break;
        std::vector<std::pair<std::string, std::vector<Field>>> items;
        for (const auto& [id, c] : state.classes) items.push_back({id, class_fields(c, by_id, cfg.class_weights)});
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
            json classes = json::array();
            for (const auto& id : ids) {
                const auto& c = state.classes.at(id);
                json members = json::array();
                for (std::size_t k = 0; k < c.member_entities.size() && k < kMembersShown; ++k) {
                    const Entity& e = *by_id.at(c.member_entities[k]);
                    members.push_back({{"id", e.id}, {"name", e.canonical_name}, {"type_hint", opt_to_json(e.type_hint)}});
                }
                json group = nullptr;
                if (c.group_id) group = state.groups.count(*c.group_id) ? state.groups.at(*c.group_id).label : *c.group_id;
                classes.push_back({{"id", c.id},
                                   {"label", c.label},
                                   {"description", c.description},
                                   {"group", group},
                                   {"member_count", c.member_entities.size()},
                                   {"members", members}});
            }
            requests.push_back({"EntClsRes-r" + std::to_string(run) + "-" + tag, expect::kClassResolution, {{"classes", classes}},
                                cfg.resolution_budget});
        }
        const auto replies = ask_all(ctx, Stage::EntClsRes, requests);

        std::size_t edits = 0;
        for (std::size_t i = 0; i < batches.size(); ++i) {
            const auto& batch_id = requests[i].request_id;
            log_batch(ctx.log, Stage::EntClsRes, batch_id, batches[i].second);
            if (!replies[i]) continue;
            const std::set<std::string> scope(batches[i].second.begin(), batches[i].second.end());
            edits += apply_class_actions(state, *replies[i], scope, batch_id, ctx.log);
        }
        ctx.log.event(Stage::EntClsRes, "run", {{"run", run}, {"edits", edits}, {"classes", state.classes.size()}});
        quiet_runs = edits <= plateau.edit_threshold ? quiet_runs + 1 : 0;
        if (quiet_runs >= plateau.patience) break;
    }
    return state;
}

Schema finalize_classes(ClassState s, const std::vector<Entity>& entities, Embedder& embedder,
                        const neighborhood::Weights& entity_weights, RunLog& log) {
    auto collect_garbage = [&] {
        for (auto it = s.classes.begin(); it != s.classes.end();) {
            if (it->second.member_entities.empty()) {
                log.event(Stage::EntClsRes, "empty_class_removed", {{"class_id", it->first}, {"label", it->second.label}});
                it = s.classes.erase(it);
            } else {
                ++it;
            }
        }
    };
    collect_garbage();

    std::map<std::string, std::vector<std::string>> classes_of;
    for (const auto& [cid, c] : s.classes)
        for (const auto& m : c.member_entities) classes_of[m].push_back(cid);

    // Uncovered entities get a deterministic singleton class.
    for (const auto& e : entities) {
        if (classes_of.count(e.id)) continue;
        EntityClass c{s.fresh_id(), fallback_label(e), "", std::nullopt, {e.id}};
        log.event(Stage::EntClsRes, "fallback_class", {{"entity_id", e.id}, {"class_id", c.id}});
        classes_of[e.id].push_back(c.id);
        s.classes[c.id] = std::move(c);
    }

    // Multi-assigned entities stay only in the class with the closest centroid.
    std::vector<std::string> multi;
    for (const auto& [eid, cids] : classes_of)
        if (cids.size() > 1) multi.push_back(eid);
    if (!multi.empty()) {
        std::vector<std::pair<std::string, std::vector<Field>>> items;
        for (const auto& e : entities) items.push_back({e.id, entity_stage::entity_fields(e, entity_weights)});
        std::map<std::string, Vector> vec;
        for (auto& r : neighborhood::build_representations(items, embedder)) vec[r.item_id] = std::move(r.combined);
        std::map<std::string, Vector> centroid;
        for (const auto& [cid, c] : s.classes) {
            Vector sum;
            for (const auto& m : c.member_entities) {
                const auto& v = vec.at(m);
                if (sum.empty()) sum.assign(v.size(), 0.0);
                for (std::size_t i = 0; i < v.size(); ++i) sum[i] += v[i];
            }
            centroid[cid] = std::move(sum);
        }
        for (const auto& eid : multi) {
            auto cids = classes_of.at(eid);
            std::sort(cids.begin(), cids.end());
            std::string keep = cids.front();
            double best = cosine(vec.at(eid), centroid.at(keep));
            for (std::size_t i = 1; i < cids.size(); ++i) {
                const double sim = cosine(vec.at(eid), centroid.at(cids[i]));
                if (sim > best) {
                    best = sim;
                    keep = cids[i];
                }
            }
            for (const auto& cid : cids)
                if (cid != keep) std::erase(s.classes.at(cid).member_entities, eid);
            log.event(Stage::EntClsRes, "multi_assignment_resolved", {{"entity_id", eid}, {"candidates", cids}, {"kept", keep}});
        }
        collect_garbage();
    }

    for (auto& [cid, c] : s.classes) {
        if (c.group_id && s.groups.count(*c.group_id)) continue;
        c.group_id = ensure_group(s, c.group_id ? *c.group_id : c.label);
        log.event(Stage::EntClsRes, "singleton_group", {{"class_id", cid}, {"group_id", *c.group_id}});
    }

    Schema schema;
    std::set<std::string> used_groups;
    for (const auto& [cid, c] : s.classes) {
        schema.entity_classes.push_back(c);
        schema.class_group_of[cid] = *c.group_id;
        used_groups.insert(*c.group_id);
        for (const auto& m : c.member_entities) schema.entity_class_of[m] = cid;
    }
    for (const auto& [gid, g] : s.groups)
        if (used_groups.count(gid)) schema.entity_class_groups.push_back(g);
    return schema;
}

}  // namespace tracekg::schema_stage
