#pragma once

// Builders and scratch directories shared by the test suites.

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "tracekg/config.hpp"
#include "tracekg/model.hpp"
#include "tracekg/stage.hpp"
#include "tracekg/text.hpp"

namespace testing {

using namespace tracekg;
namespace fs = std::filesystem;

class TempDir {
public:
    explicit TempDir(const std::string& tag = "t") {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("tracekg_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

inline Chunk make_chunk(const std::string& id, const std::string& text, const std::string& doc = "doc") {
    return Chunk{id, doc, text, text.empty() ? 0 : static_cast<std::size_t>(std::count(text.begin(), text.end(), ' ') + 1),
                 {SourceRegion{doc + ".txt", std::nullopt, "", ElementKind::Narrative}}};
}

inline Mention make_mention(const std::string& id, const std::string& chunk, const std::string& name,
                            const std::string& type = "Concept") {
    Mention m;
    m.id = id;
    m.chunk_id = chunk;
    m.span = {0, name.size()};
    m.name = name;
    m.description = "A " + type + ".";
    m.type_hint = type;
    m.confidence = 0.9;
    m.evidence = {name};
    return m;
}

inline Entity make_entity(const std::string& id, const std::string& name, const std::string& chunk,
                          const std::string& type = "Concept") {
    Entity e;
    e.id = id;
    e.canonical_name = name;
    e.description = "A " + type + ".";
    e.type_hint = type;
    e.member_mentions = {"Mn" + id.substr(2)};
    e.provenance_chunks = {chunk};
    e.evidence = {name};
    return e;
}

inline RelationInstance make_relation(const std::string& id, const std::string& s, const std::string& o,
                                      const std::string& label, const std::string& chunk = "c1") {
    RelationInstance r;
    r.id = id;
    r.subject_entity = s;
    r.object_entity = o;
    r.raw_label = label;
    r.description = label;
    r.provenance_chunks = {chunk};
    r.evidence = {label};
    return r;
}

// A consistent graph over entities named after their ids; edges are (s, o)
// index pairs. Every entity sits in class EC_0001 / group ECG_thing and every
// relation has canonical label "rel".
inline ContextEnrichedGraph graph_of(const std::vector<std::string>& names,
                                     const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                                     const std::vector<std::string>& labels = {}) {
    ContextEnrichedGraph g;
    EntityClass cls{"EC_0001", "Thing", "Things.", "ECG_thing", {}};
    for (std::size_t i = 0; i < names.size(); ++i) {
        const std::string id = "En_c1_" + std::to_string(1000 + i);
        auto e = make_entity(id, names[i], "c1");
        e.class_id = cls.id;
        g.entities.push_back(e);
        cls.member_entities.push_back(id);
        g.schema.entity_class_of[id] = cls.id;
    }
    std::sort(cls.member_entities.begin(), cls.member_entities.end());
    g.schema.entity_classes.push_back(cls);
    g.schema.entity_class_groups.push_back({"ECG_thing", "Thing", "Everything."});
    g.schema.class_group_of[cls.id] = "ECG_thing";
    std::set<std::string> canon;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const std::string label = i < labels.size() ? labels[i] : "rel";
        auto r = make_relation("Rl_c1_" + std::to_string(1000 + i), g.entities[edges[i].first].id,
                               g.entities[edges[i].second].id, label);
        r.canonical_label = text::snake_label(label);
        r.rel_cls = "link";
        r.rel_cls_group = "ASSOCIATION";
        canon.insert(*r.canonical_label);
        g.relations.push_back(r);
    }
    for (const auto& c : canon) {
        g.schema.canonical_relations.push_back({c, ""});
        g.schema.relation_class_of[c] = "RC_link";
    }
    if (!canon.empty()) {
        g.schema.relation_classes.push_back({"RC_link", "link", "RCG_association"});
        g.schema.relation_class_groups.push_back({"RCG_association", "ASSOCIATION"});
        g.schema.relation_group_of["RC_link"] = "RCG_association";
    }
    g.schema_complete = true;
    return g;
}

struct StubWorld {
    StubChat chat;
    HashEmbedder embedder{64};
    Config config;
    RunLog log;
    StageContext ctx{chat, embedder, config, log};
};

}  // namespace testing
