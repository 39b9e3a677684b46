#pragma once

// Final graph assembly, the line-delimited artifact store, flat triple
// export, the run manifest, and action-log replay.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tracekg/config.hpp"
#include "tracekg/stage.hpp"

namespace tracekg::assembly {

namespace fs = std::filesystem;

class AssemblyError : public Error {
public:
    AssemblyError(const std::string& what, ValidationReport report) : Error(what), report_(std::move(report)) {}
    const ValidationReport& report() const { return report_; }

private:
    ValidationReport report_;
};

// Sets class_id from tau_ent, marks the schema complete and validates.
// Throws AssemblyError carrying the report when any violation is found.
ContextEnrichedGraph assemble(std::vector<Entity> entities, std::vector<RelationInstance> relations, Schema schema,
                              const ValidationContext& ctx = {});

// ---------------------------------------------------------------------------
// Artifact store

namespace file {
inline constexpr const char* kChunks = "chunks.jsonl";
inline constexpr const char* kMentions = "mentions.jsonl";
inline constexpr const char* kEntities = "entities.jsonl";
inline constexpr const char* kClassesCandidate = "classes_candidate.jsonl";
inline constexpr const char* kClassesResolved = "classes_resolved.jsonl";
inline constexpr const char* kRelationsRaw = "relations_raw.jsonl";
inline constexpr const char* kRelationsResolved = "relations_resolved.jsonl";
inline constexpr const char* kSchema = "schema.jsonl";
inline constexpr const char* kActions = "actions.jsonl";
inline constexpr const char* kPrompts = "prompts.jsonl";
inline constexpr const char* kEvents = "events.jsonl";
inline constexpr const char* kGraph = "graph.json";
inline constexpr const char* kTriples = "triples.tsv";
inline constexpr const char* kValidation = "validation.json";
inline constexpr const char* kManifest = "manifest.json";
}  // namespace file

class ArtifactError : public Error {
public:
    using Error::Error;
};

// One compact JSON record per line; object keys are emitted in sorted order.
void write_records(const fs::path& path, const std::vector<json>& records);
// Throws ArtifactError "<file>:<line>: <reason>" on a corrupt line.
std::vector<json> read_records(const fs::path& path);

template <class T>
void write_jsonl(const fs::path& path, const std::vector<T>& items) {
    std::vector<json> records;
    records.reserve(items.size());
    for (const auto& item : items) records.push_back(json(item));
    write_records(path, records);
}

template <class T>
std::vector<T> read_jsonl(const fs::path& path) {
    std::vector<T> out;
    std::size_t line = 0;
    for (const auto& record : read_records(path)) {
        ++line;
        try {
            out.push_back(record.get<T>());
        } catch (const std::exception& e) {
            throw ArtifactError(path.string() + ":" + std::to_string(line) + ": " + e.what());
        }
    }
    return out;
}

// The schema artifact holds a single record.
void write_schema(const fs::path& path, const Schema& schema);
Schema read_schema(const fs::path& path);

void write_run_log(const fs::path& dir, const RunLog& log);
RunLog read_run_log(const fs::path& dir);

void write_text(const fs::path& path, const std::string& content);
std::string read_text(const fs::path& path);

// Tab-separated "subject name, predicate, object name" lines.
std::string triples_tsv(const ContextEnrichedGraph& g);

// Config snapshot, provider identities and FNV-1a checksums of every
// artifact present in `dir`. Contains no timestamps.
json manifest(const fs::path& dir, const Config& config, const std::string& chat_identity,
              const std::string& embedder_identity, const std::vector<std::string>& completed_stages);

// ---------------------------------------------------------------------------
// Replay

struct ReplayResult {
    std::vector<Entity> entities;
    std::vector<EntityClass> classes;
    std::vector<RelationInstance> relations;
    Schema schema;
};

// Re-applies the logged EntRes / EntClsRes / RelRes actions (rejected ones
// included, through the same validators and batch scopes) to the raw
// artifacts, then runs the deterministic finalization steps.
ReplayResult replay(const std::vector<Mention>& mentions, const std::vector<EntityClass>& candidates,
                    const std::vector<RelationInstance>& raw_relations, const RunLog& log, Embedder& embedder,
                    const Config& config);

// Line-level differences between replayed and stored resolved artifacts in
// a run directory; empty when replay reproduces them exactly.
std::vector<std::string> replay_diff(const fs::path& run_dir, Embedder& embedder, const Config& config);

}  // namespace tracekg::assembly
