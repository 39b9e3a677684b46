#include "tracekg/pipeline.hpp"

#include <algorithm>
#include <set>

#include "tracekg/entity_stage.hpp"
#include "tracekg/ingest.hpp"
#include "tracekg/relation_stage.hpp"
#include "tracekg/schema_stage.hpp"

namespace tracekg {

namespace fs = std::filesystem;
namespace file = assembly::file;

namespace {

const std::vector<std::string> kStageOrder = {"ingest", "extract", "resolve-entities", "induce-entity-schema",
                                              "extract-relations", "resolve-relations", "assemble"};

std::size_t stage_rank(Stage s) { return static_cast<std::size_t>(s); }

std::size_t stage_rank(const json& record) {
    try {
        return stage_rank(stage_from_string(record.value("stage", "")));
    } catch (const std::exception&) {
        return 99;
    }
}

}  // namespace

Providers make_providers(const Config& config, const std::string& kind) {
    if (kind == "stub")
        return {std::make_shared<StubChat>(StubChatOptions{config.stub_entity_merge_similarity}),
                std::make_shared<HashEmbedder>(config.stub_embedding_dim)};
    if (kind == "live")
        return {std::make_shared<HttpChat>(config.chat_endpoint),
                std::make_shared<CachedEmbedder>(std::make_shared<HttpEmbedder>(config.embedding_endpoint))};
    throw Error("unknown provider '" + kind + "' (expected live or stub)");
}

void require_artifact(const fs::path& path, const std::string& stage) {
    if (!fs::exists(path)) throw Error("missing " + path.filename().string() + " in " + path.parent_path().string() + ": run " + stage + " first");
}

ContextEnrichedGraph load_graph(const fs::path& run_dir) {
    require_artifact(run_dir / file::kGraph, "assemble");
    try {
        return json::parse(assembly::read_text(run_dir / file::kGraph)).get<ContextEnrichedGraph>();
    } catch (const json::exception& e) {
        throw Error((run_dir / file::kGraph).string() + ": " + e.what());
    }
}

Pipeline::Pipeline(fs::path run_dir, Config config, Providers providers)
    : dir_(std::move(run_dir)), config_(std::move(config)), providers_(std::move(providers)) {}

void Pipeline::require(const char* name, const char* stage) const { require_artifact(at(name), stage); }

RunLog Pipeline::begin(std::initializer_list<Stage> stages) const {
    RunLog log = assembly::read_run_log(dir_);
    for (const auto s : stages) log.clear(s);
    return log;
}

void Pipeline::finish(RunLog& log, const std::string& stage_name) {
    std::stable_sort(log.actions.begin(), log.actions.end(),
                     [](const ActionRecord& a, const ActionRecord& b) { return stage_rank(a.stage) < stage_rank(b.stage); });
    auto by_stage = [](const json& a, const json& b) { return stage_rank(a) < stage_rank(b); };
    std::stable_sort(log.prompts.begin(), log.prompts.end(), by_stage);
    std::stable_sort(log.events.begin(), log.events.end(), by_stage);
    assembly::write_run_log(dir_, log);

    std::set<std::string> done{stage_name};
    if (fs::exists(at(file::kManifest))) {
        const auto old = json::parse(assembly::read_text(at(file::kManifest)));
        for (const auto& s : old.value("stages", json::array())) done.insert(s.get<std::string>());
    }
    std::vector<std::string> ordered;
    for (const auto& s : kStageOrder)
        if (done.count(s)) ordered.push_back(s);
    const auto m = assembly::manifest(dir_, config_, providers_.chat->identity(), providers_.embedder->identity(), ordered);
    assembly::write_text(at(file::kManifest), m.dump(2) + "\n");
}

void Pipeline::ingest(const std::vector<fs::path>& inputs) {
    std::vector<fs::path> files;
    for (const auto& in : inputs) {
        if (fs::is_directory(in)) {
            for (const auto& entry : fs::directory_iterator(in)) {
                const auto ext = entry.path().extension();
                if (entry.is_regular_file() && (ext == ".txt" || ext == ".json")) files.push_back(entry.path());
            }
        } else if (fs::exists(in)) {
            files.push_back(in);
        } else {
            throw Error("input not found: " + in.string());
        }
    }
    std::sort(files.begin(), files.end());
    auto textualizer = ingest::make_textualizer(config_.textualizer);
    std::vector<Chunk> chunks;
    std::set<std::string> doc_ids;
    for (const auto& f : files) {
        const auto doc = ingest::load_document(f);
        if (!doc_ids.insert(doc.doc_id).second) throw ingest::IngestError(doc.doc_id, "duplicate document id");
        const auto stream = ingest::textualize(doc, *textualizer);
        for (auto& c : ingest::chunk(stream, config_.chunk_min_tokens, config_.chunk_max_tokens)) chunks.push_back(std::move(c));
    }
    fs::create_directories(dir_);
    assembly::write_jsonl(at(file::kChunks), chunks);
    RunLog log = assembly::read_run_log(dir_);
    finish(log, "ingest");
}

void Pipeline::extract() {
    require(file::kChunks, "ingest");
    const auto chunks = assembly::read_jsonl<Chunk>(at(file::kChunks));
    RunLog log = begin({Stage::EntRec});
    StageContext ctx{*providers_.chat, *providers_.embedder, config_, log};
    const auto mentions = entity_stage::recognize_entities(chunks, ctx);
    assembly::write_jsonl(at(file::kMentions), mentions);
    finish(log, "extract");
}

void Pipeline::resolve_entities() {
    require(file::kMentions, "extract");
    const auto mentions = assembly::read_jsonl<Mention>(at(file::kMentions));
    RunLog log = begin({Stage::EntRes});
    StageContext ctx{*providers_.chat, *providers_.embedder, config_, log};
    const auto entities = entity_stage::run_entity_resolution(mentions, ctx);
    assembly::write_jsonl(at(file::kEntities), entities);
    finish(log, "resolve-entities");
}

void Pipeline::induce_entity_schema() {
    require(file::kEntities, "resolve-entities");
    const auto entities = assembly::read_jsonl<Entity>(at(file::kEntities));
    RunLog log = begin({Stage::EntClsRec, Stage::EntClsRes});
    StageContext ctx{*providers_.chat, *providers_.embedder, config_, log};
    const auto candidates = schema_stage::recognize_classes(entities, ctx);
    assembly::write_jsonl(at(file::kClassesCandidate), candidates);
    auto state = schema_stage::run_class_resolution(candidates, entities, ctx);
    const auto schema = schema_stage::finalize_classes(std::move(state), entities, *providers_.embedder, config_.entity_weights, log);
    assembly::write_jsonl(at(file::kClassesResolved), schema.entity_classes);
    assembly::write_schema(at(file::kSchema), schema);
    finish(log, "induce-entity-schema");
}

void Pipeline::extract_relations() {
    require(file::kChunks, "ingest");
    require(file::kMentions, "extract");
    require(file::kEntities, "resolve-entities");
    const auto chunks = assembly::read_jsonl<Chunk>(at(file::kChunks));
    const auto mentions = assembly::read_jsonl<Mention>(at(file::kMentions));
    const auto entities = assembly::read_jsonl<Entity>(at(file::kEntities));
    RunLog log = begin({Stage::RelRec});
    StageContext ctx{*providers_.chat, *providers_.embedder, config_, log};
    const auto relations = relation_stage::recognize_relations(chunks, entities, mentions, ctx);
    assembly::write_jsonl(at(file::kRelationsRaw), relations);
    finish(log, "extract-relations");
}

void Pipeline::resolve_relations() {
    require(file::kRelationsRaw, "extract-relations");
    require(file::kSchema, "induce-entity-schema");
    const auto entities = assembly::read_jsonl<Entity>(at(file::kEntities));
    const auto raw = assembly::read_jsonl<RelationInstance>(at(file::kRelationsRaw));
    auto schema = assembly::read_schema(at(file::kSchema));
    RunLog log = begin({Stage::RelRes});
    StageContext ctx{*providers_.chat, *providers_.embedder, config_, log};
    auto state = relation_stage::run_relation_resolution(raw, entities, schema, ctx);
    const auto relations = relation_stage::finalize_relations(std::move(state), schema, log);
    assembly::write_jsonl(at(file::kRelationsResolved), relations);
    assembly::write_schema(at(file::kSchema), schema);
    finish(log, "resolve-relations");
}

ContextEnrichedGraph Pipeline::assemble() {
    require(file::kRelationsResolved, "resolve-relations");
    const auto chunks = assembly::read_jsonl<Chunk>(at(file::kChunks));
    const auto mentions = assembly::read_jsonl<Mention>(at(file::kMentions));
    auto entities = assembly::read_jsonl<Entity>(at(file::kEntities));
    auto relations = assembly::read_jsonl<RelationInstance>(at(file::kRelationsResolved));
    auto schema = assembly::read_schema(at(file::kSchema));
    auto graph = assembly::assemble(std::move(entities), std::move(relations), std::move(schema), {&chunks, &mentions});
    assembly::write_text(at(file::kGraph), json(graph).dump() + "\n");
    assembly::write_text(at(file::kTriples), assembly::triples_tsv(graph));
    const auto report = validate_graph(graph, {&chunks, &mentions});
    assembly::write_text(at(file::kValidation), json(report).dump(2) + "\n");
    RunLog log = assembly::read_run_log(dir_);
    finish(log, "assemble");
    return graph;
}

ContextEnrichedGraph Pipeline::run_all(const std::vector<fs::path>& inputs) {
    ingest(inputs);
    extract();
    resolve_entities();
    induce_entity_schema();
    extract_relations();
    resolve_relations();
    return assemble();
}

}  // namespace tracekg
