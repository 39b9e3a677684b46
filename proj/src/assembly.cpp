#include "tracekg/assembly.hpp"

#include <algorithm>
#include <sstream>

#include "tracekg/relation_stage.hpp"
#include "tracekg/schema_stage.hpp"
#include "tracekg/text.hpp"

namespace tracekg::assembly {

ContextEnrichedGraph assemble(std::vector<Entity> entities, std::vector<RelationInstance> relations, Schema schema,
                              const ValidationContext& ctx) {
    for (auto& e : entities) {
        auto it = schema.entity_class_of.find(e.id);
        e.class_id = it == schema.entity_class_of.end() ? std::nullopt : std::optional<std::string>(it->second);
    }
    ContextEnrichedGraph g{std::move(entities), std::move(relations), std::move(schema), true};
    auto report = validate_graph(g, ctx);
    if (!report.ok()) {
        std::string what = "assembly failed with " + std::to_string(report.violations.size()) + " violation(s)";
        const auto& v = report.violations.front();
        what += "; first: " + v.id + " violates '" + v.invariant + "'" + (v.detail.empty() ? "" : " (" + v.detail + ")");
        throw AssemblyError(what, std::move(report));
    }
    return g;
}

// ---------------------------------------------------------------------------

void write_text(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ArtifactError("cannot write " + path.string());
    out << content;
    if (!out) throw ArtifactError("short write to " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArtifactError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_records(const fs::path& path, const std::vector<json>& records) {
    std::string content;
    for (const auto& r : records) {
        content += r.dump(-1, ' ', false, json::error_handler_t::replace);
        content += '\n';
    }
    write_text(path, content);
}

std::vector<json> read_records(const fs::path& path) {
    const std::string content = read_text(path);
    std::vector<json> out;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < content.size()) {
        std::size_t end = content.find('\n', start);
        if (end == std::string::npos) end = content.size();
        ++line_no;
        const std::string line = content.substr(start, end - start);
        start = end + 1;
        if (text::trim(line).empty()) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::exception& e) {
            throw ArtifactError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void write_schema(const fs::path& path, const Schema& schema) { write_records(path, {json(schema)}); }

Schema read_schema(const fs::path& path) {
    const auto records = read_records(path);
    if (records.size() != 1) throw ArtifactError(path.string() + ": expected exactly one schema record");
    try {
        return records.front().get<Schema>();
    } catch (const std::exception& e) {
        throw ArtifactError(path.string() + ":1: " + e.what());
    }
}

void write_run_log(const fs::path& dir, const RunLog& log) {
    write_jsonl(dir / file::kActions, log.actions);
    write_records(dir / file::kPrompts, log.prompts);
    write_records(dir / file::kEvents, log.events);
}

RunLog read_run_log(const fs::path& dir) {
    RunLog log;
    if (fs::exists(dir / file::kActions)) log.actions = read_jsonl<ActionRecord>(dir / file::kActions);
    if (fs::exists(dir / file::kPrompts)) log.prompts = read_records(dir / file::kPrompts);
    if (fs::exists(dir / file::kEvents)) log.events = read_records(dir / file::kEvents);
    return log;
}

std::string triples_tsv(const ContextEnrichedGraph& g) {
    std::map<std::string, std::string> names;
    for (const auto& e : g.entities) names[e.id] = e.canonical_name;
    auto clean = [](std::string s) {
        std::replace(s.begin(), s.end(), '\t', ' ');
        std::replace(s.begin(), s.end(), '\n', ' ');
        return s;
    };
    std::string out;
    for (const auto& r : g.relations)
        out += clean(names[r.subject_entity]) + "\t" + clean(r.predicate()) + "\t" + clean(names[r.object_entity]) + "\n";
    return out;
}

json manifest(const fs::path& dir, const Config& config, const std::string& chat_identity,
              const std::string& embedder_identity, const std::vector<std::string>& completed_stages) {
    json checksums = json::object();
    if (fs::exists(dir)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.is_regular_file() && entry.path().filename() != file::kManifest) files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) checksums[f.filename().string()] = text::hex64(text::fnv1a64(read_text(f)));
    }
    return {{"config", config_to_json(config)},
            {"providers", {{"chat", chat_identity}, {"embedding", embedder_identity}}},
            {"stages", completed_stages},
            {"checksums", checksums}};
}

// ---------------------------------------------------------------------------

namespace {

std::map<std::string, std::set<std::string>> batch_scopes(const RunLog& log, Stage stage) {
    std::map<std::string, std::set<std::string>> out;
    const std::string name(to_string(stage));
    for (const auto& e : log.events) {
        if (e.value("stage", "") != name || e.value("event", "") != "batch") continue;
        const auto items = e.at("items").get<std::vector<std::string>>();
        out[e.at("batch_id").get<std::string>()] = {items.begin(), items.end()};
    }
    return out;
}

std::vector<const ActionRecord*> actions_of(const RunLog& log, Stage stage) {
    std::vector<const ActionRecord*> out;
    for (const auto& a : log.actions)
        if (a.stage == stage) out.push_back(&a);
    std::stable_sort(out.begin(), out.end(), [](const ActionRecord* a, const ActionRecord* b) { return a->sequence_number < b->sequence_number; });
    return out;
}

const std::set<std::string>& scope_for(const std::map<std::string, std::set<std::string>>& scopes, const ActionRecord& a) {
    static const std::set<std::string> empty;
    auto it = scopes.find(a.batch_id);
    return it == scopes.end() ? empty : it->second;
}

}  // namespace

ReplayResult replay(const std::vector<Mention>& mentions, const std::vector<EntityClass>& candidates,
                    const std::vector<RelationInstance>& raw_relations, const RunLog& log, Embedder& embedder,
                    const Config& config) {
    ReplayResult out;
    RunLog scratch;

    auto entity_state = entity_stage::initial_state(mentions);
    {
        const auto scopes = batch_scopes(log, Stage::EntRes);
        for (const auto* a : actions_of(log, Stage::EntRes))
            entity_stage::apply_entity_action(entity_state, a->payload, scope_for(scopes, *a));
    }
    out.entities = entity_stage::entities_of(entity_state);

    auto class_state = schema_stage::make_class_state(candidates, out.entities);
    {
        const auto scopes = batch_scopes(log, Stage::EntClsRes);
        std::map<std::string, std::map<std::string, std::string>> provisional;
        for (const auto* a : actions_of(log, Stage::EntClsRes))
            schema_stage::apply_class_action(class_state, a->payload, scope_for(scopes, *a), provisional[a->batch_id]);
    }
    out.schema = schema_stage::finalize_classes(std::move(class_state), out.entities, embedder, config.entity_weights, scratch);
    out.classes = out.schema.entity_classes;

    auto relation_state = relation_stage::make_relation_state(raw_relations);
    {
        const auto scopes = batch_scopes(log, Stage::RelRes);
        for (const auto* a : actions_of(log, Stage::RelRes))
            relation_stage::apply_relation_action(relation_state, a->payload, scope_for(scopes, *a));
    }
    out.relations = relation_stage::finalize_relations(std::move(relation_state), out.schema, scratch);
    return out;
}

namespace {

std::vector<std::string> lines_of(const std::string& content) {
    std::vector<std::string> out;
    std::istringstream in(content);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

template <class T>
std::string render(const std::vector<T>& items) {
    std::string out;
    for (const auto& i : items) out += json(i).dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
    return out;
}

void compare(const std::string& name, const std::string& expected, const std::string& actual, std::vector<std::string>& diffs) {
    if (expected == actual) return;
    const auto a = lines_of(expected);
    const auto b = lines_of(actual);
    const std::size_t n = std::max(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (i < a.size() && i < b.size() && a[i] == b[i]) continue;
        if (i >= a.size()) diffs.push_back(name + ":" + std::to_string(i + 1) + ": only in replay");
        else if (i >= b.size()) diffs.push_back(name + ":" + std::to_string(i + 1) + ": missing from replay");
        else diffs.push_back(name + ":" + std::to_string(i + 1) + ": differs");
    }
}

void require(const fs::path& p, const std::string& stage) {
    if (!fs::exists(p)) throw Error("missing " + p.filename().string() + ": run " + stage + " first");
}

}  // namespace

std::vector<std::string> replay_diff(const fs::path& run_dir, Embedder& embedder, const Config& config) {
    require(run_dir / file::kMentions, "extract");
    require(run_dir / file::kEntities, "resolve-entities");
    require(run_dir / file::kClassesCandidate, "induce-entity-schema");
    require(run_dir / file::kRelationsRaw, "extract-relations");
    require(run_dir / file::kRelationsResolved, "resolve-relations");

    const auto mentions = read_jsonl<Mention>(run_dir / file::kMentions);
    const auto candidates = read_jsonl<EntityClass>(run_dir / file::kClassesCandidate);
    const auto raw = read_jsonl<RelationInstance>(run_dir / file::kRelationsRaw);
    const auto log = read_run_log(run_dir);
    const auto result = replay(mentions, candidates, raw, log, embedder, config);

    std::vector<std::string> diffs;
    compare(file::kEntities, read_text(run_dir / file::kEntities), render(result.entities), diffs);
    compare(file::kClassesResolved, read_text(run_dir / file::kClassesResolved), render(result.classes), diffs);
    compare(file::kRelationsResolved, read_text(run_dir / file::kRelationsResolved), render(result.relations), diffs);
    compare(file::kSchema, read_text(run_dir / file::kSchema), render(std::vector<Schema>{result.schema}), diffs);
    return diffs;
}

}  // namespace tracekg::assembly
