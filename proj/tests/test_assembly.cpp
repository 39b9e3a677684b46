#include <fstream>

#include "doctest.h"
#include "support.hpp"
#include "tracekg/assembly.hpp"
#include "tracekg/pipeline.hpp"

using namespace testing;
using namespace tracekg::assembly;

namespace {

const char* kDocA =
    "Alice Moreau works at Norden Corporation. Norden Corporation employs Alice Moreau. "
    "North Plant is located in Paris. Alpha Feed Pump is part of North Plant. "
    "Alpha Feed Pump feeds Alpha Storage Tank during the night shift. "
    "Alpha Feed Pump supplies Alpha Storage Tank during the night shift.";
const char* kDocB =
    "Bob Lindqvist works at Valtek Group. South Plant is located in Lyon. "
    "Alice Moreau manages North Plant since 2019. Beta Feed Pump is part of South Plant.";

void write(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

std::vector<std::string> lines_of(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST_CASE("assemble sets class ids and validates") {
    auto g = graph_of({"A", "B"}, {{0, 1}});
    for (auto& e : g.entities) e.class_id.reset();
    const auto out = assemble(g.entities, g.relations, g.schema);
    CHECK(out.schema_complete);
    for (const auto& e : out.entities) CHECK(e.class_id == "EC_0001");

    auto broken = g.relations;
    broken[0].object_entity = "En_nowhere";
    try {
        assemble(g.entities, broken, g.schema);
        FAIL("expected AssemblyError");
    } catch (const AssemblyError& e) {
        CHECK_FALSE(e.report().ok());
    }
}

TEST_CASE("jsonl store") {
    TempDir dir("asm");
    const auto p = dir.path() / "x.jsonl";
    write_records(p, {json{{"b", 1}, {"a", {{"d", 2}, {"c", 3}}}}, json{{"z", nullptr}}});
    const auto lines = lines_of(p);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == R"({"a":{"c":3,"d":2},"b":1})");
    CHECK(read_records(p).size() == 2);

    write(p, "{\"a\":1}\n{broken\n");
    CHECK_THROWS_WITH_AS(read_records(p), doctest::Contains("x.jsonl:2"), ArtifactError);

    const std::vector<Chunk> chunks = {make_chunk("c1", "Hello there."), make_chunk("c2", "General Kenobi.")};
    write_jsonl(dir.path() / "chunks.jsonl", chunks);
    CHECK(read_jsonl<Chunk>(dir.path() / "chunks.jsonl") == chunks);
    write(dir.path() / "bad.jsonl", "{\"id\": 3}\n");
    CHECK_THROWS_WITH_AS(read_jsonl<Chunk>(dir.path() / "bad.jsonl"), doctest::Contains("bad.jsonl:1"), ArtifactError);

    const auto g = graph_of({"A", "B"}, {{0, 1}});
    write_schema(dir.path() / "schema.jsonl", g.schema);
    CHECK(read_schema(dir.path() / "schema.jsonl") == g.schema);
}

TEST_CASE("triples export") {
    const auto g = graph_of({"Alpha Pump", "Beta Tank"}, {{0, 1}, {1, 0}}, {"feeds", "is fed by"});
    CHECK(triples_tsv(g) == "Alpha Pump\tfeeds\tBeta Tank\nBeta Tank\tis_fed_by\tAlpha Pump\n");
}

TEST_CASE("manifest checksums and no timestamps") {
    TempDir dir("asm");
    write(dir.path() / "chunks.jsonl", "{}\n");
    const auto m = manifest(dir.path(), Config{}, "chat", "emb", {"ingest"});
    const auto s = m.dump();
    CHECK(s.find(text::hex64(text::fnv1a64("{}\n"))) != std::string::npos);
    CHECK(s.find("timestamp") == std::string::npos);
    CHECK(s.find("created") == std::string::npos);
    CHECK(m == manifest(dir.path(), Config{}, "chat", "emb", {"ingest"}));
}

TEST_CASE("pipeline over a run directory with replay") {
    TempDir dir("asm");
    const auto docs = dir.path() / "docs";
    fs::create_directories(docs);
    write(docs / "a.txt", kDocA);
    write(docs / "b.txt", kDocB);
    const auto run = dir.path() / "run";
    Config config;
    config.stub_embedding_dim = 64;
    {
        Pipeline p(run, config, make_providers(config, "stub"));
        CHECK_THROWS_WITH(p.extract(), doctest::Contains("run ingest first"));
        const auto g = p.run_all({docs});
        CHECK(g.entities.size() > 5);
        CHECK_FALSE(g.relations.empty());
    }
    for (const char* f : {file::kChunks, file::kMentions, file::kEntities, file::kClassesCandidate, file::kClassesResolved,
                          file::kRelationsRaw, file::kRelationsResolved, file::kSchema, file::kActions, file::kPrompts,
                          file::kEvents, file::kGraph, file::kTriples, file::kValidation, file::kManifest})
        CHECK_MESSAGE(fs::exists(run / f), f);

    HashEmbedder embedder(64);
    CHECK(replay_diff(run, embedder, config).empty());

    const auto g = tracekg::load_graph(run);
    CHECK(validate_graph(g).ok());
    const auto manifest_json = json::parse(read_text(run / file::kManifest));
    CHECK(manifest_json.dump().find("assemble") != std::string::npos);

    // Tampering with a resolved artifact shows up in the diff.
    auto ents = read_jsonl<Entity>(run / file::kEntities);
    ents.front().canonical_name += " (edited)";
    write_jsonl(run / file::kEntities, ents);
    CHECK_FALSE(replay_diff(run, embedder, config).empty());

    // Re-running a stage rewrites only that stage's log records.
    Pipeline p(run, config, make_providers(config, "stub"));
    const auto before = read_run_log(run);
    p.resolve_relations();
    const auto after = read_run_log(run);
    CHECK(before.actions.size() == after.actions.size());
    CHECK(before.prompts.size() == after.prompts.size());

    CHECK_THROWS(make_providers(config, "oracle"));
    CHECK_THROWS_WITH(tracekg::load_graph(dir.path() / "empty"), doctest::Contains("run assemble first"));
}

TEST_CASE("ingest rejects duplicate document ids") {
    TempDir dir("asm");
    write(dir.path() / "a.txt", "Alice works at Acme.");
    fs::create_directories(dir.path() / "sub");
    write(dir.path() / "sub" / "a.txt", "Bob works at Acme.");
    Config config;
    Pipeline p(dir.path() / "run", config, make_providers(config, "stub"));
    CHECK_THROWS(p.ingest({dir.path() / "a.txt", dir.path() / "sub" / "a.txt"}));
}
