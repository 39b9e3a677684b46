#include <fstream>

#include "doctest.h"
#include "support.hpp"
#include "tracekg/ingest.hpp"

using namespace testing;
using namespace tracekg::ingest;

namespace {

std::string words(std::size_t n, const std::string& w = "word") {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + w;
    return s;
}

// A sentence of exactly n whitespace tokens.
std::string sentence(std::size_t n) { return "Start " + words(n - 1) + "."; }

DocumentStream stream_of(const std::string& doc, const std::string& body) {
    return {doc, {{body, SourceRegion{doc + ".txt", std::nullopt, "", ElementKind::Narrative}}}};
}

void write(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

}  // namespace

TEST_CASE("sentence splitting") {
    CHECK(split_sentences("Alice works at Acme. Bob left!  Why? ok") ==
          std::vector<std::string>{"Alice works at Acme.", "Bob left!", "Why? ok"});
    CHECK(split_sentences("Dr. Smith met Mr. Jones. They talked.") ==
          std::vector<std::string>{"Dr. Smith met Mr. Jones.", "They talked."});
    CHECK(split_sentences("Version 3.5 shipped. Next") == std::vector<std::string>{"Version 3.5 shipped.", "Next"});
    CHECK(split_sentences("   ").empty());
}

TEST_CASE("chunking packs sentences between the token bounds") {
    SUBCASE("three 60-token sentences give 120 then 60") {
        const auto s = sentence(60);
        const auto chunks = chunk(stream_of("d", s + " " + s + " " + s));
        REQUIRE(chunks.size() == 2);
        CHECK(chunks[0].token_count == 120);
        CHECK(chunks[1].token_count == 60);
        CHECK(chunks[0].id == "d_C0000");
        CHECK(chunks[1].id == "d_C0001");
    }
    SUBCASE("an oversized sentence forms its own chunk") {
        const auto chunks = chunk(stream_of("d", sentence(30) + " " + sentence(250) + " " + sentence(30)));
        REQUIRE(chunks.size() == 3);
        CHECK(chunks[0].token_count == 30);
        CHECK(chunks[1].token_count == 250);
        CHECK(chunks[2].token_count == 30);
    }
    SUBCASE("a single 250-token sentence") {
        const auto chunks = chunk(stream_of("d", sentence(250)));
        REQUIRE(chunks.size() == 1);
        CHECK(chunks[0].token_count == 250);
    }
    SUBCASE("bounds are validated") { CHECK_THROWS_AS(chunk(stream_of("d", "A."), 300, 200), Error); }
}

TEST_CASE("chunks cover the stream text in order") {
    std::string body;
    for (int i = 0; i < 40; ++i) body += sentence(7 + (i * 13) % 50) + " ";
    const auto stream = stream_of("doc", body);
    const auto chunks = chunk(stream);
    std::vector<std::string> joined;
    for (const auto& c : chunks) {
        CHECK(c.token_count == count_tokens(c.text));
        CHECK(c.token_count <= 200);
        joined.push_back(c.text);
    }
    CHECK(text::join(joined, " ") == text::join(split_sentences(body), " "));
    for (std::size_t i = 0; i + 1 < chunks.size(); ++i) CHECK(chunks[i].token_count >= 100);
}

TEST_CASE("textualization of regions") {
    RawDocument doc{"reg", "reg.json", {}};
    doc.regions.push_back({ElementKind::Narrative, "Alpha Pump feeds Beta Tank.", "", 1, "p1"});
    doc.regions.push_back({ElementKind::Table, "a | b", "", 2, "table-1"});
    doc.regions.push_back({ElementKind::Figure, "", "fig.png", 2, ""});

    SUBCASE("stub plug renders kind-tagged text and placeholders") {
        StubTextualizer t;
        const auto s = textualize(doc, t);
        REQUIRE(s.segments.size() == 3);
        CHECK(s.segments[0].text == "Alpha Pump feeds Beta Tank.");
        CHECK(s.segments[1].text == "TABLE: a | b");
        CHECK(s.segments[1].provenance.kind == ElementKind::Table);
        CHECK(s.segments[1].provenance.region == "table-1");
        CHECK(s.segments[2].provenance.region == "region-3");
        CHECK(text::contains_ci(s.segments[2].text, "figure"));
    }
    SUBCASE("documents with no content are rejected") {
        RawDocument empty{"e", "e.txt", {{ElementKind::Narrative, "   ", "", std::nullopt, ""}}};
        IdentityTextualizer t;
        CHECK_THROWS_AS(textualize(empty, t), IngestError);
    }
    SUBCASE("unknown plug specs are rejected") {
        CHECK(make_textualizer("stub")->name() == "stub");
        CHECK(make_textualizer("identity")->name() == "identity");
        CHECK_THROWS(make_textualizer("ocr"));
    }
}

TEST_CASE("command textualizer uses the command's stdout") {
    TempDir dir("ingest");
    const auto script = dir.path() / "describe.sh";
    write(script, "#!/bin/sh\necho 'described region'\n");
    fs::permissions(script, fs::perms::owner_all);
    CommandTextualizer t(script.string());
    RawRegion r{ElementKind::Table, "x", "", 1, "t1"};
    const auto out = t.describe(r);
    REQUIRE(out.has_value());
    CHECK(text::trim(*out) == "described region");
}

TEST_CASE("document loading") {
    TempDir dir("ingest");
    write(dir.path() / "plain.txt", "Alice works at Acme. Acme is in Paris.");
    write(dir.path() / "regions.json",
          R"({"doc_id": "reg", "segments": [{"kind": "narrative", "text": "Hello there.", "provenance": {"page": 4, "region": "p4"}},
              {"kind": "figure", "image_ref": "f.png", "provenance": {"page": 5}}]})");
    write(dir.path() / "broken.json", "{not json");

    const auto plain = load_document(dir.path() / "plain.txt");
    CHECK(plain.doc_id == "plain");
    REQUIRE(plain.regions.size() == 1);
    CHECK(plain.regions[0].kind == ElementKind::Narrative);

    const auto reg = load_document(dir.path() / "regions.json");
    CHECK(reg.doc_id == "reg");
    REQUIRE(reg.regions.size() == 2);
    CHECK(reg.regions[0].page == 4);
    CHECK(reg.regions[1].image_ref == "f.png");

    CHECK_THROWS_AS(load_document(dir.path() / "broken.json"), IngestError);
    CHECK_THROWS_AS(load_document(dir.path() / "missing.txt"), IngestError);
}
