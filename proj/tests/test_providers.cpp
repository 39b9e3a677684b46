#include <cmath>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "support.hpp"
#include "tracekg/providers.hpp"

using namespace testing;

namespace {

std::string ask(ChatProvider& chat, const std::string& expect, const json& input, const std::string& id = "t") {
    return chat.chat({render_prompt(expect, input), kResolutionBudget, expect, id});
}

double norm(const Vector& v) { return std::sqrt(dot(v, v)); }

// Minimal OpenAI-style server on an ephemeral port.
struct FakeServer {
    httplib::Server server;
    int port = 0;
    std::thread thread;
    std::atomic<int> chat_status{200};
    std::atomic<int> embed_calls{0};
    std::atomic<bool> saw_temperature{false};

    FakeServer() {
        server.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            const auto body = json::parse(req.body);
            if (chat_status != 200) {
                res.status = chat_status;
                res.set_content("busy", "text/plain");
                return;
            }
            if (body.contains("temperature")) saw_temperature = true;
            const std::string content = "echo:" + body.at("messages").at(0).at("content").get<std::string>().substr(0, 5);
            res.set_content(json{{"choices", {{{"message", {{"content", content}}}}}}}.dump(), "application/json");
        });
        server.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
            ++embed_calls;
            const auto body = json::parse(req.body);
            json data = json::array();
            const auto& input = body.at("input");
            for (std::size_t i = 0; i < input.size(); ++i)
                data.push_back({{"index", i}, {"embedding", {static_cast<double>(input[i].get<std::string>().size()), 1.0}}});
            res.set_content(json{{"data", data}}.dump(), "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~FakeServer() {
        server.stop();
        thread.join();
    }
    std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port) + path; }
};

}  // namespace

TEST_CASE("vector helpers") {
    CHECK(dot({1, 2}, {3, 4}) == 11);
    CHECK(cosine({1, 0}, {0, 1}) == 0);
    CHECK(cosine({2, 0}, {5, 0}) == doctest::Approx(1.0));
    Vector v{3, 4};
    normalize(v);
    CHECK(v[0] == doctest::Approx(0.6));
    Vector z{0, 0};
    CHECK_THROWS(normalize(z));
}

TEST_CASE("hash embedder") {
    HashEmbedder e(64);
    const auto vs = e.embed_batch({"Alpha Pump", "alpha pump", "Beta Tank", "x"}, 2);
    REQUIRE(vs.size() == 4);
    for (const auto& v : vs) {
        CHECK(v.size() == 64);
        CHECK(norm(v) == doctest::Approx(1.0));
    }
    CHECK(cosine(vs[0], vs[1]) == doctest::Approx(1.0));
    CHECK(cosine(vs[0], vs[2]) < 0.99);
    CHECK(e.embed("Alpha Pump") == vs[0]);
    CHECK_THROWS_WITH(e.embed_batch({"a", ""}), doctest::Contains("index 1"));
}

TEST_CASE("prompt rendering round-trips the structured input") {
    const json input = {{"focus_chunk", {{"id", "c"}, {"text", "Alice works at Acme."}}}, {"n", 3}};
    const auto prompt = render_prompt(expect::kEntityRecognition, input);
    CHECK(prompt_input(prompt) == input);
    CHECK_THROWS(prompt_input("no marker here"));
    CHECK(parse_reply_json("```json\n[1, 2]\n```") == json::array({1, 2}));
    CHECK(parse_reply_json("Sure: {\"a\": 1} done") == json{{"a", 1}});
    CHECK_THROWS(parse_reply_json("nothing"));
}

TEST_CASE("budget is enforced before the provider is called") {
    CannedChat chat;
    chat.set_fallback("[]");
    std::string big;
    for (int i = 0; i < 50; ++i) big += "tok ";
    CHECK_THROWS_AS(chat.chat({big, 10, "x", "r1"}), BudgetExceeded);
    CHECK(chat.chat({big, 100, "x", "r1"}) == "[]");
}

TEST_CASE("canned chat replies by prompt hash") {
    CannedChat chat;
    chat.add("hello", "world");
    CHECK(chat.chat({"hello", 100, "x", "r"}) == "world");
    CHECK(CannedChat::prompt_hash("hello") == text::hex64(text::fnv1a64("hello")));
    CHECK_THROWS_AS(chat.chat({"other", 100, "x", "r"}), ProviderError);
}

TEST_CASE("stub entity recognition") {
    StubChat chat;
    const json input = {{"context_chunks", json::array()}, {"focus_chunk", {{"id", "c"}, {"text", "Alice works at Acme."}}}};
    const auto reply = parse_reply_json(ask(chat, expect::kEntityRecognition, input));
    REQUIRE(reply.is_array());
    std::vector<std::string> names;
    for (const auto& m : reply) names.push_back(m.at("name"));
    CHECK(names == std::vector<std::string>{"Alice", "Acme"});
    const std::string text = "Alice works at Acme.";
    for (const auto& m : reply) {
        const auto b = m.at("span")[0].get<std::size_t>();
        const auto e = m.at("span")[1].get<std::size_t>();
        CHECK(text.substr(b, e - b) == m.at("name").get<std::string>());
    }
    CHECK_THROWS_AS(chat.chat({"no input block", 100, expect::kEntityRecognition, "r"}), ProviderError);
    CHECK_THROWS(render_prompt("nonsense", input));
    CHECK_THROWS_AS(chat.chat({render_prompt(expect::kEntityRecognition, input), kResolutionBudget, "nonsense", "r"}),
                    ProviderError);
}

TEST_CASE("stub rule tables") {
    CHECK(StubChat::canonical_relation_label("supplies") == StubChat::canonical_relation_label("feeds"));
    CHECK(StubChat::inverse_forward_label("employs") == "works at");
    CHECK(StubChat::inverse_forward_label("works at") == "employs");
    CHECK(StubChat::name_similarity("Acme Corp", "acme corp") == 1.0);
    CHECK(StubChat::name_similarity("Acme", "Zzyx") < 0.2);
    CHECK(StubChat::type_hint_for("Alice Moreau") == "Person");
}

TEST_CASE("stub judges") {
    StubChat chat;
    const json supported = {{"statement", "Alice works at Acme."},
                            {"entities", {"Alice", "Acme"}},
                            {"triples", {{{"subject", "Alice"}, {"predicate", "works_at"}, {"raw_label", "works at"}, {"object", "Acme"}}}}};
    CHECK(parse_reply_json(ask(chat, expect::kRetentionJudge, supported)).at("supported") == true);
    json unsupported = supported;
    unsupported["statement"] = "Bob works at Acme.";
    CHECK(parse_reply_json(ask(chat, expect::kRetentionJudge, unsupported)).at("supported") == false);

    const json same = {{"anchor", {{"label", "part of"}}}, {"candidate", {{"label", "part_of"}, {"parents", json::array()}}}};
    const auto v = parse_reply_json(ask(chat, expect::kAlignmentVerify, same));
    CHECK(v.at("label") == "Equivalent");
}

TEST_CASE("HTTP adapters against a local endpoint") {
    FakeServer fake;
    HttpEndpoint chat_ep{fake.url("/v1/chat/completions"), "m", "TRACEKG_TEST_NO_KEY", 5};
    HttpChat chat(chat_ep);
    CHECK(chat.chat({"hello world", 100, "x", "r"}) == "echo:hello");
    CHECK_FALSE(fake.saw_temperature);

    fake.chat_status = 503;
    CHECK_THROWS_AS(chat.chat({"hello", 100, "x", "r"}), TransportError);
    fake.chat_status = 400;
    try {
        chat.chat({"hello", 100, "x", "r"});
        FAIL("expected a provider error");
    } catch (const TransportError&) {
        FAIL("4xx must not be retriable");
    } catch (const ProviderError& e) {
        CHECK(e.request_id() == "r");
    }

    auto inner = std::make_shared<HttpEmbedder>(HttpEndpoint{fake.url("/v1/embeddings"), "e", "TRACEKG_TEST_NO_KEY", 5});
    CachedEmbedder cached(inner);
    const auto a = cached.embed_batch({"ab", "abcd"});
    CHECK(norm(a[0]) == doctest::Approx(1.0));
    CHECK(a[0] != a[1]);
    const int calls = fake.embed_calls;
    CHECK(cached.embed_batch({"abcd", "ab"})[0] == a[1]);
    CHECK(fake.embed_calls == calls);

    HttpChat dead({"http://127.0.0.1:1/v1/chat/completions", "m", "TRACEKG_TEST_NO_KEY", 1});
    CHECK_THROWS_AS(dead.chat({"x", 100, "x", "r"}), TransportError);
}
