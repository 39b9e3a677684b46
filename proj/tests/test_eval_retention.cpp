#include <fstream>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "planted.hpp"
#include "support.hpp"
#include "tracekg/eval_retention.hpp"

using namespace testing;
using namespace tracekg::retention;

namespace {

std::vector<std::string> names(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back("N" + text::pad(i, 2));
    return out;
}

std::vector<oracle::Edge> oracle_edges(const ContextEnrichedGraph& g) {
    std::vector<oracle::Edge> out;
    for (const auto& r : g.relations) out.push_back({r.id, r.subject_entity, r.object_entity});
    return out;
}

std::string id(const ContextEnrichedGraph& g, std::size_t i) { return g.entities[i].id; }

}  // namespace

TEST_CASE("expansion on a chain") {
    // 0 -> 1 <- 2 -> 3 -> 4; direction is ignored.
    const auto g = graph_of(names(5), {{0, 1}, {2, 1}, {2, 3}, {3, 4}});
    RetrievalOptions opts{1, 2, 250, 300};
    auto sub = expand(g, {id(g, 0)}, {}, opts);
    CHECK(sub.seeds == std::vector<std::string>{id(g, 0)});
    CHECK(sub.nodes == std::vector<std::string>{id(g, 0), id(g, 1), id(g, 2)});
    CHECK(sub.relations == std::vector<std::string>{g.relations[0].id, g.relations[1].id});

    opts.hops = 0;
    sub = expand(g, {id(g, 0)}, {}, opts);
    CHECK(sub.nodes.size() == 1);
    CHECK(sub.relations.empty());

    SUBCASE("node cap keeps nearer and more similar nodes") {
        opts.hops = 1;
        opts.node_cap = 2;
        sub = expand(g, {id(g, 2)}, {{id(g, 3), 0.9}, {id(g, 1), 0.1}}, opts);
        CHECK(sub.nodes == std::vector<std::string>{id(g, 2), id(g, 3)});
        CHECK(sub.relations == std::vector<std::string>{g.relations[2].id});
    }
    SUBCASE("edge cap prefers edges close to the seeds") {
        opts.hops = 3;
        opts.edge_cap = 2;
        sub = expand(g, {id(g, 2)}, {}, opts);
        CHECK(sub.nodes.size() == 5);
        CHECK(sub.relations == std::vector<std::string>{g.relations[1].id, g.relations[2].id});
    }
}

TEST_CASE("expansion matches the relaxation oracle on random graphs") {
    std::mt19937 rng(77);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng() % 15;
        std::vector<std::pair<std::size_t, std::size_t>> edges;
        const std::size_t m = rng() % (2 * n);
        for (std::size_t i = 0; i < m; ++i) edges.push_back({rng() % n, rng() % n});
        const auto g = graph_of(names(n), edges);
        std::map<std::string, double> sim;
        for (std::size_t i = 0; i < n; ++i)
            if (rng() % 4) sim[id(g, i)] = static_cast<double>(rng() % 5) / 4.0;
        std::vector<std::string> seeds;
        for (std::size_t i = 0, k = 1 + rng() % 3; i < k; ++i) seeds.push_back(id(g, rng() % n));
        RetrievalOptions opts{seeds.size(), rng() % 4, 1 + rng() % n, rng() % (m + 2)};
        const auto got = expand(g, seeds, sim, opts);
        const auto want = oracle::retrieve(oracle_edges(g), seeds, sim, opts.hops, opts.node_cap, opts.edge_cap);
        CHECK(got.nodes == want.nodes);
        CHECK(got.relations == want.edges);
    }
}

TEST_CASE("judging") {
    const auto g = graph_of(names(3), {{0, 1}});
    SUBCASE("an edgeless subgraph is unsupported without a call") {
        CannedChat chat;  // no replies: any call would fail
        const auto v = judge(chat, "N00 and N01", Subgraph{{id(g, 2)}, {id(g, 2)}, {}}, g, "J");
        CHECK_FALSE(v.supported);
        CHECK_FALSE(v.error.has_value());
    }
    SUBCASE("malformed verdicts are unsupported with an error") {
        CannedChat chat;
        chat.set_fallback(R"({"verdict": "yes"})");
        const auto v = judge(chat, "N00 and N01", expand(g, {id(g, 0)}, {}, {}), g, "J");
        CHECK_FALSE(v.supported);
        CHECK(v.error.has_value());
    }
    SUBCASE("judge input lists names and triples") {
        const auto in = judge_input("s", expand(g, {id(g, 0)}, {}, {}), g);
        CHECK(in.at("entities") == json::array({"N00", "N01"}));
        CHECK(in.at("triples")[0].at("predicate") == "rel");
        planted::PairJudge chat;
        CHECK(judge(chat, "N00 then N01", expand(g, {id(g, 0)}, {}, {}), g, "J").supported);
        CHECK_FALSE(judge(chat, "N00 then N02", expand(g, {id(g, 0)}, {}, {}), g, "J").supported);
    }
}

TEST_CASE("benchmark loading") {
    TempDir dir("ret");
    const auto p = dir.path() / "b.json";
    std::ofstream(p) << R"({"article": "a", "statements": ["x", "y"]})";
    CHECK(load_benchmark(p).at(0).statements.size() == 2);
    std::ofstream(p) << R"([{"article": "a", "statements": ["x"]}, {"article": "b", "statements": ["y"]}])";
    CHECK(load_benchmark(p).size() == 2);
    std::ofstream(p) << "{\"article\": \"a\", \"statements\": [\"x\"]}\n{\"article\": \"b\", \"statements\": [\"y\"]}\n";
    CHECK(load_benchmark(p).at(1).article == "b");
    std::ofstream(p) << R"({"article": "a"})";
    CHECK_THROWS_WITH(load_benchmark(p), doctest::Contains("record 1"));
    std::ofstream(p) << R"({"article": "a", "statements": []})";
    CHECK_THROWS(load_benchmark(p));
    std::ofstream(p) << "[]";
    CHECK_THROWS(load_benchmark(p));
}

TEST_CASE("retention scores agree with per-rank re-judging") {
    const auto g = graph_of(names(8), {{0, 1}, {1, 2}, {2, 3}, {4, 5}, {5, 6}, {6, 7}, {3, 4}});
    const std::vector<std::string> statements = {"N00 relates to N01", "N02 relates to N03", "N05 meets N06",
                                                 "N00 and N07 never meet", "N04 and N03 touch", "nothing here"};
    Config config;
    config.retrieval_k = 3;
    config.retrieval_hops = 1;
    HashEmbedder embedder(64);
    planted::PairJudge chat;
    const std::string source = "N00 N01 N02 N03 N04 N05 N06 N07 are nodes of a chain";
    const auto run = run_retention(g, statements, source, chat, embedder, config);

    const auto opts = RetrievalOptions::from(config);
    const EntityIndex index(g, embedder, config.entity_weights);
    std::size_t supported = 0;
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < statements.size(); ++i) {
        const auto q = embedder.embed(statements[i]);
        auto ranked = index.ranked(q);
        ranked.resize(opts.k);
        auto holds = [&](std::size_t r) {
            const std::vector<std::string> seeds(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(r));
            const auto sub = expand(g, seeds, index.similarities(q), opts);
            return !sub.relations.empty() && planted::PairJudge::decide(judge_input(statements[i], sub, g));
        };
        const auto& res = run.statements[i];
        CHECK(res.statement == statements[i]);
        CHECK(res.supported == holds(opts.k));
        if (!res.supported) {
            CHECK_FALSE(res.rank.has_value());
            continue;
        }
        std::size_t r = 1;
        while (!holds(r)) ++r;
        CHECK(res.rank == r);
        ++supported;
        rank_sum += static_cast<double>(r);
    }
    REQUIRE(supported > 0);
    CHECK(run.report.ret_acc == doctest::Approx(static_cast<double>(supported) / statements.size()));
    CHECK(run.report.avg_rank == doctest::Approx(rank_sum / supported));
    CHECK(run.report.rwa == doctest::Approx(run.report.ret_acc * run.report.structural.connectivity));
    CHECK(run.events.empty());
    CHECK(to_json(run).at("statements").size() == statements.size());

    config.avg_rank_penalize_unsupported = true;
    const auto penalized = run_retention(g, statements, source, chat, embedder, config);
    const double unsupported = static_cast<double>(statements.size() - supported);
    CHECK(penalized.report.avg_rank ==
          doctest::Approx((rank_sum + unsupported * (opts.k + 1)) / static_cast<double>(statements.size())));
    CHECK_THROWS(run_retention(g, {}, source, chat, embedder, config));
}
