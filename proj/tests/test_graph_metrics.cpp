#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"
#include "tracekg/graph_metrics.hpp"

using namespace testing;
using namespace tracekg::metrics;

TEST_CASE("connectivity") {
    CHECK(connectivity({4, {{0, 1}, {2, 3}}}) == doctest::Approx(0.5));
    CHECK(connectivity({3, {{0, 1}, {2, 1}}}) == doctest::Approx(1.0));
    CHECK(connectivity({5, {}}) == doctest::Approx(0.2));
    CHECK_THROWS(connectivity({0, {}}));
}

TEST_CASE("clustering coefficient") {
    // Triangle plus a pendant: C = (1 + 1 + 1/3 + 0) / 4.
    const Topology t{4, {{0, 1}, {1, 2}, {2, 0}, {2, 3}}};
    CHECK(clustering_coefficient(t) == doctest::Approx((1.0 + 1.0 + 1.0 / 3.0) / 4.0));
    // Direction, parallel edges and self-loops do not matter.
    const Topology noisy{4, {{1, 0}, {0, 1}, {1, 2}, {0, 2}, {2, 3}, {3, 3}, {2, 2}}};
    CHECK(clustering_coefficient(noisy) == doctest::Approx(clustering_coefficient(t)));
    CHECK(clustering_coefficient({0, {}}) == 0.0);
    CHECK(clustering_coefficient({3, {{0, 1}, {1, 2}}}) == 0.0);
}

TEST_CASE("degree and name length") {
    CHECK(avg_degree({4, {{0, 1}, {1, 2}}}) == doctest::Approx(0.5));
    CHECK(avg_degree({0, {}}) == 0.0);
    CHECK(avg_entity_words({"Alpha Feed Pump", "Paris"}) == doctest::Approx(2.0));
    CHECK(avg_entity_words({}) == 0.0);
}

TEST_CASE("leakage") {
    const std::string src = "The north storage tank feeds the plant. Short names never leak.";
    CHECK(leakage({"north storage tank feeds"}, src) == 1.0);
    CHECK(leakage({"North, Storage TANK feeds!"}, src) == 1.0);
    CHECK(leakage({"Short names never"}, src) == 0.0);
    CHECK(leakage({"big north storage tank"}, src) == 0.0);
    CHECK(leakage({"north storage tank feeds", "Paris"}, src) == doctest::Approx(0.5));
    CHECK(leakage({}, src) == 0.0);
    CHECK_THROWS(leakage({"a b c d"}, "  "));
    for (const auto& n : {"north storage tank feeds", "the plant short names never", "x y z w"})
        CHECK(leakage({n}, src) == oracle::leakage({n}, src));
}

TEST_CASE("triple compression ratio") {
    const std::vector<Triple> ts = {{"Alice Moreau", "works_at", "Acme"}, {"Acme", "located in", "Paris"}};
    // (2 + 1 + 1) + (1 + 2 + 1) = 8 words over 16 source words.
    CHECK(tricr(ts, "one two three four five six seven eight nine ten eleven twelve thirteen fourteen fifteen sixteen") ==
          doctest::Approx(0.5));
    CHECK_THROWS(tricr(ts, ""));
}

TEST_CASE("composites") {
    StructuralReport s;
    s.connectivity = 0.74;
    s.avg_degree = 2.0;
    s.clustering = 0.25;
    const auto c = composites(0.56, s, 0.023);
    CHECK(c.rwa == doctest::Approx(0.56 * 0.74));
    CHECK(c.egu == doctest::Approx(0.56 * 0.74 * (1 - 0.023)));
    CHECK(c.sci == doctest::Approx(2.0 * 0.25 * 0.74));
}

TEST_CASE("graph and TSV views agree") {
    const auto g = graph_of({"Alpha Pump", "Beta Tank", "Gamma Valve", "Delta"}, {{0, 1}, {1, 2}, {2, 0}}, {"feeds", "feeds", "feeds"});
    const auto topo = topology(g);
    CHECK(topo.nodes == 4);
    CHECK(topo.edges.size() == 3);
    const auto s = structural(g);
    CHECK(s.connectivity == doctest::Approx(0.75));
    CHECK(s.clustering == doctest::Approx(0.75));

    std::vector<Triple> ts;
    const auto [t2, names] = topology_from_tsv("Alpha Pump\tfeeds\tBeta Tank\nBeta Tank\tfeeds\tGamma Valve\n\nGamma Valve\tfeeds\tAlpha Pump\n", &ts);
    CHECK(names == std::vector<std::string>{"Alpha Pump", "Beta Tank", "Gamma Valve"});
    CHECK(ts.size() == 3);
    CHECK(t2.edges == std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}, {1, 2}, {2, 0}});
    CHECK_THROWS_WITH(topology_from_tsv("a\tb\tc\nbroken line\n"), doctest::Contains("line 2"));

    const auto r = score_graph(g, "Alpha Pump feeds Beta Tank which feeds Gamma Valve.");
    CHECK(r.ret_acc == 0.0);
    CHECK_FALSE(r.avg_rank.has_value());
    CHECK(r.sci == doctest::Approx(s.avg_degree * s.clustering * s.connectivity));
}

TEST_CASE("macro average") {
    RetentionReport a, b;
    a.ret_acc = 0.5;
    a.avg_rank = 2.0;
    a.structural.node_count = 3;
    b.ret_acc = 1.0;
    b.structural.node_count = 4;
    const auto m = macro_average({a, b});
    CHECK(m.ret_acc == doctest::Approx(0.75));
    CHECK(m.avg_rank == 2.0);
    CHECK(m.structural.node_count == 4);
    b.avg_rank.reset();
    a.avg_rank.reset();
    CHECK_FALSE(macro_average({a, b}).avg_rank.has_value());
    CHECK_THROWS(macro_average({}));
    const auto j = to_json(m);
    CHECK(j.contains("structural"));
    CHECK(j.at("avg_rank") == 2.0);
}

TEST_CASE("metrics match brute-force oracles on random graphs") {
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 25;
        const std::size_t m = rng() % (2 * n + 1);
        Topology t{n, {}};
        for (std::size_t i = 0; i < m; ++i) t.edges.push_back({rng() % n, rng() % n});
        CHECK(connectivity(t) == doctest::Approx(oracle::connectivity(n, t.edges)).epsilon(1e-12));
        CHECK(clustering_coefficient(t) == doctest::Approx(oracle::clustering(n, t.edges)).epsilon(1e-12));
    }
}
