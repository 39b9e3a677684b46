#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"
#include "tracekg/eval_schema.hpp"
#include "tracekg/graph_metrics.hpp"
#include "tracekg/relation_stage.hpp"

using namespace testing;

namespace {

std::string random_text(std::mt19937& rng, std::size_t max_len) {
    static const std::string alphabet = "abcXYZ _-.,'09";
    std::string s;
    for (std::size_t i = 0, n = rng() % (max_len + 1); i < n; ++i) s += alphabet[rng() % alphabet.size()];
    return s;
}

}  // namespace

TEST_CASE("composite ordering laws hold on random tuples") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        metrics::StructuralReport s;
        s.connectivity = unit(rng);
        s.clustering = unit(rng);
        s.avg_degree = 10.0 * unit(rng);
        const double ret = unit(rng);
        const double leak = unit(rng);
        const auto c = metrics::composites(ret, s, leak);
        CHECK(c.egu <= c.rwa + 1e-15);
        CHECK(c.rwa <= ret + 1e-15);
        CHECK(c.sci >= 0.0);
        CHECK(c.egu >= 0.0);
    }
}

TEST_CASE("structural metrics stay in range on random graphs") {
    std::mt19937 rng(12);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng() % 30;
        metrics::Topology t{n, {}};
        for (std::size_t i = 0, m = rng() % (3 * n); i < m; ++i) t.edges.push_back({rng() % n, rng() % n});
        const double conn = metrics::connectivity(t);
        const double clust = metrics::clustering_coefficient(t);
        CHECK(conn > 0.0);
        CHECK(conn <= 1.0);
        CHECK(conn >= 1.0 / static_cast<double>(n) - 1e-15);
        CHECK(clust >= 0.0);
        CHECK(clust <= 1.0 + 1e-12);
        CHECK(metrics::avg_degree(t) == doctest::Approx(static_cast<double>(t.edges.size()) / n));
    }
}

TEST_CASE("qualifier merge agrees with the oracle over every pair with at most two populated fields") {
    const auto sets = oracle::qualifier_sets({"a", " a", "b"}, 2);
    CHECK(sets.size() == 1 + 8 * 3 + 28 * 9);
    std::size_t conflicts = 0;
    for (const auto& x : sets)
        for (const auto& y : sets) {
            const auto got = relation_stage::merge_qualifiers(x, y);
            const auto want = oracle::merge(x, y);
            CHECK(got.conflict == want.conflict);
            CHECK(got.conflict == relation_stage::merge_qualifiers(y, x).conflict);
            if (!got.conflict) {
                CHECK(got.merged == want.merged);
                CHECK(got.merged.populated() >= std::max(x.populated(), y.populated()));
                CHECK(got.merged.populated() <= x.populated() + y.populated());
            } else {
                CHECK_FALSE(got.conflicting.empty());
                ++conflicts;
            }
        }
    CHECK(conflicts > 0);
    for (const auto& x : sets) {
        const auto self = relation_stage::merge_qualifiers(x, x);
        CHECK_FALSE(self.conflict);
        CHECK(self.merged == x);
    }
}

TEST_CASE("qualifier sets round-trip through json") {
    for (const auto& q : oracle::qualifier_sets({"in 2019", "x: y"}, 2)) {
        const json j = q;
        CHECK(j.size() == kQualifierCount);
        CHECK(j.get<QualifierSet>() == q);
    }
}

TEST_CASE("label normalizers are idempotent") {
    std::mt19937 rng(13);
    for (int i = 0; i < 500; ++i) {
        const auto s = random_text(rng, 20);
        const auto snake = text::snake_label(s);
        CHECK(text::snake_label(snake) == snake);
        CHECK(snake.find(' ') == std::string::npos);
        const auto key = text::alnum_key(s);
        CHECK(text::alnum_key(key) == key);
        CHECK(text::trim(text::trim(s)) == text::trim(s));
    }
}

TEST_CASE("leakage is a fraction and monotone in the source") {
    std::mt19937 rng(14);
    const std::vector<std::string> vocab = {"north", "tank", "feed", "pump", "valve", "alpha"};
    for (int i = 0; i < 200; ++i) {
        std::vector<std::string> names;
        for (int k = 0; k < 4; ++k) {
            std::vector<std::string> w;
            for (std::size_t j = 0, n = 1 + rng() % 6; j < n; ++j) w.push_back(vocab[rng() % vocab.size()]);
            names.push_back(text::join(w, " "));
        }
        std::vector<std::string> src;
        for (int j = 0; j < 30; ++j) src.push_back(vocab[rng() % vocab.size()]);
        const std::string source = text::join(src, " ");
        const double l = metrics::leakage(names, source);
        CHECK(l >= 0.0);
        CHECK(l <= 1.0);
        CHECK(l == doctest::Approx(oracle::leakage(names, source)));
        CHECK(metrics::leakage(names, source + " " + names[0]) >= l);
    }
}

TEST_CASE("assignment cap bounds every element and only removes") {
    std::mt19937 rng(15);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::vector<alignment::Candidate>> lists(1 + rng() % 6);
        for (auto& l : lists)
            for (std::size_t e = 0; e < 6; ++e)
                if (rng() % 2) l.push_back({"E" + std::to_string(e), static_cast<double>(rng() % 10) / 10.0});
        const auto before = lists;
        const std::size_t cap = 1 + rng() % 3;
        alignment::cap_assignments(lists, cap);
        std::map<std::string, std::size_t> uses;
        for (std::size_t a = 0; a < lists.size(); ++a) {
            for (const auto& c : lists[a]) {
                ++uses[c.element_id];
                CHECK(std::any_of(before[a].begin(), before[a].end(),
                                  [&](const alignment::Candidate& b) { return b.element_id == c.element_id; }));
            }
        }
        for (const auto& [id, n] : uses) CHECK(n <= cap);
        // An element under the cap keeps every assignment.
        std::map<std::string, std::size_t> before_uses;
        for (const auto& l : before)
            for (const auto& c : l) ++before_uses[c.element_id];
        for (const auto& [id, n] : before_uses) CHECK(uses[id] == std::min(n, cap));
    }
}
