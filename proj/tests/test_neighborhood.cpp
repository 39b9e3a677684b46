#include <cmath>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "tracekg/neighborhood.hpp"

using namespace testing;
using namespace tracekg::neighborhood;

namespace {

Representation rep(const std::string& id, Vector v) {
    normalize(v);
    return {id, {}, std::move(v)};
}

bool close(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i] - b[i]) > 1e-12) return false;
    return true;
}

std::string item(int i) { return "i" + text::pad(static_cast<std::size_t>(i), 3); }

// Every input id appears in exactly one neighborhood.
void check_partition(const std::vector<Neighborhood>& hoods, const std::vector<Representation>& reps) {
    std::multiset<std::string> seen;
    for (const auto& n : hoods) {
        CHECK(std::is_sorted(n.members.begin(), n.members.end()));
        if (n.is_noise) CHECK(n.members.size() == 1);
        seen.insert(n.members.begin(), n.members.end());
    }
    std::multiset<std::string> expected;
    for (const auto& r : reps) expected.insert(r.item_id);
    CHECK(seen == expected);
}

}  // namespace

TEST_CASE("multi-field representation") {
    HashEmbedder e(64);
    const auto r = build_representation("x", {{"name", "Alpha Pump", 0.7}, {"description", "", 0.3}}, e);
    CHECK(close(r.combined, e.embed("Alpha Pump")));

    const auto mixed = build_representation("y", {{"name", "Alpha Pump", 0.5}, {"description", "Beta Tank", 0.5}}, e);
    Vector expect = e.embed("Alpha Pump");
    const auto b = e.embed("Beta Tank");
    for (std::size_t i = 0; i < expect.size(); ++i) expect[i] = 0.5 * expect[i] + 0.5 * b[i];
    normalize(expect);
    for (std::size_t i = 0; i < expect.size(); ++i) CHECK(mixed.combined[i] == doctest::Approx(expect[i]));

    CHECK_THROWS(build_representation("z", {{"name", "", 1.0}, {"description", "text", 0.0}}, e));

    const auto many = build_representations({{"x", {{"name", "Alpha Pump", 0.7}}}, {"y", {{"name", "Beta Tank", 1.0}}}}, e);
    REQUIRE(many.size() == 2);
    CHECK(close(many[0].combined, r.combined));
    CHECK(close(many[1].combined, b));
}

TEST_CASE("HDBSCAN separates tight groups and leaves orthogonal items as noise") {
    std::vector<Representation> reps;
    for (int i = 0; i < 5; ++i) reps.push_back(rep(item(i), {1.0, 0.01 * i, 0, 0, 0}));
    for (int i = 5; i < 10; ++i) reps.push_back(rep(item(i), {0, 0, 1.0, 0.01 * (i - 5), 0}));
    reps.push_back(rep(item(10), {0, 0, 0, 0, 1.0}));
    const auto hoods = cluster(reps, {});
    check_partition(hoods, reps);
    REQUIRE(hoods.size() == 3);
    CHECK(hoods[0].members == std::vector<std::string>{"i000", "i001", "i002", "i003", "i004"});
    CHECK(hoods[1].members == std::vector<std::string>{"i005", "i006", "i007", "i008", "i009"});
    CHECK(hoods[2].is_noise);
    CHECK(hoods[2].members == std::vector<std::string>{"i010"});
    CHECK(hoods[0].id == "N0000");
    CHECK(hoods[2].id == "N0002");
}

TEST_CASE("threshold clustering links by cosine") {
    std::vector<Vector> vs = {{1, 0}, {0.99, 0.14}, {0, 1}};
    for (auto& v : vs) normalize(v);
    const auto labels = threshold_labels(vs, 0.9, 2);
    CHECK(labels[0] == labels[1]);
    CHECK(labels[0] >= 0);
    CHECK(labels[2] == -1);
}

TEST_CASE("oversized clusters are split") {
    SUBCASE("30 identical items with max 12 fall back to blocks 12, 12, 6") {
        std::vector<Representation> reps;
        for (int i = 0; i < 30; ++i) reps.push_back(rep(item(i), {1.0, 0.0}));
        const auto hoods = neighborhoods(reps, {}, 12);
        check_partition(hoods, reps);
        REQUIRE(hoods.size() == 3);
        CHECK(hoods[0].members.size() == 12);
        CHECK(hoods[1].members.size() == 12);
        CHECK(hoods[2].members.size() == 6);
        CHECK(hoods[0].members.front() == "i000");
        CHECK(hoods[1].members.front() == "i012");
        CHECK(hoods[2].id == "N0002");
    }
    SUBCASE("structured oversized cluster re-clusters locally") {
        std::vector<Representation> reps;
        for (int i = 0; i < 8; ++i) reps.push_back(rep(item(i), {1.0, 0.3, 0.001 * i}));
        for (int i = 8; i < 16; ++i) reps.push_back(rep(item(i), {1.0, -0.3, 0.001 * i}));
        Neighborhood all{"N0000", {}, false};
        for (const auto& r : reps) all.members.push_back(r.item_id);
        const auto parts = subcluster_oversized(all, reps, 10, {});
        std::size_t total = 0;
        for (const auto& p : parts) {
            CHECK(p.members.size() <= 10);
            total += p.members.size();
        }
        CHECK(total == 16);
    }
}

TEST_CASE("batching cuts sorted members into blocks of K") {
    Neighborhood n{"N0000", {}, false};
    for (int i = 24; i >= 0; --i) n.members.push_back(item(i));
    std::sort(n.members.begin(), n.members.end());
    const auto b = batch(n, 10);
    REQUIRE(b.size() == 3);
    CHECK(b[0].size() == 10);
    CHECK(b[1].size() == 10);
    CHECK(b[2].size() == 5);
    CHECK(b[0].front() == "i000");
    CHECK(b[2].back() == "i024");
    CHECK(batch(Neighborhood{"N", {"a"}, true}, 10).size() == 1);
}

TEST_CASE("clustering random point clouds always partitions the input") {
    std::mt19937 rng(11);
    std::normal_distribution<double> noise(0.0, 0.05);
    std::uniform_int_distribution<int> centers(1, 5);
    for (int trial = 0; trial < 25; ++trial) {
        const int k = centers(rng);
        std::vector<Vector> c;
        for (int j = 0; j < k; ++j) {
            Vector v(8);
            for (auto& x : v) x = noise(rng) * 20;
            c.push_back(v);
        }
        std::vector<Representation> reps;
        const int n = 5 + trial * 3;
        for (int i = 0; i < n; ++i) {
            Vector v = c[static_cast<std::size_t>(i % k)];
            for (auto& x : v) x += noise(rng);
            if (std::sqrt(dot(v, v)) == 0) v[0] = 1;
            reps.push_back(rep(item(i), v));
        }
        for (auto method : {ClusterMethod::Hdbscan, ClusterMethod::Threshold}) {
            const auto hoods = neighborhoods(reps, {method, 2, 0.9}, 7);
            check_partition(hoods, reps);
            for (const auto& h : hoods) CHECK(h.members.size() <= 7);
            for (std::size_t i = 0; i < hoods.size(); ++i) CHECK(hoods[i].id == "N" + text::pad(i, 4));
        }
    }
}
