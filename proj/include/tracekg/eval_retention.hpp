#pragma once

// Retrieval-and-judge harness: embed a statement, rank entities, expand the
// top seeds into a bounded subgraph and ask a judge whether the subgraph
// alone supports the statement.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tracekg/config.hpp"
#include "tracekg/graph_metrics.hpp"

namespace tracekg::retention {

struct RetrievalOptions {
    std::size_t k = 8;
    std::size_t hops = 2;
    std::size_t node_cap = 250;
    std::size_t edge_cap = 300;

    static RetrievalOptions from(const Config& c) {
        return {c.retrieval_k, c.retrieval_hops, c.retrieval_node_cap, c.retrieval_edge_cap};
    }
};

// Entity-layer multi-field embeddings of every entity of a graph.
class EntityIndex {
public:
    EntityIndex(const ContextEnrichedGraph& g, Embedder& embedder, const neighborhood::Weights& weights);

    // Cosine of every entity against the query, keyed by entity id.
    std::map<std::string, double> similarities(const Vector& query) const;
    // Entity ids by descending similarity, ties by id.
    std::vector<std::string> ranked(const Vector& query) const;

private:
    std::vector<std::string> ids_;
    std::vector<Vector> vectors_;
};

struct Subgraph {
    std::vector<std::string> seeds;      // in rank order
    std::vector<std::string> nodes;      // in (distance, -similarity, id) order
    std::vector<std::string> relations;  // relation ids in graph order
};

// Breadth-first expansion from `seeds` up to `hops`, ignoring direction.
// Nodes are kept in (distance, -similarity, id) order up to node_cap; edges
// between kept nodes in (max endpoint distance, id) order up to edge_cap.
Subgraph expand(const ContextEnrichedGraph& g, const std::vector<std::string>& seeds,
                const std::map<std::string, double>& similarity, const RetrievalOptions& opts);

Subgraph retrieve_subgraph(const std::string& statement, const ContextEnrichedGraph& g, const EntityIndex& index,
                           Embedder& embedder, const RetrievalOptions& opts);

// {statement, entities, triples[{subject, predicate, raw_label, object, qualifiers}]}
json judge_input(const std::string& statement, const Subgraph& sub, const ContextEnrichedGraph& g);

struct Verdict {
    bool supported = false;
    std::optional<std::string> error;  // set when the reply could not be used
};

// A subgraph without edges is unsupported without consulting the judge.
Verdict judge(ChatProvider& chat, const std::string& statement, const Subgraph& sub, const ContextEnrichedGraph& g,
              const std::string& request_id);

struct StatementResult {
    std::string statement;
    bool supported = false;
    std::optional<std::size_t> rank;  // smallest supporting seed count
};

struct Benchmark {
    std::string article;
    std::vector<std::string> statements;
};

// Accepts one {article, statements} object, an array of them, or JSONL.
std::vector<Benchmark> load_benchmark(const std::filesystem::path& path);

struct RetentionRun {
    metrics::RetentionReport report;
    std::vector<StatementResult> statements;
    std::vector<json> events;  // unusable verdicts
};

// Ret.Acc is the supported fraction. AvgRank is the mean over supported
// statements of the smallest r whose top-r seed subgraph is supported.
RetentionRun run_retention(const ContextEnrichedGraph& g, const std::vector<std::string>& statements,
                           const std::string& source, ChatProvider& chat, Embedder& embedder, const Config& config);

json to_json(const RetentionRun& run);

}  // namespace tracekg::retention
