#pragma once

// Structural and representational metrics over a graph and its source text,
// and the composite retention scores built from them. All functions are
// pure.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tracekg/model.hpp"

namespace tracekg::metrics {

// Directed multigraph topology over nodes 0..nodes-1.
struct Topology {
    std::size_t nodes = 0;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
};

// Entities in graph order; one edge per relation instance.
Topology topology(const ContextEnrichedGraph& g);

// Largest weakly connected component size / |V|. Throws on an empty graph.
double connectivity(const Topology& t);

// Mean local clustering on the undirected simple projection; nodes of
// degree < 2 contribute 0. Empty graph -> 0.
double clustering_coefficient(const Topology& t);

// |E| / |V|; 0 for an empty graph.
double avg_degree(const Topology& t);

// Mean metric-word count per entity name; 0 with no names.
double avg_entity_words(const std::vector<std::string>& names);

// Fraction of names holding a contiguous 4-word sequence that also occurs in
// the source. Names under 4 words cannot leak. Throws on an empty source.
double leakage(const std::vector<std::string>& names, const std::string& source);

struct Triple {
    std::string subject;
    std::string predicate;
    std::string object;
};

std::vector<Triple> triples(const ContextEnrichedGraph& g);

// Total triple word count / source word count. Throws on an empty source.
double tricr(const std::vector<Triple>& triples, const std::string& source);

struct StructuralReport {
    std::size_t node_count = 0;
    std::size_t edge_count = 0;
    double avg_entity_words = 0.0;
    double avg_degree = 0.0;
    double connectivity = 0.0;
    double clustering = 0.0;
};

StructuralReport structural(const Topology& t, const std::vector<std::string>& names);
StructuralReport structural(const ContextEnrichedGraph& g);

struct Composites {
    double rwa = 0.0;
    double egu = 0.0;
    double sci = 0.0;
};

// rwa = ret_acc * conn; egu = rwa * (1 - leak); sci = avg_deg * clust * conn.
Composites composites(double ret_acc, const StructuralReport& s, double leak);

struct RetentionReport {
    double ret_acc = 0.0;
    double leak = 0.0;
    double tricr = 0.0;
    double rwa = 0.0;
    double egu = 0.0;
    double sci = 0.0;
    std::optional<double> avg_rank;
    StructuralReport structural;
};

// Report without retrieval accuracy (ret_acc 0, avg_rank null).
RetentionReport score_graph(const ContextEnrichedGraph& g, const std::string& source);

// Field-wise mean over instances. AvgRank is averaged over the instances
// that have one and is null when none do. Throws on an empty input.
RetentionReport macro_average(const std::vector<RetentionReport>& reports);

json to_json(const StructuralReport& s);
json to_json(const RetentionReport& r);

// Parses "subject \t predicate \t object" lines into a graph whose nodes are
// the distinct names in first-seen order.
std::pair<Topology, std::vector<std::string>> topology_from_tsv(const std::string& tsv, std::vector<Triple>* out = nullptr);

}  // namespace tracekg::metrics
