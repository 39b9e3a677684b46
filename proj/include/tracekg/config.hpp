#pragma once

#include <filesystem>
#include <string>

#include "tracekg/neighborhood.hpp"
#include "tracekg/providers.hpp"

namespace tracekg {

// Stopping rule shared by the schema-level resolution loops: stop once a run
// makes at most edit_threshold structural edits for `patience` consecutive
// runs, or after max_runs.
struct PlateauOptions {
    std::size_t edit_threshold = 0;
    std::size_t patience = 2;
    std::size_t max_runs = 5;
};

struct Config {
    // ingest
    std::size_t chunk_min_tokens = 100;
    std::size_t chunk_max_tokens = 200;
    std::string textualizer = "stub";

    // providers
    std::string provider = "stub";  // stub | live
    HttpEndpoint chat_endpoint{"https://api.openai.com/v1/chat/completions", "gpt-5", "OPENAI_API_KEY", 120};
    HttpEndpoint embedding_endpoint{"https://api.openai.com/v1/embeddings", "text-embedding-3-small", "OPENAI_API_KEY", 120};
    std::size_t stub_embedding_dim = 256;
    double stub_entity_merge_similarity = 1.0;
    std::size_t embed_batch_size = 32;
    std::size_t recognition_budget = kRecognitionBudget;
    std::size_t resolution_budget = kResolutionBudget;
    std::size_t max_concurrency = 4;

    // neighborhoods
    neighborhood::ClusterOptions cluster;
    std::size_t max_cluster_size = 40;
    std::size_t batch_size = 10;
    neighborhood::Weights entity_weights = neighborhood::default_entity_weights();
    neighborhood::Weights class_weights = neighborhood::default_class_weights();
    neighborhood::Weights relation_weights = neighborhood::default_relation_weights();
    neighborhood::Weights class_recognition_weights = neighborhood::default_class_recognition_entity_weights();

    // entity stage
    std::size_t context_chunks = 4;
    std::size_t entres_max_rounds = 5;
    std::size_t entres_merge_threshold = 0;

    // entity-schema stage
    std::size_t class_recognition_rounds = 3;
    PlateauOptions class_resolution;

    // relation stage
    PlateauOptions relation_resolution;

    // retention harness
    std::size_t retrieval_k = 8;
    std::size_t retrieval_hops = 2;
    std::size_t retrieval_node_cap = 250;
    std::size_t retrieval_edge_cap = 300;
    // Unsupported statements are left out of AvgRank unless this is set, in
    // which case they count as rank k + 1.
    bool avg_rank_penalize_unsupported = false;

    // schema-alignment harness
    std::size_t align_k = 5;
    double align_threshold = 0.20;
    std::size_t align_max_assign = 3;
    double audit_threshold = 0.88;
};

json config_to_json(const Config& c);
// Missing keys keep their defaults; unknown keys are rejected.
Config config_from_json(const json& j);
Config load_config(const std::filesystem::path& path);

}  // namespace tracekg
