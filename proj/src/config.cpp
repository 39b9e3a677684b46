#include "tracekg/config.hpp"

#include <fstream>
#include <set>

namespace tracekg {

namespace {

json endpoint_to_json(const HttpEndpoint& e) {
    return {{"url", e.url}, {"model", e.model}, {"api_key_env", e.api_key_env}, {"timeout_seconds", e.timeout_seconds}};
}

void endpoint_from_json(const json& j, HttpEndpoint& e) {
    e.url = j.value("url", e.url);
    e.model = j.value("model", e.model);
    e.api_key_env = j.value("api_key_env", e.api_key_env);
    e.timeout_seconds = j.value("timeout_seconds", e.timeout_seconds);
}

json plateau_to_json(const PlateauOptions& p) {
    return {{"edit_threshold", p.edit_threshold}, {"patience", p.patience}, {"max_runs", p.max_runs}};
}

void plateau_from_json(const json& j, PlateauOptions& p) {
    p.edit_threshold = j.value("edit_threshold", p.edit_threshold);
    p.patience = j.value("patience", p.patience);
    p.max_runs = j.value("max_runs", p.max_runs);
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw Error("config: " + where + " must be an object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw Error("config: unknown key '" + key + "' in " + where);
}

}  // namespace

json config_to_json(const Config& c) {
    return {
        {"ingest", {{"chunk_min_tokens", c.chunk_min_tokens}, {"chunk_max_tokens", c.chunk_max_tokens}, {"textualizer", c.textualizer}}},
        {"providers",
         {{"provider", c.provider},
          {"chat_endpoint", endpoint_to_json(c.chat_endpoint)},
          {"embedding_endpoint", endpoint_to_json(c.embedding_endpoint)},
          {"stub_embedding_dim", c.stub_embedding_dim},
          {"stub_entity_merge_similarity", c.stub_entity_merge_similarity},
          {"embed_batch_size", c.embed_batch_size},
          {"recognition_budget", c.recognition_budget},
          {"resolution_budget", c.resolution_budget},
          {"max_concurrency", c.max_concurrency}}},
        {"neighborhood",
         {{"method", c.cluster.method == neighborhood::ClusterMethod::Hdbscan ? "hdbscan" : "threshold"},
          {"min_cluster_size", c.cluster.min_cluster_size},
          {"similarity_threshold", c.cluster.similarity_threshold},
          {"max_cluster_size", c.max_cluster_size},
          {"batch_size", c.batch_size},
          {"entity_weights", c.entity_weights},
          {"class_weights", c.class_weights},
          {"relation_weights", c.relation_weights},
          {"class_recognition_weights", c.class_recognition_weights}}},
        {"entities",
         {{"context_chunks", c.context_chunks},
          {"max_rounds", c.entres_max_rounds},
          {"merge_threshold", c.entres_merge_threshold}}},
        {"classes", {{"recognition_rounds", c.class_recognition_rounds}, {"resolution", plateau_to_json(c.class_resolution)}}},
        {"relations", {{"resolution", plateau_to_json(c.relation_resolution)}}},
        {"retention",
         {{"k", c.retrieval_k},
          {"hops", c.retrieval_hops},
          {"node_cap", c.retrieval_node_cap},
          {"edge_cap", c.retrieval_edge_cap},
          {"avg_rank_penalize_unsupported", c.avg_rank_penalize_unsupported}}},
        {"alignment",
         {{"k", c.align_k},
          {"threshold", c.align_threshold},
          {"max_assign", c.align_max_assign},
          {"audit_threshold", c.audit_threshold}}},
    };
}

Config config_from_json(const json& j) {
    Config c;
    check_keys(j, {"ingest", "providers", "neighborhood", "entities", "classes", "relations", "retention", "alignment"}, "config");
    if (j.contains("ingest")) {
        const auto& s = j.at("ingest");
        check_keys(s, {"chunk_min_tokens", "chunk_max_tokens", "textualizer"}, "ingest");
        c.chunk_min_tokens = s.value("chunk_min_tokens", c.chunk_min_tokens);
        c.chunk_max_tokens = s.value("chunk_max_tokens", c.chunk_max_tokens);
        c.textualizer = s.value("textualizer", c.textualizer);
    }
    if (j.contains("providers")) {
        const auto& s = j.at("providers");
        check_keys(s, {"provider", "chat_endpoint", "embedding_endpoint", "stub_embedding_dim", "stub_entity_merge_similarity",
                       "embed_batch_size", "recognition_budget", "resolution_budget", "max_concurrency"},
                   "providers");
        c.provider = s.value("provider", c.provider);
        if (s.contains("chat_endpoint")) endpoint_from_json(s.at("chat_endpoint"), c.chat_endpoint);
        if (s.contains("embedding_endpoint")) endpoint_from_json(s.at("embedding_endpoint"), c.embedding_endpoint);
        c.stub_embedding_dim = s.value("stub_embedding_dim", c.stub_embedding_dim);
        c.stub_entity_merge_similarity = s.value("stub_entity_merge_similarity", c.stub_entity_merge_similarity);
        c.embed_batch_size = s.value("embed_batch_size", c.embed_batch_size);
        c.recognition_budget = s.value("recognition_budget", c.recognition_budget);
        c.resolution_budget = s.value("resolution_budget", c.resolution_budget);
        c.max_concurrency = s.value("max_concurrency", c.max_concurrency);
    }
    if (j.contains("neighborhood")) {
        const auto& s = j.at("neighborhood");
        check_keys(s, {"method", "min_cluster_size", "similarity_threshold", "max_cluster_size", "batch_size", "entity_weights",
                       "class_weights", "relation_weights", "class_recognition_weights"},
                   "neighborhood");
        const std::string method = s.value("method", std::string("hdbscan"));
        if (method == "hdbscan") c.cluster.method = neighborhood::ClusterMethod::Hdbscan;
        else if (method == "threshold") c.cluster.method = neighborhood::ClusterMethod::Threshold;
        else throw Error("config: neighborhood.method must be hdbscan or threshold");
        c.cluster.min_cluster_size = s.value("min_cluster_size", c.cluster.min_cluster_size);
        c.cluster.similarity_threshold = s.value("similarity_threshold", c.cluster.similarity_threshold);
        c.max_cluster_size = s.value("max_cluster_size", c.max_cluster_size);
        c.batch_size = s.value("batch_size", c.batch_size);
        if (s.contains("entity_weights")) c.entity_weights = s.at("entity_weights").get<neighborhood::Weights>();
        if (s.contains("class_weights")) c.class_weights = s.at("class_weights").get<neighborhood::Weights>();
        if (s.contains("relation_weights")) c.relation_weights = s.at("relation_weights").get<neighborhood::Weights>();
        if (s.contains("class_recognition_weights"))
            c.class_recognition_weights = s.at("class_recognition_weights").get<neighborhood::Weights>();
    }
    if (j.contains("entities")) {
        const auto& s = j.at("entities");
        check_keys(s, {"context_chunks", "max_rounds", "merge_threshold"}, "entities");
        c.context_chunks = s.value("context_chunks", c.context_chunks);
        c.entres_max_rounds = s.value("max_rounds", c.entres_max_rounds);
        c.entres_merge_threshold = s.value("merge_threshold", c.entres_merge_threshold);
    }
    if (j.contains("classes")) {
        const auto& s = j.at("classes");
        check_keys(s, {"recognition_rounds", "resolution"}, "classes");
        c.class_recognition_rounds = s.value("recognition_rounds", c.class_recognition_rounds);
        if (s.contains("resolution")) plateau_from_json(s.at("resolution"), c.class_resolution);
    }
    if (j.contains("relations")) {
        const auto& s = j.at("relations");
        check_keys(s, {"resolution"}, "relations");
        if (s.contains("resolution")) plateau_from_json(s.at("resolution"), c.relation_resolution);
    }
    if (j.contains("retention")) {
        const auto& s = j.at("retention");
        check_keys(s, {"k", "hops", "node_cap", "edge_cap", "avg_rank_penalize_unsupported"}, "retention");
        c.retrieval_k = s.value("k", c.retrieval_k);
        c.retrieval_hops = s.value("hops", c.retrieval_hops);
        c.retrieval_node_cap = s.value("node_cap", c.retrieval_node_cap);
        c.retrieval_edge_cap = s.value("edge_cap", c.retrieval_edge_cap);
        c.avg_rank_penalize_unsupported = s.value("avg_rank_penalize_unsupported", c.avg_rank_penalize_unsupported);
    }
    if (j.contains("alignment")) {
        const auto& s = j.at("alignment");
        check_keys(s, {"k", "threshold", "max_assign", "audit_threshold"}, "alignment");
        c.align_k = s.value("k", c.align_k);
        c.align_threshold = s.value("threshold", c.align_threshold);
        c.align_max_assign = s.value("max_assign", c.align_max_assign);
        c.audit_threshold = s.value("audit_threshold", c.audit_threshold);
    }
    if (c.chunk_min_tokens > c.chunk_max_tokens) throw Error("config: chunk_min_tokens exceeds chunk_max_tokens");
    if (c.batch_size < 2) throw Error("config: batch_size must be at least 2");
    return c;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read config " + path.string());
    try {
        return config_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw Error("config " + path.string() + ": " + e.what());
    }
}

}  // namespace tracekg
