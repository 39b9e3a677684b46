#pragma once

// Stage runners over a run directory. Each runner reads the artifacts of
// its prerequisites, writes its own, rewrites its records in the action /
// prompt / event logs and refreshes the manifest.

#include <filesystem>
#include <memory>
#include <vector>

#include "tracekg/assembly.hpp"
#include "tracekg/config.hpp"

namespace tracekg {

struct Providers {
    std::shared_ptr<ChatProvider> chat;
    std::shared_ptr<Embedder> embedder;
};

// "stub" -> StubChat + HashEmbedder; "live" -> HTTP adapters (embeddings
// memoized in-process).
Providers make_providers(const Config& config, const std::string& kind);

class Pipeline {
public:
    Pipeline(std::filesystem::path run_dir, Config config, Providers providers);

    // Inputs may be files (.txt / .json) or directories scanned for them.
    void ingest(const std::vector<std::filesystem::path>& inputs);
    void extract();
    void resolve_entities();
    void induce_entity_schema();
    void extract_relations();
    void resolve_relations();
    ContextEnrichedGraph assemble();
    ContextEnrichedGraph run_all(const std::vector<std::filesystem::path>& inputs);

    const std::filesystem::path& run_dir() const { return dir_; }
    const Config& config() const { return config_; }

private:
    std::filesystem::path dir_;
    Config config_;
    Providers providers_;

    std::filesystem::path at(const char* name) const { return dir_ / name; }
    void require(const char* name, const char* stage) const;
    RunLog begin(std::initializer_list<Stage> stages) const;
    void finish(RunLog& log, const std::string& stage_name);
};

// Error naming the stage that produces a missing artifact.
void require_artifact(const std::filesystem::path& path, const std::string& stage);

// Loads the assembled graph of a run directory.
ContextEnrichedGraph load_graph(const std::filesystem::path& run_dir);

}  // namespace tracekg
