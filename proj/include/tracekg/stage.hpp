#pragma once

// Plumbing shared by the LLM-backed stages: the run log (actions, prompts,
// events), provider calls with reply parsing, and concurrent proposals.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tracekg/config.hpp"
#include "tracekg/providers.hpp"

namespace tracekg {

struct RunLog {
    std::vector<ActionRecord> actions;
    std::vector<json> prompts;  // {stage, request_id, expect, prompt, reply, error}
    std::vector<json> events;   // {stage, event, ...}

    void event(Stage stage, const std::string& kind, json detail = json::object());
    // Next per-stage sequence number, starting at 1.
    std::uint64_t next_sequence(Stage stage) const;
    ActionRecord& record(Stage stage, const json& payload, const std::string& batch_id, ActionStatus status,
                         std::optional<std::string> rejection_reason = std::nullopt);
    // Drops every record of `stage` (used before a stage is re-run).
    void clear(Stage stage);
};

struct StageContext {
    ChatProvider& chat;
    Embedder& embedder;
    const Config& config;
    RunLog& log;
};

struct Request {
    std::string request_id;
    std::string expect;
    json input;
    std::size_t budget = kResolutionBudget;
};

// Runs fn(0..n-1) on up to max_workers threads. fn must not throw.
void parallel_for(std::size_t n, std::size_t max_workers, const std::function<void(std::size_t)>& fn);

// Parsed replies in request order; std::nullopt where the provider failed or
// the reply did not parse (the failure is logged as an event). Provider
// calls run concurrently; logging happens afterwards in request order.
std::vector<std::optional<json>> ask_all(StageContext& ctx, Stage stage, const std::vector<Request>& requests);

// Batch scopes are logged as events so that replay can apply the same
// id-scope validation.
void log_batch(RunLog& log, Stage stage, const std::string& batch_id, const std::vector<std::string>& items);

}  // namespace tracekg
