#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "tracekg/model.hpp"

namespace tracekg {

using Vector = std::vector<double>;

double dot(const Vector& a, const Vector& b);
double cosine(const Vector& a, const Vector& b);
// Scales to unit L2 norm; throws on a zero vector.
void normalize(Vector& v);

// ---------------------------------------------------------------------------
// Chat

inline constexpr std::size_t kRecognitionBudget = 8000;
inline constexpr std::size_t kResolutionBudget = 16000;

// Output grammars understood by the stage parsers (and by StubChat).
namespace expect {
inline constexpr const char* kEntityRecognition = "entity_recognition";
inline constexpr const char* kEntityResolution = "entity_resolution";
inline constexpr const char* kClassRecognition = "class_recognition";
inline constexpr const char* kClassResolution = "class_resolution";
inline constexpr const char* kRelationRecognition = "relation_recognition";
inline constexpr const char* kRelationResolution = "relation_resolution";
inline constexpr const char* kRetentionJudge = "retention_judge";
inline constexpr const char* kAlignmentVerify = "alignment_verify";
}  // namespace expect

struct ChatRequest {
    std::string prompt;
    std::size_t max_tokens = kResolutionBudget;
    std::string expect;
    std::string request_id;
};

class ProviderError : public Error {
public:
    ProviderError(std::string request_id, const std::string& what)
        : Error("provider [" + request_id + "]: " + what), request_id_(std::move(request_id)) {}
    const std::string& request_id() const { return request_id_; }

private:
    std::string request_id_;
};

// Retriable.
class TransportError : public ProviderError {
public:
    using ProviderError::ProviderError;
};

class BudgetExceeded : public ProviderError {
public:
    using ProviderError::ProviderError;
};

class ChatProvider {
public:
    virtual ~ChatProvider() = default;

    // Rejects requests whose prompt exceeds the budget, then delegates.
    // Returns the provider's raw text; parsing is the caller's job.
    std::string chat(const ChatRequest& req);

    virtual std::string identity() const = 0;

protected:
    virtual std::string complete(const ChatRequest& req) = 0;
};

// Replies keyed by the FNV-1a hash of the prompt.
class CannedChat final : public ChatProvider {
public:
    void add(const std::string& prompt, std::string reply);
    void add_by_hash(const std::string& hash, std::string reply) { replies_[hash] = std::move(reply); }
    void set_fallback(std::string reply) { fallback_ = std::move(reply); }
    static std::string prompt_hash(const std::string& prompt);
    std::string identity() const override { return "canned"; }

protected:
    std::string complete(const ChatRequest& req) override;

private:
    std::map<std::string, std::string> replies_;
    std::optional<std::string> fallback_;
};

struct StubChatOptions {
    // Character-bigram Jaccard on normalized names at or above which the
    // stub proposes an entity merge. 1.0 means "same bigram set".
    double entity_merge_similarity = 1.0;
};

// Deterministic rule engine standing in for the LLM. Dispatches on
// ChatRequest::expect and reads the structured block of the prompt.
class StubChat final : public ChatProvider {
public:
    explicit StubChat(StubChatOptions options = {}) : options_(options) {}
    std::string identity() const override { return "stub-rules-v1"; }

    // Exposed so tests can use the same rule tables as oracles.
    static std::string canonical_relation_label(const std::string& raw_label);
    static std::string relation_class_for(const std::string& canonical_label);
    static RelationHint hint_for_label(const std::string& label);
    static std::optional<std::string> inverse_forward_label(const std::string& raw_label);
    static std::string type_hint_for(const std::string& name);
    static std::string class_stem(const std::string& label);
    static double name_similarity(const std::string& a, const std::string& b);

protected:
    std::string complete(const ChatRequest& req) override;

private:
    StubChatOptions options_;
};

struct HttpEndpoint {
    std::string url;      // e.g. https://api.openai.com/v1/chat/completions
    std::string model;
    std::string api_key_env = "OPENAI_API_KEY";
    int timeout_seconds = 120;
};

// OpenAI-style chat-completions adapter. Sends no sampling temperature.
class HttpChat final : public ChatProvider {
public:
    explicit HttpChat(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
    std::string identity() const override { return "http:" + endpoint_.model + "@" + endpoint_.url; }

protected:
    std::string complete(const ChatRequest& req) override;

private:
    HttpEndpoint endpoint_;
};

// ---------------------------------------------------------------------------
// Embeddings

class Embedder {
public:
    virtual ~Embedder() = default;

    // |output| == |texts|; every vector unit-norm. Empty strings are rejected
    // with an error naming their index.
    std::vector<Vector> embed_batch(const std::vector<std::string>& texts, std::size_t batch_size = 32);
    Vector embed(const std::string& text);

    virtual std::string identity() const = 0;

protected:
    virtual std::vector<Vector> embed_raw(const std::vector<std::string>& texts) = 0;
};

// Feature-hashed bag of alphanumeric tokens, mean-pooled then L2-normalized.
// Token t adds 1 to buckets h % dimension and (h >> 32) % dimension, h = fnv1a64(t).
class HashEmbedder final : public Embedder {
public:
    explicit HashEmbedder(std::size_t dimension = 64) : dimension_(dimension) {}
    std::size_t dimension() const { return dimension_; }
    std::string identity() const override { return "hash-bow-" + std::to_string(dimension_); }

protected:
    std::vector<Vector> embed_raw(const std::vector<std::string>& texts) override;

private:
    std::size_t dimension_;
};

class HttpEmbedder final : public Embedder {
public:
    explicit HttpEmbedder(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
    std::string identity() const override { return "http:" + endpoint_.model + "@" + endpoint_.url; }

protected:
    std::vector<Vector> embed_raw(const std::vector<std::string>& texts) override;

private:
    HttpEndpoint endpoint_;
};

// Memoizes another embedder; thread-safe.
class CachedEmbedder final : public Embedder {
public:
    explicit CachedEmbedder(std::shared_ptr<Embedder> inner) : inner_(std::move(inner)) {}
    std::string identity() const override { return inner_->identity(); }

protected:
    std::vector<Vector> embed_raw(const std::vector<std::string>& texts) override;

private:
    std::shared_ptr<Embedder> inner_;
    std::mutex mutex_;
    std::unordered_map<std::string, Vector> cache_;
};

// ---------------------------------------------------------------------------
// Prompts

// Renders the stage template followed by the structured input block.
std::string render_prompt(const std::string& expect_tag, const json& input);
// Inverse of render_prompt's input block; throws if the marker is missing.
json prompt_input(const std::string& prompt);
// Extracts the first JSON array/object from a reply (code fences tolerated).
json parse_reply_json(const std::string& reply);

}  // namespace tracekg
