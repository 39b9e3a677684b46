#include "tracekg/providers.hpp"

#include <cmath>
#include <cstdlib>

#include "httplib.h"
#include "tracekg/text.hpp"

namespace tracekg {

double dot(const Vector& a, const Vector& b) {
    double s = 0.0;
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double cosine(const Vector& a, const Vector& b) {
    const double na = std::sqrt(dot(a, a));
    const double nb = std::sqrt(dot(b, b));
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

void normalize(Vector& v) {
    const double n = std::sqrt(dot(v, v));
    if (n == 0.0 || !std::isfinite(n)) throw Error("cannot normalize a zero vector");
    for (auto& x : v) x /= n;
}

// ---------------------------------------------------------------------------

std::string ChatProvider::chat(const ChatRequest& req) {
    const std::size_t prompt_tokens = text::whitespace_tokens(req.prompt).size();
    if (prompt_tokens > req.max_tokens)
        throw BudgetExceeded(req.request_id, "prompt of " + std::to_string(prompt_tokens) + " tokens exceeds budget " +
                                                 std::to_string(req.max_tokens));
    return complete(req);
}

std::string CannedChat::prompt_hash(const std::string& prompt) { return text::hex64(text::fnv1a64(prompt)); }

void CannedChat::add(const std::string& prompt, std::string reply) { replies_[prompt_hash(prompt)] = std::move(reply); }

std::string CannedChat::complete(const ChatRequest& req) {
    auto it = replies_.find(prompt_hash(req.prompt));
    if (it != replies_.end()) return it->second;
    if (fallback_) return *fallback_;
    throw ProviderError(req.request_id, "no canned reply for prompt " + prompt_hash(req.prompt));
}

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

json post_json(const HttpEndpoint& ep, const json& body, const std::string& request_id) {
    const auto [origin, path] = split_url(ep.url);
    httplib::Client client(origin);
    client.set_connection_timeout(std::min(ep.timeout_seconds, 10), 0);
    client.set_read_timeout(ep.timeout_seconds, 0);
    httplib::Headers headers;
    if (const char* key = std::getenv(ep.api_key_env.c_str()); key && *key)
        headers.emplace("Authorization", std::string("Bearer ") + key);
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) throw TransportError(request_id, "transport failure contacting " + ep.url + ": " + httplib::to_string(res.error()));
    if (res->status >= 500 || res->status == 429)
        throw TransportError(request_id, "HTTP " + std::to_string(res->status) + " from " + ep.url);
    if (res->status != 200) throw ProviderError(request_id, "HTTP " + std::to_string(res->status) + ": " + res->body);
    try {
        return json::parse(res->body);
    } catch (const json::exception& e) {
        throw ProviderError(request_id, std::string("malformed response body: ") + e.what());
    }
}

}  // namespace

std::string HttpChat::complete(const ChatRequest& req) {
    json body = {{"model", endpoint_.model},
                 {"messages", json::array({json{{"role", "user"}, {"content", req.prompt}}})},
                 {"max_completion_tokens", req.max_tokens}};
    const json reply = post_json(endpoint_, body, req.request_id);
    try {
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
        throw ProviderError(req.request_id, "response lacks choices[0].message.content");
    }
}

// ---------------------------------------------------------------------------

std::vector<Vector> Embedder::embed_batch(const std::vector<std::string>& texts, std::size_t batch_size) {
    if (batch_size == 0) batch_size = 1;
    for (std::size_t i = 0; i < texts.size(); ++i)
        if (texts[i].empty()) throw Error("embed_batch: empty string at index " + std::to_string(i));
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += batch_size) {
        const std::size_t end = std::min(texts.size(), start + batch_size);
        std::vector<std::string> slice(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                       texts.begin() + static_cast<std::ptrdiff_t>(end));
        auto vecs = embed_raw(slice);
        if (vecs.size() != slice.size()) throw Error("embedder returned a mismatched batch");
        for (auto& v : vecs) {
            normalize(v);
            out.push_back(std::move(v));
        }
    }
    return out;
}

Vector Embedder::embed(const std::string& text) { return embed_batch({text}).front(); }

std::vector<Vector> HashEmbedder::embed_raw(const std::vector<std::string>& texts) {
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        auto tokens = text::alnum_tokens(t);
        if (tokens.empty()) tokens.push_back(text::to_lower(t));
        Vector v(dimension_, 0.0);
        // Two buckets per token so that a single collision does not make
        // two tokens indistinguishable.
        for (const auto& tok : tokens) {
            const std::uint64_t h = text::fnv1a64(tok);
            v[h % dimension_] += 1.0;
            v[(h >> 32) % dimension_] += 1.0;
        }
        for (auto& x : v) x /= static_cast<double>(tokens.size());
        out.push_back(std::move(v));
    }
    return out;
}

std::vector<Vector> HttpEmbedder::embed_raw(const std::vector<std::string>& texts) {
    const std::string request_id = "embed-" + text::hex64(text::fnv1a64(text::join(texts, "\x1f")));
    const json reply = post_json(endpoint_, json{{"model", endpoint_.model}, {"input", texts}}, request_id);
    std::vector<Vector> out(texts.size());
    try {
        for (const auto& item : reply.at("data")) {
            const auto idx = item.value("index", std::size_t{0});
            if (idx >= out.size()) throw ProviderError(request_id, "embedding index out of range");
            out[idx] = item.at("embedding").get<Vector>();
        }
    } catch (const json::exception&) {
        throw ProviderError(request_id, "response lacks data[].embedding");
    }
    return out;
}

std::vector<Vector> CachedEmbedder::embed_raw(const std::vector<std::string>& texts) {
    std::vector<Vector> out(texts.size());
    std::vector<std::string> missing;
    {
        std::lock_guard lock(mutex_);
        for (std::size_t i = 0; i < texts.size(); ++i) {
            auto it = cache_.find(texts[i]);
            if (it != cache_.end()) out[i] = it->second;
            else missing.push_back(texts[i]);
        }
    }
    if (!missing.empty()) {
        auto vecs = inner_->embed_batch(missing, missing.size());
        std::lock_guard lock(mutex_);
        for (std::size_t i = 0; i < missing.size(); ++i) cache_[missing[i]] = vecs[i];
        for (std::size_t i = 0; i < texts.size(); ++i)
            if (out[i].empty()) out[i] = cache_.at(texts[i]);
    }
    return out;
}

}  // namespace tracekg
