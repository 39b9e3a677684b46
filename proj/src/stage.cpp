#include "tracekg/stage.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace tracekg {

void RunLog::event(Stage stage, const std::string& kind, json detail) {
    detail["stage"] = std::string(to_string(stage));
    detail["event"] = kind;
    events.push_back(std::move(detail));
}

std::uint64_t RunLog::next_sequence(Stage stage) const {
    std::uint64_t n = 0;
    for (const auto& a : actions)
        if (a.stage == stage) n = std::max(n, a.sequence_number);
    return n + 1;
}

ActionRecord& RunLog::record(Stage stage, const json& payload, const std::string& batch_id, ActionStatus status,
                             std::optional<std::string> rejection_reason) {
    ActionRecord r;
    r.stage = stage;
    r.kind = payload.is_object() && payload.contains("action") && payload.at("action").is_string()
                 ? payload.at("action").get<std::string>()
                 : "";
    r.payload = payload;
    r.rationale = payload.is_object() && payload.contains("rationale") && payload.at("rationale").is_string()
                      ? payload.at("rationale").get<std::string>()
                      : "";
    r.status = status;
    r.rejection_reason = std::move(rejection_reason);
    r.sequence_number = next_sequence(stage);
    r.batch_id = batch_id;
    actions.push_back(std::move(r));
    return actions.back();
}

void RunLog::clear(Stage stage) {
    const std::string name(to_string(stage));
    std::erase_if(actions, [&](const ActionRecord& a) { return a.stage == stage; });
    std::erase_if(prompts, [&](const json& p) { return p.value("stage", "") == name; });
    std::erase_if(events, [&](const json& e) { return e.value("stage", "") == name; });
}

void log_batch(RunLog& log, Stage stage, const std::string& batch_id, const std::vector<std::string>& items) {
    log.event(stage, "batch", {{"batch_id", batch_id}, {"items", items}});
}

void parallel_for(std::size_t n, std::size_t max_workers, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::max<std::size_t>(1, std::min(max_workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    for (auto& t : pool) t.join();
}

std::vector<std::optional<json>> ask_all(StageContext& ctx, Stage stage, const std::vector<Request>& requests) {
    struct Outcome {
        std::string prompt;
        std::optional<std::string> reply;
        std::optional<std::string> error;
        std::optional<json> parsed;
    };
    std::vector<Outcome> outcomes(requests.size());

    auto work = [&](std::size_t i) {
        const auto& req = requests[i];
        auto& out = outcomes[i];
        try {
            out.prompt = render_prompt(req.expect, req.input);
            out.reply = ctx.chat.chat({out.prompt, req.budget, req.expect, req.request_id});
            out.parsed = parse_reply_json(*out.reply);
        } catch (const std::exception& e) {
            out.error = e.what();
            out.parsed.reset();
        }
    };

    parallel_for(requests.size(), ctx.config.max_concurrency, work);

    std::vector<std::optional<json>> replies;
    replies.reserve(requests.size());
    const std::string stage_name(to_string(stage));
    for (std::size_t i = 0; i < requests.size(); ++i) {
        const auto& req = requests[i];
        auto& out = outcomes[i];
        ctx.log.prompts.push_back({{"stage", stage_name},
                                   {"request_id", req.request_id},
                                   {"expect", req.expect},
                                   {"prompt", out.prompt},
                                   {"reply", out.reply ? json(*out.reply) : json(nullptr)},
                                   {"error", out.error ? json(*out.error) : json(nullptr)}});
        if (out.error) ctx.log.event(stage, "provider_failure", {{"request_id", req.request_id}, {"detail", *out.error}});
        replies.push_back(std::move(out.parsed));
    }
    return replies;
}

}  // namespace tracekg
