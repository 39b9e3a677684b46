#pragma once

// Chat providers with planted behaviour for the retrieval and alignment tests.

#include <atomic>
#include <map>
#include <string>

#include "tracekg/providers.hpp"

namespace planted {

using tracekg::json;

// Judges a statement supported when some retrieved triple has both its
// subject and object names occurring in the statement.
class PairJudge final : public tracekg::ChatProvider {
public:
    std::string identity() const override { return "planted-pair-judge"; }
    std::atomic<int> calls{0};

    static bool decide(const json& input) {
        const std::string statement = input.at("statement").get<std::string>();
        for (const auto& t : input.at("triples")) {
            const auto s = t.at("subject").get<std::string>();
            const auto o = t.at("object").get<std::string>();
            if (statement.find(s) != std::string::npos && statement.find(o) != std::string::npos) return true;
        }
        return false;
    }

protected:
    std::string complete(const tracekg::ChatRequest& req) override {
        ++calls;
        const json in = tracekg::prompt_input(req.prompt);
        return json{{"supported", decide(in)}}.dump();
    }
};

// Alignment verdicts looked up by (anchor label, candidate label), both in
// humanized form. An entry with `domain` set only answers when the anchor is
// presented with that domain; everything else is Unrelated at 0.95.
class AlignmentTable final : public tracekg::ChatProvider {
public:
    struct Entry {
        std::string label;
        double confidence = 1.0;
        std::string domain;
    };

    std::string identity() const override { return "planted-alignment"; }
    void set(const std::string& anchor, const std::string& candidate, Entry e) { table_[{anchor, candidate}] = std::move(e); }
    std::atomic<int> calls{0};

protected:
    std::string complete(const tracekg::ChatRequest& req) override {
        ++calls;
        const json in = tracekg::prompt_input(req.prompt);
        const auto& anchor = in.at("anchor");
        auto it = table_.find({anchor.at("label").get<std::string>(), in.at("candidate").at("label").get<std::string>()});
        if (it != table_.end() && (it->second.domain.empty() || anchor.value("domain", "") == it->second.domain))
            return json{{"label", it->second.label}, {"confidence", it->second.confidence}}.dump();
        return json{{"label", "Unrelated"}, {"confidence", 0.95}}.dump();
    }

private:
    std::map<std::pair<std::string, std::string>, Entry> table_;
};

}  // namespace planted
