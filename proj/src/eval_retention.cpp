#include "tracekg/eval_retention.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>
#include <tuple>

#include "tracekg/assembly.hpp"
#include "tracekg/entity_stage.hpp"
#include "tracekg/stage.hpp"
#include "tracekg/text.hpp"

namespace tracekg::retention {

EntityIndex::EntityIndex(const ContextEnrichedGraph& g, Embedder& embedder, const neighborhood::Weights& weights) {
    std::vector<std::pair<std::string, std::vector<neighborhood::Field>>> items;
    for (const auto& e : g.entities) items.push_back({e.id, entity_stage::entity_fields(e, weights)});
    for (auto& rep : neighborhood::build_representations(items, embedder)) {
        ids_.push_back(rep.item_id);
        vectors_.push_back(std::move(rep.combined));
    }
}

std::map<std::string, double> EntityIndex::similarities(const Vector& query) const {
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < ids_.size(); ++i) out[ids_[i]] = cosine(query, vectors_[i]);
    return out;
}

std::vector<std::string> EntityIndex::ranked(const Vector& query) const {
    const auto sim = similarities(query);
    std::vector<std::string> ids(ids_);
    std::sort(ids.begin(), ids.end(), [&](const std::string& a, const std::string& b) {
        const double sa = sim.at(a);
        const double sb = sim.at(b);
        return sa != sb ? sa > sb : a < b;
    });
    return ids;
}

Subgraph expand(const ContextEnrichedGraph& g, const std::vector<std::string>& seeds,
                const std::map<std::string, double>& similarity, const RetrievalOptions& opts) {
    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& r : g.relations) {
        adj[r.subject_entity].push_back(r.object_entity);
        adj[r.object_entity].push_back(r.subject_entity);
    }
    std::map<std::string, std::size_t> dist;
    std::deque<std::string> queue;
    for (const auto& s : seeds)
        if (dist.emplace(s, 0).second) queue.push_back(s);
    while (!queue.empty()) {
        const std::string v = queue.front();
        queue.pop_front();
        const std::size_t d = dist[v];
        if (d == opts.hops) continue;
        for (const auto& w : adj[v])
            if (dist.emplace(w, d + 1).second) queue.push_back(w);
    }

    auto sim = [&](const std::string& id) {
        auto it = similarity.find(id);
        return it == similarity.end() ? 0.0 : it->second;
    };
    std::vector<std::string> nodes;
    for (const auto& [id, d] : dist) nodes.push_back(id);
    std::sort(nodes.begin(), nodes.end(), [&](const std::string& a, const std::string& b) {
        return std::make_tuple(dist[a], -sim(a), a) < std::make_tuple(dist[b], -sim(b), b);
    });
    if (nodes.size() > opts.node_cap) nodes.resize(opts.node_cap);
    const std::set<std::string> kept(nodes.begin(), nodes.end());

    std::vector<std::tuple<std::size_t, std::string, std::size_t>> edges;
    for (std::size_t i = 0; i < g.relations.size(); ++i) {
        const auto& r = g.relations[i];
        if (!kept.count(r.subject_entity) || !kept.count(r.object_entity)) continue;
        edges.emplace_back(std::max(dist[r.subject_entity], dist[r.object_entity]), r.id, i);
    }
    std::sort(edges.begin(), edges.end());
    if (edges.size() > opts.edge_cap) edges.resize(opts.edge_cap);
    std::vector<std::size_t> order;
    for (const auto& e : edges) order.push_back(std::get<2>(e));
    std::sort(order.begin(), order.end());

    Subgraph out;
    out.seeds = seeds;
    out.nodes = std::move(nodes);
    for (auto i : order) out.relations.push_back(g.relations[i].id);
    return out;
}

Subgraph retrieve_subgraph(const std::string& statement, const ContextEnrichedGraph& g, const EntityIndex& index,
                           Embedder& embedder, const RetrievalOptions& opts) {
    if (g.entities.empty()) throw Error("retrieval over an empty graph");
    const Vector q = embedder.embed(statement);
    auto ranked = index.ranked(q);
    if (ranked.size() > opts.k) ranked.resize(opts.k);
    return expand(g, ranked, index.similarities(q), opts);
}

json judge_input(const std::string& statement, const Subgraph& sub, const ContextEnrichedGraph& g) {
    std::map<std::string, const Entity*> entities;
    for (const auto& e : g.entities) entities[e.id] = &e;
    std::map<std::string, const RelationInstance*> relations;
    for (const auto& r : g.relations) relations[r.id] = &r;

    json names = json::array();
    for (const auto& id : sub.nodes) names.push_back(entities.at(id)->canonical_name);
    json triples = json::array();
    for (const auto& id : sub.relations) {
        const auto& r = *relations.at(id);
        json q = json::object();
        for (std::size_t i = 0; i < kQualifierCount; ++i)
            if (r.qualifiers.at(i)) q[std::string(qualifier_keys()[i])] = *r.qualifiers.at(i);
        triples.push_back({{"subject", entities.at(r.subject_entity)->canonical_name},
                           {"predicate", r.predicate()},
                           {"raw_label", r.raw_label},
                           {"object", entities.at(r.object_entity)->canonical_name},
                           {"qualifiers", q}});
    }
    return {{"statement", statement}, {"entities", names}, {"triples", triples}};
}

Verdict judge(ChatProvider& chat, const std::string& statement, const Subgraph& sub, const ContextEnrichedGraph& g,
              const std::string& request_id) {
    if (sub.relations.empty()) return {};
    try {
        const std::string prompt = render_prompt(expect::kRetentionJudge, judge_input(statement, sub, g));
        const json reply = parse_reply_json(chat.chat({prompt, kResolutionBudget, expect::kRetentionJudge, request_id}));
        if (!reply.is_object() || !reply.contains("supported") || !reply.at("supported").is_boolean())
            return {false, "verdict is not {\"supported\": bool}"};
        return {reply.at("supported").get<bool>(), std::nullopt};
    } catch (const std::exception& e) {
        return {false, std::string(e.what())};
    }
}

std::vector<Benchmark> load_benchmark(const std::filesystem::path& path) {
    const std::string content = assembly::read_text(path);
    std::vector<json> records;
    try {
        const json j = json::parse(content);
        if (j.is_array()) records.assign(j.begin(), j.end());
        else records.push_back(j);
    } catch (const json::parse_error&) {
        records = assembly::read_records(path);
    }
    std::vector<Benchmark> out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (!r.is_object() || !r.contains("article") || !r.contains("statements"))
            throw Error(path.string() + ": record " + std::to_string(i + 1) + " needs 'article' and 'statements'");
        Benchmark b{r.at("article").get<std::string>(), r.at("statements").get<std::vector<std::string>>()};
        if (b.statements.empty()) throw Error(path.string() + ": record " + std::to_string(i + 1) + " has no statements");
        out.push_back(std::move(b));
    }
    if (out.empty()) throw Error(path.string() + ": no benchmark records");
    return out;
}

RetentionRun run_retention(const ContextEnrichedGraph& g, const std::vector<std::string>& statements,
                           const std::string& source, ChatProvider& chat, Embedder& embedder, const Config& config) {
    if (statements.empty()) throw Error("retention needs at least one statement");
    const auto opts = RetrievalOptions::from(config);
    const EntityIndex index(g, embedder, config.entity_weights);

    // Statement embeddings are computed up front; judging runs in parallel.
    const auto queries = embedder.embed_batch(statements, config.embed_batch_size);
    RetentionRun run;
    run.statements.resize(statements.size());
    std::vector<std::vector<json>> events(statements.size());

    parallel_for(statements.size(), config.max_concurrency, [&](std::size_t i) {
        auto& res = run.statements[i];
        res.statement = statements[i];
        const auto sim = index.similarities(queries[i]);
        auto ranked = index.ranked(queries[i]);
        if (ranked.size() > opts.k) ranked.resize(opts.k);
        const std::string rid = "Judge-s" + text::pad(i, 4);
        auto verdict = [&](std::size_t r, const std::string& id) {
            const std::vector<std::string> seeds(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(r));
            const auto v = judge(chat, statements[i], expand(g, seeds, sim, opts), g, id);
            if (v.error) events[i].push_back({{"event", "unusable_verdict"}, {"request_id", id}, {"detail", *v.error}});
            return v.supported;
        };
        res.supported = verdict(ranked.size(), rid);
        if (!res.supported) return;
        for (std::size_t r = 1; r <= ranked.size(); ++r) {
            if (r == ranked.size() || verdict(r, rid + "-r" + std::to_string(r))) {
                res.rank = r;
                break;
            }
        }
    });

    std::size_t supported = 0;
    double rank_sum = 0.0;
    std::size_t ranked_count = 0;
    for (std::size_t i = 0; i < run.statements.size(); ++i) {
        const auto& res = run.statements[i];
        for (auto& e : events[i]) run.events.push_back(std::move(e));
        if (res.supported) {
            ++supported;
            rank_sum += static_cast<double>(*res.rank);
            ++ranked_count;
        } else if (config.avg_rank_penalize_unsupported) {
            rank_sum += static_cast<double>(opts.k + 1);
            ++ranked_count;
        }
    }

    auto& rep = run.report;
    rep = metrics::score_graph(g, source);
    rep.ret_acc = static_cast<double>(supported) / static_cast<double>(statements.size());
    if (ranked_count > 0) rep.avg_rank = rank_sum / static_cast<double>(ranked_count);
    const auto c = metrics::composites(rep.ret_acc, rep.structural, rep.leak);
    rep.rwa = c.rwa;
    rep.egu = c.egu;
    rep.sci = c.sci;
    return run;
}

json to_json(const RetentionRun& run) {
    json statements = json::array();
    for (const auto& s : run.statements)
        statements.push_back({{"statement", s.statement},
                              {"supported", s.supported},
                              {"rank", s.rank ? json(*s.rank) : json(nullptr)}});
    return {{"report", metrics::to_json(run.report)}, {"statements", statements}, {"events", run.events}};
}

}  // namespace tracekg::retention
