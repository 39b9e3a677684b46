#include "tracekg/graph_metrics.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "tracekg/text.hpp"

namespace tracekg::metrics {

Topology topology(const ContextEnrichedGraph& g) {
    Topology t;
    t.nodes = g.entities.size();
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < g.entities.size(); ++i) index[g.entities[i].id] = i;
    for (const auto& r : g.relations) {
        auto s = index.find(r.subject_entity);
        auto o = index.find(r.object_entity);
        if (s == index.end() || o == index.end()) throw Error("relation " + r.id + " references an unknown entity");
        t.edges.emplace_back(s->second, o->second);
    }
    return t;
}

double connectivity(const Topology& t) {
    if (t.nodes == 0) throw Error("connectivity of an empty graph is undefined");
    std::vector<std::size_t> parent(t.nodes);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& [a, b] : t.edges) parent[find(a)] = find(b);
    std::vector<std::size_t> size(t.nodes, 0);
    for (std::size_t i = 0; i < t.nodes; ++i) ++size[find(i)];
    return static_cast<double>(*std::max_element(size.begin(), size.end())) / static_cast<double>(t.nodes);
}

double clustering_coefficient(const Topology& t) {
    if (t.nodes == 0) return 0.0;
    std::vector<std::set<std::size_t>> adj(t.nodes);
    for (const auto& [a, b] : t.edges) {
        if (a == b) continue;
        adj[a].insert(b);
        adj[b].insert(a);
    }
    double total = 0.0;
    for (std::size_t v = 0; v < t.nodes; ++v) {
        const std::vector<std::size_t> nb(adj[v].begin(), adj[v].end());
        const std::size_t d = nb.size();
        if (d < 2) continue;
        std::size_t links = 0;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i + 1; j < d; ++j) links += adj[nb[i]].count(nb[j]);
        total += 2.0 * static_cast<double>(links) / static_cast<double>(d * (d - 1));
    }
    return total / static_cast<double>(t.nodes);
}

double avg_degree(const Topology& t) {
    return t.nodes == 0 ? 0.0 : static_cast<double>(t.edges.size()) / static_cast<double>(t.nodes);
}

double avg_entity_words(const std::vector<std::string>& names) {
    if (names.empty()) return 0.0;
    std::size_t words = 0;
    for (const auto& n : names) words += text::metric_words(n).size();
    return static_cast<double>(words) / static_cast<double>(names.size());
}

double leakage(const std::vector<std::string>& names, const std::string& source) {
    const auto src = text::metric_words(source);
    if (src.empty()) throw Error("leakage needs a non-empty source text");
    if (names.empty()) return 0.0;
    std::set<std::vector<std::string>> grams;
    for (std::size_t i = 0; i + 4 <= src.size(); ++i) grams.insert({src.begin() + i, src.begin() + i + 4});
    std::size_t leaking = 0;
    for (const auto& n : names) {
        const auto w = text::metric_words(n);
        for (std::size_t i = 0; i + 4 <= w.size(); ++i) {
            if (grams.count({w.begin() + i, w.begin() + i + 4})) {
                ++leaking;
                break;
            }
        }
    }
    return static_cast<double>(leaking) / static_cast<double>(names.size());
}

std::vector<Triple> triples(const ContextEnrichedGraph& g) {
    std::map<std::string, std::string> names;
    for (const auto& e : g.entities) names[e.id] = e.canonical_name;
    std::vector<Triple> out;
    out.reserve(g.relations.size());
    for (const auto& r : g.relations) out.push_back({names[r.subject_entity], r.predicate(), names[r.object_entity]});
    return out;
}

double tricr(const std::vector<Triple>& ts, const std::string& source) {
    const std::size_t src = text::metric_words(source).size();
    if (src == 0) throw Error("tricr needs a non-empty source text");
    std::size_t words = 0;
    for (const auto& t : ts)
        words += text::metric_words(t.subject).size() + text::metric_words(t.predicate).size() +
                 text::metric_words(t.object).size();
    return static_cast<double>(words) / static_cast<double>(src);
}

StructuralReport structural(const Topology& t, const std::vector<std::string>& names) {
    StructuralReport s;
    s.node_count = t.nodes;
    s.edge_count = t.edges.size();
    s.avg_entity_words = avg_entity_words(names);
    s.avg_degree = avg_degree(t);
    s.connectivity = t.nodes == 0 ? 0.0 : connectivity(t);
    s.clustering = clustering_coefficient(t);
    return s;
}

namespace {

std::vector<std::string> entity_names(const ContextEnrichedGraph& g) {
    std::vector<std::string> out;
    out.reserve(g.entities.size());
    for (const auto& e : g.entities) out.push_back(e.canonical_name);
    return out;
}

}  // namespace

StructuralReport structural(const ContextEnrichedGraph& g) { return structural(topology(g), entity_names(g)); }

Composites composites(double ret_acc, const StructuralReport& s, double leak) {
    Composites c;
    c.rwa = ret_acc * s.connectivity;
    c.egu = c.rwa * (1.0 - leak);
    c.sci = s.avg_degree * s.clustering * s.connectivity;
    return c;
}

RetentionReport score_graph(const ContextEnrichedGraph& g, const std::string& source) {
    RetentionReport r;
    r.structural = structural(g);
    r.leak = leakage(entity_names(g), source);
    r.tricr = tricr(triples(g), source);
    const auto c = composites(0.0, r.structural, r.leak);
    r.rwa = c.rwa;
    r.egu = c.egu;
    r.sci = c.sci;
    return r;
}

RetentionReport macro_average(const std::vector<RetentionReport>& reports) {
    if (reports.empty()) throw Error("macro average over no instances");
    const double n = static_cast<double>(reports.size());
    RetentionReport out;
    double nodes = 0.0;
    double edges = 0.0;
    double rank_sum = 0.0;
    std::size_t ranked = 0;
    for (const auto& r : reports) {
        out.ret_acc += r.ret_acc / n;
        out.leak += r.leak / n;
        out.tricr += r.tricr / n;
        out.rwa += r.rwa / n;
        out.egu += r.egu / n;
        out.sci += r.sci / n;
        nodes += static_cast<double>(r.structural.node_count);
        edges += static_cast<double>(r.structural.edge_count);
        out.structural.avg_entity_words += r.structural.avg_entity_words / n;
        out.structural.avg_degree += r.structural.avg_degree / n;
        out.structural.connectivity += r.structural.connectivity / n;
        out.structural.clustering += r.structural.clustering / n;
        if (r.avg_rank) {
            rank_sum += *r.avg_rank;
            ++ranked;
        }
    }
    // Counts are reported as rounded means.
    out.structural.node_count = static_cast<std::size_t>(nodes / n + 0.5);
    out.structural.edge_count = static_cast<std::size_t>(edges / n + 0.5);
    if (ranked > 0) out.avg_rank = rank_sum / static_cast<double>(ranked);
    return out;
}

json to_json(const StructuralReport& s) {
    return {{"node_count", s.node_count},     {"edge_count", s.edge_count},     {"avg_entity_words", s.avg_entity_words},
            {"avg_degree", s.avg_degree},     {"connectivity", s.connectivity}, {"clustering", s.clustering}};
}

json to_json(const RetentionReport& r) {
    return {{"ret_acc", r.ret_acc},
            {"leak", r.leak},
            {"tricr", r.tricr},
            {"rwa", r.rwa},
            {"egu", r.egu},
            {"sci", r.sci},
            {"avg_rank", r.avg_rank ? json(*r.avg_rank) : json(nullptr)},
            {"structural", to_json(r.structural)}};
}

std::pair<Topology, std::vector<std::string>> topology_from_tsv(const std::string& tsv, std::vector<Triple>* out) {
    Topology t;
    std::vector<std::string> names;
    std::map<std::string, std::size_t> index;
    auto node = [&](const std::string& name) {
        auto [it, fresh] = index.emplace(name, names.size());
        if (fresh) names.push_back(name);
        return it->second;
    };
    std::istringstream in(tsv);
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty()) continue;
        std::vector<std::string> cols;
        std::size_t start = 0;
        for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1)
            cols.push_back(line.substr(start, tab - start));
        cols.push_back(line.substr(start));
        if (cols.size() != 3) throw Error("triples line " + std::to_string(line_no) + ": expected 3 tab-separated fields");
        const std::size_t s = node(cols[0]);
        const std::size_t o = node(cols[2]);
        t.edges.emplace_back(s, o);
        if (out) out->push_back({cols[0], cols[1], cols[2]});
    }
    t.nodes = names.size();
    return {t, names};
}

}  // namespace tracekg::metrics
