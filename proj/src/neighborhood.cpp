#include "tracekg/neighborhood.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "tracekg/text.hpp"

namespace tracekg::neighborhood {

Weights default_entity_weights() {
    return {{"name", 0.35}, {"description", 0.30}, {"type_hint", 0.10}, {"intrinsic", 0.10}, {"evidence", 0.15}};
}

Weights default_class_weights() { return {{"label", 0.40}, {"description", 0.30}, {"evidence", 0.15}, {"members", 0.15}}; }

Weights default_relation_weights() {
    return {{"raw_label", 0.30}, {"description", 0.25}, {"endpoints", 0.25}, {"hints", 0.10}, {"qualifiers", 0.10}};
}

Weights default_class_recognition_entity_weights() {
    return {{"name", 0.25}, {"description", 0.30}, {"type_hint", 0.25}, {"intrinsic", 0.05}, {"evidence", 0.15}};
}

namespace {

std::vector<Field> usable_fields(const std::string& item_id, std::vector<Field> fields) {
    std::vector<Field> out;
    double total = 0.0;
    for (auto& f : fields) {
        if (f.weight < 0.0) throw Error("representation of " + item_id + ": negative weight for field " + f.name);
        if (f.weight == 0.0 || text::trim(f.text).empty()) continue;
        total += f.weight;
        out.push_back(std::move(f));
    }
    if (out.empty() || total <= 0.0)
        throw Error("representation of " + item_id + ": no field with positive weight and non-empty text");
    return out;
}

}  // namespace

std::vector<Representation> build_representations(
    const std::vector<std::pair<std::string, std::vector<Field>>>& items, Embedder& embedder) {
    std::vector<Representation> reps;
    std::vector<std::string> texts;
    for (const auto& [id, fields] : items) {
        reps.push_back({id, usable_fields(id, fields), {}});
        for (const auto& f : reps.back().fields) texts.push_back(f.text);
    }
    const auto vecs = embedder.embed_batch(texts);
    std::size_t cursor = 0;
    for (auto& r : reps) {
        Vector sum(vecs.empty() ? 0 : vecs.front().size(), 0.0);
        for (const auto& f : r.fields) {
            const auto& v = vecs[cursor++];
            for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += f.weight * v[i];
        }
        normalize(sum);
        r.combined = std::move(sum);
    }
    return reps;
}

Representation build_representation(const std::string& item_id, std::vector<Field> fields, Embedder& embedder) {
    return build_representations({{item_id, std::move(fields)}}, embedder).front();
}

// ---------------------------------------------------------------------------
// HDBSCAN on cosine distance.
//
// Mutual reachability with core distance = distance to the k-th nearest
// neighbour counting the point itself (k = min_cluster_size), Prim MST,
// single-linkage dendrogram, condensed tree and excess-of-mass selection.
// MST edges at distance >= 1 (orthogonal or worse) are cut; every resulting
// component is condensed on its own and its root may be selected.

namespace {

constexpr double kLambdaCap = 1e10;
constexpr double kCutDistance = 1.0 - 1e-9;

double lambda_of(double d) { return d <= 1.0 / kLambdaCap ? kLambdaCap : 1.0 / d; }

struct LinkNode {
    int left = -1;
    int right = -1;
    double distance = 0.0;
    std::size_t size = 1;
};

struct CondensedCluster {
    double birth = 0.0;
    double stability = 0.0;
    std::vector<int> children;
    int dendro_node = -1;
};

void collect_leaves(const std::vector<LinkNode>& nodes, int node, std::vector<int>& out) {
    std::vector<int> stack{node};
    while (!stack.empty()) {
        const int x = stack.back();
        stack.pop_back();
        if (nodes[x].left < 0) {
            out.push_back(x);
            continue;
        }
        stack.push_back(nodes[x].right);
        stack.push_back(nodes[x].left);
    }
}

}  // namespace

std::vector<int> hdbscan_labels(const std::vector<Vector>& vectors, std::size_t min_cluster_size) {
    const std::size_t n = vectors.size();
    std::vector<int> labels(n, -1);
    if (min_cluster_size < 2) min_cluster_size = 2;
    if (n < min_cluster_size) return labels;

    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) dist[i][j] = dist[j][i] = std::max(0.0, 1.0 - cosine(vectors[i], vectors[j]));

    std::vector<double> core(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = dist[i];
        std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(min_cluster_size - 1), row.end());
        core[i] = row[min_cluster_size - 1];
    }
    auto mreach = [&](std::size_t i, std::size_t j) { return std::max({core[i], core[j], dist[i][j]}); };

    // Prim's MST over the complete mutual-reachability graph.
    struct Edge {
        double w;
        std::size_t a;
        std::size_t b;
    };
    std::vector<Edge> edges;
    {
        std::vector<bool> in_tree(n, false);
        std::vector<double> best(n, std::numeric_limits<double>::infinity());
        std::vector<std::size_t> from(n, 0);
        std::size_t current = 0;
        in_tree[0] = true;
        for (std::size_t step = 1; step < n; ++step) {
            for (std::size_t j = 0; j < n; ++j) {
                if (in_tree[j]) continue;
                const double w = mreach(current, j);
                if (w < best[j]) {
                    best[j] = w;
                    from[j] = current;
                }
            }
            std::size_t next = n;
            for (std::size_t j = 0; j < n; ++j)
                if (!in_tree[j] && (next == n || best[j] < best[next])) next = j;
            in_tree[next] = true;
            edges.push_back({best[next], std::min(from[next], next), std::max(from[next], next)});
            current = next;
        }
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
        if (x.w != y.w) return x.w < y.w;
        if (x.a != y.a) return x.a < y.a;
        return x.b < y.b;
    });

    // Single linkage over the edges below the cut.
    std::vector<LinkNode> nodes(n);
    std::vector<int> uf(2 * n);
    std::iota(uf.begin(), uf.end(), 0);
    std::function<int(int)> find = [&](int x) { return uf[x] == x ? x : uf[x] = find(uf[x]); };
    for (const auto& e : edges) {
        if (e.w >= kCutDistance) continue;
        const int ra = find(static_cast<int>(e.a));
        const int rb = find(static_cast<int>(e.b));
        LinkNode merged{ra, rb, e.w, nodes[ra].size + nodes[rb].size};
        const int id = static_cast<int>(nodes.size());
        nodes.push_back(merged);
        uf[ra] = uf[rb] = id;
    }
    std::vector<int> roots;
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i)
        if (find(i) == i) roots.push_back(i);

    int next_label = 0;
    for (const int root : roots) {
        if (nodes[root].size < min_cluster_size) continue;

        std::vector<CondensedCluster> clusters;
        clusters.push_back({lambda_of(kCutDistance), 0.0, {}, root});
        // (dendrogram node, owning condensed cluster)
        std::vector<std::pair<int, int>> work{{root, 0}};
        while (!work.empty()) {
            auto [node, owner] = work.back();
            work.pop_back();
            const auto& nd = nodes[node];
            if (nd.left < 0) continue;
            const double lam = lambda_of(nd.distance);
            auto& own = clusters[owner];
            const bool big_l = nodes[nd.left].size >= min_cluster_size;
            const bool big_r = nodes[nd.right].size >= min_cluster_size;
            if (big_l && big_r) {
                own.stability += static_cast<double>(nd.size) * (lam - own.birth);
                for (const int child : {nd.left, nd.right}) {
                    clusters[owner].children.push_back(static_cast<int>(clusters.size()));
                    work.push_back({child, static_cast<int>(clusters.size())});
                    clusters.push_back({lam, 0.0, {}, child});
                }
                continue;
            }
            for (const int child : {nd.left, nd.right}) {
                if (nodes[child].size >= min_cluster_size) work.push_back({child, owner});
                else clusters[owner].stability += static_cast<double>(nodes[child].size) * (lam - clusters[owner].birth);
            }
        }

        // Excess of mass, bottom-up (children always have larger indices).
        std::vector<bool> selected(clusters.size(), false);
        std::vector<double> best(clusters.size(), 0.0);
        for (int c = static_cast<int>(clusters.size()) - 1; c >= 0; --c) {
            double subtree = 0.0;
            for (const int ch : clusters[c].children) subtree += best[ch];
            if (!clusters[c].children.empty() && subtree > clusters[c].stability) {
                best[c] = subtree;
            } else {
                best[c] = clusters[c].stability;
                selected[c] = true;
            }
        }
        // Keep only the topmost selected clusters.
        std::vector<int> chosen;
        std::vector<int> stack{0};
        while (!stack.empty()) {
            const int c = stack.back();
            stack.pop_back();
            if (selected[c]) {
                chosen.push_back(c);
                continue;
            }
            for (const int ch : clusters[c].children) stack.push_back(ch);
        }
        std::sort(chosen.begin(), chosen.end());
        for (const int c : chosen) {
            std::vector<int> leaves;
            collect_leaves(nodes, clusters[c].dendro_node, leaves);
            for (const int leaf : leaves) labels[leaf] = next_label;
            ++next_label;
        }
    }
    return labels;
}

std::vector<int> threshold_labels(const std::vector<Vector>& vectors, double similarity_threshold,
                                  std::size_t min_cluster_size) {
    const std::size_t n = vectors.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (cosine(vectors[i], vectors[j]) >= similarity_threshold) parent[find(j)] = find(i);
    std::map<std::size_t, std::vector<std::size_t>> comps;
    for (std::size_t i = 0; i < n; ++i) comps[find(i)].push_back(i);
    std::vector<int> labels(n, -1);
    int next = 0;
    for (const auto& [root, members] : comps) {
        if (members.size() < std::max<std::size_t>(min_cluster_size, 2)) continue;
        for (const auto m : members) labels[m] = next;
        ++next;
    }
    return labels;
}

namespace {

std::string neighborhood_id(std::size_t ordinal) { return "N" + text::pad(ordinal, 4); }

std::vector<Neighborhood> from_labels(const std::vector<std::string>& ids, const std::vector<int>& labels) {
    std::map<int, std::vector<std::string>> groups;
    std::vector<std::string> noise;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (labels[i] < 0) noise.push_back(ids[i]);
        else groups[labels[i]].push_back(ids[i]);
    }
    std::vector<Neighborhood> out;
    for (auto& [label, members] : groups) {
        std::sort(members.begin(), members.end());
        out.push_back({"", std::move(members), false});
    }
    std::sort(out.begin(), out.end(), [](const Neighborhood& a, const Neighborhood& b) { return a.members.front() < b.members.front(); });
    std::sort(noise.begin(), noise.end());
    for (auto& id : noise) out.push_back({"", {std::move(id)}, true});
    for (std::size_t i = 0; i < out.size(); ++i) out[i].id = neighborhood_id(i);
    return out;
}

std::vector<Neighborhood> cluster_subset(const std::vector<const Representation*>& reps, const ClusterOptions& options) {
    std::vector<std::string> ids;
    std::vector<Vector> vecs;
    for (const auto* r : reps) {
        ids.push_back(r->item_id);
        vecs.push_back(r->combined);
    }
    const auto labels = options.method == ClusterMethod::Hdbscan
                            ? hdbscan_labels(vecs, options.min_cluster_size)
                            : threshold_labels(vecs, options.similarity_threshold, options.min_cluster_size);
    return from_labels(ids, labels);
}

}  // namespace

std::vector<Neighborhood> cluster(const std::vector<Representation>& reps, const ClusterOptions& options) {
    std::vector<const Representation*> ptrs;
    for (const auto& r : reps) ptrs.push_back(&r);
    return cluster_subset(ptrs, options);
}

std::vector<Neighborhood> subcluster_oversized(const Neighborhood& n, const std::vector<Representation>& reps,
                                               std::size_t max_size, const ClusterOptions& options) {
    if (max_size == 0) throw Error("subcluster_oversized: max_size must be positive");
    if (n.members.size() <= max_size) return {n};

    std::map<std::string, const Representation*> by_id;
    for (const auto& r : reps) by_id[r.item_id] = &r;
    std::vector<const Representation*> subset;
    for (const auto& m : n.members) {
        auto it = by_id.find(m);
        if (it == by_id.end()) throw Error("subcluster_oversized: no representation for " + m);
        subset.push_back(it->second);
    }

    const auto parts = cluster_subset(subset, options);
    const bool any_cluster = std::any_of(parts.begin(), parts.end(), [](const Neighborhood& p) { return !p.is_noise; });
    const bool progress = any_cluster && std::all_of(parts.begin(), parts.end(), [&](const Neighborhood& p) {
                              return p.members.size() < n.members.size();
                          });

    std::vector<Neighborhood> out;
    if (!progress) {
        auto sorted = n.members;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t start = 0; start < sorted.size(); start += max_size) {
            const std::size_t end = std::min(sorted.size(), start + max_size);
            out.push_back({"", {sorted.begin() + static_cast<std::ptrdiff_t>(start), sorted.begin() + static_cast<std::ptrdiff_t>(end)}, false});
        }
    } else {
        for (const auto& p : parts) {
            if (p.is_noise) {
                out.push_back(p);
                continue;
            }
            for (auto& q : subcluster_oversized(p, reps, max_size, options)) out.push_back(std::move(q));
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i].id = n.id + "." + std::to_string(i);
    return out;
}

std::vector<Neighborhood> neighborhoods(const std::vector<Representation>& reps, const ClusterOptions& options,
                                        std::size_t max_size) {
    std::vector<Neighborhood> out;
    for (const auto& n : cluster(reps, options)) {
        if (n.is_noise || n.members.size() <= max_size) {
            out.push_back(n);
            continue;
        }
        for (auto& part : subcluster_oversized(n, reps, max_size, options)) out.push_back(std::move(part));
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i].id = neighborhood_id(i);
    return out;
}

std::vector<std::vector<std::string>> batch(const Neighborhood& n, std::size_t K) {
    if (K < 2) throw Error("batch: K must be at least 2");
    auto sorted = n.members;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::vector<std::string>> out;
    for (std::size_t start = 0; start < sorted.size(); start += K) {
        const std::size_t end = std::min(sorted.size(), start + K);
        out.emplace_back(sorted.begin() + static_cast<std::ptrdiff_t>(start), sorted.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

}  // namespace tracekg::neighborhood
