#pragma once

// Multi-field embeddings, density clustering into neighborhoods, local
// subclustering of oversized clusters and bounded prompt batching.

#include <map>
#include <string>
#include <vector>

#include "tracekg/providers.hpp"

namespace tracekg::neighborhood {

struct Field {
    std::string name;
    std::string text;
    double weight = 0.0;
};

struct Representation {
    std::string item_id;
    std::vector<Field> fields;
    Vector combined;
};

// Field name -> weight.
using Weights = std::map<std::string, double>;

Weights default_entity_weights();
Weights default_class_weights();
Weights default_relation_weights();
// Entity representation used while recognizing classes; leans on type hints.
Weights default_class_recognition_entity_weights();

// Phi(f) = normalize(sum_i w_i * phi(f_i)). Fields with empty text are
// ignored; throws if no remaining field has a positive weight.
Representation build_representation(const std::string& item_id, std::vector<Field> fields, Embedder& embedder);

// Same as above for many items with one batched embedding call per run.
std::vector<Representation> build_representations(
    const std::vector<std::pair<std::string, std::vector<Field>>>& items, Embedder& embedder);

struct Neighborhood {
    std::string id;
    std::vector<std::string> members;  // sorted
    bool is_noise = false;

    bool operator==(const Neighborhood&) const = default;
};

enum class ClusterMethod { Hdbscan, Threshold };

struct ClusterOptions {
    ClusterMethod method = ClusterMethod::Hdbscan;
    std::size_t min_cluster_size = 2;
    // Threshold mode only: items are linked when cosine >= this value.
    double similarity_threshold = 0.9;
};

// Output: clusters ordered by smallest member id, then noise singletons in
// id order. Ids are "N" + 4-digit ordinal. Partitions the input.
std::vector<Neighborhood> cluster(const std::vector<Representation>& reps, const ClusterOptions& options);

// Core routine on raw unit vectors; labels[i] = cluster index or -1 (noise).
std::vector<int> hdbscan_labels(const std::vector<Vector>& vectors, std::size_t min_cluster_size);
std::vector<int> threshold_labels(const std::vector<Vector>& vectors, double similarity_threshold,
                                  std::size_t min_cluster_size);

// Re-clusters the members of `n` among themselves until every output has at
// most max_size members. When a pass makes no progress (one cluster holding
// everything, or nothing but noise) the sorted members are cut into
// consecutive blocks of max_size.
std::vector<Neighborhood> subcluster_oversized(const Neighborhood& n, const std::vector<Representation>& reps,
                                               std::size_t max_size, const ClusterOptions& options);

// cluster() followed by subcluster_oversized() on every oversized cluster,
// with ids renumbered in output order.
std::vector<Neighborhood> neighborhoods(const std::vector<Representation>& reps, const ClusterOptions& options,
                                        std::size_t max_size);

// Sorted members cut into batches of at most K.
std::vector<std::vector<std::string>> batch(const Neighborhood& n, std::size_t K = 10);

}  // namespace tracekg::neighborhood
