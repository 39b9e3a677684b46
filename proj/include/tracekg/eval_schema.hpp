#pragma once

// Held-out schema evaluation against a reference ontology: active anchors,
// retrieve-then-verify alignment, coverage, MRR@K, domain/range consistency
// and the granularity of the best matches.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tracekg/config.hpp"

namespace tracekg::alignment {

struct OntologyRelation {
    std::string label;
    std::string domain;
    std::string range;
};

struct ReferenceOntology {
    std::vector<std::string> concepts;
    std::vector<OntologyRelation> relations;

    const OntologyRelation* relation(const std::string& label) const;
};

// "xsd:*" and common literal type names.
bool is_primitive(const std::string& type);

// {concepts: [label | {label}], relations: [{label, domain, range}]}.
// Throws when a domain or range is neither a declared concept nor primitive.
ReferenceOntology parse_ontology(const json& j);
ReferenceOntology load_ontology(const std::filesystem::path& path);

enum class Split { Source, Heldout };
enum class Scope { Source, Heldout, Combined };

Scope scope_from_string(const std::string& s);
std::string_view to_string(Scope s);

struct GoldTriple {
    std::string sentence_id;
    std::string subject;
    std::string relation;
    std::string object;
    Split split = Split::Source;
};

// JSON array or JSONL of {sentence_id, subject, relation, object, split}.
std::vector<GoldTriple> load_gold(const std::filesystem::path& path);
std::vector<GoldTriple> in_scope(const std::vector<GoldTriple>& gold, Scope scope);

enum class AnchorKind { Concept, Relation };

struct Anchor {
    AnchorKind kind = AnchorKind::Relation;
    std::string ref;  // ontology label
    double weight = 0.0;

    bool operator==(const Anchor&) const = default;
};

// Relations cited by the triples, weighted by frequency, then their
// non-primitive domain and range concepts weighted by the summed frequency
// of their active relations. Relations first, each group sorted by label.
// Throws on a triple citing an unknown relation.
std::vector<Anchor> active_anchors(const ReferenceOntology& ontology, const std::vector<GoldTriple>& triples);

// L1 finest. Concepts: class (L1), class group (L2). Relations: canonical
// relation (L1), relation class (L2), relation class group (L3).
enum class Level { L1, L2, L3 };
std::string_view to_string(Level l);

struct SchemaElement {
    std::string id;
    AnchorKind kind = AnchorKind::Concept;
    Level level = Level::L1;
    std::string label;
    std::string description;
    std::vector<std::string> parents;   // coarser labels
    std::vector<std::string> variants;  // surface forms
    // Relations: majority induced (subject, object) class chains as element
    // ids, finest first.
    std::vector<std::string> domain_chain;
    std::vector<std::string> range_chain;
};

std::vector<SchemaElement> schema_elements(const ContextEnrichedGraph& g);

// "birthPlace" / "birth_place" -> "birth place"
std::string humanize(const std::string& label);

struct Candidate {
    std::string element_id;
    double similarity = 0.0;
};

struct RetrievalOptions {
    std::size_t k = 5;
    double threshold = 0.20;
    std::size_t max_assign = 3;

    static RetrievalOptions from(const Config& c) { return {c.align_k, c.align_threshold, c.align_max_assign}; }
};

// Candidate lists per anchor (same order as `anchors`) by descending cosine
// of multi-field embeddings, ties by element id; below-threshold candidates
// dropped, top k kept, then every element keeps only its max_assign
// highest-similarity anchors. `examples` maps a relation label to gold
// sentences used as anchor evidence.
std::vector<std::vector<Candidate>> retrieve_candidates(const std::vector<Anchor>& anchors,
                                                        const ReferenceOntology& ontology,
                                                        const std::vector<SchemaElement>& elements,
                                                        const std::map<std::string, std::vector<std::string>>& examples,
                                                        Embedder& embedder, const RetrievalOptions& opts);

// Cross-anchor cap on its own, used by retrieve_candidates.
void cap_assignments(std::vector<std::vector<Candidate>>& lists, std::size_t max_assign);

enum class Label { Equivalent, Narrower, Broader, Unrelated };
std::string_view to_string(Label l);
std::optional<Label> label_from_string(const std::string& s);
inline bool compatible(Label l) { return l == Label::Equivalent || l == Label::Narrower; }

struct Judgement {
    std::string anchor;
    AnchorKind kind = AnchorKind::Relation;
    std::string element_id;
    Level level = Level::L1;
    std::size_t rank = 0;  // 1-based position in the candidate list
    Label label = Label::Unrelated;
    double confidence = 0.0;
    bool reversed = false;  // relation judged with domain and range swapped
    std::optional<std::string> error;
};

// Relations are judged in both orientations and the better verdict kept
// (label order Equivalent, Narrower, Broader, Unrelated, then confidence).
// An unusable reply yields Unrelated with confidence 0.
Judgement verify(ChatProvider& chat, const Anchor& anchor, const ReferenceOntology& ontology,
                 const SchemaElement& element, std::size_t rank, const std::string& request_id);

struct AnchorResult {
    Anchor anchor;
    std::vector<Judgement> judgements;  // candidate order
};

struct ScopeReport {
    std::size_t relation_anchors = 0;
    std::size_t concept_anchors = 0;
    double coverage_exact = 0.0;
    double coverage_narrower = 0.0;
    double coverage_compat = 0.0;
    double mrr = 0.0;
    std::optional<double> dr_consistency;  // null with no compatible relation mapping
    std::map<std::string, double> level_distribution;
};

// Best compatible judgement: Equivalent before Narrower, then confidence,
// then rank.
const Judgement* best_match(const AnchorResult& r);

// Weighted aggregation over anchors. D/R is checked for relation anchors
// with a compatible match: each non-primitive endpoint concept must be
// aligned (compatibly) to an element on the matched relation's induced
// subject or object chain, in either orientation.
ScopeReport score_scope(const std::vector<AnchorResult>& results, const ReferenceOntology& ontology,
                        const std::vector<SchemaElement>& elements, std::size_t k);

struct ScopeRun {
    Scope scope = Scope::Combined;
    ScopeReport report;
    std::vector<AnchorResult> results;
    std::vector<json> audit;  // judgements below the audit threshold
};

ScopeRun evaluate_scope(const ContextEnrichedGraph& g, const ReferenceOntology& ontology,
                        const std::vector<GoldTriple>& gold, Scope scope, ChatProvider& chat, Embedder& embedder,
                        const Config& config);

json to_json(const ScopeReport& r);
json to_json(const Judgement& j);
json to_json(const ScopeRun& run);

}  // namespace tracekg::alignment
