#include "tracekg/eval_schema.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <tuple>

#include "tracekg/assembly.hpp"
#include "tracekg/stage.hpp"
#include "tracekg/text.hpp"

namespace tracekg::alignment {

const OntologyRelation* ReferenceOntology::relation(const std::string& label) const {
    for (const auto& r : relations)
        if (r.label == label) return &r;
    return nullptr;
}

bool is_primitive(const std::string& type) {
    static const std::set<std::string> literals = {"string", "date", "datetime", "integer", "int", "number",
                                                   "float", "double", "decimal", "boolean", "literal", "year"};
    const std::string lower = text::to_lower(type);
    return lower.rfind("xsd:", 0) == 0 || lower.rfind("rdfs:literal", 0) == 0 || literals.count(lower) > 0;
}

ReferenceOntology parse_ontology(const json& j) {
    ReferenceOntology o;
    try {
        for (const auto& c : j.at("concepts"))
            o.concepts.push_back(c.is_string() ? c.get<std::string>() : c.at("label").get<std::string>());
        for (const auto& r : j.at("relations"))
            o.relations.push_back({r.at("label").get<std::string>(), r.at("domain").get<std::string>(),
                                   r.at("range").get<std::string>()});
    } catch (const json::exception& e) {
        throw Error(std::string("ontology: ") + e.what());
    }
    const std::set<std::string> declared(o.concepts.begin(), o.concepts.end());
    std::set<std::string> seen;
    for (const auto& r : o.relations) {
        if (!seen.insert(r.label).second) throw Error("ontology: duplicate relation '" + r.label + "'");
        for (const auto* end : {&r.domain, &r.range})
            if (!declared.count(*end) && !is_primitive(*end))
                throw Error("ontology: relation '" + r.label + "' references undeclared concept '" + *end + "'");
    }
    return o;
}

ReferenceOntology load_ontology(const std::filesystem::path& path) {
    try {
        return parse_ontology(json::parse(assembly::read_text(path)));
    } catch (const json::parse_error& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

Scope scope_from_string(const std::string& s) {
    if (s == "source") return Scope::Source;
    if (s == "heldout") return Scope::Heldout;
    if (s == "combined") return Scope::Combined;
    throw Error("unknown scope '" + s + "' (expected source, heldout or combined)");
}

std::string_view to_string(Scope s) {
    switch (s) {
        case Scope::Source: return "source";
        case Scope::Heldout: return "heldout";
        case Scope::Combined: return "combined";
    }
    return "combined";
}

std::vector<GoldTriple> load_gold(const std::filesystem::path& path) {
    const std::string content = assembly::read_text(path);
    std::vector<json> records;
    try {
        const json j = json::parse(content);
        if (!j.is_array()) throw Error(path.string() + ": expected an array of gold triples");
        records.assign(j.begin(), j.end());
    } catch (const json::parse_error&) {
        records = assembly::read_records(path);
    }
    std::vector<GoldTriple> out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        try {
            GoldTriple t{r.at("sentence_id").get<std::string>(), r.at("subject").get<std::string>(),
                         r.at("relation").get<std::string>(), r.at("object").get<std::string>(), Split::Source};
            const std::string split = r.value("split", "source");
            if (split == "heldout") t.split = Split::Heldout;
            else if (split != "source") throw Error("unknown split '" + split + "'");
            out.push_back(std::move(t));
        } catch (const std::exception& e) {
            throw Error(path.string() + ": record " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return out;
}

std::vector<GoldTriple> in_scope(const std::vector<GoldTriple>& gold, Scope scope) {
    std::vector<GoldTriple> out;
    for (const auto& t : gold) {
        if (scope == Scope::Combined || (scope == Scope::Source && t.split == Split::Source) ||
            (scope == Scope::Heldout && t.split == Split::Heldout))
            out.push_back(t);
    }
    return out;
}

std::vector<Anchor> active_anchors(const ReferenceOntology& ontology, const std::vector<GoldTriple>& triples) {
    std::map<std::string, double> rel;
    for (const auto& t : triples) {
        if (!ontology.relation(t.relation))
            throw Error("gold triple " + t.sentence_id + " cites unknown relation '" + t.relation + "'");
        rel[t.relation] += 1.0;
    }
    std::map<std::string, double> con;
    for (const auto& [label, w] : rel) {
        const auto* r = ontology.relation(label);
        for (const auto* end : {&r->domain, &r->range}) {
            if (is_primitive(*end)) continue;
            con[*end] += w;
            // A relation whose domain equals its range counts once.
            if (r->domain == r->range) break;
        }
    }
    std::vector<Anchor> out;
    for (const auto& [label, w] : rel) out.push_back({AnchorKind::Relation, label, w});
    for (const auto& [label, w] : con) out.push_back({AnchorKind::Concept, label, w});
    return out;
}

std::string_view to_string(Level l) {
    switch (l) {
        case Level::L1: return "L1";
        case Level::L2: return "L2";
        case Level::L3: return "L3";
    }
    return "L1";
}

std::string humanize(const std::string& label) {
    std::string spaced;
    for (std::size_t i = 0; i < label.size(); ++i) {
        const unsigned char c = static_cast<unsigned char>(label[i]);
        if (i > 0 && std::isupper(c) && std::islower(static_cast<unsigned char>(label[i - 1]))) spaced += ' ';
        spaced += (c == '_' || c == '-') ? ' ' : static_cast<char>(c);
    }
    return text::join(text::alnum_tokens(spaced), " ");
}

// ---------------------------------------------------------------------------

std::vector<SchemaElement> schema_elements(const ContextEnrichedGraph& g) {
    const Schema& s = g.schema;
    std::map<std::string, std::string> group_label;
    for (const auto& grp : s.entity_class_groups) group_label[grp.id] = grp.label;
    std::map<std::string, std::string> rc_label;
    std::map<std::string, std::string> rc_group;
    for (const auto& rc : s.relation_classes) {
        rc_label[rc.id] = rc.label;
        rc_group[rc.id] = rc.group_id;
    }
    std::map<std::string, std::string> rcg_label;
    for (const auto& grp : s.relation_class_groups) rcg_label[grp.id] = grp.label;

    auto lookup = [](const std::map<std::string, std::string>& m, const std::string& k) {
        auto it = m.find(k);
        return it == m.end() ? std::string() : it->second;
    };

    // Induced endpoint chains and surface forms per relation element id.
    std::map<std::string, std::map<std::pair<std::vector<std::string>, std::vector<std::string>>, std::size_t>> signatures;
    std::map<std::string, std::set<std::string>> variants;
    auto chain = [&](const std::string& entity) {
        std::vector<std::string> c;
        const std::string cls = lookup(s.entity_class_of, entity);
        if (cls.empty()) return c;
        c.push_back(cls);
        const std::string grp = lookup(s.class_group_of, cls);
        if (!grp.empty()) c.push_back(grp);
        return c;
    };
    for (const auto& r : g.relations) {
        const auto sig = std::make_pair(chain(r.subject_entity), chain(r.object_entity));
        const std::string cr = "CR_" + r.predicate();
        const std::string rc = lookup(s.relation_class_of, r.predicate());
        const std::string rcg = rc.empty() ? std::string() : lookup(s.relation_group_of, rc);
        for (const auto& id : {cr, rc, rcg}) {
            if (id.empty()) continue;
            ++signatures[id][sig];
            variants[id].insert(r.raw_label);
        }
    }
    auto attach = [&](SchemaElement& e) {
        const auto& sigs = signatures[e.id];
        const std::pair<std::vector<std::string>, std::vector<std::string>>* best = nullptr;
        std::size_t best_n = 0;
        for (const auto& [sig, n] : sigs)
            if (n > best_n) {
                best = &sig;
                best_n = n;
            }
        if (best) {
            e.domain_chain = best->first;
            e.range_chain = best->second;
        }
        const auto& v = variants[e.id];
        e.variants.assign(v.begin(), v.end());
    };

    std::vector<SchemaElement> out;
    for (const auto& c : s.entity_classes) {
        SchemaElement e{c.id, AnchorKind::Concept, Level::L1, c.label, c.description, {}, {}, {}, {}};
        if (c.group_id) e.parents.push_back(lookup(group_label, *c.group_id));
        out.push_back(std::move(e));
    }
    for (const auto& grp : s.entity_class_groups)
        out.push_back({grp.id, AnchorKind::Concept, Level::L2, grp.label, grp.description, {}, {}, {}, {}});
    for (const auto& cr : s.canonical_relations) {
        SchemaElement e{"CR_" + cr.label, AnchorKind::Relation, Level::L1, cr.label, cr.description, {}, {}, {}, {}};
        const std::string rc = lookup(s.relation_class_of, cr.label);
        if (!rc.empty()) {
            e.parents.push_back(lookup(rc_label, rc));
            const std::string grp = lookup(s.relation_group_of, rc);
            if (!grp.empty()) e.parents.push_back(lookup(rcg_label, grp));
        }
        attach(e);
        out.push_back(std::move(e));
    }
    for (const auto& rc : s.relation_classes) {
        SchemaElement e{rc.id, AnchorKind::Relation, Level::L2, rc.label, "", {lookup(rcg_label, rc.group_id)}, {}, {}, {}};
        attach(e);
        out.push_back(std::move(e));
    }
    for (const auto& grp : s.relation_class_groups) {
        SchemaElement e{grp.id, AnchorKind::Relation, Level::L3, grp.label, "", {}, {}, {}, {}};
        attach(e);
        out.push_back(std::move(e));
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kLabelWeight = 0.6;
constexpr double kHierarchyWeight = 0.1;
constexpr double kVariantWeight = 0.1;
constexpr double kSignatureWeight = 0.1;
constexpr double kExampleWeight = 0.1;

std::vector<std::string> humanized(const std::vector<std::string>& labels) {
    std::vector<std::string> out;
    for (const auto& l : labels) out.push_back(humanize(l));
    return out;
}

std::vector<neighborhood::Field> element_fields(const SchemaElement& e, const std::map<std::string, std::string>& labels) {
    std::vector<std::string> sig;
    for (const auto* c : {&e.domain_chain, &e.range_chain})
        if (!c->empty()) sig.push_back(humanize(labels.at(c->front())));
    std::vector<std::string> var = humanized(e.variants);
    if (!e.description.empty()) var.push_back(e.description);
    return {{"label", humanize(e.label), kLabelWeight},
            {"hierarchy", text::join(humanized(e.parents), " "), kHierarchyWeight},
            {"variants", text::join(var, " "), kVariantWeight},
            {"signature", text::join(sig, " "), kSignatureWeight}};
}

std::vector<neighborhood::Field> anchor_fields(const Anchor& a, const ReferenceOntology& o,
                                               const std::map<std::string, std::vector<std::string>>& examples) {
    std::string signature;
    std::vector<std::string> ex;
    if (a.kind == AnchorKind::Relation) {
        const auto* r = o.relation(a.ref);
        if (r) signature = humanize(r->domain) + " " + humanize(r->range);
        if (auto it = examples.find(a.ref); it != examples.end()) ex = it->second;
    } else {
        for (const auto& r : o.relations) {
            if (r.domain != a.ref && r.range != a.ref) continue;
            if (auto it = examples.find(r.label); it != examples.end()) ex.insert(ex.end(), it->second.begin(), it->second.end());
        }
    }
    return {{"label", humanize(a.ref), kLabelWeight},
            {"signature", signature, kSignatureWeight},
            {"examples", text::join(ex, " "), kExampleWeight}};
}

}  // namespace

void cap_assignments(std::vector<std::vector<Candidate>>& lists, std::size_t max_assign) {
    std::map<std::string, std::vector<std::pair<double, std::size_t>>> by_element;
    for (std::size_t a = 0; a < lists.size(); ++a)
        for (const auto& c : lists[a]) by_element[c.element_id].push_back({c.similarity, a});
    std::set<std::pair<std::size_t, std::string>> dropped;
    for (auto& [id, uses] : by_element) {
        if (uses.size() <= max_assign) continue;
        std::sort(uses.begin(), uses.end(), [](const auto& x, const auto& y) {
            return x.first != y.first ? x.first > y.first : x.second < y.second;
        });
        for (std::size_t i = max_assign; i < uses.size(); ++i) dropped.insert({uses[i].second, id});
    }
    for (std::size_t a = 0; a < lists.size(); ++a)
        std::erase_if(lists[a], [&](const Candidate& c) { return dropped.count({a, c.element_id}) > 0; });
}

std::vector<std::vector<Candidate>> retrieve_candidates(const std::vector<Anchor>& anchors,
                                                        const ReferenceOntology& ontology,
                                                        const std::vector<SchemaElement>& elements,
                                                        const std::map<std::string, std::vector<std::string>>& examples,
                                                        Embedder& embedder, const RetrievalOptions& opts) {
    std::vector<std::vector<Candidate>> lists(anchors.size());
    if (anchors.empty() || elements.empty()) return lists;

    std::map<std::string, std::string> labels;
    for (const auto& e : elements) labels[e.id] = e.label;
    std::vector<std::pair<std::string, std::vector<neighborhood::Field>>> items;
    for (const auto& e : elements) items.push_back({e.id, element_fields(e, labels)});
    for (std::size_t i = 0; i < anchors.size(); ++i)
        items.push_back({"anchor:" + std::to_string(i), anchor_fields(anchors[i], ontology, examples)});
    const auto reps = neighborhood::build_representations(items, embedder);

    for (std::size_t a = 0; a < anchors.size(); ++a) {
        const auto& q = reps[elements.size() + a].combined;
        auto& list = lists[a];
        for (std::size_t e = 0; e < elements.size(); ++e) {
            if (elements[e].kind != anchors[a].kind) continue;
            const double sim = cosine(q, reps[e].combined);
            if (sim >= opts.threshold) list.push_back({elements[e].id, sim});
        }
        std::sort(list.begin(), list.end(), [](const Candidate& x, const Candidate& y) {
            return x.similarity != y.similarity ? x.similarity > y.similarity : x.element_id < y.element_id;
        });
        if (list.size() > opts.k) list.resize(opts.k);
    }
    cap_assignments(lists, opts.max_assign);
    return lists;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Label l) {
    switch (l) {
        case Label::Equivalent: return "Equivalent";
        case Label::Narrower: return "Narrower";
        case Label::Broader: return "Broader";
        case Label::Unrelated: return "Unrelated";
    }
    return "Unrelated";
}

std::optional<Label> label_from_string(const std::string& s) {
    for (auto l : {Label::Equivalent, Label::Narrower, Label::Broader, Label::Unrelated})
        if (text::to_lower(s) == text::to_lower(std::string(to_string(l)))) return l;
    return std::nullopt;
}

namespace {

bool better(const Judgement& a, const Judgement& b) {
    if (a.label != b.label) return static_cast<int>(a.label) < static_cast<int>(b.label);
    return a.confidence > b.confidence;
}

Judgement ask(ChatProvider& chat, const json& input, const std::string& request_id) {
    Judgement j;
    try {
        const std::string prompt = render_prompt(expect::kAlignmentVerify, input);
        const json reply = parse_reply_json(chat.chat({prompt, kResolutionBudget, expect::kAlignmentVerify, request_id}));
        const auto label = label_from_string(reply.at("label").get<std::string>());
        if (!label) throw Error("unknown alignment label");
        const double conf = reply.at("confidence").get<double>();
        if (!(conf >= 0.0 && conf <= 1.0)) throw Error("confidence outside [0,1]");
        j.label = *label;
        j.confidence = conf;
    } catch (const std::exception& e) {
        j.label = Label::Unrelated;
        j.confidence = 0.0;
        j.error = e.what();
    }
    return j;
}

}  // namespace

Judgement verify(ChatProvider& chat, const Anchor& anchor, const ReferenceOntology& ontology,
                 const SchemaElement& element, std::size_t rank, const std::string& request_id) {
    const json candidate = {{"label", humanize(element.label)},
                            {"level", to_string(element.level)},
                            {"description", element.description},
                            {"parents", humanized(element.parents)},
                            {"variants", humanized(element.variants)}};
    json a = {{"label", humanize(anchor.ref)}, {"kind", anchor.kind == AnchorKind::Relation ? "relation" : "concept"}};
    Judgement best;
    if (anchor.kind == AnchorKind::Relation) {
        const auto* r = ontology.relation(anchor.ref);
        const std::string domain = r ? humanize(r->domain) : "";
        const std::string range = r ? humanize(r->range) : "";
        a["domain"] = domain;
        a["range"] = range;
        best = ask(chat, {{"anchor", a}, {"candidate", candidate}}, request_id);
        a["domain"] = range;
        a["range"] = domain;
        auto rev = ask(chat, {{"anchor", a}, {"candidate", candidate}}, request_id + "-rev");
        rev.reversed = true;
        if (better(rev, best)) best = rev;
    } else {
        best = ask(chat, {{"anchor", a}, {"candidate", candidate}}, request_id);
    }
    best.anchor = anchor.ref;
    best.kind = anchor.kind;
    best.element_id = element.id;
    best.level = element.level;
    best.rank = rank;
    return best;
}

const Judgement* best_match(const AnchorResult& r) {
    const Judgement* best = nullptr;
    for (const auto& j : r.judgements) {
        if (!compatible(j.label)) continue;
        if (!best || better(j, *best) || (!better(*best, j) && j.rank < best->rank)) best = &j;
    }
    return best;
}

ScopeReport score_scope(const std::vector<AnchorResult>& results, const ReferenceOntology& ontology,
                        const std::vector<SchemaElement>& elements, std::size_t k) {
    ScopeReport rep;
    rep.level_distribution = {{"L1", 0.0}, {"L2", 0.0}, {"L3", 0.0}};
    std::map<std::string, const SchemaElement*> element;
    for (const auto& e : elements) element[e.id] = &e;

    // Elements each concept is compatibly aligned to.
    std::map<std::string, std::set<std::string>> aligned;
    double total = 0.0;
    for (const auto& r : results) {
        total += r.anchor.weight;
        if (r.anchor.kind == AnchorKind::Concept) ++rep.concept_anchors;
        else ++rep.relation_anchors;
        if (r.anchor.kind != AnchorKind::Concept) continue;
        for (const auto& j : r.judgements)
            if (compatible(j.label)) aligned[r.anchor.ref].insert(j.element_id);
    }
    if (total <= 0.0) return rep;

    double exact = 0.0;
    double narrower = 0.0;
    double mrr = 0.0;
    double matched = 0.0;
    double dr_total = 0.0;
    double dr_pass = 0.0;
    std::map<std::string, double> levels;
    for (const auto& r : results) {
        const double w = r.anchor.weight;
        const bool has_eq = std::any_of(r.judgements.begin(), r.judgements.end(),
                                        [](const Judgement& j) { return j.label == Label::Equivalent; });
        const bool has_nw = std::any_of(r.judgements.begin(), r.judgements.end(),
                                        [](const Judgement& j) { return j.label == Label::Narrower; });
        if (has_eq) exact += w;
        else if (has_nw) narrower += w;

        std::size_t first = 0;
        for (const auto& j : r.judgements)
            if (compatible(j.label) && j.rank >= 1 && j.rank <= k && (first == 0 || j.rank < first)) first = j.rank;
        if (first > 0) mrr += w / static_cast<double>(first);

        const Judgement* best = best_match(r);
        if (!best) continue;
        matched += w;
        levels[std::string(to_string(best->level))] += w;

        if (r.anchor.kind != AnchorKind::Relation) continue;
        const auto* rel = ontology.relation(r.anchor.ref);
        auto it = element.find(best->element_id);
        if (!rel || it == element.end()) continue;
        const auto& e = *it->second;
        auto side = [&](const std::string& concept_label, const std::vector<std::string>& chain) {
            if (is_primitive(concept_label)) return true;
            const auto& targets = aligned[concept_label];
            return std::any_of(chain.begin(), chain.end(), [&](const std::string& id) { return targets.count(id) > 0; });
        };
        const bool pass = (side(rel->domain, e.domain_chain) && side(rel->range, e.range_chain)) ||
                          (side(rel->domain, e.range_chain) && side(rel->range, e.domain_chain));
        dr_total += w;
        if (pass) dr_pass += w;
    }
    rep.coverage_exact = exact / total;
    rep.coverage_narrower = narrower / total;
    rep.coverage_compat = (exact + narrower) / total;
    rep.mrr = mrr / total;
    if (dr_total > 0.0) rep.dr_consistency = dr_pass / dr_total;
    if (matched > 0.0)
        for (const auto& [lvl, w] : levels) rep.level_distribution[lvl] = w / matched;
    return rep;
}

ScopeRun evaluate_scope(const ContextEnrichedGraph& g, const ReferenceOntology& ontology,
                        const std::vector<GoldTriple>& gold, Scope scope, ChatProvider& chat, Embedder& embedder,
                        const Config& config) {
    ScopeRun run;
    run.scope = scope;
    const auto anchors = active_anchors(ontology, in_scope(gold, scope));

    // Anchor evidence comes from the source split only.
    std::map<std::string, std::vector<std::string>> examples;
    for (const auto& t : gold) {
        if (t.split != Split::Source) continue;
        auto& ex = examples[t.relation];
        if (ex.size() < 3) ex.push_back(t.subject + " " + humanize(t.relation) + " " + t.object);
    }

    const auto elements = schema_elements(g);
    const auto opts = RetrievalOptions::from(config);
    const auto lists = retrieve_candidates(anchors, ontology, elements, examples, embedder, opts);
    std::map<std::string, const SchemaElement*> by_id;
    for (const auto& e : elements) by_id[e.id] = &e;

    std::vector<std::pair<std::size_t, std::size_t>> work;
    run.results.resize(anchors.size());
    for (std::size_t a = 0; a < anchors.size(); ++a) {
        run.results[a].anchor = anchors[a];
        run.results[a].judgements.resize(lists[a].size());
        for (std::size_t c = 0; c < lists[a].size(); ++c) work.push_back({a, c});
    }
    parallel_for(work.size(), config.max_concurrency, [&](std::size_t i) {
        const auto [a, c] = work[i];
        const std::string rid = "Align-" + std::string(to_string(scope)) + "-a" + text::pad(a, 3) + "-c" + std::to_string(c + 1);
        run.results[a].judgements[c] = verify(chat, anchors[a], ontology, *by_id.at(lists[a][c].element_id), c + 1, rid);
    });

    run.report = score_scope(run.results, ontology, elements, opts.k);
    for (const auto& r : run.results)
        for (const auto& j : r.judgements)
            if (j.confidence < config.audit_threshold) {
                json entry = to_json(j);
                entry["scope"] = to_string(scope);
                run.audit.push_back(std::move(entry));
            }
    return run;
}

json to_json(const ScopeReport& r) {
    return {{"relation_anchors", r.relation_anchors},
            {"concept_anchors", r.concept_anchors},
            {"coverage_exact", r.coverage_exact},
            {"coverage_narrower", r.coverage_narrower},
            {"coverage_compat", r.coverage_compat},
            {"mrr5", r.mrr},
            {"dr_consistency", r.dr_consistency ? json(*r.dr_consistency) : json(nullptr)},
            {"level_distribution", r.level_distribution}};
}

json to_json(const Judgement& j) {
    return {{"anchor", j.anchor},
            {"kind", j.kind == AnchorKind::Relation ? "relation" : "concept"},
            {"element_id", j.element_id},
            {"level", to_string(j.level)},
            {"rank", j.rank},
            {"label", to_string(j.label)},
            {"confidence", j.confidence},
            {"reversed", j.reversed},
            {"error", j.error ? json(*j.error) : json(nullptr)}};
}

json to_json(const ScopeRun& run) {
    json results = json::array();
    for (const auto& r : run.results) {
        json js = json::array();
        for (const auto& j : r.judgements) js.push_back(to_json(j));
        results.push_back({{"anchor", r.anchor.ref},
                           {"kind", r.anchor.kind == AnchorKind::Relation ? "relation" : "concept"},
                           {"weight", r.anchor.weight},
                           {"judgements", js}});
    }
    return {{"scope", to_string(run.scope)}, {"report", to_json(run.report)}, {"anchors", results}};
}

}  // namespace tracekg::alignment
