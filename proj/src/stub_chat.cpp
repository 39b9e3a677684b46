// Rule-based stand-in for every LLM call in the pipeline. Each stage rule
// is simple enough to serve as a test oracle:
//   mentions   = runs of capitalized tokens (leading function words dropped)
//   relations  = short lowercase verb phrase between adjacent mentions
//   resolution = normalized-name / label-stem equivalence expressed as actions

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <regex>
#include <set>

#include "tracekg/ingest.hpp"
#include "tracekg/providers.hpp"
#include "tracekg/text.hpp"

namespace tracekg {

namespace {

const std::set<std::string> kLeadingStopwords = {
    "The",     "A",       "An",      "This",     "These",   "That",     "Those",    "It",     "Its",
    "In",      "On",      "At",      "During",   "After",   "Before",   "When",     "If",     "Each",
    "Every",   "Both",    "Our",     "We",       "They",    "He",       "She",      "However", "Meanwhile",
    "Also",    "Then",    "Since",   "Under",    "Within",  "Because",  "While",    "Although", "Moreover",
    "Furthermore", "Later", "Today", "According", "Overall", "Finally", "Additionally", "For", "From", "With",
    "As",      "By",      "To",      "Of",       "Such",    "Their",    "His",      "Her",    "Unless",
    "TABLE",   "FIGURE",  "EQUATION", "OTHER",
};

const std::map<std::string, std::string> kHeadNounTypes = {
    {"corporation", "Organization"}, {"company", "Organization"}, {"inc", "Organization"},
    {"labs", "Organization"},        {"group", "Organization"},   {"institute", "Organization"},
    {"university", "Organization"},  {"agency", "Organization"},  {"consortium", "Organization"},
    {"pump", "Device"},              {"valve", "Device"},         {"tower", "Device"},
    {"sensor", "Device"},            {"turbine", "Device"},       {"compressor", "Device"},
    {"controller", "Device"},        {"reactor", "Device"},       {"motor", "Device"},
    {"generator", "Device"},         {"engine", "Device"},        {"boiler", "Device"},
    {"exchanger", "Device"},         {"filter", "Device"},        {"tank", "Device"},
    {"plant", "Facility"},           {"facility", "Facility"},    {"station", "Facility"},
    {"laboratory", "Facility"},      {"factory", "Facility"},     {"depot", "Facility"},
    {"project", "Project"},          {"program", "Project"},      {"initiative", "Project"},
    {"protocol", "Method"},          {"standard", "Method"},      {"method", "Method"},
    {"procedure", "Method"},         {"process", "Method"},       {"algorithm", "Method"},
    {"report", "Document"},          {"manual", "Document"},      {"specification", "Document"},
    {"handbook", "Document"},        {"guide", "Document"},
};

const std::set<std::string> kCities = {"paris", "berlin", "lyon", "hamburg", "oslo", "turin", "madrid",
                                       "lisbon", "vienna", "geneva", "rotterdam", "porto", "munich"};

const std::set<std::string> kFirstNames = {"alice", "bob",    "carol",  "david", "elena", "farid", "grace",
                                           "hugo",  "ingrid", "jonas",  "karim", "lena",  "marco", "nadia",
                                           "omar",  "petra",  "quentin", "rosa", "sven",  "tomas"};

const std::map<std::string, std::string> kClassGroups = {
    {"person", "Agent"},         {"organization", "Agent"}, {"city", "Location"},
    {"facility", "Location"},    {"place", "Location"},     {"device", "Equipment"},
    {"method", "Knowledge"},     {"document", "Knowledge"}, {"project", "Activity"},
};

// (forward, backward) surface pairs; the forward orientation survives.
const std::vector<std::pair<std::string, std::string>> kInversePairs = {
    {"feeds", "fed by"},         {"supplies", "supplied by"}, {"works at", "employs"},
    {"manages", "managed by"},   {"is part of", "contains"},  {"powers", "powered by"},
    {"monitors", "monitored by"}, {"cools", "cooled by"},
};

const std::map<std::string, std::string> kCanonicalSynonyms = {
    {"works at", "employed_by"},  {"works for", "employed_by"}, {"employed by", "employed_by"},
    {"is employed by", "employed_by"}, {"employed at", "employed_by"},
    {"feeds", "feeds"},           {"supplies", "feeds"},        {"delivers to", "feeds"},
    {"is located in", "located_in"}, {"located in", "located_in"}, {"is based in", "located_in"},
    {"based in", "located_in"},   {"sits in", "located_in"},
    {"is part of", "part_of"},    {"belongs to", "part_of"},
    {"manages", "manages"},       {"oversees", "manages"},      {"supervises", "manages"},
    {"monitors", "monitors"},     {"tracks", "monitors"},       {"watches", "monitors"},
    {"documents", "documents"},   {"describes", "documents"},   {"specifies", "documents"},
};

const std::map<std::string, std::string> kRelationClasses = {
    {"employed_by", "employment"}, {"manages", "management"}, {"feeds", "material_flow"},
    {"located_in", "location"},    {"part_of", "part_whole"}, {"monitors", "observation"},
    {"documents", "documentation"},
};

const std::vector<std::pair<std::string, RelationHint>> kHintKeywords = {
    {"part of", RelationHint::Composition},    {"consists", RelationHint::Composition},
    {"includes", RelationHint::Composition},   {"contains", RelationHint::Composition},
    {"belongs", RelationHint::Composition},    {"causes", RelationHint::Causality},
    {"triggers", RelationHint::Causality},     {"leads to", RelationHint::Causality},
    {"prevents", RelationHint::Causality},     {"precedes", RelationHint::Temporality},
    {"follows", RelationHint::Temporality},    {"located", RelationHint::Spatiality},
    {"based in", RelationHint::Spatiality},    {"sits in", RelationHint::Spatiality},
    {"near", RelationHint::Spatiality},        {"works", RelationHint::Role},
    {"employ", RelationHint::Role},            {"manage", RelationHint::Role},
    {"oversees", RelationHint::Role},          {"supervises", RelationHint::Role},
    {"leads", RelationHint::Role},             {"founded", RelationHint::Role},
    {"used for", RelationHint::Purpose},       {"designed for", RelationHint::Purpose},
    {"depends", RelationHint::Dependency},     {"requires", RelationHint::Dependency},
    {"feeds", RelationHint::Dependency},       {"fed by", RelationHint::Dependency},
    {"supplie", RelationHint::Dependency},     {"powers", RelationHint::Dependency},
    {"powered", RelationHint::Dependency},     {"delivers", RelationHint::Dependency},
    {"cools", RelationHint::Dependency},       {"cooled", RelationHint::Dependency},
    {"connected", RelationHint::Coupling},     {"coupled", RelationHint::Coupling},
    {"converts", RelationHint::Transformation}, {"produces", RelationHint::Transformation},
    {"exceeds", RelationHint::Comparison},     {"outperforms", RelationHint::Comparison},
    {"describes", RelationHint::Information},  {"documents", RelationHint::Information},
    {"specifies", RelationHint::Information},  {"monitor", RelationHint::Information},
    {"tracks", RelationHint::Information},     {"watches", RelationHint::Information},
    {"also known as", RelationHint::Identity},
};

const std::set<std::string> kWeakLabels = {"and", "or", "of", "with", "to", "in", "on", "at", "by", "for",
                                           "from", "the", "a", "an", "as", "than", "is", "are", "was"};

const std::set<std::string> kModals = {"may", "might", "could"};

std::string humanize(const std::string& label) {
    std::string out;
    for (std::size_t i = 0; i < label.size(); ++i) {
        const char c = label[i];
        if (c == '_' || c == '-' || c == ':') {
            out.push_back(' ');
            continue;
        }
        if (i > 0 && std::isupper(static_cast<unsigned char>(c)) && std::islower(static_cast<unsigned char>(label[i - 1])))
            out.push_back(' ');
        out.push_back(c);
    }
    return text::to_lower(out);
}

std::string stem_word(std::string w) {
    if (w.size() > 4 && w.ends_with("ies")) return w.substr(0, w.size() - 3) + "y";
    if (w.size() > 4 && w.ends_with("sses")) return w.substr(0, w.size() - 2);
    if (w.size() > 3 && w.ends_with("s") && !w.ends_with("ss")) return w.substr(0, w.size() - 1);
    return w;
}

std::vector<std::string> stemmed_words(const std::string& label) {
    auto words = text::alnum_tokens(humanize(label));
    for (auto& w : words) w = stem_word(w);
    return words;
}

bool is_proper_suffix(const std::vector<std::string>& shorter, const std::vector<std::string>& longer) {
    if (shorter.empty() || shorter.size() >= longer.size()) return false;
    return std::equal(shorter.rbegin(), shorter.rend(), longer.rbegin());
}

std::set<std::string> bigrams(const std::string& key) {
    std::set<std::string> out;
    if (key.size() == 1) out.insert(key);
    for (std::size_t i = 0; i + 1 < key.size(); ++i) out.insert(key.substr(i, 2));
    return out;
}

struct DisjointSet {
    std::vector<std::size_t> parent;
    explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

struct Range {
    std::size_t begin;
    std::size_t end;
};

std::vector<Range> sentence_ranges(const std::string& s) {
    std::vector<Range> out;
    std::size_t cursor = 0;
    for (const auto& sentence : ingest::split_sentences(s)) {
        const auto pos = s.find(sentence, cursor);
        if (pos == std::string::npos) continue;
        out.push_back({pos, pos + sentence.size()});
        cursor = pos + sentence.size();
    }
    return out;
}

std::size_t sentence_of(const std::vector<Range>& sentences, std::size_t offset) {
    for (std::size_t i = 0; i < sentences.size(); ++i)
        if (offset >= sentences[i].begin && offset < sentences[i].end) return i;
    return sentences.size();
}

// ---------------------------------------------------------------------------
// EntRec

struct Token {
    std::size_t begin;
    std::size_t end;
    std::string core;
    bool trailing_punct;
};

std::vector<Token> tokens_with_offsets(const std::string& s) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        if (j == i) break;
        std::size_t b = i;
        std::size_t e = j;
        while (b < e && (s[b] == '(' || s[b] == '"' || s[b] == '\'' || s[b] == '[')) ++b;
        while (e > b && std::string_view(",;:!?)\"']").find(s[e - 1]) != std::string_view::npos) --e;
        if (e > b && s[e - 1] == '.') {
            const auto inner = std::string_view(s).substr(b, e - b - 1);
            if (inner.find('.') == std::string_view::npos) --e;
        }
        if (e > b + 1 && s.compare(e - 2, 2, "'s") == 0) e -= 2;
        out.push_back({b, e, s.substr(b, e - b), e < j});
        i = j;
    }
    return out;
}

json recognize_mentions(const json& input) {
    const std::string chunk_text = input.at("focus_chunk").at("text").get<std::string>();
    const auto sentences = sentence_ranges(chunk_text);
    const auto tokens = tokens_with_offsets(chunk_text);

    struct Found {
        std::size_t begin;
        std::size_t end;
    };
    std::vector<Found> found;
    std::vector<const Token*> run;
    auto close_run = [&] {
        std::size_t first = 0;
        while (first < run.size() && kLeadingStopwords.count(run[first]->core)) ++first;
        if (first < run.size()) found.push_back({run[first]->begin, run.back()->end});
        run.clear();
    };
    for (const auto& tok : tokens) {
        const bool capitalized = !tok.core.empty() && std::isupper(static_cast<unsigned char>(tok.core[0]));
        if (!capitalized) {
            close_run();
            continue;
        }
        run.push_back(&tok);
        if (tok.trailing_punct) close_run();
    }
    close_run();

    static const std::regex kProperty(R"(has an? ([a-z]+(?: [a-z]+)?) of ([0-9]+(?:\.[0-9]+)?)(?: ([A-Za-z%]+))?)");
    json out = json::array();
    std::vector<std::size_t> sentence_idx;
    for (const auto& f : found) {
        const std::string name = chunk_text.substr(f.begin, f.end - f.begin);
        const std::size_t si = sentence_of(sentences, f.begin);
        json evidence = json::array();
        if (si < sentences.size())
            evidence.push_back(chunk_text.substr(sentences[si].begin, sentences[si].end - sentences[si].begin));
        const std::string type = StubChat::type_hint_for(name);
        out.push_back(json{{"name", name},
                           {"span", json::array({f.begin, f.end})},
                           {"description", "A " + text::to_lower(type) + " mentioned in the document."},
                           {"type_hint", type},
                           {"confidence", 0.9},
                           {"evidence", evidence},
                           {"intrinsic", json::array()}});
        sentence_idx.push_back(si);
    }

    // "X has a <key> of <number> [unit]" attaches to the closest preceding mention.
    for (std::size_t si = 0; si < sentences.size(); ++si) {
        const std::string sentence = chunk_text.substr(sentences[si].begin, sentences[si].end - sentences[si].begin);
        for (auto it = std::sregex_iterator(sentence.begin(), sentence.end(), kProperty); it != std::sregex_iterator(); ++it) {
            const auto& m = *it;
            const std::size_t at = sentences[si].begin + static_cast<std::size_t>(m.position(0));
            std::optional<std::size_t> owner;
            for (std::size_t k = 0; k < found.size(); ++k)
                if (sentence_idx[k] == si && found[k].end <= at) owner = k;
            if (!owner) continue;
            const bool has_unit = m[3].matched;
            out[*owner]["intrinsic"].push_back(json{{"key", m[1].str()},
                                                    {"value", m[2].str()},
                                                    {"value_kind", has_unit ? "quantity" : "number"},
                                                    {"unit", has_unit ? json(m[3].str()) : json(nullptr)},
                                                    {"evidence", json::array({m[0].str()})}});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// EntRes

json resolve_entities(const json& input, double threshold) {
    const auto& items = input.at("items");
    std::vector<std::string> ids;
    std::vector<std::string> names;
    for (const auto& it : items) {
        ids.push_back(it.at("id").get<std::string>());
        names.push_back(it.value("name", ""));
    }
    DisjointSet ds(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i)
        for (std::size_t j = i + 1; j < ids.size(); ++j)
            if (StubChat::name_similarity(names[i], names[j]) >= threshold) ds.unite(i, j);
    std::map<std::size_t, std::vector<std::string>> groups;
    for (std::size_t i = 0; i < ids.size(); ++i) groups[ds.find(i)].push_back(ids[i]);
    std::vector<std::vector<std::string>> merges;
    for (auto& [root, members] : groups) {
        if (members.size() < 2) continue;
        std::sort(members.begin(), members.end());
        merges.push_back(members);
    }
    std::sort(merges.begin(), merges.end());
    json out = json::array();
    for (const auto& m : merges)
        out.push_back(json{{"action", "MergeEntities"},
                           {"entity_ids", m},
                           {"canonical_name", nullptr},
                           {"canonical_description", nullptr},
                           {"canonical_type", nullptr},
                           {"rationale", "names normalize to the same surface form"}});
    return out;
}

// ---------------------------------------------------------------------------
// EntClsRec / EntClsRes

json recognize_classes(const json& input) {
    std::map<std::string, std::vector<std::string>> by_type;
    for (const auto& it : input.at("items")) {
        auto hint = opt_string(it, "type_hint");
        if (!hint || text::trim(*hint).empty()) continue;
        by_type[text::trim(*hint)].push_back(it.at("id").get<std::string>());
    }
    json out = json::array();
    for (auto& [label, members] : by_type) {
        std::sort(members.begin(), members.end());
        out.push_back(json{{"label", label}, {"description", "Entities of type " + label + "."}, {"member_ids", members}});
    }
    return out;
}

std::optional<std::string> group_for(const std::string& label) {
    auto it = kClassGroups.find(StubChat::class_stem(label));
    if (it == kClassGroups.end()) return std::nullopt;
    return it->second;
}

json resolve_classes(const json& input) {
    struct Cls {
        std::string id;
        std::string label;
        std::string description;
        std::optional<std::string> group;
    };
    std::map<std::string, std::vector<Cls>> by_stem;
    for (const auto& c : input.at("classes")) {
        Cls cls{c.at("id").get<std::string>(), c.value("label", ""), c.value("description", ""), opt_string(c, "group")};
        by_stem[StubChat::class_stem(cls.label)].push_back(std::move(cls));
    }
    json out = json::array();
    int provisional = 0;
    for (auto& [stem, classes] : by_stem) {
        std::sort(classes.begin(), classes.end(), [](const Cls& a, const Cls& b) { return a.id < b.id; });
        bool grouped = std::any_of(classes.begin(), classes.end(), [](const Cls& c) { return c.group.has_value(); });
        if (classes.size() >= 2) {
            std::string label = classes.front().label;
            std::string description;
            json ids = json::array();
            for (const auto& c : classes) {
                ids.push_back(c.id);
                if (c.label.size() < label.size() || (c.label.size() == label.size() && c.label < label)) label = c.label;
                if (description.empty()) description = c.description;
            }
            const std::string tmp = "tmp_" + std::to_string(++provisional);
            out.push_back(json{{"action", "merge_classes"},
                               {"class_ids", ids},
                               {"new_label", label},
                               {"new_description", description},
                               {"provisional_id", tmp},
                               {"rationale", "labels share the stem '" + stem + "'"}});
            if (!grouped)
                if (auto g = group_for(label))
                    out.push_back(json{{"action", "modify_class"},
                                       {"class_id", tmp},
                                       {"new_label", nullptr},
                                       {"new_description", nullptr},
                                       {"new_class_group", *g},
                                       {"rationale", "group by broad category"}});
            continue;
        }
        const auto& c = classes.front();
        if (c.group) continue;
        if (auto g = group_for(c.label))
            out.push_back(json{{"action", "modify_class"},
                               {"class_id", c.id},
                               {"new_label", nullptr},
                               {"new_description", nullptr},
                               {"new_class_group", *g},
                               {"rationale", "group by broad category"}});
    }
    return out;
}

// ---------------------------------------------------------------------------
// RelRec

struct Occurrence {
    std::size_t begin;
    std::size_t end;
    std::string entity;
};

bool word_boundary(const std::string& s, std::size_t b, std::size_t e) {
    auto alnum = [&](std::size_t i) { return std::isalnum(static_cast<unsigned char>(s[i])) != 0; };
    return (b == 0 || !alnum(b - 1)) && (e >= s.size() || !alnum(e));
}

json extract_qualifiers(const std::string& rest) {
    static const std::vector<std::pair<std::string, Qualifier>> kTriggers = {
        {"during", Qualifier::Temporal},     {"after", Qualifier::Temporal},
        {"before", Qualifier::Temporal},     {"since", Qualifier::Temporal},
        {"until", Qualifier::Temporal},      {"within", Qualifier::Spatial},
        {"inside", Qualifier::Spatial},      {"near", Qualifier::Spatial},
        {"under", Qualifier::OperationalConstraint}, {"when", Qualifier::ConditionExpression},
        {"if", Qualifier::ConditionExpression},      {"unless", Qualifier::ConditionExpression},
        {"because", Qualifier::CausalHint},  {"due to", Qualifier::CausalHint},
        {"only", Qualifier::LogicalMarker},
    };
    const std::string lower = text::to_lower(rest);
    struct Hit {
        std::size_t pos;
        std::size_t len;
        Qualifier q;
    };
    std::vector<Hit> hits;
    for (const auto& [kw, q] : kTriggers) {
        std::size_t pos = 0;
        while ((pos = lower.find(kw, pos)) != std::string::npos) {
            if (word_boundary(lower, pos, pos + kw.size())) {
                hits.push_back({pos, kw.size(), q});
                break;
            }
            pos += kw.size();
        }
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.pos < b.pos; });
    QualifierSet qs;
    for (std::size_t i = 0; i < hits.size(); ++i) {
        if (qs.get(hits[i].q)) continue;
        std::size_t end = rest.size();
        if (hits[i].q == Qualifier::LogicalMarker) {
            end = hits[i].pos + hits[i].len;
        } else {
            if (i + 1 < hits.size()) end = std::min(end, hits[i + 1].pos);
            end = std::min(end, rest.find_first_of(",;", hits[i].pos) == std::string::npos ? end : rest.find_first_of(",;", hits[i].pos));
        }
        std::string phrase = text::trim(std::string_view(rest).substr(hits[i].pos, end - hits[i].pos));
        while (!phrase.empty() && (phrase.back() == '.' || phrase.back() == '!' || phrase.back() == '?')) phrase.pop_back();
        qs.set(hits[i].q, phrase);
    }
    return qs;
}

json recognize_relations(const json& input) {
    const std::string chunk_text = input.at("chunk").at("text").get<std::string>();
    const auto sentences = sentence_ranges(chunk_text);

    std::vector<Occurrence> occ;
    for (const auto& e : input.at("entities")) {
        const std::string id = e.at("id").get<std::string>();
        std::set<std::string> forms;
        for (const auto& f : e.value("surface_forms", json::array())) forms.insert(f.get<std::string>());
        forms.insert(e.value("name", ""));
        for (const auto& form : forms) {
            if (form.empty()) continue;
            std::size_t pos = 0;
            while ((pos = chunk_text.find(form, pos)) != std::string::npos) {
                if (word_boundary(chunk_text, pos, pos + form.size())) occ.push_back({pos, pos + form.size(), id});
                pos += form.size();
            }
        }
    }
    std::sort(occ.begin(), occ.end(), [](const Occurrence& a, const Occurrence& b) {
        if (a.begin != b.begin) return a.begin < b.begin;
        if (a.end != b.end) return a.end > b.end;
        return a.entity < b.entity;
    });
    std::vector<Occurrence> kept;
    for (const auto& o : occ)
        if (kept.empty() || o.begin >= kept.back().end) kept.push_back(o);

    json out = json::array();
    for (std::size_t i = 0; i + 1 < kept.size(); ++i) {
        const auto& a = kept[i];
        const auto& b = kept[i + 1];
        const std::size_t si = sentence_of(sentences, a.begin);
        if (si >= sentences.size() || sentence_of(sentences, b.begin) != si || a.entity == b.entity) continue;
        auto words = text::whitespace_tokens(chunk_text.substr(a.end, b.begin - a.end));
        bool lowercase_phrase = !words.empty() && words.size() <= 6;
        for (const auto& w : words)
            lowercase_phrase = lowercase_phrase && std::all_of(w.begin(), w.end(), [](char c) {
                                   return std::islower(static_cast<unsigned char>(c)) || c == '-';
                               });
        if (!lowercase_phrase) continue;
        while (!words.empty() && (words.back() == "the" || words.back() == "a" || words.back() == "an")) words.pop_back();
        std::optional<std::string> modal;
        if (!words.empty() && kModals.count(words.front())) {
            modal = words.front();
            words.erase(words.begin());
        }
        if (words.empty() || (words.size() == 1 && kWeakLabels.count(words.front()))) continue;
        const std::string label = text::join(words, " ");

        const auto& sent = sentences[si];
        const std::string sentence = chunk_text.substr(sent.begin, sent.end - sent.begin);
        json qualifiers = extract_qualifiers(chunk_text.substr(b.end, sent.end - b.end));
        if (modal) qualifiers["UncertaintyQualifier"] = *modal;
        const std::string subject = chunk_text.substr(a.begin, a.end - a.begin);
        const std::string object = chunk_text.substr(b.begin, b.end - b.begin);
        out.push_back(json{{"subject_id", a.entity},
                           {"object_id", b.entity},
                           {"label", label},
                           {"description", subject + " " + label + " " + object + "."},
                           {"hint_type", to_string(StubChat::hint_for_label(label))},
                           {"confidence", 0.85},
                           {"evidence", json::array({sentence})},
                           {"qualifiers", qualifiers}});
    }
    return out;
}

// ---------------------------------------------------------------------------
// RelRes

json resolve_relations(const json& input) {
    struct Item {
        std::string id;
        std::string subject;
        std::string object;
        std::string raw;
        std::optional<std::string> canonical;
        std::optional<std::string> cls;
        std::optional<std::string> group;
        std::string hint;
    };
    std::vector<Item> items;
    for (const auto& it : input.at("items")) {
        items.push_back({it.at("id").get<std::string>(), it.at("subject").at("id").get<std::string>(),
                         it.at("object").at("id").get<std::string>(), it.value("raw_label", ""),
                         opt_string(it, "canonical_label"), opt_string(it, "rel_cls"), opt_string(it, "rel_cls_group"),
                         it.value("hint_type", "ASSOCIATION")});
    }
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.id < b.id; });

    json out = json::array();
    for (const auto& it : items) {
        // An inverse-form label is canonicalized as its forward form only
        // when merged; standalone it keeps its own canonical label.
        const std::string canon = StubChat::canonical_relation_label(it.raw);
        const std::string cls = StubChat::relation_class_for(canon);
        if (it.canonical != canon)
            out.push_back(json{{"action", "set_canonical_rel"},
                               {"relation_id", it.id},
                               {"canonical_label", canon},
                               {"canonical_description", "Relation expressed as '" + it.raw + "'."},
                               {"rationale", "surface form maps to canonical predicate"}});
        if (it.cls != cls)
            out.push_back(json{{"action", "set_rel_cls"}, {"relation_id", it.id}, {"rel_cls", cls}, {"rationale", "predicate family"}});
        if (!it.group)
            out.push_back(json{{"action", "set_rel_cls_group"},
                               {"relation_id", it.id},
                               {"rel_cls_group", it.hint},
                               {"rationale", "coarse group from relation hint"}});
    }

    std::vector<bool> absorbed(items.size(), false);
    for (std::size_t j = 0; j < items.size(); ++j) {
        for (std::size_t i = 0; i < j; ++i) {
            if (absorbed[i] || absorbed[j]) continue;
            const auto& a = items[i];
            const auto& b = items[j];
            if (a.subject == b.subject && a.object == b.object &&
                StubChat::canonical_relation_label(a.raw) == StubChat::canonical_relation_label(b.raw)) {
                out.push_back(json{{"action", "merge_relations"},
                                   {"relation_ids", json::array({a.id, b.id})},
                                   {"normalize_direction", false},
                                   {"rationale", "duplicate statement between the same entities"}});
                absorbed[j] = true;
                break;
            }
            if (a.subject == b.object && a.object == b.subject) {
                const auto fa = StubChat::inverse_forward_label(a.raw);
                const auto fb = StubChat::inverse_forward_label(b.raw);
                const bool a_forward = fb && *fb == a.raw && text::to_lower(a.raw) != text::to_lower(b.raw);
                const bool b_forward = fa && *fa == b.raw && text::to_lower(a.raw) != text::to_lower(b.raw);
                if (!a_forward && !b_forward) continue;
                const auto& keep = a_forward ? a : b;
                const auto& drop = a_forward ? b : a;
                out.push_back(json{{"action", "merge_relations"},
                                   {"relation_ids", json::array({keep.id, drop.id})},
                                   {"normalize_direction", true},
                                   {"rationale", "inverse phrasing of the same statement"}});
                absorbed[a_forward ? j : i] = true;
                break;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation judges

json judge_retention(const json& input) {
    const std::string statement = text::to_lower(input.at("statement").get<std::string>());
    for (const auto& t : input.value("triples", json::array())) {
        const std::string subject = t.value("subject", "");
        const std::string object = t.value("object", "");
        if (subject.empty() || object.empty()) continue;
        if (!text::contains_ci(statement, subject) || !text::contains_ci(statement, object)) continue;
        std::set<std::string> predicates;
        const std::string canonical = t.value("predicate", "");
        const std::string raw = t.value("raw_label", "");
        predicates.insert(humanize(canonical));
        if (!raw.empty()) predicates.insert(text::to_lower(raw));
        for (const auto& [surface, canon] : kCanonicalSynonyms)
            if (canon == canonical || canon == StubChat::canonical_relation_label(raw)) predicates.insert(surface);
        for (const auto& p : predicates)
            if (!p.empty() && statement.find(p) != std::string::npos) return json{{"supported", true}};
    }
    return json{{"supported", false}};
}

json verify_alignment(const json& input) {
    const auto& anchor = input.at("anchor");
    const auto& cand = input.at("candidate");
    const auto a = stemmed_words(anchor.value("label", ""));
    const auto c = stemmed_words(cand.value("label", ""));
    if (!a.empty() && a == c) return json{{"label", "Equivalent"}, {"confidence", 1.0}};
    if (is_proper_suffix(a, c)) return json{{"label", "Narrower"}, {"confidence", 0.92}};
    for (const auto& parent : cand.value("parents", json::array()))
        if (stemmed_words(parent.get<std::string>()) == a) return json{{"label", "Narrower"}, {"confidence", 0.9}};
    if (is_proper_suffix(c, a)) return json{{"label", "Broader"}, {"confidence", 0.9}};
    return json{{"label", "Unrelated"}, {"confidence", 0.95}};
}

}  // namespace

// ---------------------------------------------------------------------------

std::string StubChat::canonical_relation_label(const std::string& raw_label) {
    const std::string key = text::to_lower(text::trim(raw_label));
    auto it = kCanonicalSynonyms.find(key);
    if (it != kCanonicalSynonyms.end()) return it->second;
    return text::snake_label(key);
}

std::string StubChat::relation_class_for(const std::string& canonical_label) {
    auto it = kRelationClasses.find(canonical_label);
    return it == kRelationClasses.end() ? canonical_label : it->second;
}

RelationHint StubChat::hint_for_label(const std::string& label) {
    const std::string lower = text::to_lower(label);
    for (const auto& [kw, hint] : kHintKeywords)
        if (lower.find(kw) != std::string::npos) return hint;
    if (lower == "is" || lower == "is a" || lower == "is an") return RelationHint::Identity;
    return RelationHint::Association;
}

std::optional<std::string> StubChat::inverse_forward_label(const std::string& raw_label) {
    const std::string key = text::to_lower(text::trim(raw_label));
    for (const auto& [fwd, bwd] : kInversePairs) {
        if (key == bwd) return fwd;
        if (key == fwd) return bwd;
    }
    return std::nullopt;
}

std::string StubChat::type_hint_for(const std::string& name) {
    const auto words = text::alnum_tokens(name);
    if (words.empty()) return "Concept";
    if (auto it = kHeadNounTypes.find(words.back()); it != kHeadNounTypes.end()) return it->second;
    if (words.size() == 1 && kCities.count(words.front())) return "City";
    if (kFirstNames.count(words.front())) return "Person";
    return "Concept";
}

std::string StubChat::class_stem(const std::string& label) { return text::join(stemmed_words(label), " "); }

double StubChat::name_similarity(const std::string& a, const std::string& b) {
    const auto ba = bigrams(text::alnum_key(a));
    const auto bb = bigrams(text::alnum_key(b));
    if (ba.empty() || bb.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& g : ba) inter += bb.count(g);
    return static_cast<double>(inter) / static_cast<double>(ba.size() + bb.size() - inter);
}

std::string StubChat::complete(const ChatRequest& req) {
    json input;
    try {
        input = prompt_input(req.prompt);
    } catch (const std::exception& e) {
        throw ProviderError(req.request_id, std::string("stub cannot read prompt input: ") + e.what());
    }
    const std::string& tag = req.expect;
    if (tag == expect::kEntityRecognition) return recognize_mentions(input).dump();
    if (tag == expect::kEntityResolution) return resolve_entities(input, options_.entity_merge_similarity).dump();
    if (tag == expect::kClassRecognition) return recognize_classes(input).dump();
    if (tag == expect::kClassResolution) return resolve_classes(input).dump();
    if (tag == expect::kRelationRecognition) return recognize_relations(input).dump();
    if (tag == expect::kRelationResolution) return resolve_relations(input).dump();
    if (tag == expect::kRetentionJudge) return judge_retention(input).dump();
    if (tag == expect::kAlignmentVerify) return verify_alignment(input).dump();
    throw ProviderError(req.request_id, "stub has no rule for '" + tag + "'");
}

}  // namespace tracekg
