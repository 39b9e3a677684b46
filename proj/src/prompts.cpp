// Stage prompt templates. These are functional stand-ins and may be swapped
// for tuned templates without touching the stage code, as long as the reply
// grammar (the "Return" paragraph) is preserved.

#include <map>

#include "tracekg/providers.hpp"

namespace tracekg {

namespace {

constexpr std::string_view kInputMarker = "### INPUT\n";

const std::map<std::string, std::string>& templates() {
    static const std::map<std::string, std::string> t = {
        {expect::kEntityRecognition, R"(You extract entity mentions from a FOCUS chunk of a technical document.
Context chunks precede the focus chunk and may only be used to disambiguate; never extract from them.
For every entity mention in the focus chunk give: name (verbatim surface form), span ([begin, end) character
offsets into the focus text), description (one sentence), type_hint (broad type), confidence in [0,1],
evidence (verbatim excerpts of the focus text), and intrinsic properties that are explicitly stated
(key, value, value_kind one of number|string|quantity|identifier|date|other, unit, evidence).
Return ONLY a JSON array of mention objects.)"},
        {expect::kEntityResolution, R"(You resolve co-referent entities. The items below are candidate entities that a clustering step
placed in the same neighborhood; the grouping is only a suggestion.
Allowed actions (JSON objects with an "action" key):
  {"action":"MergeEntities","entity_ids":[...],"canonical_name":...,"canonical_description":...,"canonical_type":...,"rationale":"..."}
  {"action":"ModifyEntity","entity_id":...,"new_name":... or null,"new_description":... or null,"new_type_hint":... or null,"rationale":"..."}
  {"action":"KeepEntity","entity_id":...,"rationale":"..."}
Only use ids listed in the input. Every action needs a one-line rationale.
Return ONLY a JSON array of action objects (possibly empty).)"},
        {expect::kClassRecognition, R"(You propose entity classes for a neighborhood of resolved entities.
A neighborhood may need several classes. For each class give label, description and member_ids
(ids from the input only). Entities that fit no class may be left out.
Return ONLY a JSON array of {"label","description","member_ids"} objects.)"},
        {expect::kClassResolution, R"(You consolidate candidate entity classes into a class / class-group hierarchy.
Allowed actions:
  {"action":"merge_classes","class_ids":[...],"new_label":...,"new_description":...,"provisional_id":...,"rationale":"..."}
  {"action":"split_class","class_id":...,"parts":[{"label":...,"description":...,"member_ids":[...],"provisional_id":...}],"rationale":"..."}
  {"action":"create_class","provisional_id":...,"label":...,"description":...,"member_ids":[...],"class_group":...,"rationale":"..."}
  {"action":"reassign_entities","entity_ids":[...],"from_class_id":... or null,"to_class_id":...,"rationale":"..."}
  {"action":"modify_class","class_id":...,"new_label":...,"new_description":...,"new_class_group":...,"rationale":"..."}
Provisional ids introduced by earlier actions in this array may be referenced by later ones.
Return ONLY a JSON array of action objects (possibly empty).)"},
        {expect::kRelationRecognition, R"(You extract directed relations between the listed entities from the chunk text.
Only relate entities from the list, and only when the chunk states the relation explicitly.
For each relation give subject_id, object_id, label (verbatim predicate), description, hint_type (one of
IDENTITY COMPOSITION CAUSALITY TEMPORALITY SPATIALITY ROLE PURPOSE DEPENDENCY COUPLING TRANSFORMATION
COMPARISON INFORMATION ASSOCIATION), confidence, evidence (verbatim excerpts), and qualifiers: an object
with keys TemporalQualifier SpatialQualifier OperationalConstraint ConditionExpression UncertaintyQualifier
CausalHint LogicalMarker OtherQualifier (null when absent).
Return ONLY a JSON array of relation objects.)"},
        {expect::kRelationResolution, R"(You canonicalize relation instances and induce a relation schema.
Allowed actions:
  {"action":"set_canonical_rel","relation_id":...,"canonical_label":...,"canonical_description":...,"rationale":"..."}
  {"action":"set_rel_cls","relation_id":...,"rel_cls":...,"rationale":"..."}
  {"action":"set_rel_cls_group","relation_id":...,"rel_cls_group":...,"rationale":"..."}
  {"action":"modify_rel_schema","relation_id":...,"canonical_label":...,"rel_cls":...,"rel_cls_group":...,"rationale":"..."}
  {"action":"add_rel_remark","relation_id":...,"remark":...,"rationale":"..."}
  {"action":"merge_relations","relation_ids":[keep_id, drop_id],"normalize_direction":true|false,"rationale":"..."}
Merge only duplicates that connect the same entity pair with equivalent meaning; instances are never deleted otherwise.
Return ONLY a JSON array of action objects (possibly empty).)"},
        {expect::kRetentionJudge, R"(Decide whether the statement is supported using ONLY the triples below.
Do not use outside knowledge and do not infer edges that are not listed.
Return ONLY {"supported": true} or {"supported": false}.)"},
        {expect::kAlignmentVerify, R"(Compare a reference ontology element (anchor) with a candidate element of an induced schema.
Answer how the candidate relates to the anchor: Equivalent, Narrower (candidate is a specialization),
Broader (candidate is a generalization) or Unrelated, with a confidence in [0,1].
Return ONLY {"label": ..., "confidence": ...}.)"},
    };
    return t;
}

}  // namespace

std::string render_prompt(const std::string& expect_tag, const json& input) {
    auto it = templates().find(expect_tag);
    if (it == templates().end()) throw Error("no prompt template for '" + expect_tag + "'");
    return it->second + "\n\n" + std::string(kInputMarker) + input.dump(2) + "\n";
}

json prompt_input(const std::string& prompt) {
    const auto pos = prompt.find(kInputMarker);
    if (pos == std::string::npos) throw Error("prompt has no input block");
    return json::parse(prompt.substr(pos + kInputMarker.size()));
}

json parse_reply_json(const std::string& reply) {
    const auto first = reply.find_first_of("[{");
    if (first == std::string::npos) throw Error("reply contains no JSON");
    const char open = reply[first];
    const auto last = reply.find_last_of(open == '[' ? ']' : '}');
    if (last == std::string::npos || last < first) throw Error("reply JSON is unterminated");
    return json::parse(reply.substr(first, last - first + 1));
}

}  // namespace tracekg
