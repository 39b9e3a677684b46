// Command-line entry point: pipeline stages over a run directory plus the
// evaluation harnesses.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tracekg/assembly.hpp"
#include "tracekg/eval_retention.hpp"
#include "tracekg/eval_schema.hpp"
#include "tracekg/graph_metrics.hpp"
#include "tracekg/pipeline.hpp"
#include "tracekg/text.hpp"

namespace fs = std::filesystem;
using namespace tracekg;

namespace {

struct Options {
    std::string config_path;
    std::string run_dir = "run";
    std::string provider;
};

Config load(const Options& o) { return o.config_path.empty() ? Config{} : load_config(o.config_path); }

Providers providers_for(const Options& o, const Config& c) {
    return make_providers(c, o.provider.empty() ? c.provider : o.provider);
}

Pipeline pipeline(const Options& o) {
    const Config c = load(o);
    return Pipeline(o.run_dir, c, providers_for(o, c));
}

std::string run_source_text(const fs::path& dir) {
    require_artifact(dir / assembly::file::kChunks, "ingest");
    std::vector<std::string> parts;
    for (const auto& c : assembly::read_jsonl<Chunk>(dir / assembly::file::kChunks)) parts.push_back(c.text);
    return text::join(parts, "\n");
}

int validate(const Options& o) {
    const fs::path dir = o.run_dir;
    const auto g = load_graph(dir);
    std::vector<Chunk> chunks;
    std::vector<Mention> mentions;
    ValidationContext ctx;
    if (fs::exists(dir / assembly::file::kChunks)) {
        chunks = assembly::read_jsonl<Chunk>(dir / assembly::file::kChunks);
        ctx.chunks = &chunks;
    }
    if (fs::exists(dir / assembly::file::kMentions)) {
        mentions = assembly::read_jsonl<Mention>(dir / assembly::file::kMentions);
        ctx.mentions = &mentions;
    }
    const auto report = validate_graph(g, ctx);
    std::cout << json(report).dump(2) << "\n";
    return report.ok() ? 0 : 1;
}

int replay_actions(const Options& o) {
    const Config c = load(o);
    auto p = providers_for(o, c);
    const auto diffs = assembly::replay_diff(o.run_dir, *p.embedder, c);
    for (const auto& d : diffs) std::cout << d << "\n";
    std::cout << (diffs.empty() ? "replay: no differences\n" : "replay: " + std::to_string(diffs.size()) + " differing line(s)\n");
    return diffs.empty() ? 0 : 1;
}

int eval_retention(const Options& o, const std::string& benchmark_path) {
    const Config c = load(o);
    const auto g = load_graph(o.run_dir);
    auto p = providers_for(o, c);
    const auto bench = retention::load_benchmark(benchmark_path);
    std::vector<metrics::RetentionReport> reports;
    json instances = json::array();
    for (const auto& b : bench) {
        const auto run = retention::run_retention(g, b.statements, b.article, *p.chat, *p.embedder, c);
        reports.push_back(run.report);
        instances.push_back(retention::to_json(run));
    }
    const json out = {{"macro", metrics::to_json(metrics::macro_average(reports))}, {"instances", instances}};
    assembly::write_text(fs::path(o.run_dir) / "retention.json", out.dump(2) + "\n");
    std::cout << out.at("macro").dump(2) << "\n";
    return 0;
}

int eval_schema(const Options& o, const std::string& ontology_path, const std::string& gold_path, const std::string& scope) {
    const Config c = load(o);
    const auto g = load_graph(o.run_dir);
    auto p = providers_for(o, c);
    const auto ontology = alignment::load_ontology(ontology_path);
    const auto gold = alignment::load_gold(gold_path);
    const auto run = alignment::evaluate_scope(g, ontology, gold, alignment::scope_from_string(scope), *p.chat, *p.embedder, c);
    const fs::path dir = o.run_dir;
    assembly::write_text(dir / ("alignment_" + scope + ".json"), alignment::to_json(run).dump(2) + "\n");
    assembly::write_records(dir / ("audit_" + scope + ".jsonl"), run.audit);
    std::cout << alignment::to_json(run.report).dump(2) << "\n";
    return 0;
}

int score(const Options& o, const std::string& triples_path, const std::string& source_path) {
    const std::string source = source_path.empty() ? run_source_text(o.run_dir) : assembly::read_text(source_path);
    metrics::RetentionReport rep;
    if (!triples_path.empty()) {
        std::vector<metrics::Triple> ts;
        const auto [topo, names] = metrics::topology_from_tsv(assembly::read_text(triples_path), &ts);
        rep.structural = metrics::structural(topo, names);
        rep.leak = metrics::leakage(names, source);
        rep.tricr = metrics::tricr(ts, source);
        const auto comp = metrics::composites(0.0, rep.structural, rep.leak);
        rep.sci = comp.sci;
    } else {
        rep = metrics::score_graph(load_graph(o.run_dir), source);
    }
    json out = metrics::to_json(rep);
    // Retrieval accuracy needs eval-retention; only structural fields apply.
    for (const char* k : {"ret_acc", "rwa", "egu", "avg_rank"}) out.erase(k);
    std::cout << out.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Context-enriched knowledge graph construction and evaluation"};
    app.require_subcommand(1);
    Options o;
    app.add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--run-dir", o.run_dir, "Run directory holding the artifacts");
    app.add_option("--provider", o.provider, "Provider kind (defaults to the config value)")
        ->check(CLI::IsMember({"live", "stub"}));

    std::vector<std::string> inputs;
    auto* ingest = app.add_subcommand("ingest", "Chunk documents into chunks.jsonl");
    ingest->add_option("inputs", inputs, "Document files or directories")->required();
    auto* extract = app.add_subcommand("extract", "Recognize entity mentions");
    auto* resolve_entities = app.add_subcommand("resolve-entities", "Resolve mentions into entities");
    auto* induce = app.add_subcommand("induce-entity-schema", "Induce and resolve entity classes");
    auto* extract_relations = app.add_subcommand("extract-relations", "Recognize qualified relation instances");
    auto* resolve_relations = app.add_subcommand("resolve-relations", "Canonicalize and merge relations");
    auto* assemble = app.add_subcommand("assemble", "Assemble and validate the graph");
    auto* run_all = app.add_subcommand("run-all", "Run every stage in order");
    run_all->add_option("inputs", inputs, "Document files or directories")->required();

    std::string benchmark;
    auto* retention = app.add_subcommand("eval-retention", "Retrieval-and-judge retention benchmark");
    retention->add_option("--benchmark", benchmark, "{article, statements} records")->required()->check(CLI::ExistingFile);

    std::string ontology, gold, scope = "combined";
    auto* schema = app.add_subcommand("eval-schema", "Align the induced schema with a reference ontology");
    schema->add_option("--ontology", ontology, "Ontology JSON")->required()->check(CLI::ExistingFile);
    schema->add_option("--gold", gold, "Gold triples (JSON array or JSONL)")->required()->check(CLI::ExistingFile);
    schema->add_option("--scope", scope, "Anchor scope")->check(CLI::IsMember({"source", "heldout", "combined"}));

    auto* validate_cmd = app.add_subcommand("validate", "Check graph invariants; exit 1 on any violation");
    auto* replay = app.add_subcommand("replay-actions", "Re-derive resolved artifacts from the action log and diff");

    std::string triples, source;
    auto* score_cmd = app.add_subcommand("score", "Structural and representational metrics");
    score_cmd->add_option("--triples", triples, "Flat subject/predicate/object TSV instead of a run directory")
        ->check(CLI::ExistingFile);
    score_cmd->add_option("--source", source, "Source text (defaults to the run's chunks)")->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        const auto as_paths = [&] { return std::vector<fs::path>(inputs.begin(), inputs.end()); };
        if (*ingest) pipeline(o).ingest(as_paths());
        else if (*extract) pipeline(o).extract();
        else if (*resolve_entities) pipeline(o).resolve_entities();
        else if (*induce) pipeline(o).induce_entity_schema();
        else if (*extract_relations) pipeline(o).extract_relations();
        else if (*resolve_relations) pipeline(o).resolve_relations();
        else if (*assemble) {
            const auto g = pipeline(o).assemble();
            std::cout << "assembled " << g.entities.size() << " entities, " << g.relations.size() << " relations\n";
        } else if (*run_all) {
            const auto g = pipeline(o).run_all(as_paths());
            std::cout << "assembled " << g.entities.size() << " entities, " << g.relations.size() << " relations\n";
        } else if (*retention) return eval_retention(o, benchmark);
        else if (*schema) return eval_schema(o, ontology, gold, scope);
        else if (*validate_cmd) return validate(o);
        else if (*replay) return replay_actions(o);
        else if (*score_cmd) return score(o, triples, source);
    } catch (const assembly::AssemblyError& e) {
        std::cerr << "error: " << e.what() << "\n" << json(e.report()).dump(2) << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
