// skg: supply-chain knowledge-graph pipeline CLI.
//
// Subcommands mirror the pipeline stages (ingest, extract, disambiguate,
// build, query, export, eval, consistency) plus `pipeline`, which chains
// ingest -> extract -> disambiguate -> build -> export in one invocation.
//
// Exit codes: 0 success, 1 usage error, 2 configuration error, 3 pipeline
// error. Diagnostics go to standard error as one structured line per event.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>

#include "skg/disambiguate.hpp"
#include "skg/eval.hpp"
#include "skg/exporters.hpp"
#include "skg/extract.hpp"
#include "skg/graph.hpp"
#include "skg/ingest.hpp"
#include "skg/llm.hpp"
#include "skg/pipeline.hpp"
#include "skg/prompt.hpp"
#include "skg/schema.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitPipeline = 3;

bool is_config_error(skg::Errc c) {
  switch (c) {
    case skg::Errc::MalformedConfig:
    case skg::Errc::DuplicateTypeName:
    case skg::Errc::InsufficientExamples:
    case skg::Errc::UnknownEndpointType:
    case skg::Errc::BadRunConfig:
      return true;
    default:
      return false;
  }
}

void report(const skg::Error& e) {
  std::cerr << "event=error code=" << skg::errc_name(e.code()) << " message=\"" << e.what()
            << "\"\n";
}

struct CommonArgs {
  std::string config_path;
  std::string schema_path;
  std::string corpus_path;
  std::string backend;
  std::string fixtures;
  std::string output_dir;
  std::string run_id;
  std::string model;
  double temperature = -1.0;
  long chunk_budget = -1;
  long parallelism = -1;
  bool fail_fast = false;

  void add_to(CLI::App* cmd, bool with_corpus = true) {
    cmd->add_option("--config", config_path, "run config JSON file");
    cmd->add_option("--schema", schema_path, "schema config JSON file");
    if (with_corpus) cmd->add_option("--corpus", corpus_path, "corpus manifest .jsonl or directory");
    cmd->add_option("--backend", backend, "llm backend: replay|live");
    cmd->add_option("--fixtures", fixtures, "fixture store .jsonl (replay/record)");
    cmd->add_option("--output-dir", output_dir, "artifact output directory");
    cmd->add_option("--run-id", run_id, "run identifier (default: config content hash)");
    cmd->add_option("--model", model, "model identifier");
    cmd->add_option("--temperature", temperature, "sampling temperature");
    cmd->add_option("--chunk-budget", chunk_budget, "chunk token budget");
    cmd->add_option("--parallelism", parallelism, "concurrent chunk extractions");
    cmd->add_flag("--fail-fast", fail_fast, "abort on the first chunk failure");
  }

  skg::RunConfig resolve() const {
    skg::RunConfig cfg;
    if (!config_path.empty()) cfg = skg::load_run_config(config_path);
    if (!schema_path.empty()) cfg.schema_path = schema_path;
    if (!corpus_path.empty()) cfg.corpus_path = corpus_path;
    if (!backend.empty()) {
      if (backend == "live") cfg.backend = skg::BackendKind::Live;
      else if (backend == "replay") cfg.backend = skg::BackendKind::Replay;
      else skg::fail(skg::Errc::BadRunConfig, "backend must be live or replay");
    }
    if (!fixtures.empty()) cfg.fixture_path = fixtures;
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    if (!run_id.empty()) cfg.run_id = run_id;
    if (!model.empty()) cfg.model = model;
    if (temperature >= 0.0) cfg.temperature = temperature;
    if (chunk_budget > 0) cfg.chunk_budget = static_cast<size_t>(chunk_budget);
    if (parallelism > 0) cfg.parallelism = static_cast<size_t>(parallelism);
    if (fail_fast) cfg.fail_fast = true;
    return cfg;
  }
};

skg::SchemaConfig schema_for(const skg::RunConfig& cfg) {
  return cfg.schema_path.empty() ? skg::default_schema() : skg::load_schema_file(cfg.schema_path);
}

fs::path ensure_run_dir(const skg::RunConfig& cfg, const std::string& run_id) {
  fs::path dir = fs::path(cfg.output_dir) / run_id;
  fs::create_directories(dir);
  return dir;
}

int cmd_ingest(const CommonArgs& args) {
  skg::RunConfig cfg = args.resolve();
  if (cfg.corpus_path.empty()) skg::fail(skg::Errc::BadRunConfig, "--corpus is required");
  auto docs = skg::load_corpus(skg::corpus_manifest(cfg), cfg.parallelism);
  std::string run_id = cfg.run_id.empty() ? skg::run_config_hash(cfg) : cfg.run_id;
  fs::path dir = ensure_run_dir(cfg, run_id);
  skg::write_file((dir / "ingest.jsonl").string(), skg::documents_to_jsonl(docs));
  std::cout << "ingested " << docs.size() << " documents -> " << (dir / "ingest.jsonl").string()
            << "\n";
  return kExitOk;
}

int cmd_extract(const CommonArgs& args) {
  skg::RunConfig cfg = args.resolve();
  skg::SchemaConfig schema = schema_for(cfg);
  auto docs = skg::load_corpus(skg::corpus_manifest(cfg), cfg.parallelism);
  auto backend = skg::make_backend(cfg);
  std::string run_id = cfg.run_id.empty() ? skg::run_config_hash(cfg) : cfg.run_id;
  skg::ExtractOptions opts{cfg.model, cfg.temperature, cfg.max_output_tokens};
  auto [results, counts] = skg::extract_corpus(docs, schema, *backend, cfg.parallelism, run_id,
                                               cfg.chunk_budget, cfg.fail_fast, opts);
  fs::path dir = ensure_run_dir(cfg, run_id);
  skg::write_file((dir / "extract.jsonl").string(), skg::results_to_jsonl(results));
  nlohmann::ordered_json cj;
  cj["total_nodes"] = counts.total_nodes;
  cj["total_relations"] = counts.total_relations;
  cj["nodes_per_type"] = nlohmann::ordered_json(counts.nodes_per_type);
  cj["relations_per_type"] = nlohmann::ordered_json(counts.relations_per_type);
  skg::write_file((dir / "counts.json").string(), cj.dump(2) + "\n");
  std::cout << "extracted " << counts.total_nodes << " nodes, " << counts.total_relations
            << " relations -> " << (dir / "extract.jsonl").string() << "\n";
  return kExitOk;
}

int cmd_disambiguate(const CommonArgs& args, const std::string& results_path) {
  skg::RunConfig cfg = args.resolve();
  skg::SchemaConfig schema = schema_for(cfg);
  auto results = skg::results_from_jsonl(skg::read_file(results_path));
  auto backend = skg::make_backend(cfg);
  skg::DisambiguateOptions dopts;
  dopts.model = cfg.model;
  dopts.temperature = cfg.temperature;
  dopts.max_output_tokens = cfg.max_output_tokens;
  auto out = skg::disambiguate_graph(results, schema, *backend, dopts);
  std::string run_id = cfg.run_id.empty() ? skg::run_config_hash(cfg) : cfg.run_id;
  fs::path dir = ensure_run_dir(cfg, run_id);
  skg::write_file((dir / "graph.jsonl").string(),
                  skg::export_string(out.graph, skg::ExportFormat::JsonLines));
  skg::write_file((dir / "alias_map.csv").string(), skg::alias_map_csv(out.graph));
  std::cout << "graph: " << out.graph.nodes.size() << " nodes, " << out.graph.edges.size()
            << " edges -> " << (dir / "graph.jsonl").string() << "\n";
  return kExitOk;
}

int cmd_build(const CommonArgs& args, const std::string& graph_path, const std::string& out_path) {
  skg::RunConfig cfg = args.resolve();
  skg::SchemaConfig schema = schema_for(cfg);
  skg::KnowledgeGraph g = skg::load_graph_file(graph_path, schema);
  std::string target = out_path.empty() ? graph_path : out_path;
  skg::write_file(target, skg::export_string(g, skg::ExportFormat::JsonLines));
  std::cout << "validated graph: " << g.nodes.size() << " nodes, " << g.edges.size()
            << " edges -> " << target << "\n";
  return kExitOk;
}

int cmd_export(const CommonArgs& args, const std::string& graph_path, const std::string& format,
               const std::string& out_path) {
  skg::RunConfig cfg = args.resolve();
  skg::SchemaConfig schema = schema_for(cfg);
  skg::KnowledgeGraph g = skg::load_graph_file(graph_path, schema);
  skg::ExportFormat fmt = skg::export_format_from(format);
  std::string body = skg::export_string(g, fmt);
  if (out_path.empty() || out_path == "-") {
    std::cout << body;
  } else {
    skg::write_file(out_path, body);
    std::cout << "exported " << g.nodes.size() << " nodes, " << g.edges.size() << " edges -> "
              << out_path << "\n";
  }
  return kExitOk;
}

int cmd_query(const CommonArgs& args, const std::string& graph_path, const std::string& kind,
              const std::string& company, const std::string& a, const std::string& b,
              const std::string& material, long depth) {
  skg::RunConfig cfg = args.resolve();
  skg::SchemaConfig schema = schema_for(cfg);
  skg::KnowledgeGraph g = skg::load_graph_file(graph_path, schema);

  if (kind == "upstream") {
    if (company.empty()) skg::fail(skg::Errc::BadRunConfig, "--company is required for upstream");
    if (depth < 1) skg::fail(skg::Errc::BadRunConfig, "--depth must be >= 1");
    std::string id = skg::resolve_name(g, "Company", company);
    auto result = skg::upstream_suppliers(g, id, static_cast<size_t>(depth));
    for (const auto& [tier, ids] : result.tiers) {
      std::cout << "tier " << tier << ":";
      for (const auto& nid : ids) std::cout << " " << g.at(nid).display_name;
      std::cout << "\n";
    }
    for (const auto& [nid, tier] : result.enrichment) {
      const auto& n = g.at(nid);
      std::cout << "enrichment (tier " << tier << "): " << n.label << " " << n.display_name
                << "\n";
    }
    std::cout << "edges: " << result.edges.size() << "\n";
  } else if (kind == "shared") {
    if (a.empty() || b.empty())
      skg::fail(skg::Errc::BadRunConfig, "--a and --b are required for shared");
    std::string ia = skg::resolve_name(g, "Company", a);
    std::string ib = skg::resolve_name(g, "Company", b);
    auto result = skg::shared_suppliers(g, ia, ib);
    std::cout << "shared suppliers of " << g.at(ia).display_name << " and "
              << g.at(ib).display_name << ":";
    for (const auto& sid : result.suppliers) std::cout << " " << g.at(sid).display_name;
    std::cout << "\n";
    for (const auto& e : result.edges) {
      std::cout << "  " << g.at(e.source).display_name << " " << e.rel_type << " "
                << g.at(e.target).display_name << "\n";
    }
  } else if (kind == "material") {
    if (material.empty()) skg::fail(skg::Errc::BadRunConfig, "--material is required for material");
    std::string id = skg::resolve_name(g, "Material", material);
    auto result = skg::material_network(g, id);
    std::cout << "material network of " << g.at(id).display_name << ": " << result.node_ids.size()
              << " nodes\n";
    for (const auto& e : result.edges) {
      std::cout << "  " << g.at(e.source).display_name << " " << e.rel_type << " "
                << g.at(e.target).display_name << "\n";
    }
  } else {
    skg::fail(skg::Errc::BadRunConfig, "unknown query kind '" + kind + "' (upstream|shared|material)");
  }
  return kExitOk;
}

int cmd_eval(const CommonArgs& args, const std::string& judgments_path) {
  skg::RunConfig cfg = args.resolve();
  skg::SchemaConfig schema = schema_for(cfg);
  auto judgments = skg::parse_judgments(skg::read_file(judgments_path), &schema);
  auto report = skg::build_accuracy_report(judgments);
  std::string md = skg::render_accuracy_markdown(report);
  std::cout << md;
  if (!cfg.output_dir.empty()) {
    std::string run_id = cfg.run_id.empty() ? "eval" : cfg.run_id;
    fs::path dir = ensure_run_dir(cfg, run_id);
    skg::write_file((dir / "accuracy.md").string(), md);
    skg::write_file((dir / "accuracy.json").string(),
                    skg::accuracy_report_json(report).dump(2) + "\n");
  }
  return kExitOk;
}

int cmd_consistency(const CommonArgs& args, const std::string& fixtures_dir, long runs) {
  skg::RunConfig cfg = args.resolve();
  skg::SchemaConfig schema = schema_for(cfg);
  auto docs = skg::load_corpus(skg::corpus_manifest(cfg), cfg.parallelism);
  size_t n_runs = runs < 2 ? 7 : static_cast<size_t>(runs);

  auto backend_for_run = [&](size_t i) -> std::shared_ptr<skg::LlmBackend> {
    if (cfg.backend == skg::BackendKind::Live) {
      skg::LiveConfig live;
      live.base_url = cfg.base_url;
      return std::make_shared<skg::LiveBackend>(live);
    }
    fs::path store = fs::path(fixtures_dir) / ("run" + std::to_string(i + 1) + ".jsonl");
    if (!fs::exists(store))
      skg::fail(skg::Errc::BadRunConfig,
                "missing fixture namespace for run " + std::to_string(i + 1) + ": " +
                    store.string());
    return std::make_shared<skg::ReplayBackend>(skg::FixtureStore::load(store.string()));
  };
  if (cfg.backend == skg::BackendKind::Replay && fixtures_dir.empty())
    skg::fail(skg::Errc::BadRunConfig, "--fixtures-dir is required in replay mode");

  skg::ExtractOptions opts{cfg.model, cfg.temperature, cfg.max_output_tokens};
  auto report = skg::consistency_run(docs, schema, backend_for_run, n_runs, cfg.chunk_budget,
                                     cfg.parallelism, opts);
  std::string md = skg::render_consistency_markdown(report);
  std::cout << md;
  if (!cfg.output_dir.empty()) {
    std::string run_id = cfg.run_id.empty() ? "consistency" : cfg.run_id;
    fs::path dir = ensure_run_dir(cfg, run_id);
    skg::write_file((dir / "consistency.md").string(), md);
    skg::write_file((dir / "consistency.json").string(),
                    skg::consistency_report_json(report).dump(2) + "\n");
  }
  return kExitOk;
}

int cmd_pipeline(const CommonArgs& args) {
  skg::RunConfig cfg = args.resolve();
  auto out = skg::run_pipeline(cfg);
  std::cout << "run " << out.run_id << ": " << out.counts.total_nodes << " extracted nodes, "
            << out.counts.total_relations << " extracted relations, graph " << out.graph_nodes
            << " nodes / " << out.graph_edges << " edges\n";
  std::cout << "artifacts: " << out.paths.run_dir.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"supply-chain knowledge-graph pipeline"};
  app.require_subcommand(1);

  CommonArgs ingest_args, extract_args, dis_args, build_args, export_args, query_args, eval_args,
      cons_args, pipe_args;

  auto* ingest = app.add_subcommand("ingest", "fetch and clean the corpus");
  ingest_args.add_to(ingest);

  auto* extract = app.add_subcommand("extract", "run entity/relation extraction over the corpus");
  extract_args.add_to(extract);

  auto* dis = app.add_subcommand("disambiguate", "merge extraction results into a graph");
  dis_args.add_to(dis);
  std::string dis_results;
  dis->add_option("--results", dis_results, "extraction results .jsonl")->required();

  auto* build = app.add_subcommand("build", "validate a graph file");
  build_args.add_to(build, false);
  std::string build_graph_path, build_out;
  build->add_option("--graph", build_graph_path, "graph .jsonl")->required();
  build->add_option("--out", build_out, "write the validated graph here");

  auto* exp = app.add_subcommand("export", "export a graph to cypher|graphml|dot|jsonl");
  export_args.add_to(exp, false);
  std::string export_graph_path, export_format, export_out;
  exp->add_option("--graph", export_graph_path, "graph .jsonl")->required();
  exp->add_option("--format", export_format, "cypher|graphml|dot|jsonl")->required();
  exp->add_option("--out", export_out, "output file (default: stdout)");

  auto* query = app.add_subcommand("query", "run a visibility query against a graph");
  query_args.add_to(query, false);
  std::string q_graph, q_kind, q_company, q_a, q_b, q_material;
  long q_depth = 3;
  query->add_option("--graph", q_graph, "graph .jsonl")->required();
  query->add_option("--kind", q_kind, "upstream|shared|material")->required();
  query->add_option("--company", q_company, "focal company (upstream)");
  query->add_option("--a", q_a, "first company (shared)");
  query->add_option("--b", q_b, "second company (shared)");
  query->add_option("--material", q_material, "material name (material)");
  query->add_option("--depth", q_depth, "maximum upstream tier (default 3)");

  auto* ev = app.add_subcommand("eval", "score a human judgment file");
  eval_args.add_to(ev, false);
  std::string judgments_path;
  ev->add_option("--judgments", judgments_path, "judgment CSV")->required();

  auto* cons = app.add_subcommand("consistency", "run the N-run consistency experiment");
  cons_args.add_to(cons);
  std::string cons_fixtures_dir;
  long cons_runs = 7;
  cons->add_option("--fixtures-dir", cons_fixtures_dir, "directory with run<N>.jsonl stores");
  cons->add_option("--runs", cons_runs, "number of runs (default 7)");

  auto* pipe = app.add_subcommand("pipeline", "ingest, extract, disambiguate, build, export");
  pipe_args.add_to(pipe);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exits 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*ingest) return cmd_ingest(ingest_args);
    if (*extract) return cmd_extract(extract_args);
    if (*dis) return cmd_disambiguate(dis_args, dis_results);
    if (*build) return cmd_build(build_args, build_graph_path, build_out);
    if (*exp) return cmd_export(export_args, export_graph_path, export_format, export_out);
    if (*query)
      return cmd_query(query_args, q_graph, q_kind, q_company, q_a, q_b, q_material, q_depth);
    if (*ev) return cmd_eval(eval_args, judgments_path);
    if (*cons) return cmd_consistency(cons_args, cons_fixtures_dir, cons_runs);
    if (*pipe) return cmd_pipeline(pipe_args);
  } catch (const skg::Error& e) {
    report(e);
    return is_config_error(e.code()) ? kExitConfig : kExitPipeline;
  } catch (const std::exception& e) {
    std::cerr << "event=error code=Internal message=\"" << e.what() << "\"\n";
    return kExitPipeline;
  }
  return kExitUsage;
}
