#pragma once

// Run configuration and stage orchestration shared by the CLI and tests.
// Artifact bodies are deterministic in replay mode; anything time-dependent
// (fetch timestamps, wall clock) goes to the sidecar manifest instead.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skg/disambiguate.hpp"
#include "skg/error.hpp"
#include "skg/eval.hpp"
#include "skg/exporters.hpp"
#include "skg/extract.hpp"
#include "skg/graph.hpp"
#include "skg/ingest.hpp"
#include "skg/llm.hpp"
#include "skg/schema.hpp"

namespace skg {

enum class BackendKind { Live, Replay };

struct RunConfig {
  std::string schema_path;
  std::string corpus_path;  // manifest .jsonl or a directory of .txt/.html
  BackendKind backend = BackendKind::Replay;
  std::string fixture_path;  // replay store (file) or record sink
  std::string base_url = "https://api.openai.com";
  std::string model = "gpt-4";
  double temperature = 0.0;
  size_t max_output_tokens = 2048;
  size_t chunk_budget = 1500;
  size_t parallelism = 4;
  std::string output_dir = "out";
  std::string run_id;  // defaults to a content hash of the config
  bool fail_fast = false;
};

inline void validate_run_config(const RunConfig& cfg) {
  if (cfg.backend == BackendKind::Replay && cfg.fixture_path.empty())
    fail(Errc::BadRunConfig, "replay backend requires a fixture path");
  if (cfg.backend == BackendKind::Live) {
    const char* key = std::getenv(kApiKeyEnvVar);
    if (!key || !*key)
      fail(Errc::BadRunConfig, std::string("live backend requires env var ") + kApiKeyEnvVar);
  }
  if (cfg.parallelism < 1) fail(Errc::BadRunConfig, "parallelism must be >= 1");
}

// Content hash over everything that shapes the artifacts: schema text,
// corpus manifest text, fixture store text, and the sampling parameters.
// Machine-independent, so two checkouts produce the same run id.
inline std::string run_config_hash(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["schema"] = cfg.schema_path.empty() ? "" : sha256_hex(read_file(cfg.schema_path));
  if (!cfg.corpus_path.empty() && std::filesystem::is_regular_file(cfg.corpus_path)) {
    j["corpus"] = sha256_hex(read_file(cfg.corpus_path));
  } else {
    j["corpus"] = cfg.corpus_path;
  }
  j["backend"] = cfg.backend == BackendKind::Replay ? "replay" : "live";
  j["fixtures"] = (!cfg.fixture_path.empty() && std::filesystem::is_regular_file(cfg.fixture_path))
                      ? sha256_hex(read_file(cfg.fixture_path))
                      : "";
  j["model"] = cfg.model;
  j["temperature"] = format_fixed(cfg.temperature, 3);
  j["max_output_tokens"] = cfg.max_output_tokens;
  j["chunk_budget"] = cfg.chunk_budget;
  return sha256_hex(j.dump()).substr(0, 12);
}

inline RunConfig run_config_from_json(const nlohmann::json& j, const std::string& base_dir) {
  RunConfig cfg;
  auto resolve = [&](const std::string& p) -> std::string {
    if (p.empty() || std::filesystem::path(p).is_absolute()) return p;
    return (std::filesystem::path(base_dir) / p).string();
  };
  cfg.schema_path = resolve(j.value("schema_path", std::string{}));
  cfg.corpus_path = resolve(j.value("corpus_path", std::string{}));
  std::string backend = j.value("backend", std::string{"replay"});
  if (backend == "live") cfg.backend = BackendKind::Live;
  else if (backend == "replay") cfg.backend = BackendKind::Replay;
  else fail(Errc::BadRunConfig, "backend must be live or replay, got '" + backend + "'");
  cfg.fixture_path = resolve(j.value("fixture_path", std::string{}));
  cfg.base_url = j.value("base_url", cfg.base_url);
  cfg.model = j.value("model", cfg.model);
  cfg.temperature = j.value("temperature", cfg.temperature);
  cfg.max_output_tokens = j.value("max_output_tokens", cfg.max_output_tokens);
  cfg.chunk_budget = j.value("chunk_budget", cfg.chunk_budget);
  cfg.parallelism = j.value("parallelism", cfg.parallelism);
  cfg.output_dir = j.value("output_dir", cfg.output_dir);
  cfg.run_id = j.value("run_id", cfg.run_id);
  cfg.fail_fast = j.value("fail_fast", cfg.fail_fast);
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) fail(Errc::BadRunConfig, "run config is not valid JSON: " + path);
  return run_config_from_json(j, std::filesystem::path(path).parent_path().string());
}

inline std::shared_ptr<LlmBackend> make_backend(const RunConfig& cfg) {
  validate_run_config(cfg);
  if (cfg.backend == BackendKind::Replay) {
    return std::make_shared<ReplayBackend>(FixtureStore::load(cfg.fixture_path));
  }
  LiveConfig live;
  live.base_url = cfg.base_url;
  return std::make_shared<LiveBackend>(live);
}

inline std::vector<ManifestEntry> corpus_manifest(const RunConfig& cfg) {
  if (cfg.corpus_path.empty()) fail(Errc::BadRunConfig, "corpus path is not set");
  if (std::filesystem::is_directory(cfg.corpus_path)) return implicit_manifest(cfg.corpus_path);
  return load_manifest(cfg.corpus_path);
}

inline std::string iso8601_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&t));
  return buf;
}

struct PipelinePaths {
  std::filesystem::path run_dir;
  std::filesystem::path ingest_jsonl;
  std::filesystem::path extract_jsonl;
  std::filesystem::path counts_json;
  std::filesystem::path alias_csv;
  std::filesystem::path graph_jsonl;
  std::filesystem::path graph_cypher;
  std::filesystem::path graph_graphml;
  std::filesystem::path graph_dot;
  std::filesystem::path manifest_json;
};

inline PipelinePaths pipeline_paths(const RunConfig& cfg, const std::string& run_id) {
  PipelinePaths p;
  p.run_dir = std::filesystem::path(cfg.output_dir) / run_id;
  p.ingest_jsonl = p.run_dir / "ingest.jsonl";
  p.extract_jsonl = p.run_dir / "extract.jsonl";
  p.counts_json = p.run_dir / "counts.json";
  p.alias_csv = p.run_dir / "alias_map.csv";
  p.graph_jsonl = p.run_dir / "graph.jsonl";
  p.graph_cypher = p.run_dir / "graph.cypher";
  p.graph_graphml = p.run_dir / "graph.graphml";
  p.graph_dot = p.run_dir / "graph.dot";
  p.manifest_json = p.run_dir / "manifest.json";
  return p;
}

inline std::string documents_to_jsonl(const std::vector<Document>& docs) {
  std::string out;
  for (const auto& d : docs) {
    nlohmann::ordered_json j;
    j["id"] = d.id;
    j["source_uri"] = d.source_uri;
    j["title"] = d.title;
    j["body"] = d.body;
    out += j.dump();
    out += "\n";
  }
  return out;
}

inline std::vector<Document> documents_from_jsonl(const std::string& text) {
  std::vector<Document> docs;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    Document d;
    d.id = j.at("id").get<std::string>();
    d.source_uri = j.value("source_uri", std::string{});
    d.title = j.value("title", std::string{});
    d.body = j.at("body").get<std::string>();
    docs.push_back(std::move(d));
  }
  return docs;
}

struct PipelineOutput {
  std::string run_id;
  PipelinePaths paths;
  CorpusCounts counts;
  size_t graph_nodes = 0;
  size_t graph_edges = 0;
};

// ingest -> extract -> disambiguate -> build -> export, end to end.
inline PipelineOutput run_pipeline(const RunConfig& cfg) {
  validate_run_config(cfg);
  SchemaConfig schema =
      cfg.schema_path.empty() ? default_schema() : load_schema_file(cfg.schema_path);
  std::string run_id = cfg.run_id.empty() ? run_config_hash(cfg) : cfg.run_id;
  PipelinePaths paths = pipeline_paths(cfg, run_id);
  std::filesystem::create_directories(paths.run_dir);

  std::string started_at = iso8601_now();

  auto docs = load_corpus(corpus_manifest(cfg), cfg.parallelism);
  write_file(paths.ingest_jsonl.string(), documents_to_jsonl(docs));

  auto backend = make_backend(cfg);
  ExtractOptions opts{cfg.model, cfg.temperature, cfg.max_output_tokens};
  auto [results, counts] = extract_corpus(docs, schema, *backend, cfg.parallelism, run_id,
                                          cfg.chunk_budget, cfg.fail_fast, opts);
  write_file(paths.extract_jsonl.string(), results_to_jsonl(results));

  nlohmann::ordered_json counts_json;
  counts_json["total_nodes"] = counts.total_nodes;
  counts_json["total_relations"] = counts.total_relations;
  counts_json["nodes_per_type"] = nlohmann::ordered_json(counts.nodes_per_type);
  counts_json["relations_per_type"] = nlohmann::ordered_json(counts.relations_per_type);
  write_file(paths.counts_json.string(), counts_json.dump(2) + "\n");

  DisambiguateOptions dopts;
  dopts.model = cfg.model;
  dopts.temperature = cfg.temperature;
  dopts.max_output_tokens = cfg.max_output_tokens;
  DisambiguateOutput dis = disambiguate_graph(results, schema, *backend, dopts);
  write_file(paths.alias_csv.string(), alias_map_csv(dis.graph));

  write_file(paths.graph_jsonl.string(), export_string(dis.graph, ExportFormat::JsonLines));
  write_file(paths.graph_cypher.string(), export_string(dis.graph, ExportFormat::Cypher));
  write_file(paths.graph_graphml.string(), export_string(dis.graph, ExportFormat::GraphML));
  write_file(paths.graph_dot.string(), export_string(dis.graph, ExportFormat::Dot));

  // timestamps live here, never in the artifact bodies
  nlohmann::ordered_json manifest;
  manifest["run_id"] = run_id;
  manifest["started_at"] = started_at;
  manifest["finished_at"] = iso8601_now();
  manifest["backend"] = cfg.backend == BackendKind::Replay ? "replay" : "live";
  manifest["model"] = cfg.model;
  manifest["temperature"] = cfg.temperature;
  manifest["chunk_budget"] = cfg.chunk_budget;
  manifest["documents"] = docs.size();
  manifest["schema_ref"] = schema_digest(schema);
  manifest["extraction_template"] = kExtractionTemplateVersion;
  manifest["disambiguation_template"] = kDisambiguationTemplateVersion;
  write_file(paths.manifest_json.string(), manifest.dump(2) + "\n");

  PipelineOutput out;
  out.run_id = run_id;
  out.paths = paths;
  out.counts = counts;
  out.graph_nodes = dis.graph.nodes.size();
  out.graph_edges = dis.graph.edges.size();
  return out;
}

// Name resolution for query subcommands: exact alias match first, then a
// unique case-insensitive alias match; anything else is an error listing
// the candidates.
inline std::string resolve_name(const KnowledgeGraph& g, const std::string& label,
                                const std::string& name_text) {
  std::vector<std::string> exact, ci;
  std::string wanted = to_lower(name_text);
  for (const auto& [id, node] : g.nodes) {
    if (node.label != label) continue;
    for (const auto& alias : node.aliases) {
      if (alias == name_text) {
        exact.push_back(id);
        break;
      }
    }
    for (const auto& alias : node.aliases) {
      if (to_lower(alias) == wanted) {
        ci.push_back(id);
        break;
      }
    }
  }
  if (exact.size() == 1) return exact[0];
  if (exact.size() > 1) {
    std::string msg = "'" + name_text + "' matches multiple " + label + " nodes:";
    for (const auto& id : exact) msg += " " + id + " (" + g.at(id).display_name + ")";
    fail(Errc::Ambiguous, msg);
  }
  if (ci.size() == 1) return ci[0];
  if (ci.size() > 1) {
    std::string msg = "'" + name_text + "' matches multiple " + label + " nodes:";
    for (const auto& id : ci) msg += " " + id + " (" + g.at(id).display_name + ")";
    fail(Errc::Ambiguous, msg);
  }
  // near matches: case-insensitive substring over aliases
  std::string msg = "no " + label + " node named '" + name_text + "'";
  size_t shown = 0;
  for (const auto& [id, node] : g.nodes) {
    if (node.label != label) continue;
    for (const auto& alias : node.aliases) {
      if (to_lower(alias).find(wanted) != std::string::npos) {
        msg += shown++ ? ", " : "; near matches: ";
        msg += node.display_name;
        break;
      }
    }
    if (shown >= 5) break;
  }
  fail(Errc::NotFound, msg);
}

}  // namespace skg
