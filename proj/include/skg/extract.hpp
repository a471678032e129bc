#pragma once

// Parses model extraction output into validated nodes/relations. A strict
// parse is tried first; common formatting deviations (code fences, leading
// prose) go through a repair pass. Every kept label is normalized and
// schema-checked; everything dropped leaves a diagnostic.

#include <atomic>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "skg/error.hpp"
#include "skg/ingest.hpp"
#include "skg/llm.hpp"
#include "skg/prompt.hpp"
#include "skg/schema.hpp"

namespace skg {

struct Provenance {
  std::string document_id;
  size_t chunk_index = 0;
  std::string run_id;

  auto operator<=>(const Provenance&) const = default;
};

using NodeKey = std::pair<std::string, std::string>;  // (label, name)

struct ExtractedNode {
  std::string label;
  std::string name;
  std::map<std::string, std::string> properties;
  Provenance provenance;

  NodeKey key() const { return {label, name}; }
};

struct ExtractedRelation {
  NodeKey source_key;
  NodeKey target_key;
  std::string rel_type;
  std::map<std::string, std::string> properties;
  Provenance provenance;
};

enum class Severity { Info, Warning, Error };

inline const char* severity_name(Severity s) {
  switch (s) {
    case Severity::Info: return "info";
    case Severity::Warning: return "warning";
    case Severity::Error: return "error";
  }
  return "info";
}

struct Diagnostic {
  Severity severity = Severity::Info;
  std::string code;
  std::string message;
  std::string fragment;  // offending raw snippet, when available
};

struct ExtractionResult {
  std::vector<ExtractedNode> nodes;
  std::vector<ExtractedRelation> relations;
  std::vector<Diagnostic> diagnostics;
  Provenance provenance;  // (document, chunk, run) this result came from

  bool has_diagnostic(const std::string& code) const {
    for (const auto& d : diagnostics)
      if (d.code == code) return true;
    return false;
  }
};

namespace repair {

// Pulls the content out of the first fenced code block, if any.
inline bool strip_fences(const std::string& text, std::string* out) {
  size_t open = text.find("```");
  if (open == std::string::npos) return false;
  size_t body = text.find('\n', open);
  if (body == std::string::npos) return false;  // fence with no content
  size_t close = text.find("```", body);
  *out = text.substr(body + 1, close == std::string::npos ? std::string::npos : close - body - 1);
  return true;
}

// Extracts the outermost balanced {...} or [...] region, respecting JSON
// string literals and escapes.
inline bool balanced_region(const std::string& text, std::string* out) {
  size_t start = text.find_first_of("{[");
  if (start == std::string::npos) return false;
  char open = text[start];
  char close = open == '{' ? '}' : ']';
  int depth = 0;
  bool in_string = false;
  for (size_t i = start; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == open) ++depth;
    else if (c == close) {
      --depth;
      if (depth == 0) {
        *out = text.substr(start, i - start + 1);
        return true;
      }
    }
  }
  return false;
}

struct Attempt {
  nlohmann::json parsed;
  bool repaired = false;
  std::vector<Diagnostic> diagnostics;
};

// Strict parse first; on failure strip fences, then prose, then re-parse.
inline std::optional<Attempt> parse_with_repair(const std::string& raw) {
  auto try_parse = [](const std::string& text) -> std::optional<nlohmann::json> {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || (!j.is_object() && !j.is_array())) return std::nullopt;
    return j;
  };

  if (auto j = try_parse(trim(raw))) return Attempt{std::move(*j), false, {}};

  Attempt attempt;
  attempt.repaired = true;
  std::string work = raw;

  std::string defenced;
  if (strip_fences(work, &defenced)) {
    attempt.diagnostics.push_back({Severity::Info, "RepairedFencing",
                                   "stripped code fences from response", ""});
    work = defenced;
    if (auto j = try_parse(trim(work))) {
      attempt.parsed = std::move(*j);
      return attempt;
    }
  }

  std::string region;
  if (balanced_region(work, &region)) {
    if (auto j = try_parse(region)) {
      attempt.diagnostics.push_back({Severity::Info, "RepairedProse",
                                     "extracted balanced JSON region from surrounding prose", ""});
      attempt.parsed = std::move(*j);
      return attempt;
    }
  }
  return std::nullopt;
}

}  // namespace repair

namespace detail {

inline std::string json_to_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

inline std::map<std::string, std::string> parse_properties(const nlohmann::json& item) {
  std::map<std::string, std::string> props;
  if (item.contains("properties") && item["properties"].is_object()) {
    for (const auto& [k, v] : item["properties"].items()) props[k] = json_to_text(v);
  }
  return props;
}

}  // namespace detail

inline ExtractionResult parse_extraction(const std::string& raw, const SchemaConfig& schema,
                                         const Provenance& provenance) {
  if (trim(raw).empty()) fail(Errc::EmptyResponse, "model returned no content");

  auto attempt = repair::parse_with_repair(raw);
  if (!attempt || !attempt->parsed.is_object()) {
    fail(Errc::Unparseable, "response is not the extraction contract object", raw);
  }

  ExtractionResult result;
  result.provenance = provenance;
  result.diagnostics = std::move(attempt->diagnostics);
  const nlohmann::json& j = attempt->parsed;

  auto diag = [&](Severity sev, const char* code, std::string msg, std::string frag = "") {
    result.diagnostics.push_back({sev, code, std::move(msg), std::move(frag)});
  };

  if (!j.contains("nodes") || !j["nodes"].is_array())
    diag(Severity::Warning, "MissingNodes", "response has no nodes array");
  if (!j.contains("relationships") || !j["relationships"].is_array())
    diag(Severity::Warning, "MissingRelationships", "response has no relationships array");

  std::set<NodeKey> node_keys;
  if (j.contains("nodes") && j["nodes"].is_array()) {
    for (const auto& item : j["nodes"]) {
      if (!item.is_object() || !item.contains("label") || !item.contains("name") ||
          !item["label"].is_string() || !item["name"].is_string()) {
        diag(Severity::Warning, "InvalidNode", "node entry missing label or name", item.dump());
        continue;
      }
      std::string name = trim(item["name"].get<std::string>());
      if (name.empty()) {
        diag(Severity::Warning, "InvalidNode", "node has empty name", item.dump());
        continue;
      }
      std::string label;
      try {
        label = normalize_label(item["label"].get<std::string>(), LabelKind::Node);
      } catch (const Error&) {
        diag(Severity::Warning, "InvalidNode", "node label is empty", item.dump());
        continue;
      }
      if (!schema.has_entity_type(label)) {
        diag(Severity::Warning, "UnknownLabel", "dropped node with undeclared label " + label,
             item.dump());
        continue;
      }
      ExtractedNode node;
      node.label = label;
      node.name = name;
      node.properties = detail::parse_properties(item);
      node.provenance = provenance;
      node_keys.insert(node.key());
      result.nodes.push_back(std::move(node));
    }
  }

  if (j.contains("relationships") && j["relationships"].is_array()) {
    for (const auto& item : j["relationships"]) {
      if (!item.is_object() || !item.contains("source") || !item.contains("target") ||
          !item.contains("type") || !item["source"].is_string() || !item["target"].is_string() ||
          !item["type"].is_string()) {
        diag(Severity::Warning, "InvalidRelation", "relationship entry missing source/target/type",
             item.dump());
        continue;
      }
      std::string source = trim(item["source"].get<std::string>());
      std::string target = trim(item["target"].get<std::string>());
      if (source.empty() || target.empty()) {
        diag(Severity::Warning, "InvalidRelation", "relationship has empty endpoint", item.dump());
        continue;
      }

      std::string rel_type;
      try {
        rel_type = normalize_label(item["type"].get<std::string>(), LabelKind::Relation);
      } catch (const Error&) {
        diag(Severity::Warning, "InvalidRelation", "relationship type is empty", item.dump());
        continue;
      }
      if (!schema.has_relation_type(rel_type)) {
        diag(Severity::Warning, "UnknownRelType",
             "dropped relationship with undeclared type " + rel_type, item.dump());
        continue;
      }

      // endpoint labels: explicit first, else inferred from a unique node name match
      auto endpoint_label = [&](const char* field, const std::string& name) -> std::string {
        if (item.contains(field) && item[field].is_string()) {
          try {
            std::string lbl = normalize_label(item[field].get<std::string>(), LabelKind::Node);
            if (schema.has_entity_type(lbl)) return lbl;
          } catch (const Error&) {
          }
          return "";
        }
        std::string found;
        for (const auto& n : result.nodes) {
          if (n.name == name) {
            if (!found.empty() && found != n.label) return "";  // ambiguous
            found = n.label;
          }
        }
        return found;
      };
      std::string source_label = endpoint_label("source_label", source);
      std::string target_label = endpoint_label("target_label", target);
      if (source_label.empty() || target_label.empty()) {
        diag(Severity::Warning, "InvalidRelation",
             "cannot determine endpoint entity type for relationship", item.dump());
        continue;
      }

      NodeKey source_key{source_label, source};
      NodeKey target_key{target_label, target};
      if (source_key == target_key) {
        diag(Severity::Warning, "SelfLoopDropped",
             "dropped self-relationship on " + source_label + ":" + source, item.dump());
        continue;
      }

      ExtractedRelation rel;
      rel.source_key = source_key;
      rel.target_key = target_key;
      rel.rel_type = rel_type;
      rel.properties = detail::parse_properties(item);
      rel.provenance = provenance;
      result.relations.push_back(std::move(rel));
    }
  }

  // endpoint closure: materialize referenced nodes that were not listed
  for (const auto& rel : result.relations) {
    for (const auto& key : {rel.source_key, rel.target_key}) {
      if (node_keys.insert(key).second) {
        ExtractedNode node;
        node.label = key.first;
        node.name = key.second;
        node.provenance = provenance;
        result.nodes.push_back(std::move(node));
        diag(Severity::Info, "MaterializedEndpoint",
             "materialized relationship endpoint " + key.first + ":" + key.second);
      }
    }
  }

  return result;
}

struct ExtractOptions {
  std::string model = "gpt-4";
  double temperature = 0.0;
  size_t max_output_tokens = 2048;
};

inline ExtractionResult extract_chunk(const Chunk& chunk, const SchemaConfig& schema,
                                      LlmBackend& backend, const std::string& run_id,
                                      const ExtractOptions& options = {}) {
  PromptText prompt = build_extraction_prompt(schema, chunk);
  LlmRequest req;
  req.model = options.model;
  req.temperature = options.temperature;
  req.system = prompt.system;
  req.user = prompt.user;
  req.max_output_tokens = options.max_output_tokens;

  Provenance prov{chunk.document_id, chunk.index, run_id};
  try {
    LlmResponse resp = backend.complete(req);
    return parse_extraction(resp.content, schema, prov);
  } catch (const Error& e) {
    throw Error(e.code(), std::string(e.what()) + " [document=" + chunk.document_id +
                              " chunk=" + std::to_string(chunk.index) + "]",
                e.detail());
  }
}

struct CorpusCounts {
  size_t total_nodes = 0;
  size_t total_relations = 0;
  std::map<std::string, size_t> nodes_per_type;
  std::map<std::string, size_t> relations_per_type;

  bool operator==(const CorpusCounts&) const = default;
};

inline void count_result(const ExtractionResult& r, CorpusCounts* counts) {
  counts->total_nodes += r.nodes.size();
  counts->total_relations += r.relations.size();
  for (const auto& n : r.nodes) ++counts->nodes_per_type[n.label];
  for (const auto& e : r.relations) ++counts->relations_per_type[e.rel_type];
}

// Extracts every chunk of every document with bounded parallelism. Results
// come back ordered by (document, chunk) regardless of completion order;
// per-chunk failures become error diagnostics unless fail_fast is set.
inline std::pair<std::vector<ExtractionResult>, CorpusCounts> extract_corpus(
    const std::vector<Document>& docs, const SchemaConfig& schema, LlmBackend& backend,
    size_t parallelism, const std::string& run_id, size_t chunk_budget = 1500,
    bool fail_fast = false, const ExtractOptions& options = {}) {
  if (parallelism < 1) fail(Errc::BadRunConfig, "parallelism must be >= 1");

  std::vector<Chunk> chunks;
  for (const auto& doc : docs) {
    for (auto& c : chunk_document(doc, chunk_budget)) chunks.push_back(std::move(c));
  }

  std::vector<ExtractionResult> results(chunks.size());
  std::vector<std::exception_ptr> failures(chunks.size());
  std::atomic<size_t> next{0};
  size_t workers = std::max<size_t>(1, std::min(parallelism, chunks.size()));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (size_t i = next.fetch_add(1); i < chunks.size(); i = next.fetch_add(1)) {
        try {
          results[i] = extract_chunk(chunks[i], schema, backend, run_id, options);
        } catch (...) {
          failures[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();

  for (size_t i = 0; i < chunks.size(); ++i) {
    if (!failures[i]) continue;
    if (fail_fast) std::rethrow_exception(failures[i]);
    std::string what = "chunk extraction failed";
    try {
      std::rethrow_exception(failures[i]);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    ExtractionResult r;
    r.provenance = {chunks[i].document_id, chunks[i].index, run_id};
    r.diagnostics.push_back({Severity::Error, "ChunkFailed", what, ""});
    results[i] = std::move(r);
  }

  CorpusCounts counts;
  for (const auto& r : results) count_result(r, &counts);
  return {std::move(results), counts};
}

// --- results dump (JSON lines, one ExtractionResult per chunk) ---

inline nlohmann::ordered_json result_to_json(const ExtractionResult& r) {
  nlohmann::ordered_json j;
  j["document_id"] = r.provenance.document_id;
  j["chunk_index"] = r.provenance.chunk_index;
  j["run_id"] = r.provenance.run_id;
  j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& n : r.nodes) {
    nlohmann::ordered_json e;
    e["label"] = n.label;
    e["name"] = n.name;
    e["properties"] = nlohmann::ordered_json(n.properties);
    j["nodes"].push_back(std::move(e));
  }
  j["relations"] = nlohmann::ordered_json::array();
  for (const auto& rel : r.relations) {
    nlohmann::ordered_json e;
    e["source_label"] = rel.source_key.first;
    e["source"] = rel.source_key.second;
    e["target_label"] = rel.target_key.first;
    e["target"] = rel.target_key.second;
    e["type"] = rel.rel_type;
    e["properties"] = nlohmann::ordered_json(rel.properties);
    j["relations"].push_back(std::move(e));
  }
  j["diagnostics"] = nlohmann::ordered_json::array();
  for (const auto& d : r.diagnostics) {
    j["diagnostics"].push_back({{"severity", severity_name(d.severity)},
                                {"code", d.code},
                                {"message", d.message},
                                {"fragment", d.fragment}});
  }
  return j;
}

inline ExtractionResult result_from_json(const nlohmann::json& j) {
  ExtractionResult r;
  r.provenance.document_id = j.at("document_id").get<std::string>();
  r.provenance.chunk_index = j.at("chunk_index").get<size_t>();
  r.provenance.run_id = j.value("run_id", std::string{});
  for (const auto& e : j.value("nodes", nlohmann::json::array())) {
    ExtractedNode n;
    n.label = e.at("label").get<std::string>();
    n.name = e.at("name").get<std::string>();
    if (e.contains("properties") && e["properties"].is_object())
      for (const auto& [k, v] : e["properties"].items()) n.properties[k] = v.get<std::string>();
    n.provenance = r.provenance;
    r.nodes.push_back(std::move(n));
  }
  for (const auto& e : j.value("relations", nlohmann::json::array())) {
    ExtractedRelation rel;
    rel.source_key = {e.at("source_label").get<std::string>(), e.at("source").get<std::string>()};
    rel.target_key = {e.at("target_label").get<std::string>(), e.at("target").get<std::string>()};
    rel.rel_type = e.at("type").get<std::string>();
    if (e.contains("properties") && e["properties"].is_object())
      for (const auto& [k, v] : e["properties"].items()) rel.properties[k] = v.get<std::string>();
    rel.provenance = r.provenance;
    r.relations.push_back(std::move(rel));
  }
  for (const auto& d : j.value("diagnostics", nlohmann::json::array())) {
    Diagnostic diag;
    std::string sev = d.value("severity", "info");
    diag.severity = sev == "error" ? Severity::Error
                    : sev == "warning" ? Severity::Warning
                                       : Severity::Info;
    diag.code = d.value("code", std::string{});
    diag.message = d.value("message", std::string{});
    diag.fragment = d.value("fragment", std::string{});
    r.diagnostics.push_back(std::move(diag));
  }
  return r;
}

inline std::string results_to_jsonl(const std::vector<ExtractionResult>& results) {
  std::string out;
  for (const auto& r : results) {
    out += result_to_json(r).dump();
    out += "\n";
  }
  return out;
}

inline std::vector<ExtractionResult> results_from_jsonl(const std::string& text) {
  std::vector<ExtractionResult> results;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      fail(Errc::StorageError, "results line " + std::to_string(lineno) + " is not valid JSON");
    results.push_back(result_from_json(j));
  }
  return results;
}

}  // namespace skg
