#pragma once

// Deterministic graph exporters: Cypher (MERGE statements keyed on label +
// display name), GraphML, DOT, and JSON lines. Node order is (label,
// display_name); edge order is (source, rel_type, target). Exporting the
// same graph twice produces byte-identical output.

#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skg/error.hpp"
#include "skg/graph.hpp"
#include "skg/util.hpp"

namespace skg {

enum class ExportFormat { Cypher, GraphML, Dot, JsonLines };

inline ExportFormat export_format_from(const std::string& name) {
  if (name == "cypher") return ExportFormat::Cypher;
  if (name == "graphml") return ExportFormat::GraphML;
  if (name == "dot") return ExportFormat::Dot;
  if (name == "jsonl") return ExportFormat::JsonLines;
  fail(Errc::BadRunConfig, "unknown export format: " + name + " (cypher|graphml|dot|jsonl)");
}

inline const char* export_extension(ExportFormat f) {
  switch (f) {
    case ExportFormat::Cypher: return "cypher";
    case ExportFormat::GraphML: return "graphml";
    case ExportFormat::Dot: return "dot";
    case ExportFormat::JsonLines: return "jsonl";
  }
  return "txt";
}

namespace detail {

inline std::vector<const CanonicalNode*> sorted_nodes(const KnowledgeGraph& g) {
  std::vector<const CanonicalNode*> nodes;
  nodes.reserve(g.nodes.size());
  for (const auto& [_, n] : g.nodes) nodes.push_back(&n);
  std::sort(nodes.begin(), nodes.end(), [](const CanonicalNode* a, const CanonicalNode* b) {
    return std::tie(a->label, a->display_name, a->canonical_id) <
           std::tie(b->label, b->display_name, b->canonical_id);
  });
  return nodes;
}

inline std::vector<const Edge*> sorted_edges(const KnowledgeGraph& g) {
  std::vector<const Edge*> edges;
  edges.reserve(g.edges.size());
  for (const auto& e : g.edges) edges.push_back(&e);
  std::sort(edges.begin(), edges.end(),
            [](const Edge* a, const Edge* b) { return a->sort_key() < b->sort_key(); });
  return edges;
}

inline std::string cypher_ident(std::string_view key) {
  bool plain = !key.empty() && is_ascii_alpha(key[0]) &&
               std::all_of(key.begin(), key.end(),
                           [](char c) { return is_ascii_alnum(c) || c == '_'; });
  if (plain) return std::string(key);
  std::string out = "`";
  for (char c : key) {
    if (c == '`') out += "``";
    else out.push_back(c);
  }
  out += "`";
  return out;
}

}  // namespace detail

inline void export_cypher(const KnowledgeGraph& g, std::ostream& out) {
  for (const CanonicalNode* n : detail::sorted_nodes(g)) {
    out << "MERGE (n:" << n->label << " {name: \"" << quote_escape(n->display_name) << "\"})";
    if (!n->properties.empty()) {
      out << " SET ";
      bool first = true;
      for (const auto& [k, v] : n->properties) {
        if (!first) out << ", ";
        out << "n." << detail::cypher_ident(k) << " = \"" << quote_escape(v) << "\"";
        first = false;
      }
    }
    out << ";\n";
  }
  for (const Edge* e : detail::sorted_edges(g)) {
    const CanonicalNode& s = g.at(e->source);
    const CanonicalNode& t = g.at(e->target);
    out << "MATCH (a:" << s.label << " {name: \"" << quote_escape(s.display_name) << "\"}), (b:"
        << t.label << " {name: \"" << quote_escape(t.display_name) << "\"}) MERGE (a)-[:"
        << e->rel_type << "]->(b);\n";
  }
}

inline void export_graphml(const KnowledgeGraph& g, std::ostream& out) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n";
  out << "  <key id=\"d0\" for=\"node\" attr.name=\"label\" attr.type=\"string\"/>\n";
  out << "  <key id=\"d1\" for=\"node\" attr.name=\"name\" attr.type=\"string\"/>\n";
  out << "  <key id=\"d2\" for=\"node\" attr.name=\"aliases\" attr.type=\"string\"/>\n";
  out << "  <key id=\"d3\" for=\"node\" attr.name=\"properties\" attr.type=\"string\"/>\n";
  out << "  <key id=\"d4\" for=\"edge\" attr.name=\"type\" attr.type=\"string\"/>\n";
  out << "  <key id=\"d5\" for=\"edge\" attr.name=\"properties\" attr.type=\"string\"/>\n";
  out << "  <graph id=\"G\" edgedefault=\"directed\">\n";
  for (const CanonicalNode* n : detail::sorted_nodes(g)) {
    out << "    <node id=\"" << xml_escape(n->canonical_id) << "\">\n";
    out << "      <data key=\"d0\">" << xml_escape(n->label) << "</data>\n";
    out << "      <data key=\"d1\">" << xml_escape(n->display_name) << "</data>\n";
    out << "      <data key=\"d2\">"
        << xml_escape(nlohmann::json(std::vector<std::string>(n->aliases.begin(), n->aliases.end()))
                          .dump())
        << "</data>\n";
    out << "      <data key=\"d3\">" << xml_escape(nlohmann::json(n->properties).dump())
        << "</data>\n";
    out << "    </node>\n";
  }
  for (const Edge* e : detail::sorted_edges(g)) {
    out << "    <edge source=\"" << xml_escape(e->source) << "\" target=\""
        << xml_escape(e->target) << "\">\n";
    out << "      <data key=\"d4\">" << xml_escape(e->rel_type) << "</data>\n";
    out << "      <data key=\"d5\">" << xml_escape(nlohmann::json(e->properties).dump())
        << "</data>\n";
    out << "    </edge>\n";
  }
  out << "  </graph>\n</graphml>\n";
}

inline void export_dot(const KnowledgeGraph& g, std::ostream& out) {
  out << "digraph skg {\n";
  for (const CanonicalNode* n : detail::sorted_nodes(g)) {
    out << "  \"" << quote_escape(n->canonical_id) << "\" [label=\""
        << quote_escape(n->label + ": " + n->display_name) << "\"];\n";
  }
  for (const Edge* e : detail::sorted_edges(g)) {
    out << "  \"" << quote_escape(e->source) << "\" -> \"" << quote_escape(e->target)
        << "\" [label=\"" << quote_escape(e->rel_type) << "\"];\n";
  }
  out << "}\n";
}

inline nlohmann::ordered_json provenance_json(const std::set<Provenance>& provs) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& p : provs) {
    arr.push_back({{"document_id", p.document_id},
                   {"chunk_index", p.chunk_index},
                   {"run_id", p.run_id}});
  }
  return arr;
}

inline void export_jsonl(const KnowledgeGraph& g, std::ostream& out) {
  nlohmann::ordered_json header;
  header["kind"] = "graph";
  header["schema_ref"] = g.schema_ref;
  header["nodes"] = g.nodes.size();
  header["edges"] = g.edges.size();
  out << header.dump() << "\n";
  for (const CanonicalNode* n : detail::sorted_nodes(g)) {
    nlohmann::ordered_json j;
    j["kind"] = "node";
    j["id"] = n->canonical_id;
    j["label"] = n->label;
    j["display_name"] = n->display_name;
    j["aliases"] = std::vector<std::string>(n->aliases.begin(), n->aliases.end());
    j["properties"] = nlohmann::ordered_json(n->properties);
    j["provenance"] = provenance_json(n->provenance);
    out << j.dump() << "\n";
  }
  for (const Edge* e : detail::sorted_edges(g)) {
    nlohmann::ordered_json j;
    j["kind"] = "edge";
    j["source"] = e->source;
    j["type"] = e->rel_type;
    j["target"] = e->target;
    j["properties"] = nlohmann::ordered_json(e->properties);
    j["provenance"] = provenance_json(e->provenance);
    out << j.dump() << "\n";
  }
}

inline void export_graph(const KnowledgeGraph& g, ExportFormat format, std::ostream& out) {
  switch (format) {
    case ExportFormat::Cypher: export_cypher(g, out); break;
    case ExportFormat::GraphML: export_graphml(g, out); break;
    case ExportFormat::Dot: export_dot(g, out); break;
    case ExportFormat::JsonLines: export_jsonl(g, out); break;
  }
  if (!out) fail(Errc::SinkError, "graph export sink failed");
}

inline std::string export_string(const KnowledgeGraph& g, ExportFormat format) {
  std::ostringstream os;
  export_graph(g, format, os);
  return os.str();
}

// Canonical digest of a graph; queries must leave it unchanged.
inline std::string graph_digest(const KnowledgeGraph& g) {
  return sha256_hex(export_string(g, ExportFormat::JsonLines));
}

inline std::set<Provenance> provenance_from_json(const nlohmann::json& arr) {
  std::set<Provenance> out;
  for (const auto& p : arr) {
    out.insert({p.value("document_id", std::string{}), p.value("chunk_index", size_t{0}),
                p.value("run_id", std::string{})});
  }
  return out;
}

// Reads a graph back from its JSON-lines export. The schema re-validates
// labels and edge closure.
inline KnowledgeGraph load_graph_jsonl(const std::string& text, const SchemaConfig& schema) {
  std::vector<CanonicalNode> nodes;
  std::vector<Edge> edges;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      fail(Errc::StorageError, "graph line " + std::to_string(lineno) + " is not valid JSON");
    std::string kind = j.value("kind", std::string{});
    if (kind == "graph") continue;  // header
    if (kind == "node") {
      CanonicalNode n;
      n.canonical_id = j.at("id").get<std::string>();
      n.label = j.at("label").get<std::string>();
      n.display_name = j.at("display_name").get<std::string>();
      for (const auto& a : j.value("aliases", nlohmann::json::array()))
        n.aliases.insert(a.get<std::string>());
      if (n.aliases.empty()) n.aliases.insert(n.display_name);
      if (j.contains("properties") && j["properties"].is_object())
        for (const auto& [k, v] : j["properties"].items()) n.properties[k] = v.get<std::string>();
      n.provenance = provenance_from_json(j.value("provenance", nlohmann::json::array()));
      nodes.push_back(std::move(n));
    } else if (kind == "edge") {
      Edge e;
      e.source = j.at("source").get<std::string>();
      e.target = j.at("target").get<std::string>();
      e.rel_type = j.at("type").get<std::string>();
      if (j.contains("properties") && j["properties"].is_object())
        for (const auto& [k, v] : j["properties"].items()) e.properties[k] = v.get<std::string>();
      e.provenance = provenance_from_json(j.value("provenance", nlohmann::json::array()));
      edges.push_back(std::move(e));
    } else {
      fail(Errc::StorageError,
           "graph line " + std::to_string(lineno) + " has unknown kind '" + kind + "'");
    }
  }
  return build_graph(nodes, edges, schema);
}

inline KnowledgeGraph load_graph_file(const std::string& path, const SchemaConfig& schema) {
  return load_graph_jsonl(read_file(path), schema);
}

}  // namespace skg
