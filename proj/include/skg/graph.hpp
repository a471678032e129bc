#pragma once

// Canonical property graph: unique nodes per (label, canonical id), typed
// directed edges, provenance. Immutable after build; queries are read-only.

#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skg/error.hpp"
#include "skg/extract.hpp"
#include "skg/schema.hpp"

namespace skg {

struct CanonicalNode {
  std::string canonical_id;
  std::string label;
  std::string display_name;
  std::set<std::string> aliases;  // includes display_name
  std::map<std::string, std::string> properties;
  std::set<Provenance> provenance;

  bool operator==(const CanonicalNode&) const = default;
};

struct Edge {
  std::string source;  // canonical_id
  std::string target;  // canonical_id
  std::string rel_type;
  std::map<std::string, std::string> properties;
  std::set<Provenance> provenance;

  auto sort_key() const { return std::tie(source, rel_type, target); }
  bool operator==(const Edge&) const = default;
};

struct KnowledgeGraph {
  std::map<std::string, CanonicalNode> nodes;  // canonical_id -> node
  std::vector<Edge> edges;                     // sorted by (source, rel_type, target)
  std::string schema_ref;                      // digest of the schema that produced the graph

  const CanonicalNode* find(const std::string& id) const {
    auto it = nodes.find(id);
    return it == nodes.end() ? nullptr : &it->second;
  }

  const CanonicalNode& at(const std::string& id) const {
    auto it = nodes.find(id);
    if (it == nodes.end()) fail(Errc::UnknownNode, "no node with id " + id);
    return it->second;
  }
};

inline std::string schema_digest(const SchemaConfig& schema) {
  return sha256_hex(schema_to_json(schema).dump()).substr(0, 16);
}

// Validates and assembles the graph. Exact duplicate edges (same source,
// type, target) collapse with provenance unioned.
inline KnowledgeGraph build_graph(const std::vector<CanonicalNode>& nodes,
                                  const std::vector<Edge>& edges, const SchemaConfig& schema) {
  KnowledgeGraph g;
  g.schema_ref = schema_digest(schema);
  for (const auto& n : nodes) {
    if (!schema.has_entity_type(n.label))
      fail(Errc::MalformedConfig, "node " + n.canonical_id + " has undeclared label " + n.label);
    if (n.aliases.empty() || !n.aliases.count(n.display_name))
      fail(Errc::MalformedConfig,
           "node " + n.canonical_id + " display name must be among its aliases");
    if (!g.nodes.emplace(n.canonical_id, n).second)
      fail(Errc::DuplicateNodeId, "duplicate node id " + n.canonical_id);
  }

  std::map<std::tuple<std::string, std::string, std::string>, Edge> dedup;
  for (const auto& e : edges) {
    if (!g.nodes.count(e.source)) fail(Errc::DanglingEdge, "edge references missing node " + e.source);
    if (!g.nodes.count(e.target)) fail(Errc::DanglingEdge, "edge references missing node " + e.target);
    if (!schema.has_relation_type(e.rel_type))
      fail(Errc::MalformedConfig, "edge has undeclared relation type " + e.rel_type);
    if (e.source == e.target)
      fail(Errc::MalformedConfig, "self-loop edge on " + e.source);
    auto [it, inserted] = dedup.emplace(e.sort_key(), e);
    if (!inserted) {
      it->second.provenance.insert(e.provenance.begin(), e.provenance.end());
      for (const auto& [k, v] : e.properties) it->second.properties.emplace(k, v);
    }
  }
  g.edges.reserve(dedup.size());
  for (auto& [_, e] : dedup) g.edges.push_back(std::move(e));
  return g;
}

// --- queries -------------------------------------------------------------

inline const CanonicalNode& expect_node_type(const KnowledgeGraph& g, const std::string& id,
                                             const std::string& label) {
  const CanonicalNode* n = g.find(id);
  if (!n) fail(Errc::UnknownNode, "no node with id " + id);
  if (n->label != label)
    fail(Errc::WrongNodeType, id + " is a " + n->label + ", expected " + label);
  return *n;
}

// Multi-tier upstream visibility result. tiers[k] holds the nodes at
// shortest reverse-suppliesTo distance k from the focal company (tier 0);
// enrichment maps one-hop owned mines and produced materials/products to
// the tier of the supplier they hang off.
struct TieredSubgraph {
  std::string focus;
  std::map<size_t, std::set<std::string>> tiers;
  std::map<std::string, size_t> enrichment;
  std::vector<Edge> edges;
};

inline TieredSubgraph upstream_suppliers(const KnowledgeGraph& g, const std::string& company_id,
                                         size_t max_depth) {
  expect_node_type(g, company_id, "Company");
  if (max_depth < 1) fail(Errc::BadRunConfig, "max_depth must be >= 1");

  // reverse adjacency over suppliesTo: buyer -> suppliers
  std::map<std::string, std::vector<const Edge*>> incoming;
  for (const auto& e : g.edges)
    if (e.rel_type == "suppliesTo") incoming[e.target].push_back(&e);

  TieredSubgraph out;
  out.focus = company_id;
  std::map<std::string, size_t> tier_of;
  tier_of[company_id] = 0;
  out.tiers[0].insert(company_id);
  std::deque<std::string> frontier{company_id};

  std::set<const Edge*> edge_set;
  while (!frontier.empty()) {
    std::string cur = frontier.front();
    frontier.pop_front();
    size_t depth = tier_of[cur];
    if (depth >= max_depth) continue;
    auto it = incoming.find(cur);
    if (it == incoming.end()) continue;
    for (const Edge* e : it->second) {
      edge_set.insert(e);
      if (!tier_of.count(e->source)) {
        tier_of[e->source] = depth + 1;  // BFS: first visit is the minimum tier
        out.tiers[depth + 1].insert(e->source);
        frontier.push_back(e->source);
      }
    }
  }

  // enrichment: owned mines and produced materials/products of each supplier
  for (const auto& e : g.edges) {
    auto it = tier_of.find(e.source);
    if (it == tier_of.end() || it->second == 0) continue;
    const CanonicalNode* target = g.find(e.target);
    if (!target) continue;
    bool owned_mine = e.rel_type == "owns" && target->label == "Mine";
    bool produced = e.rel_type == "produces" &&
                    (target->label == "Material" || target->label == "Product");
    if (!owned_mine && !produced) continue;
    edge_set.insert(&e);
    if (tier_of.count(e.target)) continue;  // already a tiered node
    auto [ins, added] = out.enrichment.emplace(e.target, it->second);
    if (!added && it->second < ins->second) ins->second = it->second;  // keep minimum tier
  }

  // also keep suppliesTo edges between tiered nodes that BFS skipped
  for (const auto& e : g.edges) {
    if (e.rel_type != "suppliesTo") continue;
    if (tier_of.count(e.source) && tier_of.count(e.target)) edge_set.insert(&e);
  }

  for (const Edge* e : edge_set) out.edges.push_back(*e);
  std::sort(out.edges.begin(), out.edges.end(),
            [](const Edge& a, const Edge& b) { return a.sort_key() < b.sort_key(); });
  return out;
}

struct SupplierIntersection {
  std::set<std::string> suppliers;
  std::vector<Edge> edges;  // the witnessing suppliesTo edges
};

inline SupplierIntersection shared_suppliers(const KnowledgeGraph& g, const std::string& company_a,
                                             const std::string& company_b) {
  expect_node_type(g, company_a, "Company");
  expect_node_type(g, company_b, "Company");

  std::map<std::string, std::vector<const Edge*>> to_a, to_b;
  for (const auto& e : g.edges) {
    if (e.rel_type != "suppliesTo") continue;
    if (e.target == company_a) to_a[e.source].push_back(&e);
    if (e.target == company_b) to_b[e.source].push_back(&e);
  }

  SupplierIntersection out;
  for (const auto& [supplier, edges_a] : to_a) {
    auto it = to_b.find(supplier);
    if (it == to_b.end()) continue;
    out.suppliers.insert(supplier);
    std::set<const Edge*> witnesses(edges_a.begin(), edges_a.end());
    witnesses.insert(it->second.begin(), it->second.end());
    for (const Edge* e : witnesses) out.edges.push_back(*e);
  }
  std::sort(out.edges.begin(), out.edges.end(),
            [](const Edge& a, const Edge& b) { return a.sort_key() < b.sort_key(); });
  out.edges.erase(std::unique(out.edges.begin(), out.edges.end()), out.edges.end());
  return out;
}

struct Subgraph {
  std::set<std::string> node_ids;
  std::vector<Edge> edges;
};

// Producers of a material, their locations, ownership links in both
// directions, and the locations of mines they own.
inline Subgraph material_network(const KnowledgeGraph& g, const std::string& material_id) {
  expect_node_type(g, material_id, "Material");

  Subgraph out;
  out.node_ids.insert(material_id);

  std::set<std::string> producers;
  std::set<const Edge*> edge_set;
  for (const auto& e : g.edges) {
    if (e.rel_type == "produces" && e.target == material_id) {
      producers.insert(e.source);
      edge_set.insert(&e);
    }
  }

  std::set<std::string> owned_mines;
  for (const auto& e : g.edges) {
    if (producers.count(e.source)) {
      if (e.rel_type == "locatedIn") edge_set.insert(&e);
      if (e.rel_type == "owns") {
        edge_set.insert(&e);
        const CanonicalNode* t = g.find(e.target);
        if (t && t->label == "Mine") owned_mines.insert(e.target);
      }
    }
    if (e.rel_type == "owns" && producers.count(e.target)) edge_set.insert(&e);
  }
  for (const auto& e : g.edges) {
    if (e.rel_type == "locatedIn" && owned_mines.count(e.source)) edge_set.insert(&e);
  }

  for (const Edge* e : edge_set) {
    out.node_ids.insert(e->source);
    out.node_ids.insert(e->target);
    out.edges.push_back(*e);
  }
  std::sort(out.edges.begin(), out.edges.end(),
            [](const Edge& a, const Edge& b) { return a.sort_key() < b.sort_key(); });
  return out;
}

}  // namespace skg
