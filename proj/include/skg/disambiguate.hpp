#pragma once

// Entity disambiguation: bucket extracted nodes by type, obtain group
// assignments (identical id = same real-world entity), merge groups into
// canonical nodes, and rewrite relation endpoints onto canonical ids.
//
// A deterministic exact-match pre-pass (case-insensitive, punctuation
// stripped) folds trivial duplicates before any model call; semantic
// grouping of the remaining representatives is the model's job.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "skg/error.hpp"
#include "skg/extract.hpp"
#include "skg/graph.hpp"
#include "skg/llm.hpp"
#include "skg/prompt.hpp"

namespace skg {

struct GroupAssignment {
  std::string label;
  std::vector<std::string> names;
  std::vector<long> group_ids;  // same length; equal id = same entity
};

inline void validate_assignment(const GroupAssignment& a) {
  if (a.names.size() != a.group_ids.size())
    fail(Errc::LengthMismatch, "assignment for " + a.label + " has " +
                                   std::to_string(a.group_ids.size()) + " ids for " +
                                   std::to_string(a.names.size()) + " names");
  for (long id : a.group_ids)
    if (id < 1) fail(Errc::NonInteger, "group ids must be positive integers");
}

// Distinct (label, name) pairs in first-seen order.
inline std::map<std::string, std::vector<std::string>> bucket_by_label(
    const std::vector<ExtractedNode>& nodes) {
  std::map<std::string, std::vector<std::string>> buckets;
  std::set<NodeKey> seen;
  for (const auto& n : nodes) {
    if (seen.insert(n.key()).second) buckets[n.label].push_back(n.name);
  }
  return buckets;
}

// Parses the integer-array assignment contract, with the same repair pass
// as extraction parsing.
inline GroupAssignment parse_assignment(const std::string& raw, size_t expected_len) {
  if (expected_len < 1) fail(Errc::BadRunConfig, "expected_len must be >= 1");
  if (trim(raw).empty()) fail(Errc::EmptyResponse, "model returned no content");

  auto attempt = repair::parse_with_repair(raw);
  if (!attempt || !attempt->parsed.is_array())
    fail(Errc::Unparseable, "response is not a JSON array of integers", raw);

  const nlohmann::json& arr = attempt->parsed;
  if (arr.size() != expected_len)
    fail(Errc::LengthMismatch, "expected " + std::to_string(expected_len) + " group ids, got " +
                                   std::to_string(arr.size()),
         raw);
  GroupAssignment out;
  for (const auto& v : arr) {
    if (!v.is_number_integer())
      fail(Errc::NonInteger, "group id is not an integer: " + v.dump(), raw);
    long id = v.get<long>();
    if (id < 1) fail(Errc::NonInteger, "group id is not positive: " + std::to_string(id), raw);
    out.group_ids.push_back(id);
  }
  return out;
}

// Pre-pass equality key: ASCII-lowercased with punctuation and whitespace
// removed; bytes outside ASCII pass through untouched.
inline std::string prepass_key(std::string_view name) {
  std::string out;
  out.reserve(name.size());
  for (char c : name) {
    if (static_cast<unsigned char>(c) >= 0x80) out.push_back(c);
    else if (is_ascii_alnum(c)) out.push_back(ascii_lower(c));
  }
  return out;
}

struct MergeOutput {
  std::vector<CanonicalNode> nodes;
  std::map<NodeKey, std::string> alias_map;  // (label, name) -> canonical_id
};

namespace detail {

// Key-wise property merge; conflicting values are kept under the same key
// suffixed with the provenance of the later contributor.
inline void merge_properties(std::map<std::string, std::string>* props,
                             const std::map<std::string, std::string>& incoming,
                             const Provenance& prov) {
  for (const auto& [k, v] : incoming) {
    auto it = props->find(k);
    if (it == props->end()) {
      (*props)[k] = v;
      continue;
    }
    if (it->second == v) continue;
    std::string suffixed = k + "@" + prov.document_id + ":" + std::to_string(prov.chunk_index);
    int n = 2;
    while (props->count(suffixed) && (*props)[suffixed] != v)
      suffixed = k + "@" + prov.document_id + ":" + std::to_string(prov.chunk_index) + "#" +
                 std::to_string(n++);
    (*props)[suffixed] = v;
  }
}

}  // namespace detail

// One canonical node per (label, group id). Display name: highest mention
// count among merged names, ties to the longest name, then lexicographic.
inline MergeOutput merge_nodes(const std::vector<ExtractedNode>& nodes,
                               const std::map<std::string, GroupAssignment>& assignments) {
  std::map<NodeKey, long> group_of;
  for (const auto& [label, a] : assignments) {
    validate_assignment(a);
    for (size_t i = 0; i < a.names.size(); ++i) group_of[{label, a.names[i]}] = a.group_ids[i];
  }

  std::map<NodeKey, size_t> occurrences;
  for (const auto& n : nodes) {
    if (!group_of.count(n.key()))
      fail(Errc::UncoveredNode, "no group assignment covers " + n.label + ":" + n.name);
    ++occurrences[n.key()];
  }

  // group key -> ordered member names (by first position in the assignment)
  struct Group {
    std::string label;
    std::vector<std::string> members;
    size_t first = SIZE_MAX;
  };
  std::map<std::pair<std::string, long>, Group> groups;
  for (const auto& [label, a] : assignments) {
    for (size_t i = 0; i < a.names.size(); ++i) {
      if (!occurrences.count({label, a.names[i]})) continue;  // assignment may cover extras
      Group& grp = groups[{label, a.group_ids[i]}];
      grp.label = label;
      grp.members.push_back(a.names[i]);
      grp.first = std::min(grp.first, i);
    }
  }

  // deterministic id order: label ascending, then first appearance
  std::vector<const std::pair<const std::pair<std::string, long>, Group>*> ordered;
  for (const auto& entry : groups) ordered.push_back(&entry);
  std::sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) {
    if (a->second.label != b->second.label) return a->second.label < b->second.label;
    return a->second.first < b->second.first;
  });

  MergeOutput out;
  std::map<std::string, size_t> next_seq;
  for (auto* entry : ordered) {
    const Group& grp = entry->second;

    CanonicalNode node;
    node.label = grp.label;
    size_t seq = ++next_seq[grp.label];
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04zu", seq);
    node.canonical_id = grp.label + ":" + buf;

    std::string best;
    size_t best_count = 0;
    for (const auto& name : grp.members) {
      node.aliases.insert(name);
      size_t count = occurrences[{grp.label, name}];
      bool wins = count > best_count ||
                  (count == best_count &&
                   (name.size() > best.size() || (name.size() == best.size() && name < best)));
      if (best.empty() || wins) {
        best = name;
        best_count = count;
      }
    }
    node.display_name = best;
    out.nodes.push_back(std::move(node));
    for (const auto& name : grp.members)
      out.alias_map[{grp.label, name}] = out.nodes.back().canonical_id;
  }

  // fold properties and provenance from every mention, in deterministic order
  std::vector<const ExtractedNode*> sorted_nodes;
  for (const auto& n : nodes) sorted_nodes.push_back(&n);
  std::sort(sorted_nodes.begin(), sorted_nodes.end(), [](const ExtractedNode* a, const ExtractedNode* b) {
    return std::tie(a->provenance, a->label, a->name) < std::tie(b->provenance, b->label, b->name);
  });
  std::map<std::string, CanonicalNode*> by_id;
  for (auto& n : out.nodes) by_id[n.canonical_id] = &n;
  for (const ExtractedNode* n : sorted_nodes) {
    CanonicalNode* canon = by_id[out.alias_map[n->key()]];
    canon->provenance.insert(n->provenance);
    detail::merge_properties(&canon->properties, n->properties, n->provenance);
  }
  return out;
}

struct RewriteOutput {
  std::vector<Edge> edges;
  std::vector<Diagnostic> diagnostics;
};

// Endpoints replaced by canonical ids; identical (source, type, target)
// collapse with provenance unioned; merge-induced self-loops are dropped.
inline RewriteOutput rewrite_edges(const std::vector<ExtractedRelation>& relations,
                                   const std::map<NodeKey, std::string>& alias_map) {
  RewriteOutput out;
  std::map<std::tuple<std::string, std::string, std::string>, Edge> dedup;

  std::vector<const ExtractedRelation*> sorted;
  for (const auto& r : relations) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const ExtractedRelation* a, const ExtractedRelation* b) {
    return std::tie(a->provenance, a->source_key, a->rel_type, a->target_key) <
           std::tie(b->provenance, b->source_key, b->rel_type, b->target_key);
  });

  for (const ExtractedRelation* rel : sorted) {
    auto src = alias_map.find(rel->source_key);
    auto dst = alias_map.find(rel->target_key);
    if (src == alias_map.end())
      fail(Errc::UnmappedEndpoint,
           "no canonical id for " + rel->source_key.first + ":" + rel->source_key.second);
    if (dst == alias_map.end())
      fail(Errc::UnmappedEndpoint,
           "no canonical id for " + rel->target_key.first + ":" + rel->target_key.second);
    if (src->second == dst->second) {
      out.diagnostics.push_back({Severity::Info, "MergedSelfLoop",
                                 "dropped edge that became a self-loop after merging: " +
                                     src->second + " " + rel->rel_type,
                                 ""});
      continue;
    }
    auto [it, inserted] = dedup.try_emplace({src->second, rel->rel_type, dst->second});
    Edge& e = it->second;
    if (inserted) {
      e.source = src->second;
      e.target = dst->second;
      e.rel_type = rel->rel_type;
    }
    e.provenance.insert(rel->provenance);
    detail::merge_properties(&e.properties, rel->properties, rel->provenance);
  }
  for (auto& [_, e] : dedup) out.edges.push_back(std::move(e));
  return out;
}

struct DisambiguateOptions {
  std::string model = "gpt-4";
  double temperature = 0.0;
  size_t max_output_tokens = 2048;
  size_t batch_cap = 150;  // names per disambiguation prompt
};

struct DisambiguateOutput {
  KnowledgeGraph graph;
  std::vector<Diagnostic> diagnostics;
};

// Full flow: bucket -> pre-pass -> per-label batched prompts -> parse ->
// merge -> rewrite -> validated graph. Batches share a running group-id
// offset so ids stay disjoint across batches of one label.
inline DisambiguateOutput disambiguate_graph(const std::vector<ExtractionResult>& results,
                                             const SchemaConfig& schema, LlmBackend& backend,
                                             const DisambiguateOptions& options = {}) {
  std::vector<ExtractedNode> all_nodes;
  std::vector<ExtractedRelation> all_relations;
  for (const auto& r : results) {
    all_nodes.insert(all_nodes.end(), r.nodes.begin(), r.nodes.end());
    all_relations.insert(all_relations.end(), r.relations.begin(), r.relations.end());
  }

  auto buckets = bucket_by_label(all_nodes);
  std::map<std::string, GroupAssignment> assignments;

  for (const auto& [label, names] : buckets) {
    // pre-pass: fold names whose normalized forms collide
    std::map<std::string, std::string> rep_of_key;  // prepass key -> representative name
    std::map<std::string, std::string> rep_of;      // name -> representative name
    std::vector<std::string> representatives;
    for (const auto& name : names) {
      std::string key = prepass_key(name);
      auto [it, inserted] = rep_of_key.emplace(key, name);
      if (inserted) representatives.push_back(name);
      rep_of[name] = it->second;
    }

    std::map<std::string, long> group_of_rep;
    long offset = 0;
    for (size_t batch_start = 0; batch_start < representatives.size();
         batch_start += options.batch_cap) {
      size_t batch_len = std::min(options.batch_cap, representatives.size() - batch_start);
      std::vector<std::string> batch(representatives.begin() + batch_start,
                                     representatives.begin() + batch_start + batch_len);
      PromptText prompt = build_disambiguation_prompt(label, batch);
      LlmRequest req;
      req.model = options.model;
      req.temperature = options.temperature;
      req.system = prompt.system;
      req.user = prompt.user;
      req.max_output_tokens = options.max_output_tokens;

      GroupAssignment parsed;
      try {
        LlmResponse resp = backend.complete(req);
        parsed = parse_assignment(resp.content, batch.size());
      } catch (const Error& e) {
        throw Error(e.code(),
                    std::string(e.what()) + " [label=" + label +
                        " batch=" + std::to_string(batch_start / options.batch_cap) + "]",
                    e.detail());
      }
      long batch_max = 0;
      for (size_t i = 0; i < batch.size(); ++i) {
        long id = offset + parsed.group_ids[i];
        group_of_rep[batch[i]] = id;
        batch_max = std::max(batch_max, id);
      }
      offset = batch_max;
    }

    GroupAssignment full;
    full.label = label;
    for (const auto& name : names) {
      full.names.push_back(name);
      full.group_ids.push_back(group_of_rep.at(rep_of.at(name)));
    }
    assignments[label] = std::move(full);
  }

  MergeOutput merged = merge_nodes(all_nodes, assignments);
  RewriteOutput rewritten = rewrite_edges(all_relations, merged.alias_map);

  DisambiguateOutput out;
  out.graph = build_graph(merged.nodes, rewritten.edges, schema);
  out.diagnostics = std::move(rewritten.diagnostics);
  return out;
}

// Audit artifact: label,alias,canonical_id,display_name per row.
inline std::string alias_map_csv(const KnowledgeGraph& g) {
  std::string out = "label,alias,canonical_id,display_name\n";
  for (const auto& [id, node] : g.nodes) {
    for (const auto& alias : node.aliases) {
      out += csv_field(node.label) + "," + csv_field(alias) + "," + csv_field(id) + "," +
             csv_field(node.display_name) + "\n";
    }
  }
  return out;
}

}  // namespace skg
