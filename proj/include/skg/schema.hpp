#pragma once

// Configurable entity/relation schema. The schema drives prompt rendering,
// output validation, and graph labels; it is immutable once loaded.

#include <nlohmann/json.hpp>

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "skg/error.hpp"
#include "skg/util.hpp"

namespace skg {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

enum class LabelKind { Node, Relation };

struct EntityTypeDef {
  std::string name;  // PascalCase
  std::string description;
  std::vector<std::string> examples;  // at least 3, pairwise distinct
  std::vector<std::string> property_hints;

  bool operator==(const EntityTypeDef&) const = default;
};

struct RelationTypeDef {
  std::string name;  // lowerCamelCase
  std::string description;
  std::vector<std::string> semantic_equivalents;
  // (source entity type, target entity type) pairs; empty = unconstrained
  std::vector<std::pair<std::string, std::string>> endpoint_constraints;

  bool operator==(const RelationTypeDef&) const = default;
};

struct SchemaConfig {
  std::vector<EntityTypeDef> entity_types;
  std::vector<RelationTypeDef> relation_types;

  bool operator==(const SchemaConfig&) const = default;

  bool has_entity_type(const std::string& name) const {
    for (const auto& t : entity_types)
      if (t.name == name) return true;
    return false;
  }
  bool has_relation_type(const std::string& name) const {
    for (const auto& t : relation_types)
      if (t.name == name) return true;
    return false;
  }
  const EntityTypeDef* entity_type(const std::string& name) const {
    for (const auto& t : entity_types)
      if (t.name == name) return &t;
    return nullptr;
  }
};

inline bool is_pascal_case(std::string_view s) {
  if (s.empty() || !is_ascii_upper(s[0])) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return is_ascii_alnum(c); });
}

inline bool is_lower_camel_case(std::string_view s) {
  if (s.empty() || !is_ascii_lower(s[0])) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return is_ascii_alnum(c); });
}

namespace detail {

// Splits an ASCII-alnum text into words. Boundaries: any non-alnum byte,
// a lower/digit -> upper transition, and the last letter of an uppercase
// run that is followed by a lowercase letter ("HTMLParser" -> HTML, Parser).
inline std::vector<std::string> label_words(std::string_view raw) {
  std::vector<std::string> words;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      words.push_back(cur);
      cur.clear();
    }
  };
  for (size_t i = 0; i < raw.size(); ++i) {
    char c = raw[i];
    if (!is_ascii_alnum(c)) {
      flush();
      continue;
    }
    if (!cur.empty()) {
      char prev = cur.back();
      bool lower_to_upper = (is_ascii_lower(prev) || is_ascii_digit(prev)) && is_ascii_upper(c);
      bool acronym_end = is_ascii_upper(prev) && is_ascii_upper(c) && i + 1 < raw.size() &&
                         is_ascii_lower(raw[i + 1]);
      if (lower_to_upper || acronym_end) flush();
    }
    cur.push_back(c);
  }
  flush();
  return words;
}

inline std::string render_label(const std::vector<std::string>& words, LabelKind kind) {
  std::string out;
  bool first_word = true;
  for (const auto& w : words) {
    std::string word = to_lower(w);
    if (first_word && kind == LabelKind::Relation) {
      out += word;
    } else {
      // uppercase the first letter; leading digits pass through
      bool done = false;
      for (char c : word) {
        if (!done && is_ascii_alpha(c)) {
          out.push_back(ascii_upper(c));
          done = true;
        } else {
          out.push_back(c);
        }
      }
    }
    first_word = false;
  }
  // a cased label cannot start with a digit
  size_t i = 0;
  while (i < out.size() && is_ascii_digit(out[i])) ++i;
  return out.substr(i);
}

}  // namespace detail

// Canonical label casing: PascalCase for node labels, lowerCamelCase for
// relation types. Idempotent: applying it twice equals applying it once.
inline std::string normalize_label(std::string_view raw, LabelKind kind) {
  if (trim(raw).empty()) fail(Errc::EmptyLabel, "label is empty");
  std::string cur(raw);
  for (int pass = 0; pass < 4; ++pass) {
    std::string next = detail::render_label(detail::label_words(cur), kind);
    if (next == cur) break;
    cur = std::move(next);
  }
  if (cur.empty()) fail(Errc::EmptyLabel, "label has no letters: '" + std::string(raw) + "'");
  return cur;
}

inline void validate_schema(const SchemaConfig& schema) {
  if (schema.entity_types.empty() || schema.relation_types.empty()) {
    fail(Errc::MalformedConfig, "schema needs at least one entity type and one relation type");
  }
  std::set<std::string> seen;
  for (const auto& et : schema.entity_types) {
    if (!is_pascal_case(et.name))
      fail(Errc::MalformedConfig, "entity type name not PascalCase: '" + et.name + "'");
    if (!seen.insert(et.name).second)
      fail(Errc::DuplicateTypeName, "entity type declared twice: " + et.name);
    std::set<std::string> distinct;
    for (const auto& ex : et.examples) {
      if (trim(ex).empty())
        fail(Errc::InsufficientExamples, "entity type " + et.name + " has an empty example");
      distinct.insert(ex);
    }
    if (distinct.size() < 3) {
      fail(Errc::InsufficientExamples,
           "entity type " + et.name + " has " + std::to_string(distinct.size()) +
               " distinct examples, need at least 3");
    }
  }
  std::set<std::string> rel_seen;
  for (const auto& rt : schema.relation_types) {
    if (!is_lower_camel_case(rt.name))
      fail(Errc::MalformedConfig, "relation type name not lowerCamelCase: '" + rt.name + "'");
    if (!rel_seen.insert(rt.name).second)
      fail(Errc::DuplicateTypeName, "relation type declared twice: " + rt.name);
    for (const auto& [src, dst] : rt.endpoint_constraints) {
      if (!seen.count(src))
        fail(Errc::UnknownEndpointType,
             "relation " + rt.name + " constrains undeclared source type: " + src);
      if (!seen.count(dst))
        fail(Errc::UnknownEndpointType,
             "relation " + rt.name + " constrains undeclared target type: " + dst);
    }
  }
}

inline SchemaConfig schema_from_json(const json& j) {
  if (!j.is_object() || !j.contains("entity_types") || !j.contains("relation_types")) {
    fail(Errc::MalformedConfig, "top-level keys entity_types and relation_types are required");
  }
  SchemaConfig schema;
  for (const auto& e : j.at("entity_types")) {
    EntityTypeDef def;
    def.name = e.at("name").get<std::string>();
    def.description = e.value("description", std::string{});
    for (const auto& ex : e.value("examples", json::array())) def.examples.push_back(ex.get<std::string>());
    for (const auto& h : e.value("property_hints", json::array()))
      def.property_hints.push_back(h.get<std::string>());
    schema.entity_types.push_back(std::move(def));
  }
  for (const auto& r : j.at("relation_types")) {
    RelationTypeDef def;
    def.name = r.at("name").get<std::string>();
    def.description = r.value("description", std::string{});
    for (const auto& s : r.value("semantic_equivalents", json::array()))
      def.semantic_equivalents.push_back(s.get<std::string>());
    for (const auto& c : r.value("endpoint_constraints", json::array())) {
      if (!c.is_array() || c.size() != 2)
        fail(Errc::MalformedConfig, "endpoint_constraints entries must be [source, target] pairs");
      def.endpoint_constraints.emplace_back(c[0].get<std::string>(), c[1].get<std::string>());
    }
    schema.relation_types.push_back(std::move(def));
  }
  validate_schema(schema);
  return schema;
}

inline SchemaConfig load_schema(const std::string& config_text) {
  json j = json::parse(config_text, nullptr, false);
  if (j.is_discarded()) fail(Errc::MalformedConfig, "schema config is not valid JSON");
  try {
    return schema_from_json(j);
  } catch (const json::exception& e) {
    fail(Errc::MalformedConfig, std::string("schema config: ") + e.what());
  }
}

inline SchemaConfig load_schema_file(const std::string& path) {
  return load_schema(read_file(path));
}

inline ordered_json schema_to_json(const SchemaConfig& schema) {
  ordered_json j;
  j["entity_types"] = ordered_json::array();
  for (const auto& et : schema.entity_types) {
    ordered_json e;
    e["name"] = et.name;
    e["description"] = et.description;
    e["examples"] = et.examples;
    if (!et.property_hints.empty()) e["property_hints"] = et.property_hints;
    j["entity_types"].push_back(std::move(e));
  }
  j["relation_types"] = ordered_json::array();
  for (const auto& rt : schema.relation_types) {
    ordered_json r;
    r["name"] = rt.name;
    r["description"] = rt.description;
    r["semantic_equivalents"] = rt.semantic_equivalents;
    if (!rt.endpoint_constraints.empty()) {
      r["endpoint_constraints"] = ordered_json::array();
      for (const auto& [src, dst] : rt.endpoint_constraints)
        r["endpoint_constraints"].push_back(ordered_json::array({src, dst}));
    }
    j["relation_types"].push_back(std::move(r));
  }
  return j;
}

// The electric-vehicle case-study schema: six entity types, five relation
// types, each entity type with example instances from that domain.
inline SchemaConfig default_schema() {
  SchemaConfig s;
  s.entity_types = {
      {"Company",
       "A business organization that manufactures, supplies, mines, refines, or sells goods or "
       "services.",
       {"Tesla", "CATL", "Zijin Mining"},
       {"founded", "industry"}},
      {"Person",
       "A named individual, such as an executive, founder, or engineer.",
       {"Elon Musk", "Robin Zeng", "Wang Chuanfu"},
       {"role"}},
      {"Location",
       "A geographic place, such as a country, region, state, or city.",
       {"China", "Nevada", "Shanghai"},
       {}},
      {"Material",
       "A raw or processed substance used to make things.",
       {"Lithium", "Nickel", "Cobalt"},
       {}},
      {"Mine",
       "A mineral extraction site, such as an open-pit, underground, or brine operation.",
       {"Greenbushes", "Mount Marion", "Oktyabrsky"},
       {}},
      {"Product",
       "A manufactured item, component, or model that is made or sold.",
       {"Model 3", "Blade Battery", "Qilin Battery"},
       {}},
  };
  s.relation_types = {
      {"suppliesTo",
       "Connects a supplier to the buyer it delivers goods or services to.",
       {"supplies", "provides to", "sells to", "ships to", "delivers to"},
       {}},
      {"contains",
       "Connects a larger thing to a component or substance inside it.",
       {"includes", "is made of", "incorporates", "consists of"},
       {}},
      {"produces",
       "Connects a maker to the material, component, or item it makes.",
       {"makes", "manufactures", "mines", "refines", "outputs"},
       {}},
      {"locatedIn",
       "Connects something to the place where it is based or found.",
       {"based in", "headquartered in", "situated in", "found in"},
       {}},
      {"owns",
       "Connects an owner to an asset or organization in its possession.",
       {"holds", "controls", "is the parent of", "has a stake in"},
       {}},
  };
  validate_schema(s);
  return s;
}

}  // namespace skg
