#pragma once

// The two prompt families: extraction (entity + relationship instructions
// rendered from the schema) and entity disambiguation. Rendering is a pure
// function of its inputs; the template text is frozen under a version so
// recorded fixtures can detect drift.

#include <string>
#include <vector>

#include "skg/error.hpp"
#include "skg/ingest.hpp"
#include "skg/schema.hpp"

namespace skg {

inline constexpr const char* kExtractionTemplateVersion = "1.0.0";
inline constexpr const char* kDisambiguationTemplateVersion = "1.0.0";

struct PromptText {
  std::string system;
  std::string user;
  std::string template_id;       // "extraction" | "disambiguation"
  std::string template_version;
};

// The extraction output contract demanded of the model and parsed by the
// extraction stage. Kept in one place so prompt and parser cannot drift.
inline constexpr const char* kExtractionContract =
    R"({"nodes": [{"label": "<EntityType>", "name": "<display name>", "properties": {"<key>": "<value>"}}], "relationships": [{"source": "<source name>", "source_label": "<EntityType>", "target": "<target name>", "target_label": "<EntityType>", "type": "<relationType>", "properties": {}}]})";

inline PromptText build_extraction_prompt(const SchemaConfig& schema, const Chunk& chunk) {
  if (trim(chunk.text).empty()) fail(Errc::EmptyResponse, "chunk text is empty");

  std::string s;
  s.reserve(4096);
  s += "You are a supply chain information extraction engine. Read the text in the user "
       "message and extract the entities and relationships it states.\n";

  s += "\n## Entity definitions\n";
  s += "Recognize only the following entity types. Assign each extracted entity exactly one of "
       "these labels.\n";
  for (const auto& et : schema.entity_types) {
    s += "- " + et.name + ": " + et.description + " Examples: ";
    for (size_t i = 0; i < et.examples.size(); ++i) {
      if (i) s += ", ";
      s += et.examples[i];
    }
    s += ".\n";
  }

  s += "\n## Output format\n";
  s += "Reply with a single JSON object and nothing else: no prose, no code fences, no "
       "trailing commentary. The object has exactly two keys, \"nodes\" and \"relationships\", "
       "shaped like this:\n";
  s += kExtractionContract;
  s += "\nEvery property value must be a string. Do not emit keys beyond the ones shown.\n";

  s += "\n## Data handling\n";
  s += "- Extract each distinct real-world entity mentioned in the text.\n";
  s += "- Attach any additional relevant information about an entity as key-value properties "
       "on that entity, with short lowercase keys and values taken verbatim from the text.\n";
  s += "- Skip entities whose type is not defined above; never invent new types.\n";
  s += "- When the same entity is mentioned several ways, use its most complete mention as the "
       "name.\n";

  s += "\n## Relationship definition\n";
  s += "A relationship is a directed link between two extracted nodes.\n";

  s += "\n## Relationship types\n";
  s += "Capture only the following relationship types, in the stated direction.\n";
  for (const auto& rt : schema.relation_types) {
    s += "- " + rt.name + ": " + rt.description;
    if (!rt.semantic_equivalents.empty()) {
      s += " Semantic equivalents: ";
      for (size_t i = 0; i < rt.semantic_equivalents.size(); ++i) {
        if (i) s += ", ";
        s += rt.semantic_equivalents[i];
      }
      s += ".";
    }
    s += "\n";
  }

  s += "\n## Label formatting\n";
  s += "- Node labels are PascalCase, exactly as defined above.\n";
  s += "- Relationship types are lowerCamelCase, exactly as defined above.\n";
  s += "- Never add whitespace, underscores, or punctuation to a label.\n";
  s += "- Keep entity names as they appear in the text; do not rename or translate them.\n";
  s += "- Use properties for qualifiers instead of inventing new labels.\n";
  s += "- Every relationship endpoint must also appear in \"nodes\".\n";

  PromptText p;
  p.system = std::move(s);
  p.user = chunk.text;
  p.template_id = "extraction";
  p.template_version = kExtractionTemplateVersion;
  return p;
}

inline PromptText build_disambiguation_prompt(const std::string& label,
                                              const std::vector<std::string>& names) {
  if (names.empty()) fail(Errc::EmptyNameList, "no names to disambiguate for label " + label);

  std::string s;
  s += "You are an expert in semantics and entity identification.\n";
  s += "The user message lists names of entities of type " + label +
       ", one per line, numbered from 1.\n";
  s += "Assign identical group numbers to names that refer to the same real-world entity and "
       "distinct group numbers to names that refer to different entities.\n";
  s += "Reply with a single JSON array of positive integers and nothing else: no prose, no "
       "code fences. The array has exactly one integer per listed name, in the same order. "
       "Example: if the first two of three names denote the same entity, reply [1,1,2].\n";

  std::string u;
  for (size_t i = 0; i < names.size(); ++i) {
    u += std::to_string(i + 1) + ". " + names[i] + "\n";
  }

  PromptText p;
  p.system = std::move(s);
  p.user = std::move(u);
  p.template_id = "disambiguation";
  p.template_version = kDisambiguationTemplateVersion;
  return p;
}

}  // namespace skg
