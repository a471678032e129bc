#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "skg/schema.hpp"

using namespace skg;

namespace {

std::string six_type_config() {
  ordered_json j = schema_to_json(default_schema());
  return j.dump();
}

// independent normalization oracle: split on non-alphanumerics only,
// lowercase the first word for relations, capitalize the rest
std::string simple_oracle(const std::string& raw, LabelKind kind) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : raw) {
    if (is_ascii_alnum(c)) cur.push_back(c);
    else if (!cur.empty()) {
      words.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(cur);
  std::string out;
  for (size_t i = 0; i < words.size(); ++i) {
    std::string w = to_lower(words[i]);
    if (i == 0 && kind == LabelKind::Relation) out += w;
    else {
      w[0] = ascii_upper(w[0]);
      out += w;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("load_schema accepts the six-type case-study config") {
  SchemaConfig s = load_schema(six_type_config());
  CHECK(s.entity_types.size() == 6);
  CHECK(s.relation_types.size() == 5);
  CHECK(s.has_entity_type("Mine"));
  CHECK(s.has_relation_type("suppliesTo"));
}

TEST_CASE("load_schema rejects duplicate type names") {
  json j = json::parse(six_type_config());
  j["entity_types"].push_back(j["entity_types"][0]);  // Company twice
  try {
    load_schema(j.dump());
    FAIL("expected DuplicateTypeName");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DuplicateTypeName);
  }
}

TEST_CASE("load_schema rejects entity types with fewer than 3 examples") {
  json j = json::parse(six_type_config());
  for (auto& et : j["entity_types"]) {
    if (et["name"] == "Mine") et["examples"] = {"Greenbushes", "Mount Marion"};
  }
  try {
    load_schema(j.dump());
    FAIL("expected InsufficientExamples");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InsufficientExamples);
  }
}

TEST_CASE("load_schema rejects repeated examples that are not distinct") {
  json j = json::parse(six_type_config());
  for (auto& et : j["entity_types"]) {
    if (et["name"] == "Mine") et["examples"] = {"Greenbushes", "Greenbushes", "Greenbushes"};
  }
  CHECK_THROWS_AS(load_schema(j.dump()), Error);
}

TEST_CASE("load_schema rejects endpoint constraints naming undeclared types") {
  json j = json::parse(six_type_config());
  j["relation_types"][0]["endpoint_constraints"] =
      json::array({json::array({"Company", "Smelter"})});
  try {
    load_schema(j.dump());
    FAIL("expected UnknownEndpointType");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnknownEndpointType);
  }
}

TEST_CASE("load_schema rejects syntactically broken config") {
  try {
    load_schema("{not json");
    FAIL("expected MalformedConfig");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MalformedConfig);
  }
  CHECK_THROWS_AS(load_schema("{\"entity_types\": []}"), Error);
}

TEST_CASE("normalize_label canonical spellings") {
  CHECK(normalize_label("supplies to", LabelKind::Relation) == "suppliesTo");
  CHECK(normalize_label("COMPANY", LabelKind::Node) == "Company");
  CHECK(normalize_label("located_in", LabelKind::Relation) == "locatedIn");
  CHECK(normalize_label("LocatedIn", LabelKind::Relation) == "locatedIn");
  CHECK(normalize_label("Supplies To", LabelKind::Relation) == "suppliesTo");
  CHECK(normalize_label("mine", LabelKind::Node) == "Mine");
  CHECK(normalize_label("company name", LabelKind::Node) == "CompanyName");
  CHECK(normalize_label("HTMLParser", LabelKind::Node) == "HtmlParser");
  CHECK_THROWS_AS(normalize_label("   ", LabelKind::Node), Error);
  CHECK_THROWS_AS(normalize_label("1234", LabelKind::Node), Error);
}

TEST_CASE("normalize_label agrees with the split-on-separator oracle") {
  // separator-delimited inputs; camel-case splitting is covered separately
  const std::vector<std::string> corpus = {
      "supplies to", "located_in",   "owns",        "is located in", "part-of",
      "made  of",    "company",      "mine  site",  "product line",  "raw material",
      "Person",      "supplies_to",  "supplier",    "ships to",      "Mine Site",
  };
  for (const auto& raw : corpus) {
    CAPTURE(raw);
    CHECK(normalize_label(raw, LabelKind::Relation) == simple_oracle(raw, LabelKind::Relation));
    CHECK(normalize_label(raw, LabelKind::Node) == simple_oracle(raw, LabelKind::Node));
  }
}

TEST_CASE("normalize_label is idempotent and casing-valid on random input") {
  std::mt19937 rng(20240817);
  std::uniform_int_distribution<int> len(1, 24);
  std::uniform_int_distribution<int> chr(32, 126);
  int checked = 0;
  for (int iter = 0; iter < 5000; ++iter) {
    std::string raw;
    int n = len(rng);
    for (int i = 0; i < n; ++i) raw.push_back(static_cast<char>(chr(rng)));
    for (LabelKind kind : {LabelKind::Node, LabelKind::Relation}) {
      std::string once;
      try {
        once = normalize_label(raw, kind);
      } catch (const Error&) {
        continue;  // inputs with no letters are rejected, that is fine
      }
      ++checked;
      CAPTURE(raw, once);
      CHECK(normalize_label(once, kind) == once);
      if (kind == LabelKind::Node) CHECK(is_pascal_case(once));
      else CHECK(is_lower_camel_case(once));
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("default_schema matches the case-study shape and round-trips") {
  SchemaConfig s = default_schema();
  REQUIRE(s.entity_types.size() == 6);
  REQUIRE(s.relation_types.size() == 5);
  std::vector<std::string> rels;
  for (const auto& r : s.relation_types) rels.push_back(r.name);
  CHECK(rels == std::vector<std::string>{"suppliesTo", "contains", "produces", "locatedIn", "owns"});
  for (const auto& et : s.entity_types) CHECK(et.examples.size() >= 3);

  // serialized then loaded -> equal value
  SchemaConfig reloaded = load_schema(schema_to_json(s).dump());
  CHECK(reloaded == s);
}

TEST_CASE("every accepted schema has 3+ distinct examples per entity type") {
  SchemaConfig s = load_schema(six_type_config());
  for (const auto& et : s.entity_types) {
    std::set<std::string> distinct(et.examples.begin(), et.examples.end());
    CHECK(distinct.size() >= 3);
  }
}
