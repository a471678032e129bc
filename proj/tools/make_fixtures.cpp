// Builds the recorded LLM fixture stores shipped under data/fixtures/ by
// running the pipeline against a deterministic, rule-based stand-in backend
// (dictionary entity spotting + cue-phrase relations + an alias table for
// disambiguation). Re-running this tool regenerates byte-identical stores.
//
// Usage: skg_make_fixtures <data_dir>
//   writes <data_dir>/fixtures/extraction.jsonl
//          <data_dir>/fixtures/runs/run{1..7}.jsonl

#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "skg/disambiguate.hpp"
#include "skg/extract.hpp"
#include "skg/ingest.hpp"
#include "skg/llm.hpp"
#include "skg/pipeline.hpp"
#include "skg/schema.hpp"

namespace fs = std::filesystem;
using namespace skg;

namespace {

constexpr const char* kRecordedAt = "2025-01-01T00:00:00Z";

uint64_t fnv1a(std::string_view s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

struct DictEntry {
  std::string name;
  std::string label;
};

// Case-sensitive, longest-match-first, word-boundary entity spotting.
const std::vector<DictEntry>& dictionary() {
  static const std::vector<DictEntry> dict = [] {
    std::vector<DictEntry> d = {
        {"Contemporary Amperex Technology Co., Limited", "Company"},
        {"Ganfeng Lithium Co., Ltd.", "Company"},
        {"Norilsk Nickel", "Company"},
        {"Ganfeng Lithium", "Company"},
        {"Tesla Motors", "Company"},
        {"Tesla, Inc.", "Company"},
        {"Panasonic", "Company"},
        {"LG Chem", "Company"},
        {"Toyota", "Company"},
        {"Tesla", "Company"},
        {"CATL", "Company"},
        {"BMW", "Company"},
        {"Ford", "Company"},
        {"Elon Musk", "Person"},
        {"Robin Zeng", "Person"},
        {"Li Liangbin", "Person"},
        {"Austin", "Location"},
        {"Texas", "Location"},
        {"Ningde", "Location"},
        {"Fujian", "Location"},
        {"Xinyu", "Location"},
        {"Jiangxi", "Location"},
        {"Australia", "Location"},
        {"Argentina", "Location"},
        {"Russia", "Location"},
        {"Lithium", "Material"},
        {"Nickel", "Material"},
        {"Cobalt", "Material"},
        {"Mount Marion Mine", "Mine"},
        {"Mariana Mine", "Mine"},
        {"Sonora Mine", "Mine"},
        {"Model 3", "Product"},
        {"Model Y", "Product"},
        {"Qilin Battery", "Product"},
    };
    std::sort(d.begin(), d.end(),
              [](const DictEntry& a, const DictEntry& b) { return a.name.size() > b.name.size(); });
    return d;
  }();
  return dict;
}

struct Mention {
  std::string name;
  std::string label;
  size_t pos = 0;
};

std::vector<Mention> spot_mentions(const std::string& sentence) {
  std::vector<Mention> mentions;
  size_t i = 0;
  while (i < sentence.size()) {
    bool matched = false;
    if (i == 0 || !is_ascii_alnum(sentence[i - 1])) {
      for (const auto& entry : dictionary()) {
        if (sentence.compare(i, entry.name.size(), entry.name) != 0) continue;
        size_t end = i + entry.name.size();
        if (end < sentence.size() && is_ascii_alnum(sentence[end])) continue;
        mentions.push_back({entry.name, entry.label, i});
        i = end;
        matched = true;
        break;
      }
    }
    if (!matched) ++i;
  }
  return mentions;
}

struct Cue {
  std::string phrase;
  std::string rel;      // emitted relation type
  bool reversed;        // true: target -> source
  std::set<std::string> source_labels;  // empty = any
  std::set<std::string> target_labels;
};

const std::vector<Cue>& cues() {
  static const std::vector<Cue> c = {
      {"headquartered in", "locatedIn", false, {}, {"Location"}},
      {"based in", "locatedIn", false, {}, {"Location"}},
      {"located in", "locatedIn", false, {}, {"Location"}},
      {"city in", "locatedIn", false, {"Location"}, {"Location"}},
      {"owned by", "owns", true, {"Company", "Mine"}, {"Company"}},
      {"subsidiary of", "owns", true, {"Company"}, {"Company"}},
      {"owns", "owns", false, {"Company"}, {"Company", "Mine"}},
      {"acquired", "owns", false, {"Company"}, {"Company", "Mine"}},
      {"supplied by", "suppliesTo", true, {"Company"}, {"Company"}},
      {"supplies", "suppliesTo", false, {"Company"}, {"Company"}},
      {"sells", "suppliesTo", false, {"Company"}, {"Company"}},
      {"ships", "suppliesTo", false, {"Company"}, {"Company"}},
      {"delivers", "suppliesTo", false, {"Company"}, {"Company"}},
      {"produces", "produces", false, {"Company"}, {"Material", "Product"}},
      {"makes", "produces", false, {"Company"}, {"Material", "Product"}},
      {"manufactures", "produces", false, {"Company"}, {"Material", "Product"}},
      {"mines", "produces", false, {"Company"}, {"Material"}},
      {"refines", "produces", false, {"Company"}, {"Material"}},
      {"contain", "contains", false, {"Product", "Company"}, {"Material"}},
      {"made of", "contains", false, {"Product"}, {"Material"}},
      {" in ", "locatedIn", false, {}, {"Location"}},
  };
  return c;
}

// Deterministic stand-in for the extraction model: spot entities, derive
// relations from cue phrases between mention pairs, attach a founded-year
// property when the sentence states one.
std::string extraction_response(const std::string& chunk_text, int variant) {
  auto keep = [&](const std::string& name) {
    if (variant == 0) return true;
    return (fnv1a(name) + 31ULL * static_cast<uint64_t>(variant)) % 7 != 0;
  };
  auto duplicate = [&](const std::string& name) {
    if (variant == 0) return false;
    return (fnv1a(name) + 17ULL * static_cast<uint64_t>(variant)) % 11 == 0;
  };

  std::vector<ExtractedNode> nodes;
  std::set<NodeKey> node_seen;
  std::vector<std::tuple<std::string, std::string, std::string, std::string, std::string>> rels;
  std::set<std::string> rel_seen;

  for (const std::string& sentence : segment_sentences(chunk_text)) {
    std::vector<Mention> mentions;
    for (auto& m : spot_mentions(sentence)) {
      if (keep(m.name)) mentions.push_back(std::move(m));
    }

    // founded-year property on the first company mention
    std::string founded;
    size_t fpos = sentence.find("founded");
    if (fpos != std::string::npos) {
      for (size_t i = fpos; i + 4 <= sentence.size(); ++i) {
        if (is_ascii_digit(sentence[i]) && i + 4 <= sentence.size() &&
            is_ascii_digit(sentence[i + 1]) && is_ascii_digit(sentence[i + 2]) &&
            is_ascii_digit(sentence[i + 3])) {
          founded = sentence.substr(i, 4);
          break;
        }
      }
    }
    std::string role;
    if (sentence.find("chairman") != std::string::npos) role = "chairman";

    for (const auto& m : mentions) {
      NodeKey key{m.label, m.name};
      bool fresh = node_seen.insert(key).second;
      if (fresh || duplicate(m.name)) {
        ExtractedNode n;
        n.label = m.label;
        n.name = m.name;
        if (!founded.empty() && m.label == "Company") n.properties["founded"] = founded;
        if (!role.empty() && m.label == "Person") n.properties["role"] = role;
        nodes.push_back(std::move(n));
      }
    }

    for (size_t i = 0; i < mentions.size(); ++i) {
      for (size_t j = i + 1; j < mentions.size(); ++j) {
        const Mention& a = mentions[i];
        const Mention& b = mentions[j];
        std::string between = sentence.substr(a.pos + a.name.size(), b.pos - a.pos - a.name.size());
        for (const auto& cue : cues()) {
          if (between.find(cue.phrase) == std::string::npos) continue;
          const Mention& src = cue.reversed ? b : a;
          const Mention& dst = cue.reversed ? a : b;
          if (!cue.source_labels.empty() && !cue.source_labels.count(src.label)) continue;
          if (!cue.target_labels.empty() && !cue.target_labels.count(dst.label)) continue;
          std::string sig = src.label + "|" + src.name + "|" + cue.rel + "|" + dst.label + "|" +
                            dst.name;
          if (rel_seen.insert(sig).second)
            rels.emplace_back(src.name, src.label, dst.name, dst.label, cue.rel);
          break;
        }
      }
    }
  }

  nlohmann::ordered_json j;
  j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& n : nodes) {
    j["nodes"].push_back({{"label", n.label},
                          {"name", n.name},
                          {"properties", nlohmann::ordered_json(n.properties)}});
  }
  j["relationships"] = nlohmann::ordered_json::array();
  for (const auto& [src, src_label, dst, dst_label, rel] : rels) {
    j["relationships"].push_back({{"source", src},
                                  {"source_label", src_label},
                                  {"target", dst},
                                  {"target_label", dst_label},
                                  {"type", rel},
                                  {"properties", nlohmann::ordered_json::object()}});
  }
  std::string body = j.dump();

  // one chunk ships fenced + prose-wrapped so replay exercises the repair path
  if (chunk_text.rfind("Contemporary Amperex", 0) == 0) {
    return "Here is the output:\n```json\n" + body + "\n```";
  }
  return body;
}

// Alias classes the disambiguation stand-in merges; everything else is its
// own entity.
std::string alias_class(const std::string& name) {
  static const std::map<std::string, std::string> classes = {
      {"Tesla", "tesla"},
      {"Tesla, Inc.", "tesla"},
      {"Tesla Motors", "tesla"},
      {"CATL", "catl"},
      {"Contemporary Amperex Technology Co., Limited", "catl"},
      {"Ganfeng Lithium", "ganfeng"},
      {"Ganfeng Lithium Co., Ltd.", "ganfeng"},
  };
  auto it = classes.find(name);
  return it == classes.end() ? "self:" + name : it->second;
}

std::string disambiguation_response(const std::string& user_text) {
  std::vector<std::string> names;
  std::istringstream in(user_text);
  std::string line;
  while (std::getline(in, line)) {
    size_t dot = line.find(". ");
    if (dot == std::string::npos) continue;
    names.push_back(line.substr(dot + 2));
  }
  std::map<std::string, long> group_of;
  long next = 0;
  std::string out = "[";
  for (size_t i = 0; i < names.size(); ++i) {
    std::string cls = alias_class(names[i]);
    auto [it, inserted] = group_of.emplace(cls, next + 1);
    if (inserted) ++next;
    if (i) out += ",";
    out += std::to_string(it->second);
  }
  out += "]";
  return out;
}

class ScriptedBackend : public LlmBackend {
public:
  explicit ScriptedBackend(int variant) : variant_(variant) {}

  LlmResponse complete(const LlmRequest& req) override {
    LlmResponse resp;
    if (req.system.rfind("You are an expert in semantics", 0) == 0) {
      resp.content = disambiguation_response(req.user);
    } else {
      resp.content = extraction_response(req.user, variant_);
    }
    return resp;
  }

private:
  int variant_;
};

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: skg_make_fixtures <data_dir>\n";
    return 1;
  }
  fs::path data_dir = argv[1];
  try {
    SchemaConfig schema = load_schema_file((data_dir / "schema" / "default_schema.json").string());
    auto entries = load_manifest((data_dir / "corpus" / "manifest.jsonl").string());
    auto docs = load_corpus(entries, 1);

    RunConfig cfg = load_run_config((data_dir / "config" / "replay.json").string());
    ExtractOptions opts{cfg.model, cfg.temperature, cfg.max_output_tokens};

    fs::create_directories(data_dir / "fixtures" / "runs");

    // pipeline store: extraction + disambiguation exchanges
    {
      fs::path store_path = data_dir / "fixtures" / "extraction.jsonl";
      fs::remove(store_path);
      auto store = std::make_shared<FixtureStore>();
      store->attach(store_path.string());
      ScriptedBackend scripted(0);
      RecordingBackend recorder(scripted, store, kRecordedAt);
      auto [results, counts] =
          extract_corpus(docs, schema, recorder, 1, "fixture", cfg.chunk_budget, true, opts);
      DisambiguateOptions dopts;
      dopts.model = cfg.model;
      dopts.temperature = cfg.temperature;
      dopts.max_output_tokens = cfg.max_output_tokens;
      auto out = disambiguate_graph(results, schema, recorder, dopts);
      std::cout << "extraction.jsonl: " << store->size() << " exchanges, counts "
                << counts.total_nodes << " nodes / " << counts.total_relations
                << " relations, graph " << out.graph.nodes.size() << " nodes / "
                << out.graph.edges.size() << " edges\n";
    }

    // seven consistency namespaces with per-run variation
    for (int run = 1; run <= 7; ++run) {
      fs::path store_path = data_dir / "fixtures" / "runs" / ("run" + std::to_string(run) + ".jsonl");
      fs::remove(store_path);
      auto store = std::make_shared<FixtureStore>();
      store->attach(store_path.string());
      ScriptedBackend scripted(run);
      RecordingBackend recorder(scripted, store, kRecordedAt);
      auto [results, counts] = extract_corpus(docs, schema, recorder, 1,
                                              "run" + std::to_string(run), cfg.chunk_budget, true,
                                              opts);
      std::cout << "run" << run << ".jsonl: " << counts.total_nodes << " nodes / "
                << counts.total_relations << " relations\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
