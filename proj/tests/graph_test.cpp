#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "skg/exporters.hpp"
#include "skg/graph.hpp"
#include "testutil.hpp"

using namespace skg;

namespace {

CanonicalNode cnode(const std::string& id, const std::string& label, const std::string& name) {
  CanonicalNode n;
  n.canonical_id = id;
  n.label = label;
  n.display_name = name;
  n.aliases = {name};
  return n;
}

Edge cedge(const std::string& src, const std::string& type, const std::string& dst) {
  Edge e;
  e.source = src;
  e.target = dst;
  e.rel_type = type;
  return e;
}

// the diamond: D supplies B and C, both supply A
KnowledgeGraph diamond() {
  return build_graph(
      {cnode("a", "Company", "A"), cnode("b", "Company", "B"), cnode("c", "Company", "C"),
       cnode("d", "Company", "D")},
      {cedge("b", "suppliesTo", "a"), cedge("c", "suppliesTo", "a"),
       cedge("d", "suppliesTo", "b"), cedge("d", "suppliesTo", "c")},
      default_schema());
}

KnowledgeGraph casestudy() {
  static const std::string text =
      read_file((testutil::data_dir() / "casestudy" / "graph.jsonl").string());
  return load_graph_jsonl(text, default_schema());
}

}  // namespace

TEST_CASE("build_graph validates and assembles") {
  KnowledgeGraph g = build_graph({cnode("a", "Company", "A"), cnode("b", "Company", "B")},
                                 {cedge("a", "suppliesTo", "b")}, default_schema());
  CHECK(g.nodes.size() == 2);
  CHECK(g.edges.size() == 1);

  try {
    build_graph({cnode("a", "Company", "A")}, {cedge("a", "suppliesTo", "ghost")},
                default_schema());
    FAIL("expected DanglingEdge");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DanglingEdge);
  }

  try {
    build_graph({cnode("a", "Company", "A"), cnode("a", "Company", "A2")}, {}, default_schema());
    FAIL("expected DuplicateNodeId");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DuplicateNodeId);
  }
}

TEST_CASE("the bundled case-study fixture loads with its pinned census") {
  KnowledgeGraph g = casestudy();
  CHECK(g.nodes.size() == 25);
  CHECK(g.edges.size() == 28);
}

TEST_CASE("upstream tiers are minimum reverse-suppliesTo distances") {
  KnowledgeGraph g = diamond();
  TieredSubgraph t = upstream_suppliers(g, "a", 3);
  CHECK(t.tiers.at(0) == std::set<std::string>{"a"});
  CHECK(t.tiers.at(1) == std::set<std::string>{"b", "c"});
  CHECK(t.tiers.at(2) == std::set<std::string>{"d"});  // visited once, minimum tier
  CHECK(t.tiers.count(3) == 0);
  CHECK(t.edges.size() == 4);
}

TEST_CASE("upstream respects max_depth and node-type preconditions") {
  KnowledgeGraph g = diamond();
  TieredSubgraph t = upstream_suppliers(g, "a", 1);
  CHECK(t.tiers.count(2) == 0);
  CHECK(t.tiers.at(1).size() == 2);

  try {
    upstream_suppliers(g, "ghost", 2);
    FAIL("expected UnknownNode");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnknownNode);
  }

  KnowledgeGraph mat = build_graph({cnode("m", "Material", "Lithium")}, {}, default_schema());
  try {
    upstream_suppliers(mat, "m", 2);
    FAIL("expected WrongNodeType");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::WrongNodeType);
  }
}

TEST_CASE("a company with no incoming suppliesTo has no tiers beyond 0") {
  KnowledgeGraph g = build_graph({cnode("a", "Company", "A"), cnode("b", "Company", "B")},
                                 {cedge("a", "suppliesTo", "b")}, default_schema());
  TieredSubgraph t = upstream_suppliers(g, "a", 3);  // a has suppliers? only a->b exists
  CHECK(t.tiers.size() == 1);
  CHECK(t.tiers.at(0) == std::set<std::string>{"a"});
  CHECK(t.enrichment.empty());
}

TEST_CASE("upstream on the case-study graph finds Ganfeng and its mines") {
  KnowledgeGraph g = casestudy();
  TieredSubgraph t = upstream_suppliers(g, "c-audi", 3);
  CHECK(t.tiers.at(0) == std::set<std::string>{"c-audi"});
  CHECK(t.tiers.at(1) == std::set<std::string>{"c-lgchem"});
  CHECK(t.tiers.at(2) == std::set<std::string>{"c-ganfeng"});

  std::map<std::string, size_t> expected_enrichment = {
      {"m-mountmarion", 2}, {"m-mariana", 2}, {"m-sonora", 2},
      {"mat-lithium", 2},   {"p-evbattery", 1},
  };
  CHECK(t.enrichment == expected_enrichment);

  size_t mines = 0;
  for (const auto& [id, tier] : t.enrichment)
    if (g.at(id).label == "Mine") ++mines;
  CHECK(mines >= 3);
}

TEST_CASE("shared_suppliers is a symmetric tier-1 intersection with witnesses") {
  KnowledgeGraph g = casestudy();
  SupplierIntersection audi_ford = shared_suppliers(g, "c-audi", "c-ford");
  CHECK(audi_ford.suppliers == std::set<std::string>{"c-lgchem"});
  REQUIRE(audi_ford.edges.size() == 2);
  CHECK(audi_ford.edges[0].source == "c-lgchem");

  SupplierIntersection ford_audi = shared_suppliers(g, "c-ford", "c-audi");
  CHECK(ford_audi.suppliers == audi_ford.suppliers);

  // reflexive intersection is just the supplier set
  SupplierIntersection self = shared_suppliers(g, "c-ford", "c-ford");
  CHECK(self.suppliers == std::set<std::string>{"c-lgchem", "c-catl"});

  // disjoint supplier sets are empty
  SupplierIntersection none = shared_suppliers(g, "c-ganfeng", "c-audi");
  CHECK(none.suppliers.empty());
}

TEST_CASE("material_network induces the pinned producer subgraph") {
  KnowledgeGraph g = casestudy();
  Subgraph s = material_network(g, "mat-nickel");
  CHECK(s.node_ids == std::set<std::string>{"mat-nickel", "c-norilsk", "l-russia", "c-kola",
                                            "c-harjavalta", "m-oktyabrsky"});
  CHECK(s.edges.size() == 6);

  // a material nobody produces is a singleton subgraph
  KnowledgeGraph lone = build_graph({cnode("m", "Material", "Neon")}, {}, default_schema());
  Subgraph single = material_network(lone, "m");
  CHECK(single.node_ids == std::set<std::string>{"m"});
  CHECK(single.edges.empty());

  try {
    material_network(g, "c-audi");
    FAIL("expected WrongNodeType");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::WrongNodeType);
  }
}

TEST_CASE("hand-built 6-node material fixture matches the induced-subgraph oracle") {
  // producer P makes M; P sits in L, owns company S and mine X; X sits in L2
  KnowledgeGraph g = build_graph(
      {cnode("p", "Company", "P"), cnode("m", "Material", "M"), cnode("l", "Location", "L"),
       cnode("s", "Company", "S"), cnode("x", "Mine", "X"), cnode("l2", "Location", "L2")},
      {cedge("p", "produces", "m"), cedge("p", "locatedIn", "l"), cedge("p", "owns", "s"),
       cedge("p", "owns", "x"), cedge("x", "locatedIn", "l2"),
       cedge("s", "locatedIn", "l")},  // owned company's location is NOT pulled in
      default_schema());
  Subgraph sub = material_network(g, "m");
  CHECK(sub.node_ids == std::set<std::string>{"p", "m", "l", "s", "x", "l2"});
  CHECK(sub.edges.size() == 5);  // everything except s->l
  for (const auto& e : sub.edges) CHECK(!(e.source == "s" && e.target == "l"));
}

TEST_CASE("queries are read-only: the graph digest never changes") {
  KnowledgeGraph g = casestudy();
  std::string before = graph_digest(g);
  upstream_suppliers(g, "c-audi", 3);
  shared_suppliers(g, "c-audi", "c-ford");
  material_network(g, "mat-nickel");
  CHECK(graph_digest(g) == before);
}

TEST_CASE("upstream tiers equal brute-force BFS distances on random graphs") {
  std::mt19937 rng(20240818);
  for (int iter = 0; iter < 40; ++iter) {
    std::uniform_int_distribution<size_t> nodes_dist(2, 20);
    size_t n = nodes_dist(rng);
    std::vector<CanonicalNode> nodes;
    for (size_t i = 0; i < n; ++i)
      nodes.push_back(cnode("n" + std::to_string(i), "Company", "N" + std::to_string(i)));
    std::vector<Edge> edges;
    std::uniform_int_distribution<size_t> pick(0, n - 1);
    std::set<std::pair<size_t, size_t>> used;
    for (size_t e = 0; e < 2 * n; ++e) {
      size_t a = pick(rng), b = pick(rng);
      if (a == b || !used.insert({a, b}).second) continue;
      edges.push_back(cedge("n" + std::to_string(a), "suppliesTo", "n" + std::to_string(b)));
    }
    KnowledgeGraph g = build_graph(nodes, edges, default_schema());

    // brute-force shortest reverse distance by repeated relaxation
    std::map<std::string, size_t> dist;
    dist["n0"] = 0;
    for (size_t round = 0; round < n; ++round) {
      for (const auto& e : g.edges) {
        auto it = dist.find(e.target);
        if (it == dist.end()) continue;
        size_t cand = it->second + 1;
        auto [ins, fresh] = dist.emplace(e.source, cand);
        if (!fresh && cand < ins->second) ins->second = cand;
      }
    }

    size_t max_depth = 6;
    TieredSubgraph t = upstream_suppliers(g, "n0", max_depth);
    std::map<std::string, size_t> got;
    for (const auto& [tier, ids] : t.tiers)
      for (const auto& id : ids) got[id] = tier;
    std::map<std::string, size_t> expected;
    for (const auto& [id, d] : dist)
      if (d <= max_depth) expected[id] = d;
    CHECK(got == expected);
  }
}

TEST_CASE("cypher export: one MERGE statement per node, grammar smoke check") {
  KnowledgeGraph g = build_graph({cnode("t", "Company", "Tesla")}, {}, default_schema());
  std::string out = export_string(g, ExportFormat::Cypher);
  CHECK(out == "MERGE (n:Company {name: \"Tesla\"});\n");

  KnowledgeGraph cs = casestudy();
  std::string cypher = export_string(cs, ExportFormat::Cypher);
  std::istringstream lines(cypher);
  std::string line;
  size_t node_lines = 0, edge_lines = 0;
  while (std::getline(lines, line)) {
    REQUIRE(!line.empty());
    CHECK(line.back() == ';');
    if (line.rfind("MERGE ", 0) == 0) ++node_lines;
    else if (line.rfind("MATCH ", 0) == 0) {
      CHECK(line.find(" MERGE ") != std::string::npos);
      ++edge_lines;
    } else {
      FAIL("unexpected statement: " + line);
    }
  }
  CHECK(node_lines == cs.nodes.size());
  CHECK(edge_lines == cs.edges.size());
}

TEST_CASE("exports are byte-deterministic") {
  KnowledgeGraph g = casestudy();
  for (ExportFormat f : {ExportFormat::Cypher, ExportFormat::GraphML, ExportFormat::Dot,
                         ExportFormat::JsonLines}) {
    CHECK(export_string(g, f) == export_string(g, f));
  }
}

TEST_CASE("graphml export re-imports to an isomorphic graph") {
  KnowledgeGraph g = casestudy();
  auto shape = testutil::read_graphml(export_string(g, ExportFormat::GraphML));
  CHECK(shape.nodes.size() == g.nodes.size());
  CHECK(shape.edges.size() == g.edges.size());
  for (const auto& [id, n] : g.nodes) CHECK(shape.nodes.count({n.label, n.display_name}));
  for (const auto& e : g.edges) {
    const auto& s = g.at(e.source);
    const auto& t = g.at(e.target);
    CHECK(shape.edges.count({s.label + ":" + s.display_name, e.rel_type,
                             t.label + ":" + t.display_name}));
  }
}

TEST_CASE("jsonl export round-trips through the loader") {
  KnowledgeGraph g = casestudy();
  std::string jsonl = export_string(g, ExportFormat::JsonLines);
  KnowledgeGraph back = load_graph_jsonl(jsonl, default_schema());
  CHECK(back.nodes.size() == g.nodes.size());
  CHECK(back.edges.size() == g.edges.size());
  CHECK(export_string(back, ExportFormat::JsonLines) == jsonl);
}

TEST_CASE("dot export is structurally well formed") {
  KnowledgeGraph g = casestudy();
  std::string dot = export_string(g, ExportFormat::Dot);
  CHECK(dot.rfind("digraph", 0) == 0);
  CHECK(dot.find("}\n") != std::string::npos);
  size_t arrows = 0, pos = 0;
  while ((pos = dot.find(" -> ", pos)) != std::string::npos) {
    ++arrows;
    pos += 4;
  }
  CHECK(arrows == g.edges.size());
}

TEST_CASE("duplicate edges collapse during build with provenance unioned") {
  Edge e1 = cedge("a", "suppliesTo", "b");
  e1.provenance.insert({"d1", 0, "r"});
  Edge e2 = cedge("a", "suppliesTo", "b");
  e2.provenance.insert({"d2", 1, "r"});
  KnowledgeGraph g = build_graph({cnode("a", "Company", "A"), cnode("b", "Company", "B")},
                                 {e1, e2}, default_schema());
  REQUIRE(g.edges.size() == 1);
  CHECK(g.edges[0].provenance.size() == 2);
}
