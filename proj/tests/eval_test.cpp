#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "skg/eval.hpp"
#include "skg/pipeline.hpp"
#include "testutil.hpp"

using namespace skg;

namespace {

Judgment judge(EvalTask task, const std::string& type, bool correct, int i) {
  Judgment j;
  j.task = task;
  j.item_id = "i" + std::to_string(i);
  j.item_type = type;
  j.correct = correct;
  return j;
}

std::vector<Judgment> batch(EvalTask task, const std::string& type, int correct, int incorrect) {
  std::vector<Judgment> out;
  for (int i = 0; i < correct; ++i) out.push_back(judge(task, type, true, i));
  for (int i = 0; i < incorrect; ++i) out.push_back(judge(task, type, false, 1000 + i));
  return out;
}

// brute-force oracle written independently of consistency_stats
struct OracleStats {
  double mean, stddev, cv, range;
};
OracleStats oracle(const std::vector<double>& v) {
  double total = 0;
  for (double x : v) total += x;
  double mean = total / double(v.size());
  double acc = 0;
  for (double x : v) acc += (x - mean) * (x - mean);
  double sd = std::sqrt(acc / double(v.size() - 1));
  double lo = v[0], hi = v[0];
  for (double x : v) {
    if (x < lo) lo = x;
    if (x > hi) hi = x;
  }
  return {mean, sd, sd / mean, hi - lo};
}

}  // namespace

TEST_CASE("accuracy is the exact correct ratio") {
  auto j = batch(EvalTask::Ner, "Company", 19, 1);
  TaskAccuracy acc = accuracy(j, EvalTask::Ner);
  CHECK(acc.ratio == 0.95);
  CHECK(acc.correct == 19);
  CHECK(acc.incorrect == 1);

  auto all_wrong = batch(EvalTask::Re, "suppliesTo", 0, 5);
  CHECK(accuracy(all_wrong, EvalTask::Re).ratio == 0.0);
}

TEST_CASE("accuracy requires at least one judgment for the task") {
  auto j = batch(EvalTask::Ner, "Company", 3, 0);
  try {
    accuracy(j, EvalTask::Ed);
    FAIL("expected EmptyJudgmentSet");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptyJudgmentSet);
  }
}

TEST_CASE("accuracy equals an independent recount on random judgment sets") {
  std::mt19937 rng(515151);
  std::uniform_int_distribution<int> size_dist(1, 100);
  std::bernoulli_distribution verdict(0.8);
  for (int iter = 0; iter < 60; ++iter) {
    std::vector<Judgment> j;
    int n = size_dist(rng);
    int correct = 0;
    for (int i = 0; i < n; ++i) {
      bool ok = verdict(rng);
      correct += ok;
      j.push_back(judge(EvalTask::Ner, "Company", ok, i));
    }
    TaskAccuracy acc = accuracy(j, EvalTask::Ner);
    CHECK(acc.ratio == double(correct) / double(n));
    CHECK(acc.correct + acc.incorrect == static_cast<size_t>(n));
  }
}

TEST_CASE("per-type accuracy omits types with no judgments") {
  std::vector<Judgment> j = batch(EvalTask::Re, "suppliesTo", 71, 29);
  auto more = batch(EvalTask::Re, "produces", 9, 1);
  j.insert(j.end(), more.begin(), more.end());

  auto by_type = accuracy_by_type(j, EvalTask::Re);
  REQUIRE(by_type.size() == 2);
  CHECK(by_type.at("suppliesTo").ratio == 0.71);
  CHECK(by_type.at("produces").ratio == 0.9);
  CHECK(by_type.count("locatedIn") == 0);  // unjudged type not reported as 0

  auto single = accuracy_by_type(batch(EvalTask::Ner, "Mine", 4, 0), EvalTask::Ner);
  REQUIRE(single.size() == 1);
  CHECK(single.at("Mine").ratio == 1.0);
}

TEST_CASE("per-type map equals a per-type recount") {
  std::mt19937 rng(77);
  const std::vector<std::string> types = {"suppliesTo", "produces", "locatedIn"};
  std::vector<Judgment> j;
  std::map<std::string, std::pair<int, int>> expect;
  std::bernoulli_distribution verdict(0.7);
  std::uniform_int_distribution<size_t> type_pick(0, types.size() - 1);
  for (int i = 0; i < 200; ++i) {
    std::string t = types[type_pick(rng)];
    bool ok = verdict(rng);
    j.push_back(judge(EvalTask::Re, t, ok, i));
    if (ok) ++expect[t].first;
    else ++expect[t].second;
  }
  auto by_type = accuracy_by_type(j, EvalTask::Re);
  for (const auto& [t, counts] : expect) {
    CHECK(by_type.at(t).correct == static_cast<size_t>(counts.first));
    CHECK(by_type.at(t).incorrect == static_cast<size_t>(counts.second));
    CHECK(by_type.at(t).ratio ==
          double(counts.first) / double(counts.first + counts.second));
  }
}

TEST_CASE("consistency_stats on a constant series") {
  SeriesStats s = consistency_stats(std::vector<double>{5, 5, 5, 5, 5, 5, 5});
  CHECK(s.mean == 5.0);
  CHECK(s.stddev == 0.0);
  CHECK(s.cv == 0.0);
  CHECK(s.range == 0.0);
}

TEST_CASE("consistency_stats matches the arithmetic reference to 1e-6") {
  SeriesStats s = consistency_stats(std::vector<double>{1, 2, 3, 4, 5, 6, 7});
  CHECK(s.mean == Catch::Approx(4.0).epsilon(1e-9));
  CHECK(s.stddev == Catch::Approx(2.160247).epsilon(1e-6));
  CHECK(s.cv == Catch::Approx(0.540062).epsilon(1e-6));
  CHECK(s.range == 6.0);
}

TEST_CASE("consistency_stats error paths") {
  try {
    consistency_stats(std::vector<double>{42});
    FAIL("expected DegenerateSeries");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DegenerateSeries);
  }
  try {
    consistency_stats(std::vector<double>{0, 0, 0});
    FAIL("expected ZeroMeanCV");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ZeroMeanCV);
  }
}

TEST_CASE("the reference consistency row rounds to the published cv") {
  // node-count series shape: mean 223.86, std 6.22 -> cv 0.03 at 2 decimals
  double cv = 6.22 / 223.86;
  CHECK(format_fixed(cv, 2) == "0.03");
  CHECK(format_fixed(5.55 / 137.43, 2) == "0.04");
}

TEST_CASE("consistency_stats equals the brute-force oracle on random vectors") {
  std::mt19937 rng(909090);
  std::uniform_int_distribution<size_t> len(2, 50);
  std::uniform_real_distribution<double> value(0.0, 1000.0);
  for (int iter = 0; iter < 100; ++iter) {
    std::vector<double> v(len(rng));
    for (auto& x : v) x = value(rng);
    SeriesStats got = consistency_stats(v);
    OracleStats want = oracle(v);
    CHECK(std::abs(got.mean - want.mean) < 1e-9);
    CHECK(std::abs(got.stddev - want.stddev) < 1e-9);
    CHECK(std::abs(got.cv - want.cv) < 1e-9);
    CHECK(std::abs(got.range - want.range) < 1e-9);
  }
}

TEST_CASE("a 7-run replay experiment recomputes from its own raw counts") {
  RunConfig cfg = load_run_config((testutil::data_dir() / "config" / "replay.json").string());
  SchemaConfig schema = load_schema_file(cfg.schema_path);
  auto docs = load_corpus(corpus_manifest(cfg), 2);

  auto backend_for_run = [&](size_t i) -> std::shared_ptr<LlmBackend> {
    auto store = FixtureStore::load((testutil::data_dir() / "fixtures" / "runs" /
                                     ("run" + std::to_string(i + 1) + ".jsonl")).string());
    return std::make_shared<ReplayBackend>(store);
  };
  ConsistencyReport report =
      consistency_run(docs, schema, backend_for_run, 7, cfg.chunk_budget, 2);

  CHECK(report.runs == 7);
  REQUIRE(report.per_run_counts.size() == 7);

  // the report's stats recompute from its own per-run counts
  auto series = consistency_series(report.per_run_counts);
  for (const auto& [name, values] : series) {
    bool all_zero = true;
    for (double v : values) all_zero &= v == 0.0;
    if (all_zero) {
      CHECK(report.stats.count(name) == 0);
      continue;
    }
    OracleStats want = oracle(values);
    const SeriesStats& got = report.stats.at(name);
    CHECK(std::abs(got.mean - want.mean) < 1e-9);
    CHECK(std::abs(got.stddev - want.stddev) < 1e-9);
    CHECK(std::abs(got.cv - want.cv) < 1e-9);
    CHECK(std::abs(got.range - want.range) < 1e-9);
  }

  // run-to-run variation exists in the fixture namespaces
  CHECK(report.stats.at("nodes").stddev > 0.0);
}

TEST_CASE("two identical replay runs give zero deviation") {
  RunConfig cfg = load_run_config((testutil::data_dir() / "config" / "replay.json").string());
  SchemaConfig schema = load_schema_file(cfg.schema_path);
  auto docs = load_corpus(corpus_manifest(cfg), 2);
  auto backend_for_run = [&](size_t) -> std::shared_ptr<LlmBackend> {
    return make_backend(cfg);  // same store both times
  };
  ConsistencyReport report = consistency_run(docs, schema, backend_for_run, 2, cfg.chunk_budget, 2);
  for (const auto& [name, s] : report.stats) {
    CHECK(s.stddev == 0.0);
    CHECK(s.cv == 0.0);
    CHECK(s.range == 0.0);
  }
}

TEST_CASE("consistency report columns follow the reference order") {
  ConsistencyReport report;
  report.runs = 2;
  report.stats["nodes"] = {10, 1, 0.1, 2};
  std::string md = render_consistency_markdown(report);
  CHECK(md.find("| Series | Mean | Standard Deviation | Coefficient of Variation | Range |") !=
        std::string::npos);
  // rendering is a pure function of the report value
  CHECK(render_consistency_markdown(report) == md);
}

TEST_CASE("judgment csv parsing validates tasks, verdicts, and types") {
  SchemaConfig schema = default_schema();
  std::string csv =
      "task,item_id,item_type,verdict\n"
      "ner,n1,Company,correct\n"
      "re,r1,suppliesTo,incorrect\n"
      "ed,e1,Company,correct\n";
  auto j = parse_judgments(csv, &schema);
  REQUIRE(j.size() == 3);
  CHECK(j[0].task == EvalTask::Ner);
  CHECK(j[0].correct);
  CHECK(j[1].task == EvalTask::Re);
  CHECK_FALSE(j[1].correct);

  CHECK_THROWS_AS(parse_judgments("task,item_id,item_type,verdict\nner,n1,Ghost,correct\n", &schema),
                  Error);
  CHECK_THROWS_AS(parse_judgments("task,item_id,item_type,verdict\nre,r1,ghostRel,correct\n", &schema),
                  Error);
  CHECK_THROWS_AS(parse_judgments("task,item_id,item_type,verdict\nner,n1,Company,maybe\n", &schema),
                  Error);
  CHECK_THROWS_AS(parse_judgments("task,item_id,item_type,verdict\nfoo,n1,Company,correct\n", &schema),
                  Error);
}

TEST_CASE("accuracy report renders both tables and full-precision json") {
  auto judgments = parse_judgments(
      read_file((testutil::data_dir() / "judgments" / "overall.csv").string()),
      nullptr);
  AccuracyReport report = build_accuracy_report(judgments);
  CHECK(report.per_task.at("ner").ratio == 0.95);
  CHECK(report.per_task.at("re").ratio == 0.82);
  CHECK(report.per_task.at("ed").ratio == 0.98);

  std::string md = render_accuracy_markdown(report);
  CHECK(md.find("| ner | 0.95 | 95 | 5 |") != std::string::npos);
  CHECK(render_accuracy_markdown(report) == md);

  auto j = accuracy_report_json(report);
  CHECK(j["per_task"]["ner"]["accuracy"].get<double>() == 0.95);
}
