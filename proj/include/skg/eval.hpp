#pragma once

// Accuracy metrics over human judgment files (ratio of correct to judged
// items, overall and per type) and the N-run consistency experiment with
// mean / sample standard deviation / coefficient of variation / range per
// count series.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skg/error.hpp"
#include "skg/extract.hpp"
#include "skg/schema.hpp"
#include "skg/util.hpp"

namespace skg {

enum class EvalTask { Ner, Re, Ed };

inline const char* task_name(EvalTask t) {
  switch (t) {
    case EvalTask::Ner: return "ner";
    case EvalTask::Re: return "re";
    case EvalTask::Ed: return "ed";
  }
  return "ner";
}

inline EvalTask task_from(const std::string& s) {
  if (s == "ner") return EvalTask::Ner;
  if (s == "re") return EvalTask::Re;
  if (s == "ed") return EvalTask::Ed;
  fail(Errc::MalformedConfig, "unknown task '" + s + "' (ner|re|ed)");
}

struct Judgment {
  EvalTask task = EvalTask::Ner;
  std::string item_id;
  std::string item_type;
  bool correct = false;
};

// CSV with header task,item_id,item_type,verdict. When a schema is given,
// item types are validated against it for ner/re rows.
inline std::vector<Judgment> parse_judgments(const std::string& text,
                                             const SchemaConfig* schema = nullptr) {
  std::vector<Judgment> out;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = parse_csv_line(line);
    if (lineno == 1 && !fields.empty() && to_lower(fields[0]) == "task") continue;  // header
    if (fields.size() != 4)
      fail(Errc::MalformedConfig,
           "judgment line " + std::to_string(lineno) + " needs 4 fields, got " +
               std::to_string(fields.size()));
    Judgment j;
    j.task = task_from(trim(fields[0]));
    j.item_id = trim(fields[1]);
    j.item_type = trim(fields[2]);
    std::string verdict = to_lower(trim(fields[3]));
    if (verdict != "correct" && verdict != "incorrect")
      fail(Errc::MalformedConfig,
           "judgment line " + std::to_string(lineno) + " verdict must be correct|incorrect");
    j.correct = verdict == "correct";
    if (schema) {
      if (j.task == EvalTask::Ner && !schema->has_entity_type(j.item_type))
        fail(Errc::MalformedConfig, "judgment line " + std::to_string(lineno) +
                                        " references undeclared entity type " + j.item_type);
      if (j.task == EvalTask::Re && !schema->has_relation_type(j.item_type))
        fail(Errc::MalformedConfig, "judgment line " + std::to_string(lineno) +
                                        " references undeclared relation type " + j.item_type);
    }
    out.push_back(std::move(j));
  }
  return out;
}

struct TaskAccuracy {
  double ratio = 0.0;  // correct / (correct + incorrect), exact
  size_t correct = 0;
  size_t incorrect = 0;
};

inline TaskAccuracy accuracy(const std::vector<Judgment>& judgments, EvalTask task) {
  TaskAccuracy acc;
  for (const auto& j : judgments) {
    if (j.task != task) continue;
    if (j.correct) ++acc.correct;
    else ++acc.incorrect;
  }
  size_t total = acc.correct + acc.incorrect;
  if (total == 0)
    fail(Errc::EmptyJudgmentSet, std::string("no judgments for task ") + task_name(task));
  acc.ratio = static_cast<double>(acc.correct) / static_cast<double>(total);
  return acc;
}

// Per-type accuracy; types with zero judgments are omitted, not reported as 0.
inline std::map<std::string, TaskAccuracy> accuracy_by_type(const std::vector<Judgment>& judgments,
                                                            EvalTask task) {
  std::map<std::string, TaskAccuracy> by_type;
  size_t total = 0;
  for (const auto& j : judgments) {
    if (j.task != task) continue;
    ++total;
    auto& acc = by_type[j.item_type];
    if (j.correct) ++acc.correct;
    else ++acc.incorrect;
  }
  if (total == 0)
    fail(Errc::EmptyJudgmentSet, std::string("no judgments for task ") + task_name(task));
  for (auto& [_, acc] : by_type)
    acc.ratio = static_cast<double>(acc.correct) / static_cast<double>(acc.correct + acc.incorrect);
  return by_type;
}

struct AccuracyReport {
  std::map<std::string, TaskAccuracy> per_task;                        // task name -> accuracy
  std::map<std::pair<std::string, std::string>, TaskAccuracy> per_type;  // (task, type)
};

inline AccuracyReport build_accuracy_report(const std::vector<Judgment>& judgments) {
  AccuracyReport report;
  for (EvalTask task : {EvalTask::Ner, EvalTask::Re, EvalTask::Ed}) {
    bool any = std::any_of(judgments.begin(), judgments.end(),
                           [&](const Judgment& j) { return j.task == task; });
    if (!any) continue;
    report.per_task[task_name(task)] = accuracy(judgments, task);
    for (const auto& [type, acc] : accuracy_by_type(judgments, task))
      report.per_type[{task_name(task), type}] = acc;
  }
  if (report.per_task.empty()) fail(Errc::EmptyJudgmentSet, "judgment file has no rows");
  return report;
}

struct SeriesStats {
  double mean = 0.0;
  double stddev = 0.0;  // sample convention, divisor n-1
  double cv = 0.0;      // stddev / mean
  double range = 0.0;   // max - min
};

inline SeriesStats consistency_stats(std::span<const double> counts) {
  if (counts.size() < 2)
    fail(Errc::DegenerateSeries,
         "need at least 2 observations, got " + std::to_string(counts.size()));
  SeriesStats s;
  double sum = 0.0, lo = counts[0], hi = counts[0];
  for (double v : counts) {
    sum += v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  s.mean = sum / static_cast<double>(counts.size());
  double ss = 0.0;
  for (double v : counts) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(counts.size() - 1));
  if (s.mean == 0.0) fail(Errc::ZeroMeanCV, "coefficient of variation undefined for zero mean");
  s.cv = s.stddev / s.mean;
  s.range = hi - lo;
  return s;
}

inline SeriesStats consistency_stats(const std::vector<double>& counts) {
  return consistency_stats(std::span<const double>(counts));
}

struct RunCounts {
  size_t nodes = 0;
  size_t relations = 0;
  std::map<std::string, size_t> nodes_per_type;
  std::map<std::string, size_t> relations_per_type;
};

struct ConsistencyReport {
  size_t runs = 0;
  std::vector<RunCounts> per_run_counts;
  std::map<std::string, SeriesStats> stats;  // series name -> stats
};

// Series naming: "nodes", "relations", "node:<EntityType>", "rel:<relType>".
inline std::map<std::string, std::vector<double>> consistency_series(
    const std::vector<RunCounts>& per_run) {
  std::map<std::string, std::vector<double>> series;
  std::set<std::string> node_types, rel_types;
  for (const auto& rc : per_run) {
    for (const auto& [t, _] : rc.nodes_per_type) node_types.insert(t);
    for (const auto& [t, _] : rc.relations_per_type) rel_types.insert(t);
  }
  for (const auto& rc : per_run) {
    series["nodes"].push_back(static_cast<double>(rc.nodes));
    series["relations"].push_back(static_cast<double>(rc.relations));
    for (const auto& t : node_types) {
      auto it = rc.nodes_per_type.find(t);
      series["node:" + t].push_back(it == rc.nodes_per_type.end() ? 0.0 : double(it->second));
    }
    for (const auto& t : rel_types) {
      auto it = rc.relations_per_type.find(t);
      series["rel:" + t].push_back(it == rc.relations_per_type.end() ? 0.0 : double(it->second));
    }
  }
  return series;
}

// Executes extraction n_runs times (replay mode expects one fixture
// namespace per run) and reduces the count series to per-series stats.
// Series whose mean is zero are left out of stats; the raw counts stay.
inline ConsistencyReport consistency_run(
    const std::vector<Document>& docs, const SchemaConfig& schema,
    const std::function<std::shared_ptr<LlmBackend>(size_t run_index)>& backend_for_run,
    size_t n_runs, size_t chunk_budget = 1500, size_t parallelism = 1,
    const ExtractOptions& options = {}) {
  if (n_runs < 2) fail(Errc::DegenerateSeries, "consistency experiment needs at least 2 runs");

  ConsistencyReport report;
  report.runs = n_runs;
  for (size_t i = 0; i < n_runs; ++i) {
    std::string run_id = "run" + std::to_string(i + 1);
    auto backend = backend_for_run(i);
    std::pair<std::vector<ExtractionResult>, CorpusCounts> out;
    try {
      out = extract_corpus(docs, schema, *backend, parallelism, run_id, chunk_budget,
                           /*fail_fast=*/true, options);
    } catch (const Error& e) {
      throw Error(e.code(), std::string(e.what()) + " [run=" + run_id + "]", e.detail());
    }
    RunCounts rc;
    rc.nodes = out.second.total_nodes;
    rc.relations = out.second.total_relations;
    rc.nodes_per_type = out.second.nodes_per_type;
    rc.relations_per_type = out.second.relations_per_type;
    report.per_run_counts.push_back(std::move(rc));
  }

  for (const auto& [name, values] : consistency_series(report.per_run_counts)) {
    bool all_zero = std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
    if (all_zero) continue;
    report.stats[name] = consistency_stats(values);
  }
  return report;
}

// --- rendering (pure functions of the report values) ---------------------

inline std::string render_accuracy_markdown(const AccuracyReport& report) {
  std::string out;
  out += "| Task | Accuracy | Correct | Incorrect |\n";
  out += "|---|---|---|---|\n";
  for (const auto& [task, acc] : report.per_task) {
    out += "| " + task + " | " + format_fixed(acc.ratio, 2) + " | " + std::to_string(acc.correct) +
           " | " + std::to_string(acc.incorrect) + " |\n";
  }
  out += "\n| Task | Type | Accuracy | Correct | Incorrect |\n";
  out += "|---|---|---|---|---|\n";
  for (const auto& [key, acc] : report.per_type) {
    out += "| " + key.first + " | " + key.second + " | " + format_fixed(acc.ratio, 2) + " | " +
           std::to_string(acc.correct) + " | " + std::to_string(acc.incorrect) + " |\n";
  }
  return out;
}

inline nlohmann::ordered_json accuracy_report_json(const AccuracyReport& report) {
  nlohmann::ordered_json j;
  j["per_task"] = nlohmann::ordered_json::object();
  for (const auto& [task, acc] : report.per_task) {
    j["per_task"][task] = {{"accuracy", acc.ratio},
                           {"correct", acc.correct},
                           {"incorrect", acc.incorrect}};
  }
  j["per_type"] = nlohmann::ordered_json::array();
  for (const auto& [key, acc] : report.per_type) {
    j["per_type"].push_back({{"task", key.first},
                             {"type", key.second},
                             {"accuracy", acc.ratio},
                             {"correct", acc.correct},
                             {"incorrect", acc.incorrect}});
  }
  return j;
}

// Column order follows the reference presentation: Mean, Standard
// Deviation, Coefficient of Variation, Range. Display rounding is two
// decimals; machine output keeps full precision.
inline std::string render_consistency_markdown(const ConsistencyReport& report) {
  std::string out;
  out += "Runs: " + std::to_string(report.runs) + "\n\n";
  out += "| Series | Mean | Standard Deviation | Coefficient of Variation | Range |\n";
  out += "|---|---|---|---|---|\n";
  for (const auto& [name, s] : report.stats) {
    out += "| " + name + " | " + format_fixed(s.mean, 2) + " | " + format_fixed(s.stddev, 2) +
           " | " + format_fixed(s.cv, 2) + " | " + format_fixed(s.range, 2) + " |\n";
  }
  return out;
}

inline nlohmann::ordered_json consistency_report_json(const ConsistencyReport& report) {
  nlohmann::ordered_json j;
  j["runs"] = report.runs;
  j["per_run_counts"] = nlohmann::ordered_json::array();
  for (size_t i = 0; i < report.per_run_counts.size(); ++i) {
    const auto& rc = report.per_run_counts[i];
    nlohmann::ordered_json r;
    r["run"] = i + 1;
    r["nodes"] = rc.nodes;
    r["relations"] = rc.relations;
    r["nodes_per_type"] = nlohmann::ordered_json(rc.nodes_per_type);
    r["relations_per_type"] = nlohmann::ordered_json(rc.relations_per_type);
    j["per_run_counts"].push_back(std::move(r));
  }
  j["stats"] = nlohmann::ordered_json::object();
  for (const auto& [name, s] : report.stats) {
    j["stats"][name] = {{"mean", s.mean},
                        {"stddev", s.stddev},
                        {"cv", s.cv},
                        {"range", s.range}};
  }
  return j;
}

}  // namespace skg
