#include "rmf/io/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "rmf/error.hpp"

namespace rmf::io {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void expect_schema(const json& j, const char* schema) {
  if (!j.is_object() || !j.contains("schema") || j.at("schema") != schema)
    throw UnsupportedFormat(std::string("expected a JSON document with schema ") + schema);
}

template <typename F>
auto guarded(F f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed report JSON: ") + e.what());
  }
}

}  // namespace

ordered_json to_json(const PipelineScoreTable& t) {
  ordered_json rows = ordered_json::array();
  for (const auto& r : t.rows) {
    ordered_json row;
    row["dataset"] = r.dataset;
    row["subject"] = r.subject;
    row["session"] = r.session;
    row["fold"] = r.fold;
    row["auc"] = r.auc ? ordered_json(*r.auc) : ordered_json(nullptr);
    if (t.timing_recorded) row["fold_time_seconds"] = r.fold_time_seconds;
    if (!r.error.empty()) row["error"] = r.error;
    rows.push_back(std::move(row));
  }
  ordered_json j;
  j["schema"] = kScoreTableSchema;
  j["pipeline"] = t.pipeline;
  j["timing_recorded"] = t.timing_recorded;
  j["rows"] = std::move(rows);
  return j;
}

ordered_json to_json(const MetaReport& r) {
  ordered_json ds = ordered_json::array();
  for (const auto& d : r.datasets) {
    ordered_json e;
    e["dataset"] = d.dataset;
    e["n_subjects"] = d.n_subjects;
    e["smd"] = d.effect.smd;
    e["ci_low"] = d.effect.ci_low;
    e["ci_high"] = d.effect.ci_high;
    e["degenerate"] = d.effect.degenerate;
    e["p"] = d.p;
    e["test"] = d.test;
    e["weight"] = d.weight;
    ds.push_back(std::move(e));
  }
  ordered_json j;
  j["schema"] = kMetaReportSchema;
  j["pipeline_a"] = r.pipeline_a;
  j["pipeline_b"] = r.pipeline_b;
  j["datasets"] = std::move(ds);
  j["meta"] = {{"smd", r.meta_smd}, {"p", r.combined_p}};
  return j;
}

PipelineScoreTable score_table_from_json(const json& j) {
  expect_schema(j, kScoreTableSchema);
  return guarded([&] {
    PipelineScoreTable t;
    t.pipeline = j.at("pipeline").get<std::string>();
    t.timing_recorded = j.at("timing_recorded").get<bool>();
    for (const auto& row : j.at("rows")) {
      ScoreRow r;
      r.dataset = row.at("dataset").get<std::string>();
      r.subject = row.at("subject").get<std::string>();
      r.session = row.at("session").get<std::string>();
      r.fold = row.at("fold").get<int>();
      if (!row.at("auc").is_null()) r.auc = row.at("auc").get<double>();
      r.fold_time_seconds = row.value("fold_time_seconds", 0.0);
      r.error = row.value("error", std::string());
      t.rows.push_back(std::move(r));
    }
    return t;
  });
}

MetaReport meta_report_from_json(const json& j) {
  expect_schema(j, kMetaReportSchema);
  return guarded([&] {
    MetaReport r;
    r.pipeline_a = j.at("pipeline_a").get<std::string>();
    r.pipeline_b = j.at("pipeline_b").get<std::string>();
    for (const auto& e : j.at("datasets")) {
      DatasetEffect d;
      d.dataset = e.at("dataset").get<std::string>();
      d.n_subjects = e.at("n_subjects").get<std::size_t>();
      d.effect.smd = e.at("smd").get<double>();
      d.effect.ci_low = e.at("ci_low").get<double>();
      d.effect.ci_high = e.at("ci_high").get<double>();
      d.effect.degenerate = e.at("degenerate").get<bool>();
      d.p = e.at("p").get<double>();
      d.test = e.at("test").get<std::string>();
      d.weight = e.at("weight").get<double>();
      r.datasets.push_back(std::move(d));
    }
    r.meta_smd = j.at("meta").at("smd").get<double>();
    r.combined_p = j.at("meta").at("p").get<double>();
    return r;
  });
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw InvalidInput("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_meta_table(const MetaReport& r) {
  std::size_t width = 12;
  for (const auto& d : r.datasets) width = std::max(width, d.dataset.size() + 2);
  std::ostringstream out;
  char buf[256];
  out << r.pipeline_b << " vs " << r.pipeline_a << " (SMD > 0 favours " << r.pipeline_b << ")\n";
  std::snprintf(buf, sizeof buf, "%-*s %4s %8s  %-18s %9s\n", int(width), "dataset", "n", "SMD", "95% CI", "p");
  out << buf;
  for (const auto& d : r.datasets) {
    std::snprintf(buf, sizeof buf, "%-*s %4zu %8.3f  [%7.3f, %7.3f] %9.2e %s\n", int(width), d.dataset.c_str(),
                  d.n_subjects, d.effect.smd, d.effect.ci_low, d.effect.ci_high, d.p,
                  significance_marks(d.p).c_str());
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "%-*s %4s %8.3f  %-18s %9.2e %s\n", int(width), "meta-effect", "", r.meta_smd, "",
                r.combined_p, significance_marks(r.combined_p).c_str());
  out << buf;
  return out.str();
}

}  // namespace rmf::io
