// rmf: command-line front end for the means-field benchmark.
//
// Exit status: 0 success, 1 usage, 2 data error, 3 numerical failure.
// Errors are written to stderr as one JSON object {"error": kind, "message": ...}.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rmf/covariance.hpp"
#include "rmf/error.hpp"
#include "rmf/eval.hpp"
#include "rmf/io/archive.hpp"
#include "rmf/io/config.hpp"
#include "rmf/io/report.hpp"
#include "rmf/io/synth.hpp"
#include "rmf/means.hpp"
#include "rmf/stats.hpp"

int run_selftest(std::ostream& out);  // selftest.cpp

namespace {

using namespace rmf;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::NumericalFailure:
    case ErrorKind::ConvergenceFailure: return kExitNumerical;
    default: return kExitData;
  }
}

void report_error(const std::string& kind, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  std::cerr << j.dump() << "\n";
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty() || out_path == "-")
    std::cout << text;
  else
    io::write_text(out_path, text);
}

// --- gen ---------------------------------------------------------------------

struct GenArgs {
  std::string config;
  std::string out;
};

int cmd_gen(const GenArgs& a) {
  const auto spec = io::SynthSpec::from_config(io::Config::load(a.config));
  io::write_archive(io::synthesize(spec), a.out);
  return 0;
}

// --- mean --------------------------------------------------------------------

struct MeanArgs {
  std::string archive;
  double h = 0.0;
  bool robust = false;
  std::optional<int> cls;
  std::string out;
};

std::vector<SpdMatrixd> archive_covariances(const io::TrialArchive& a) {
  if (a.kind == io::ArchiveKind::Covariance) return a.covariances();
  std::vector<SpdMatrixd> covs;
  covs.reserve(a.payload.size());
  for (const auto& x : a.payload) covs.push_back(oas_covariance(x));
  return covs;
}

int cmd_mean(const MeanArgs& a) {
  if (a.h < -1.0 || a.h > 1.0) throw InvalidInput("--h must lie in [-1, 1]");
  const auto archive = io::read_archive(a.archive);
  const auto all = archive_covariances(archive);
  std::vector<SpdMatrixd> set;
  for (std::size_t i = 0; i < all.size(); ++i)
    if (!a.cls || int(archive.labels[i]) == *a.cls) set.push_back(all[i]);
  if (set.empty()) throw InvalidInput("no trials of class " + std::to_string(*a.cls));

  std::size_t kept = set.size();
  if (a.robust) {
    const auto r = rpme_clean(set, RobustConfig{});
    std::vector<SpdMatrixd> clean;
    for (auto i : r.kept) clean.push_back(set[i]);
    set = std::move(clean);
    kept = set.size();
  }
  const auto m = mean_at(std::span<const SpdMatrixd>(set), a.h, {}, std::nullopt, SolverConfig{});

  std::fprintf(stderr, "h=%g trials=%zu iterations=%d residual=%.3e\n", a.h, kept, m.iterations, m.residual);
  if (!a.out.empty()) {
    io::TrialArchive o;
    o.kind = io::ArchiveKind::Covariance;
    o.n_classes = 1;
    o.rows = o.cols = std::uint32_t(m.mean.dim());
    o.labels = {0};
    o.payload = {m.mean.matrix()};
    io::write_archive(o, a.out);
  } else {
    const auto& p = m.mean.matrix();
    for (Index r = 0; r < p.rows(); ++r) {
      for (Index c = 0; c < p.cols(); ++c) std::printf(c ? " %.17g" : "%.17g", p(r, c));
      std::printf("\n");
    }
  }
  return 0;
}

// --- eval --------------------------------------------------------------------

struct EvalArgs {
  std::vector<std::string> inputs;
  std::string dataset = "synthetic";
  std::string pipeline = "MDM";
  std::uint64_t seed = 0;
  int k = 5;
  int jobs = 1;
  bool timing = false;
  std::string out;
};

// "[DATASET/]SUBJECT:SESSION=path" or a bare path (subject = file stem, session "0").
Session load_session(const std::string& input, const std::string& default_dataset) {
  Session s;
  s.dataset = default_dataset;
  std::string path = input;
  if (const auto eq = input.find('='); eq != std::string::npos) {
    std::string id = input.substr(0, eq);
    path = input.substr(eq + 1);
    if (const auto slash = id.find('/'); slash != std::string::npos) {
      s.dataset = id.substr(0, slash);
      id = id.substr(slash + 1);
    }
    const auto colon = id.find(':');
    s.subject = id.substr(0, colon);
    s.session = colon == std::string::npos ? "0" : id.substr(colon + 1);
  } else {
    s.subject = std::filesystem::path(path).stem().string();
    s.session = "0";
  }
  if (s.subject.empty() || s.session.empty() || s.dataset.empty())
    throw InvalidInput("empty identifier in input '" + input + "'");
  const auto archive = io::read_archive(path);
  s.covs = archive_covariances(archive);
  s.labels.assign(archive.labels.begin(), archive.labels.end());
  return s;
}

int cmd_eval(const EvalArgs& a) {
  const auto spec = PipelineSpec::parse(a.pipeline);
  std::vector<Session> sessions;
  for (const auto& in : a.inputs) sessions.push_back(load_session(in, a.dataset));

  RunOptions opts;
  opts.jobs = a.jobs;
  opts.record_time = a.timing;
  const auto table = run_pipeline(sessions, spec, EvalConfig{a.k, a.seed}, opts);
  emit(io::dump(io::to_json(table)), a.out);
  return 0;
}

// --- compare -----------------------------------------------------------------

struct CompareArgs {
  std::string a;
  std::string b;
  std::string out;
};

PipelineScoreTable read_table(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(path + ": " + e.what());
  }
  return io::score_table_from_json(j);
}

int cmd_compare(const CompareArgs& a) {
  const auto report = meta_compare(read_table(a.a), read_table(a.b));
  if (!a.out.empty()) {
    io::write_text(a.out, io::dump(io::to_json(report)));
    std::cout << io::format_meta_table(report);
  } else {
    std::cout << io::dump(io::to_json(report));
    std::cerr << io::format_meta_table(report);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Riemannian means-field classifiers: data generation, evaluation and comparison"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic trial archive from a config file");
  g->add_option("config", gen.config, "Generator config (key = value)")->required();
  g->add_option("-o,--out", gen.out, "Output archive")->required();

  MeanArgs mean;
  auto* m = app.add_subcommand("mean", "Power mean of the trials in an archive");
  m->set_help_flag("--help", "Print this help message and exit");
  m->add_option("archive", mean.archive, "Input archive")->required();
  m->add_option("--h", mean.h, "Power-mean exponent in [-1, 1]; 0 is the geometric mean");
  m->add_flag("--robust", mean.robust, "Drop outlying trials (RPME) before averaging");
  m->add_option("--class", mean.cls, "Only trials with this label");
  m->add_option("-o,--out", mean.out, "Write the mean as a 1-trial covariance archive instead of printing it");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Within-session cross-validated AUC of one pipeline");
  e->add_option("inputs", ev.inputs, "Archives: path or [DATASET/]SUBJECT:SESSION=path")->required();
  e->add_option("--dataset", ev.dataset, "Dataset name for inputs without one");
  e->add_option("-p,--pipeline", ev.pipeline, "[CSP+|ADCSP+]{MDM|MDMF|MF|MF_RPME|TS+LR}");
  e->add_option("--seed", ev.seed, "Fold seed");
  e->add_option("-k,--folds", ev.k, "Number of folds")->check(CLI::Range(2, 1000));
  e->add_option("-j,--jobs", ev.jobs, "Worker threads")->check(CLI::Range(1, 1024));
  e->add_flag("--timing", ev.timing, "Record per-fold wall time (makes output non-reproducible)");
  e->add_option("-o,--out", ev.out, "Output JSON (default stdout)");

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "Paired meta-analysis of two score tables (positive SMD favours B)");
  c->add_option("a", cmp.a, "Score table of pipeline A")->required();
  c->add_option("b", cmp.b, "Score table of pipeline B")->required();
  c->add_option("-o,--out", cmp.out, "Report JSON path; the text table then goes to stdout (otherwise JSON to stdout, table to stderr)");

  auto* st = app.add_subcommand("selftest", "Run the built-in oracle checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    report_error("Usage", ex.what());
    return kExitUsage;
  }

  try {
    if (*g) return cmd_gen(gen);
    if (*m) return cmd_mean(mean);
    if (*e) return cmd_eval(ev);
    if (*c) return cmd_compare(cmp);
    if (*st) return run_selftest(std::cout) == 0 ? 0 : kExitNumerical;
  } catch (const Error& ex) {
    report_error(to_string(ex.kind()), ex.what());
    return exit_code(ex.kind());
  } catch (const std::exception& ex) {
    report_error("InternalError", ex.what());
    return kExitData;
  }
  return kExitUsage;
}
