#include "rmf/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>
#include <tuple>

#include "rmf/random.hpp"

namespace rmf {

std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed) {
  if (k < 2) throw InvalidInput("stratified_kfold: k must be >= 2");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  for (const auto& [label, idx] : by_class)
    if (idx.size() < std::size_t(k))
      throw InvalidInput("stratified_kfold: class " + std::to_string(label) + " has fewer than k = " +
                         std::to_string(k) + " members");

  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  std::size_t deal = 0;
  for (auto& [label, idx] : by_class) {
    auto rng = Rng::stream(seed, {stream_id("fold"), std::uint64_t(std::int64_t(label))});
    rng.shuffle(idx.begin(), idx.end());
    for (auto i : idx) folds[deal++ % std::size_t(k)].push_back(i);
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

double auc_roc(std::span<const double> scores, std::span<const int> positive) {
  if (scores.size() != positive.size()) throw InvalidInput("auc_roc: scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double n_pos = 0, n_neg = 0, rank_sum = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = double(i + j + 1) / 2.0;  // ranks i+1 .. j
    for (std::size_t t = i; t < j; ++t) {
      if (positive[order[t]]) {
        rank_sum += avg_rank;
        n_pos += 1;
      } else {
        n_neg += 1;
      }
    }
    i = j;
  }
  if (n_pos == 0 || n_neg == 0) throw Undefined("auc_roc: both classes must be present");
  return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg);
}

// ---- pipeline names ---------------------------------------------------------

PipelineSpec PipelineSpec::parse(std::string_view name) {
  PipelineSpec s;
  auto strip = [&](std::string_view prefix) {
    if (name.substr(0, prefix.size()) == prefix) {
      name.remove_prefix(prefix.size());
      return true;
    }
    return false;
  };
  if (strip("ADCSP+")) s.filter = FilterKind::Adcsp;
  else if (strip("CSP+")) s.filter = FilterKind::Csp;

  if (name == "MDM") s.classifier = ClassifierKind::Mdm;
  else if (name == "MDMF") s.classifier = ClassifierKind::Mdmf;
  else if (name == "MF") s.classifier = ClassifierKind::Mf;
  else if (name == "MF_RPME") s.classifier = ClassifierKind::MfRpme;
  else if (name == "TS+LR") s.classifier = ClassifierKind::TsLr;
  else throw InvalidInput("unknown pipeline classifier '" + std::string(name) + "'");
  return s;
}

std::string PipelineSpec::name() const {
  std::string out = filter == FilterKind::Adcsp ? "ADCSP+" : filter == FilterKind::Csp ? "CSP+" : "";
  switch (classifier) {
    case ClassifierKind::Mdm: return out + "MDM";
    case ClassifierKind::Mdmf: return out + "MDMF";
    case ClassifierKind::Mf: return out + "MF";
    case ClassifierKind::MfRpme: return out + "MF_RPME";
    case ClassifierKind::TsLr: return out + "TS+LR";
  }
  return out;
}

// ---- fitted pipeline ----------------------------------------------------------

FittedPipeline FittedPipeline::fit(const PipelineSpec& spec, std::span<const SpdMatrixd> covs,
                                   std::span<const int> labels, const PipelineOptions& opts) {
  if (covs.empty()) throw InvalidInput("pipeline fit: no training trials");
  FittedPipeline p;
  p.spec_ = spec;
  switch (spec.filter) {
    case FilterKind::None: p.filter_ = SpatialFilter::identity(covs.front().dim()); break;
    case FilterKind::Csp: p.filter_ = csp_fit(covs, labels); break;
    case FilterKind::Adcsp: p.filter_ = adcsp_fit(covs, labels, opts.solver); break;
  }
  std::vector<SpdMatrixd> filtered;
  filtered.reserve(covs.size());
  for (const auto& c : covs) filtered.push_back(spec.filter == FilterKind::None ? c : apply_filter(p.filter_, c));

  switch (spec.classifier) {
    case ClassifierKind::Mdm: p.mdm_ = mdm_fit(filtered, labels, opts.solver); break;
    case ClassifierKind::Mdmf: p.mdmf_ = mdmf_fit(filtered, labels, opts.h_grid, opts.solver); break;
    case ClassifierKind::Mf: p.mf_ = mf_fit(filtered, labels, opts.h_grid, opts.solver); break;
    case ClassifierKind::MfRpme: p.mf_ = mf_fit(filtered, labels, opts.h_grid, opts.solver, opts.robust); break;
    case ClassifierKind::TsLr: p.ts_lr_ = ts_lr_fit(filtered, labels, opts.solver); break;
  }
  return p;
}

Prediction FittedPipeline::predict(const SpdMatrixd& c) const {
  const SpdMatrixd x = spec_.filter == FilterKind::None ? c : apply_filter(filter_, c);
  if (mdm_) return mdm_score(*mdm_, x);
  if (mdmf_) return mdmf_score(*mdmf_, x);
  if (mf_) return mf_score(*mf_, x);
  return ts_lr_score(*ts_lr_, x);
}

// ---- evaluation -------------------------------------------------------------

namespace {

struct Cell {
  std::size_t session;
  int fold;
};

}  // namespace

PipelineScoreTable run_pipeline(std::span<const Session> sessions, const PipelineSpec& spec, const EvalConfig& eval,
                                const RunOptions& opts) {
  if (eval.k < 2) throw InvalidInput("eval: k must be >= 2");
  PipelineScoreTable table;
  table.pipeline = spec.name();
  table.timing_recorded = opts.record_time;

  // Folds depend only on (labels, k, seed) and are fixed before any fitting.
  std::vector<std::vector<std::vector<std::size_t>>> folds(sessions.size());
  std::vector<std::string> session_error(sessions.size());
  std::vector<Cell> cells;
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    const auto& ses = sessions[s];
    try {
      if (ses.covs.size() != ses.labels.size()) throw InvalidInput("session: covs and labels differ in length");
      if (class_labels(ses.labels, 1).size() != 2) throw InvalidInput("AUC evaluation needs exactly two classes");
      folds[s] = stratified_kfold(ses.labels, eval.k, eval.seed);
    } catch (const Error& e) {
      session_error[s] = e.what();
    }
    for (int f = 0; f < eval.k; ++f) cells.push_back({s, f});
  }

  std::vector<ScoreRow> rows(cells.size());
  std::mutex observer_lock;
  auto run_cell = [&](std::size_t c) {
    const auto [s, f] = cells[c];
    const Session& ses = sessions[s];
    ScoreRow& row = rows[c];
    row = {ses.dataset, ses.subject, ses.session, f, std::nullopt, 0.0, {}};
    if (!session_error[s].empty()) {
      row.error = session_error[s];
      return;
    }
    const auto& test = folds[s][std::size_t(f)];
    std::vector<std::size_t> train;
    for (std::size_t g = 0; g < folds[s].size(); ++g)
      if (g != std::size_t(f)) train.insert(train.end(), folds[s][g].begin(), folds[s][g].end());
    std::sort(train.begin(), train.end());

    const auto start = std::chrono::steady_clock::now();
    try {
      std::vector<SpdMatrixd> covs;
      std::vector<int> labels;
      for (auto i : train) {
        covs.push_back(ses.covs[i]);
        labels.push_back(ses.labels[i]);
      }
      const auto model = FittedPipeline::fit(spec, covs, labels, opts.pipeline);
      if (opts.observer) {
        std::lock_guard<std::mutex> lock(observer_lock);
        opts.observer({&ses, f, train, model.classifier_dim()});
      }
      const int positive_label = class_labels(labels).back();
      std::vector<double> scores;
      std::vector<int> positive;
      for (auto i : test) {
        scores.push_back(model.predict(ses.covs[i]).score);
        positive.push_back(ses.labels[i] == positive_label ? 1 : 0);
      }
      row.auc = auc_roc(scores, positive);
    } catch (const Error& e) {
      row.error = std::string(to_string(e.kind())) + ": " + e.what();
    }
    if (opts.record_time)
      row.fold_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  const std::size_t workers = std::clamp<std::size_t>(std::size_t(std::max(opts.jobs, 1)), 1, std::max<std::size_t>(cells.size(), 1));
  if (workers == 1) {
    for (std::size_t c = 0; c < cells.size(); ++c) run_cell(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t)
      pool.emplace_back([&] {
        for (std::size_t c = next++; c < cells.size(); c = next++) run_cell(c);
      });
    for (auto& t : pool) t.join();
  }

  std::stable_sort(rows.begin(), rows.end(), [](const ScoreRow& a, const ScoreRow& b) {
    return std::tie(a.dataset, a.subject, a.session, a.fold) < std::tie(b.dataset, b.subject, b.session, b.fold);
  });
  table.rows = std::move(rows);
  return table;
}

}  // namespace rmf
