#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rmf/classifiers.hpp"
#include "rmf/means.hpp"
#include "rmf/spatial_filters.hpp"

namespace rmf {

struct EvalConfig {
  int k = 5;
  std::uint64_t seed = 0;
};

/// k disjoint folds covering every index. Per class (labels ascending) the
/// indices are shuffled with the stream (seed, label) and dealt round-robin, the
/// dealing position carrying over from one class to the next.
std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed);

/// Mann-Whitney AUC: share of positive/negative pairs ranked correctly, ties counting one half.
/// `positive` holds 0/1 flags. Throws Undefined unless both classes are present.
double auc_roc(std::span<const double> scores, std::span<const int> positive);

enum class FilterKind { None, Csp, Adcsp };
enum class ClassifierKind { Mdm, Mdmf, Mf, MfRpme, TsLr };

struct PipelineSpec {
  FilterKind filter = FilterKind::None;
  ClassifierKind classifier = ClassifierKind::Mdm;

  /// Accepts "[CSP+|ADCSP+]{MDM|MDMF|MF|MF_RPME|TS+LR}".
  static PipelineSpec parse(std::string_view name);
  std::string name() const;
};

struct PipelineOptions {
  SolverConfig solver;
  RobustConfig robust;
  std::vector<double> h_grid = default_h_grid();
};

/// A fitted filter + classifier.
class FittedPipeline {
 public:
  static FittedPipeline fit(const PipelineSpec& spec, std::span<const SpdMatrixd> covs, std::span<const int> labels,
                            const PipelineOptions& opts = {});
  Prediction predict(const SpdMatrixd& c) const;
  const SpatialFilter& filter() const { return filter_; }
  Index classifier_dim() const { return filter_.output_dim(); }

 private:
  PipelineSpec spec_;
  SpatialFilter filter_;
  std::optional<MdmModel> mdm_;
  std::optional<MdmfModel> mdmf_;
  std::optional<MfModel> mf_;
  std::optional<TsLrModel> ts_lr_;
};

/// One within-session recording: its covariance trials and labels.
struct Session {
  std::string dataset;
  std::string subject;
  std::string session;
  std::vector<SpdMatrixd> covs;
  std::vector<int> labels;
};

struct ScoreRow {
  std::string dataset;
  std::string subject;
  std::string session;
  int fold = 0;
  std::optional<double> auc;  // absent when the fold failed or AUC is undefined
  double fold_time_seconds = 0.0;
  std::string error;
};

struct PipelineScoreTable {
  std::string pipeline;
  bool timing_recorded = false;
  std::vector<ScoreRow> rows;  // sorted by (dataset, subject, session, fold)
};

/// What one fold's fit was shown; lets tests verify that held-out trials never reach a fit.
struct FitObservation {
  const Session* session;
  int fold;
  std::vector<std::size_t> training_indices;
  Index classifier_dim;
};

struct RunOptions {
  PipelineOptions pipeline;
  int jobs = 1;
  bool record_time = false;
  std::function<void(const FitObservation&)> observer;  // called under a lock
};

/// Within-session stratified k-fold evaluation of one pipeline. Fit errors are
/// recorded in the failing rows and the run continues.
PipelineScoreTable run_pipeline(std::span<const Session> sessions, const PipelineSpec& spec, const EvalConfig& eval,
                                const RunOptions& opts = {});

}  // namespace rmf
