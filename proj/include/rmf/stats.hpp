#pragma once

// Paired comparison of two pipelines across datasets: per-dataset one-sided
// tests (exact sign-flip permutation below 20 subjects, Wilcoxon signed-rank
// otherwise), standardized mean differences, and their sqrt(n)-weighted
// combination (Liptak for p-values, weighted mean for effects).

#include <span>
#include <string>
#include <vector>

#include "rmf/eval.hpp"

namespace rmf {

/// Standard normal CDF.
double normal_cdf(double z);
/// Standard normal quantile, p in (0, 1).
double normal_quantile(double p);

inline constexpr std::size_t kExactPermutationLimit = 20;

/// One-sided exact sign-flip test of mean(diffs) > 0 over all 2^n sign patterns
/// (observed pattern included). Requires 2 <= n < 20; larger n throws RoutedElsewhere.
double exact_permutation_test(std::span<const double> diffs);

struct WilcoxonResult {
  double w_plus = 0.0;
  double mean = 0.0;
  double variance = 0.0;  // tie-corrected
  double z = 0.0;
  double p = 1.0;
  std::size_t n_used = 0;  // non-zero differences
  bool degenerate = false;
};

/// One-sided signed-rank test of diffs > 0; normal approximation with tie
/// correction and 0.5 continuity correction. Zero differences are dropped.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> diffs);

/// Weighted inverse-normal (Liptak) combination of one-sided p-values.
double liptak_combine(std::span<const double> p_values, std::span<const double> weights);

struct SmdResult {
  double smd = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool degenerate = false;  // zero variance of the differences; smd reported as 0
};

/// Paired standardized mean difference mean(b - a) / sd(b - a), with a 95% CI of +-1.96/sqrt(n).
SmdResult smd(std::span<const double> a, std::span<const double> b);

struct PairedComparison {
  std::string dataset;
  std::vector<std::string> subjects;
  std::vector<double> a;
  std::vector<double> b;
};

/// Groups two score tables into per-dataset per-subject pairs. Subject score =
/// mean over sessions of the mean AUC over folds. Both tables must cover the
/// same cells.
std::vector<PairedComparison> pair_tables(const PipelineScoreTable& a, const PipelineScoreTable& b);

struct DatasetEffect {
  std::string dataset;
  std::size_t n_subjects = 0;
  SmdResult effect;
  double p = 1.0;
  std::string test;  // "permutation" or "wilcoxon"
  double weight = 0.0;
};

struct MetaReport {
  std::string pipeline_a;
  std::string pipeline_b;
  std::vector<DatasetEffect> datasets;
  double meta_smd = 0.0;
  double combined_p = 1.0;
};

/// Positive effects favour pipeline B.
MetaReport meta_compare(const PipelineScoreTable& a, const PipelineScoreTable& b);
MetaReport meta_compare(const std::vector<PairedComparison>& pairs, std::string pipeline_a = "A",
                        std::string pipeline_b = "B");

/// "***", "**", "*" for p below 0.001, 0.01, 0.05.
std::string significance_marks(double p);

}  // namespace rmf
