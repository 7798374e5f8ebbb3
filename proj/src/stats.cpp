#include "rmf/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <tuple>

namespace rmf {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidInput("normal_quantile: p must lie in (0, 1)");
  // Acklam's rational approximation, then one Halley step against erfc.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

double exact_permutation_test(std::span<const double> diffs) {
  const std::size_t n = diffs.size();
  if (n < 2) throw InvalidInput("exact_permutation_test: need at least 2 differences");
  if (n >= kExactPermutationLimit) throw RoutedElsewhere("exact_permutation_test: n >= 20, use the Wilcoxon test");
  const double observed = std::accumulate(diffs.begin(), diffs.end(), 0.0);
  double scale = 0.0;
  for (double d : diffs) scale += std::abs(d);
  // sums equal up to rounding count as ties with the observed statistic
  const double slack = 1e-12 * scale;
  const std::uint32_t patterns = 1u << n;
  std::uint32_t count = 0;
  for (std::uint32_t mask = 0; mask < patterns; ++mask) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (mask >> i & 1u) ? -diffs[i] : diffs[i];
    if (s >= observed - slack) ++count;
  }
  return double(count) / double(patterns);
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> diffs) {
  std::vector<double> nz;
  for (double d : diffs)
    if (d != 0.0) nz.push_back(d);
  WilcoxonResult r;
  r.n_used = nz.size();
  if (nz.empty()) {
    r.degenerate = true;
    return r;
  }
  std::vector<std::size_t> order(nz.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::abs(nz[a]) < std::abs(nz[b]); });

  double tie_term = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && std::abs(nz[order[j]]) == std::abs(nz[order[i]])) ++j;
    const double rank = double(i + j + 1) / 2.0;
    for (std::size_t t = i; t < j; ++t)
      if (nz[order[t]] > 0) r.w_plus += rank;
    const double ties = double(j - i);
    tie_term += ties * ties * ties - ties;
    i = j;
  }
  const double n = double(nz.size());
  r.mean = n * (n + 1) / 4.0;
  r.variance = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term / 48.0;
  r.z = (r.w_plus - r.mean - 0.5) / std::sqrt(r.variance);
  r.p = normal_cdf(-r.z);
  return r;
}

double liptak_combine(std::span<const double> p_values, std::span<const double> weights) {
  if (p_values.empty()) throw InvalidInput("liptak_combine: no p-values");
  if (p_values.size() != weights.size()) throw InvalidInput("liptak_combine: p-values and weights differ in length");
  double num = 0.0, wsq = 0.0;
  for (std::size_t i = 0; i < p_values.size(); ++i) {
    if (!(p_values[i] >= 0.0 && p_values[i] <= 1.0)) throw InvalidInput("liptak_combine: p-value outside [0, 1]");
    if (!(weights[i] > 0.0)) throw InvalidInput("liptak_combine: weights must be > 0");
    const double p = std::clamp(p_values[i], 1e-15, 1.0 - 1e-15);
    num += weights[i] * -normal_quantile(p);  // Phi^{-1}(1 - p)
    wsq += weights[i] * weights[i];
  }
  return normal_cdf(-num / std::sqrt(wsq));
}

SmdResult smd(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidInput("smd: unpaired inputs");
  const std::size_t n = a.size();
  if (n < 2) throw InvalidInput("smd: need at least 2 pairs");
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = b[i] - a[i];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / double(n);
  double ss = 0.0, scale = 0.0;
  for (double x : d) {
    ss += (x - mean) * (x - mean);
    scale = std::max(scale, std::abs(x));
  }
  const double sd = std::sqrt(ss / double(n - 1));
  SmdResult r;
  const double half_width = 1.96 / std::sqrt(double(n));
  if (!(sd > 1e-12 * scale)) {
    r.degenerate = true;
  } else {
    r.smd = mean / sd;
  }
  r.ci_low = r.smd - half_width;
  r.ci_high = r.smd + half_width;
  return r;
}

namespace {

using CellKey = std::tuple<std::string, std::string, std::string, int>;

CellKey key_of(const ScoreRow& r) { return {r.dataset, r.subject, r.session, r.fold}; }

std::string describe(const CellKey& k) {
  return "(dataset " + std::get<0>(k) + ", subject " + std::get<1>(k) + ", session " + std::get<2>(k) + ", fold " +
         std::to_string(std::get<3>(k)) + ")";
}

// dataset -> subject -> session -> AUCs of valid folds
using Nested = std::map<std::string, std::map<std::string, std::map<std::string, std::vector<double>>>>;

Nested nest(const std::vector<ScoreRow>& rows) {
  Nested out;
  for (const auto& r : rows) {
    auto& folds = out[r.dataset][r.subject][r.session];
    if (r.auc) folds.push_back(*r.auc);
  }
  return out;
}

std::optional<double> subject_score(const std::map<std::string, std::vector<double>>& sessions) {
  double sum = 0.0;
  int count = 0;
  for (const auto& [name, aucs] : sessions) {
    if (aucs.empty()) continue;
    sum += std::accumulate(aucs.begin(), aucs.end(), 0.0) / double(aucs.size());
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / count;
}

}  // namespace

std::vector<PairedComparison> pair_tables(const PipelineScoreTable& a, const PipelineScoreTable& b) {
  std::vector<CellKey> ka, kb;
  for (const auto& r : a.rows) ka.push_back(key_of(r));
  for (const auto& r : b.rows) kb.push_back(key_of(r));
  std::sort(ka.begin(), ka.end());
  std::sort(kb.begin(), kb.end());
  const auto [ia, ib] = std::mismatch(ka.begin(), ka.end(), kb.begin(), kb.end());
  if (ia != ka.end() || ib != kb.end()) {
    const CellKey& first = ia == ka.end() ? *ib : ib == kb.end() ? *ia : std::min(*ia, *ib);
    throw InvalidInput("score tables cover different cells; first divergent cell " + describe(first));
  }

  const Nested na = nest(a.rows), nb = nest(b.rows);
  std::vector<PairedComparison> out;
  for (const auto& [dataset, subjects] : na) {
    PairedComparison pc{dataset, {}, {}, {}};
    for (const auto& [subject, sessions] : subjects) {
      const auto sa = subject_score(sessions);
      const auto sb = subject_score(nb.at(dataset).at(subject));
      if (!sa || !sb) continue;
      pc.subjects.push_back(subject);
      pc.a.push_back(*sa);
      pc.b.push_back(*sb);
    }
    out.push_back(std::move(pc));
  }
  return out;
}

MetaReport meta_compare(const std::vector<PairedComparison>& pairs, std::string pipeline_a, std::string pipeline_b) {
  if (pairs.empty()) throw InvalidInput("meta_compare: no datasets");
  MetaReport rep{std::move(pipeline_a), std::move(pipeline_b), {}, 0.0, 1.0};
  std::vector<double> ps, ws;
  double weighted = 0.0, wsum = 0.0;
  for (const auto& pc : pairs) {
    const std::size_t n = pc.a.size();
    if (n < 2) throw InvalidInput("meta_compare: dataset " + pc.dataset + " has fewer than 2 scored subjects");
    std::vector<double> diffs(n);
    for (std::size_t i = 0; i < n; ++i) diffs[i] = pc.b[i] - pc.a[i];
    DatasetEffect e;
    e.dataset = pc.dataset;
    e.n_subjects = n;
    e.effect = smd(pc.a, pc.b);
    if (n < kExactPermutationLimit) {
      e.p = exact_permutation_test(diffs);
      e.test = "permutation";
    } else {
      e.p = wilcoxon_signed_rank(diffs).p;
      e.test = "wilcoxon";
    }
    e.weight = std::sqrt(double(n));
    weighted += e.weight * e.effect.smd;
    wsum += e.weight;
    ps.push_back(e.p);
    ws.push_back(e.weight);
    rep.datasets.push_back(std::move(e));
  }
  rep.meta_smd = weighted / wsum;
  rep.combined_p = liptak_combine(ps, ws);
  return rep;
}

MetaReport meta_compare(const PipelineScoreTable& a, const PipelineScoreTable& b) {
  return meta_compare(pair_tables(a, b), a.pipeline, b.pipeline);
}

std::string significance_marks(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

}  // namespace rmf
