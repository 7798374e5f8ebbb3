#include "rmf/spatial_filters.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "rmf/means.hpp"

namespace rmf {

namespace {

std::map<int, std::vector<SpdMatrixd>> group_by_label(std::span<const SpdMatrixd> covs, std::span<const int> labels) {
  if (covs.size() != labels.size()) throw InvalidInput("spatial filter: covs and labels differ in length");
  if (covs.empty()) throw InvalidInput("spatial filter: no trials");
  std::map<int, std::vector<SpdMatrixd>> groups;
  for (std::size_t i = 0; i < covs.size(); ++i) {
    if (covs[i].dim() != covs.front().dim()) throw InvalidInput("spatial filter: trials of unequal dimension");
    groups[labels[i]].push_back(covs[i]);
  }
  if (groups.size() < 2) throw InvalidInput("spatial filter: need at least two classes");
  return groups;
}

// Binary problems compare the two classes; with more classes the first class is
// contrasted with the average of the others.
std::pair<SpdMatrixd, SpdMatrixd> contrast_pair(const std::vector<SpdMatrixd>& class_means) {
  if (class_means.size() == 2) return {class_means[0], class_means[1]};
  std::vector<SpdMatrixd> rest(class_means.begin() + 1, class_means.end());
  return {class_means[0], arithmetic_mean(rest)};
}

// Each row scaled to unit variance under `reference`.
Eigen::MatrixXd normalize_rows(Eigen::MatrixXd rows, const Eigen::MatrixXd& reference) {
  for (Index r = 0; r < rows.rows(); ++r) {
    const double v = rows.row(r) * reference * rows.row(r).transpose();
    rows.row(r) /= std::sqrt(v);
  }
  return rows;
}

}  // namespace

SpdMatrixd apply_filter(const SpatialFilter& f, const SpdMatrixd& c) {
  if (c.dim() != f.input_dim()) throw InvalidInput("apply_filter: dimension mismatch");
  return congruence(f.w, c);
}

GevdSpectrum csp_spectrum(const SpdMatrixd& mean_a, const SpdMatrixd& mean_b) {
  if (mean_a.dim() != mean_b.dim()) throw InvalidInput("csp: dimension mismatch");
  const Eigen::MatrixXd sum = mean_a.matrix() + mean_b.matrix();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(mean_a.matrix(), sum);
  if (ges.info() != Eigen::Success) throw NumericalFailure("csp: generalized eigensolver failed");
  return {ges.eigenvalues(), ges.eigenvectors()};
}

std::vector<Index> rank_by_score(const Eigen::VectorXd& scores, Index count) {
  std::vector<Index> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return scores(a) > scores(b); });
  order.resize(static_cast<std::size_t>(std::min<Index>(count, scores.size())));
  return order;
}

namespace {

// Scores within this distance of the neutral point count as exact ties, so that
// undiscriminating components fall back to index order.
constexpr double kTieFloor = 1e-10;

Eigen::VectorXd extremeness(const Eigen::VectorXd& ratios, double neutral) {
  return ratios.unaryExpr([neutral](double r) {
    const double s = std::abs(r - neutral);
    return s < kTieFloor ? 0.0 : s;
  });
}

}  // namespace

SpatialFilter csp_gevd(const SpdMatrixd& mean_a, const SpdMatrixd& mean_b, Index n_filters) {
  if (n_filters < 2 || n_filters % 2 != 0) throw InvalidInput("csp_gevd: n_filters must be a positive even number");
  if (n_filters > mean_a.dim()) throw InvalidInput("csp_gevd: n_filters exceeds the dimension");
  const auto spec = csp_spectrum(mean_a, mean_b);
  const auto picked = rank_by_score(extremeness(spec.values, 0.5), n_filters);
  Eigen::MatrixXd w(n_filters, mean_a.dim());
  for (std::size_t r = 0; r < picked.size(); ++r) w.row(Index(r)) = spec.vectors.col(picked[r]).transpose();
  return {w};
}

double pham_criterion(const Eigen::MatrixXd& b, std::span<const SpdMatrixd> set, std::span<const double> weights) {
  const auto w = detail::resolve_weights(weights, set.size());
  double crit = 0.0;
  for (std::size_t k = 0; k < set.size(); ++k) {
    const Eigen::MatrixXd m = b * set[k].matrix() * b.transpose();
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) throw NumericalFailure("pham criterion: transformed matrix not positive definite");
    const double logdet = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
    crit += w[k] * (m.diagonal().array().log().sum() - logdet);
  }
  return crit;
}

AjdResult pham_ajd(std::span<const SpdMatrixd> set, const SolverConfig& cfg, std::span<const double> weights) {
  cfg.validate();
  if (set.size() < 2) throw InvalidInput("pham_ajd: need at least two matrices");
  detail::check_set(set, "pham_ajd");
  const auto w = detail::resolve_weights(weights, set.size());
  const Index n = set.front().dim();
  const std::size_t count = set.size();

  std::vector<Eigen::MatrixXd> c;
  c.reserve(count);
  for (const auto& m : set) c.push_back(m.matrix());
  AjdResult out{Eigen::MatrixXd::Identity(n, n), {}, 0};

  auto criterion = [&] {
    double crit = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
      Eigen::LLT<Eigen::MatrixXd> llt(c[k]);
      if (llt.info() != Eigen::Success) throw NumericalFailure("pham_ajd: lost positive definiteness");
      const double logdet = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
      crit += w[k] * (c[k].diagonal().array().log().sum() - logdet);
    }
    return crit;
  };

  double previous = criterion();
  out.criterion_history.push_back(previous);
  for (int sweep = 1; sweep <= cfg.max_iterations; ++sweep) {
    for (Index i = 1; i < n; ++i) {
      for (Index j = 0; j < i; ++j) {
        double g12 = 0, g21 = 0, o12 = 0, o21 = 0;
        for (std::size_t k = 0; k < count; ++k) {
          const double ci = c[k](i, i), cj = c[k](j, j), cij = c[k](i, j);
          g12 += w[k] * cij / ci;
          g21 += w[k] * cij / cj;
          o21 += w[k] * ci / cj;
          o12 += w[k] * cj / ci;
        }
        const double omega = std::sqrt(o12 * o21);
        const double ratio = std::sqrt(o21 / o12);
        const double t1 = (ratio * g12 + g21) / (omega + 1.0);
        const double t2 = (ratio * g12 - g21) / std::max(omega - 1.0, 1e-9);
        const double h12 = t1 + t2;
        const double h21 = (t1 - t2) / ratio;
        const double scale = 1.0 + std::sqrt(std::max(0.0, 1.0 - h12 * h21));
        const double a = -h12 / scale;  // row i <- row i + a * row j
        const double b = -h21 / scale;  // row j <- row j + b * row i

        for (auto& m : c) {
          const Eigen::RowVectorXd ri = m.row(i), rj = m.row(j);
          m.row(i) = ri + a * rj;
          m.row(j) = rj + b * ri;
          const Eigen::VectorXd ci = m.col(i), cj = m.col(j);
          m.col(i) = ci + a * cj;
          m.col(j) = cj + b * ci;
        }
        const Eigen::RowVectorXd bi = out.demixing.row(i), bj = out.demixing.row(j);
        out.demixing.row(i) = bi + a * bj;
        out.demixing.row(j) = bj + b * bi;
      }
    }
    const double current = criterion();
    out.criterion_history.push_back(current);
    out.sweeps = sweep;
    if (previous - current <= cfg.tolerance) return out;
    previous = current;
  }
  throw ConvergenceFailure("pham_ajd did not converge in " + std::to_string(cfg.max_iterations) + " sweeps",
                           out.demixing, out.criterion_history.back(), cfg.max_iterations);
}

SpatialFilter adcsp_fit(std::span<const SpdMatrixd> covs, std::span<const int> labels, const SolverConfig& cfg) {
  auto groups = group_by_label(covs, labels);
  const Index dim = covs.front().dim();
  if (dim < kAdcspStage2Dim) return SpatialFilter::identity(dim);

  Eigen::MatrixXd w = Eigen::MatrixXd::Identity(dim, dim);
  if (dim >= kAdcspStage1Dim) {
    std::vector<SpdMatrixd> means;
    for (const auto& [label, trials] : groups) means.push_back(arithmetic_mean(trials));
    const auto [a, b] = contrast_pair(means);
    w = csp_gevd(a, b, kAdcspStage1Dim).w;
    for (auto& [label, trials] : groups)
      for (auto& t : trials) t = congruence(w, t);
  }

  std::vector<SpdMatrixd> means;
  for (const auto& [label, trials] : groups) means.push_back(geometric_mean(trials, {}, std::nullopt, cfg).mean);
  // Two class means diagonalize exactly in a few sweeps. More classes converge
  // linearly, so the AJD gets its own sweep budget, and an exhausted budget
  // still leaves a usable (criterion-decreasing) demixing matrix.
  SolverConfig ajd_cfg = cfg;
  ajd_cfg.max_iterations = std::max(cfg.max_iterations, kAdcspAjdSweeps);
  Eigen::MatrixXd demix;
  try {
    demix = pham_ajd(std::span<const SpdMatrixd>(means), ajd_cfg).demixing;
  } catch (const ConvergenceFailure& e) {
    demix = e.last_iterate;
  }

  // Discriminability of each AJD component from the diagonalized class means.
  const Index cur = demix.rows();
  const double classes = double(means.size());
  Eigen::MatrixXd diag(Index(means.size()), cur);
  for (std::size_t c = 0; c < means.size(); ++c)
    diag.row(Index(c)) = (demix * means[c].matrix() * demix.transpose()).diagonal().transpose();
  Eigen::VectorXd score(cur);
  for (Index j = 0; j < cur; ++j) {
    const double total = diag.col(j).sum();
    score(j) = (diag.col(j).array() / total - 1.0 / classes).abs().maxCoeff();
    if (score(j) < kTieFloor) score(j) = 0.0;
  }
  const auto picked = rank_by_score(score, kAdcspStage2Dim);
  Eigen::MatrixXd rows(Index(picked.size()), cur);
  for (std::size_t r = 0; r < picked.size(); ++r) rows.row(Index(r)) = demix.row(picked[r]);

  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(cur, cur);
  for (const auto& m : means) pooled += m.matrix();
  rows = normalize_rows(rows, pooled);
  return {rows * w};
}

SpatialFilter csp_fit(std::span<const SpdMatrixd> covs, std::span<const int> labels, Index filters_per_class) {
  auto groups = group_by_label(covs, labels);
  const Index dim = covs.front().dim();
  const Index n_filters = filters_per_class * Index(groups.size());
  if (n_filters >= dim) return SpatialFilter::identity(dim);
  std::vector<SpdMatrixd> means;
  for (const auto& [label, trials] : groups) means.push_back(arithmetic_mean(trials));
  const auto [a, b] = contrast_pair(means);
  return csp_gevd(a, b, n_filters);
}

}  // namespace rmf
