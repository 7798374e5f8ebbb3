#pragma once

// Means of SPD matrix sets: the power-mean family P_h, h in [-1, 1], with the
// arithmetic (h = 1), harmonic (h = -1) and geometric (h -> 0) members, the
// per-class mean field, and robust (outlier-rejecting) estimation.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <type_traits>
#include <sstream>
#include <vector>

#include "rmf/spd.hpp"

namespace rmf {

/// Exponent and weights of one power mean. h = 0 stands for the geometric mean.
struct MeanSpec {
  double h = 0.0;
  std::vector<double> weights;  // empty means uniform
};

struct RobustConfig {
  double z_threshold = 2.5;
  int max_rounds = 4;

  void validate() const {
    if (!(z_threshold > 0.0)) throw InvalidInput("robust z_threshold must be > 0");
    if (max_rounds < 1) throw InvalidInput("robust max_rounds must be >= 1");
  }
};

template <typename Scalar>
struct MeanResult {
  SpdMatrix<Scalar> mean;
  int iterations = 0;
  double residual = 0.0;
};

inline std::vector<double> default_h_grid() { return {-1.0, -0.75, -0.5, -0.25, -0.1, 0.0, 0.1, 0.25, 0.5, 0.75, 1.0}; }

namespace detail {

template <typename Scalar>
void check_set(std::span<const SpdMatrix<Scalar>> set, const char* who) {
  if (set.empty()) throw InvalidInput(std::string(who) + ": empty set");
  const Index n = set.front().dim();
  for (const auto& c : set)
    if (c.dim() != n) throw InvalidInput(std::string(who) + ": matrices of unequal dimension");
}

inline std::vector<double> resolve_weights(std::span<const double> w, std::size_t n) {
  if (w.empty()) return std::vector<double>(n, 1.0 / double(n));
  if (w.size() != n) throw InvalidInput("weights: length does not match the set");
  double sum = 0.0;
  for (double x : w) {
    if (!(x > 0.0)) throw InvalidInput("weights: every weight must be > 0");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw InvalidInput("weights: must sum to 1");
  return {w.begin(), w.end()};
}

template <typename Scalar>
std::vector<SpdMatrix<Scalar>> inverted(std::span<const SpdMatrix<Scalar>> set) {
  std::vector<SpdMatrix<Scalar>> out;
  out.reserve(set.size());
  for (const auto& c : set) out.push_back(inverse(c));
  return out;
}

template <typename Scalar>
Mat<Scalar> sym_pow(const Mat<Scalar>& s, Scalar t) {
  auto e = eig_unchecked<Scalar>(s);
  if (!(e.values.minCoeff() > Scalar(0))) throw NumericalFailure("power mean: lost positive definiteness");
  return reassemble(e, [t](Scalar x) { return std::pow(x, t); });
}

template <typename Scalar>
double relative_change(const Mat<Scalar>& next, const Mat<Scalar>& prev) {
  return double((next - prev).norm() / prev.norm());
}

// Fixed-point iteration for the power mean with 0 < h < 1, in the inverse
// square-root factor X (P = (X^T X)^{-1}):
//   H = sum_i w_i (X C_i X^T)^h,   X <- H^{-phi} X,   phi = 0.375 / h.
// At the fixed point H = I, i.e. P = sum_i w_i (P #_h C_i).
template <typename Scalar>
MeanResult<Scalar> power_mean_fixed_point(std::span<const SpdMatrix<Scalar>> set, const std::vector<double>& w,
                                          double h, const SpdMatrix<Scalar>& init, const SolverConfig& cfg) {
  const Index n = set.front().dim();
  const Scalar hs = Scalar(h);
  const Scalar phi = Scalar(0.375 / h);
  Mat<Scalar> x = invsqrtm(init).matrix();
  Mat<Scalar> p = init.matrix();
  double residual = 0.0;
  for (int k = 1; k <= cfg.max_iterations; ++k) {
    Mat<Scalar> acc = Mat<Scalar>::Zero(n, n);
    for (std::size_t i = 0; i < set.size(); ++i) {
      Mat<Scalar> whitened = x * set[i].matrix() * x.transpose();
      acc += Scalar(w[i]) * sym_pow<Scalar>(symmetrized(whitened), hs);
    }
    x = sym_pow<Scalar>(symmetrized(acc), -phi) * x;
    Mat<Scalar> gram = x.transpose() * x;
    Mat<Scalar> next = symmetrized(Mat<Scalar>(gram.llt().solve(Mat<Scalar>::Identity(n, n))));
    if (!next.allFinite()) throw NumericalFailure("power mean: iterate became non-finite");
    residual = relative_change<Scalar>(next, p);
    p = std::move(next);
    if (residual <= cfg.tolerance) return {SpdMatrix<Scalar>(p), k, residual};
  }
  std::ostringstream msg;
  msg << "power mean (h = " << h << ") did not converge in " << cfg.max_iterations << " iterations";
  throw ConvergenceFailure(msg.str(), p.template cast<double>(), residual, cfg.max_iterations);
}

}  // namespace detail

/// Weighted arithmetic mean sum_i w_i C_i (h = 1).
template <typename Scalar>
SpdMatrix<Scalar> arithmetic_mean(std::span<const SpdMatrix<Scalar>> set, std::span<const double> weights = {}) {
  detail::check_set(set, "arithmetic_mean");
  const auto w = detail::resolve_weights(weights, set.size());
  Mat<Scalar> acc = Mat<Scalar>::Zero(set.front().dim(), set.front().dim());
  for (std::size_t i = 0; i < set.size(); ++i) acc += Scalar(w[i]) * set[i].matrix();
  return SpdMatrix<Scalar>(acc);
}

/// Weighted harmonic mean (sum_i w_i C_i^{-1})^{-1} (h = -1).
template <typename Scalar>
SpdMatrix<Scalar> harmonic_mean(std::span<const SpdMatrix<Scalar>> set, std::span<const double> weights = {}) {
  detail::check_set(set, "harmonic_mean");
  const auto w = detail::resolve_weights(weights, set.size());
  Mat<Scalar> acc = Mat<Scalar>::Zero(set.front().dim(), set.front().dim());
  for (std::size_t i = 0; i < set.size(); ++i) acc += Scalar(w[i]) * inverse(set[i]).matrix();
  return inverse(SpdMatrix<Scalar>(acc));
}

/// Power mean for 0 < |h| <= 1. h = +-1 return the closed forms with zero iterations.
/// Without `init` the iteration starts from the arithmetic (h > 0) or harmonic (h < 0) mean.
/// Negative exponents use the duality P_h({C_i}) = P_{-h}({C_i^{-1}})^{-1}.
template <typename Scalar>
MeanResult<Scalar> power_mean(std::span<const SpdMatrix<Scalar>> set, double h, std::span<const double> weights = {},
                              const std::optional<SpdMatrix<std::type_identity_t<Scalar>>>& init = std::nullopt,
                              const SolverConfig& cfg = {}) {
  detail::check_set(set, "power_mean");
  cfg.validate();
  if (!(std::abs(h) <= 1.0) || h == 0.0)
    throw InvalidInput("power_mean: h must satisfy 0 < |h| <= 1 (use geometric_mean for h = 0)");
  if (init && init->dim() != set.front().dim()) throw InvalidInput("power_mean: init has wrong dimension");
  const auto w = detail::resolve_weights(weights, set.size());
  if (h == 1.0) return {arithmetic_mean(set, w), 0, 0.0};
  if (h == -1.0) return {harmonic_mean(set, w), 0, 0.0};
  if (h > 0.0) {
    const SpdMatrix<Scalar> start = init ? *init : arithmetic_mean(set, w);
    return detail::power_mean_fixed_point(set, w, h, start, cfg);
  }
  const auto dual = detail::inverted(set);
  const SpdMatrix<Scalar> start = inverse(init ? *init : harmonic_mean(set, w));
  auto r = detail::power_mean_fixed_point(std::span<const SpdMatrix<Scalar>>(dual), w, -h, start, cfg);
  return {inverse(r.mean), r.iterations, r.residual};
}

template <typename Scalar>
MeanResult<Scalar> power_mean(std::span<const SpdMatrix<Scalar>> set, const MeanSpec& spec,
                              const std::optional<SpdMatrix<std::type_identity_t<Scalar>>>& init = std::nullopt,
                              const SolverConfig& cfg = {}) {
  return power_mean(set, spec.h, spec.weights, init, cfg);
}

/// Karcher (geometric) mean by the fixed-point flow
///   G <- G^{1/2} exp(theta * sum_i w_i log(G^{-1/2} C_i G^{-1/2})) G^{1/2},
/// stopping once ||sum_i w_i log(G^{-1/2} C_i G^{-1/2})||_F <= tolerance * dim at the returned G.
/// The step is theta = 2 / sum_i w_i (k_i + 1) / (k_i - 1) log k_i, with k_i the condition
/// number of G^{-1/2} C_i G^{-1/2} (Bini and Iannazzo). It tends to 1 as the set
/// concentrates; a fixed unit step cycles on widely spread sets.
/// `residual` is that stationarity norm.
template <typename Scalar>
MeanResult<Scalar> geometric_mean(std::span<const SpdMatrix<Scalar>> set, std::span<const double> weights = {},
                                  const std::optional<SpdMatrix<std::type_identity_t<Scalar>>>& init = std::nullopt,
                                  const SolverConfig& cfg = {}) {
  detail::check_set(set, "geometric_mean");
  cfg.validate();
  const auto w = detail::resolve_weights(weights, set.size());
  const Index n = set.front().dim();
  if (init && init->dim() != n) throw InvalidInput("geometric_mean: init has wrong dimension");
  if (set.size() == 1) return {set.front(), 0, 0.0};
  SpdMatrix<Scalar> g = init ? *init : arithmetic_mean(set, w);
  const double bound = cfg.tolerance * double(n);
  double residual = 0.0;
  for (int k = 0;; ++k) {
    const ReferencePoint<Scalar> ref(g);
    Mat<Scalar> grad = Mat<Scalar>::Zero(n, n);
    double spread = 0.0;
    for (std::size_t i = 0; i < set.size(); ++i) {
      const auto e = detail::eig_unchecked<Scalar>(ref.whiten(set[i]));
      if (!(e.values.minCoeff() > Scalar(0))) throw NumericalFailure("geometric mean: lost positive definiteness");
      grad += Scalar(w[i]) * detail::reassemble(e, [](Scalar x) { return std::log(x); });
      const double cond = double(e.values.maxCoeff() / e.values.minCoeff());
      spread += w[i] * (cond - 1.0 < 1e-12 ? 2.0 : (cond + 1.0) / (cond - 1.0) * std::log(cond));
    }
    residual = double(grad.norm());
    if (residual <= bound) return {g, k, residual};
    if (k == cfg.max_iterations) break;
    g = ref.exp_map(Mat<Scalar>(Scalar(2.0 / spread) * grad));
  }
  throw ConvergenceFailure("geometric mean did not converge in " + std::to_string(cfg.max_iterations) + " iterations",
                           g.matrix().template cast<double>(), residual, cfg.max_iterations);
}

/// Power mean over the whole family: h = 0 dispatches to the geometric mean.
template <typename Scalar>
MeanResult<Scalar> mean_at(std::span<const SpdMatrix<Scalar>> set, double h, std::span<const double> weights,
                           const std::optional<SpdMatrix<std::type_identity_t<Scalar>>>& init, const SolverConfig& cfg) {
  if (h == 0.0) return geometric_mean(set, weights, init, cfg);
  return power_mean(set, h, weights, init, cfg);
}

template <typename Scalar>
struct RpmeResult {
  std::vector<std::size_t> kept;  // ascending indices into the input set
  MeanResult<Scalar> mean;        // geometric mean of the kept trials
  int mean_evaluations = 0;
};

/// Robust geometric mean: alternately compute the mean and drop trials whose
/// standardized distance to it exceeds the z threshold. At most `max_rounds`
/// means are computed; the returned mean is always the mean of `kept`.
/// Sets of fewer than 3 trials are returned unmodified, and a removal that
/// would leave fewer than 2 trials is skipped.
template <typename Scalar>
RpmeResult<Scalar> rpme_clean(std::span<const SpdMatrix<Scalar>> trials, const RobustConfig& robust,
                              const SolverConfig& cfg = {}) {
  detail::check_set(trials, "rpme_clean");
  robust.validate();
  std::vector<std::size_t> kept(trials.size());
  std::iota(kept.begin(), kept.end(), std::size_t{0});

  std::optional<SpdMatrix<Scalar>> warm;
  RpmeResult<Scalar> out{kept, {trials.front(), 0, 0.0}, 0};
  for (int round = 1; round <= robust.max_rounds; ++round) {
    std::vector<SpdMatrix<Scalar>> current;
    current.reserve(kept.size());
    for (auto i : kept) current.push_back(trials[i]);
    out.mean = geometric_mean(std::span<const SpdMatrix<Scalar>>(current), {}, warm, cfg);
    out.kept = kept;
    ++out.mean_evaluations;
    warm = out.mean.mean;
    if (round == robust.max_rounds || kept.size() < 3) break;

    const ReferencePoint<Scalar> ref(out.mean.mean);
    std::vector<double> d(current.size());
    for (std::size_t i = 0; i < current.size(); ++i) d[i] = double(ref.distance(current[i]));
    const double m = std::accumulate(d.begin(), d.end(), 0.0) / double(d.size());
    double ss = 0.0;
    for (double x : d) ss += (x - m) * (x - m);
    const double sd = std::sqrt(ss / double(d.size() - 1));
    if (!(sd > 0.0)) break;

    std::vector<std::size_t> next;
    for (std::size_t i = 0; i < current.size(); ++i)
      if (!((d[i] - m) / sd > robust.z_threshold)) next.push_back(kept[i]);
    if (next.size() == kept.size() || next.size() < 2) break;
    kept = std::move(next);
  }
  return out;
}

template <typename Scalar>
struct MeanFieldEntry {
  double h;
  SpdMatrix<Scalar> mean;
  int iterations;
  double residual;
};

/// Per class label, the power means over a grid of h (ascending), with solver diagnostics.
template <typename Scalar>
struct MeanField {
  std::map<int, std::vector<MeanFieldEntry<Scalar>>> classes;
  std::map<int, std::vector<std::size_t>> kept;  // trials retained by robust cleaning, per class

  std::size_t means_per_class() const { return classes.empty() ? 0 : classes.begin()->second.size(); }
  Index dim() const { return classes.empty() ? 0 : classes.begin()->second.front().mean.dim(); }
  int total_iterations() const {
    int t = 0;
    for (const auto& [label, entries] : classes)
      for (const auto& e : entries) t += e.iterations;
    return t;
  }
};

namespace detail {

inline std::vector<double> checked_grid(std::vector<double> grid) {
  std::sort(grid.begin(), grid.end());
  if (grid.empty()) throw InvalidInput("mean field: empty h grid");
  if (std::adjacent_find(grid.begin(), grid.end()) != grid.end()) throw InvalidInput("mean field: duplicate h");
  if (grid.front() < -1.0 || grid.back() > 1.0) throw InvalidInput("mean field: h outside [-1, 1]");
  if (!std::binary_search(grid.begin(), grid.end(), 0.0)) throw InvalidInput("mean field: grid must contain h = 0");
  return grid;
}

template <typename Scalar>
std::vector<MeanFieldEntry<Scalar>> solve_class_field(std::span<const SpdMatrix<Scalar>> set,
                                                      const std::vector<double>& grid, const SolverConfig& cfg,
                                                      bool warm_start, int label) {
  std::map<double, MeanFieldEntry<Scalar>> solved;
  auto solve = [&](double h, const std::optional<SpdMatrix<std::type_identity_t<Scalar>>>& init) -> const SpdMatrix<Scalar>& {
    try {
      auto r = mean_at<Scalar>(set, h, {}, init, cfg);
      auto it = solved.emplace(h, MeanFieldEntry<Scalar>{h, r.mean, r.iterations, r.residual}).first;
      return it->second.mean;
    } catch (const ConvergenceFailure& e) {
      std::ostringstream msg;
      msg << "mean field: class " << label << ", h = " << h << ": " << e.what();
      throw ConvergenceFailure(msg.str(), e.last_iterate, e.residual, e.iterations);
    }
  };

  // Two warm-start chains walking toward h = 0 from each end.
  std::optional<SpdMatrix<Scalar>> prev;
  for (auto it = grid.rbegin(); it != grid.rend() && *it > 0.0; ++it) prev = solve(*it, warm_start ? prev : std::nullopt);
  std::optional<SpdMatrix<Scalar>> last_positive = prev;
  prev.reset();
  for (auto it = grid.begin(); it != grid.end() && *it < 0.0; ++it) prev = solve(*it, warm_start ? prev : std::nullopt);
  std::optional<SpdMatrix<Scalar>> zero_init = last_positive ? last_positive : prev;
  solve(0.0, warm_start ? zero_init : std::nullopt);

  std::vector<MeanFieldEntry<Scalar>> out;
  out.reserve(solved.size());
  for (auto& [h, e] : solved) out.push_back(std::move(e));
  return out;
}

}  // namespace detail

/// Builds the mean field. Per class: optional robust cleaning first, then the
/// positive chain from the largest h down to 0+, the negative chain from the
/// smallest h up to 0-, and the geometric mean seeded by the smallest positive
/// result. With `warm_start = false` every mean starts from its default init.
template <typename Scalar>
MeanField<Scalar> build_mean_field(const std::map<int, std::vector<SpdMatrix<Scalar>>>& trials_per_class,
                                   const std::vector<double>& h_grid = default_h_grid(), const SolverConfig& cfg = {},
                                   const std::optional<RobustConfig>& robust = std::nullopt, bool warm_start = true) {
  cfg.validate();
  const auto grid = detail::checked_grid(h_grid);
  if (trials_per_class.empty()) throw InvalidInput("mean field: no classes");
  MeanField<Scalar> field;
  std::optional<Index> dim;
  for (const auto& [label, trials] : trials_per_class) {
    if (trials.size() < 2) throw InvalidInput("mean field: class " + std::to_string(label) + " has fewer than 2 trials");
    if (dim && trials.front().dim() != *dim) throw InvalidInput("mean field: classes of unequal dimension");
    dim = trials.front().dim();
    std::span<const SpdMatrix<Scalar>> all(trials);
    std::vector<SpdMatrix<Scalar>> cleaned;
    std::vector<std::size_t> kept(trials.size());
    std::iota(kept.begin(), kept.end(), std::size_t{0});
    if (robust) {
      kept = rpme_clean(all, *robust, cfg).kept;
      for (auto i : kept) cleaned.push_back(trials[i]);
      all = std::span<const SpdMatrix<Scalar>>(cleaned);
    }
    field.classes.emplace(label, detail::solve_class_field(all, grid, cfg, warm_start, label));
    field.kept.emplace(label, std::move(kept));
  }
  return field;
}

// std::vector conveniences (template deduction does not see through std::span).

template <typename Scalar>
SpdMatrix<Scalar> arithmetic_mean(const std::vector<SpdMatrix<Scalar>>& set, std::span<const double> weights = {}) {
  return arithmetic_mean(std::span<const SpdMatrix<Scalar>>(set), weights);
}

template <typename Scalar>
SpdMatrix<Scalar> harmonic_mean(const std::vector<SpdMatrix<Scalar>>& set, std::span<const double> weights = {}) {
  return harmonic_mean(std::span<const SpdMatrix<Scalar>>(set), weights);
}

template <typename Scalar>
MeanResult<Scalar> power_mean(const std::vector<SpdMatrix<Scalar>>& set, double h, std::span<const double> weights = {},
                              const std::optional<SpdMatrix<std::type_identity_t<Scalar>>>& init = std::nullopt,
                              const SolverConfig& cfg = {}) {
  return power_mean(std::span<const SpdMatrix<Scalar>>(set), h, weights, init, cfg);
}

template <typename Scalar>
MeanResult<Scalar> geometric_mean(const std::vector<SpdMatrix<Scalar>>& set, std::span<const double> weights = {},
                                  const std::optional<SpdMatrix<std::type_identity_t<Scalar>>>& init = std::nullopt,
                                  const SolverConfig& cfg = {}) {
  return geometric_mean(std::span<const SpdMatrix<Scalar>>(set), weights, init, cfg);
}

template <typename Scalar>
RpmeResult<Scalar> rpme_clean(const std::vector<SpdMatrix<Scalar>>& trials, const RobustConfig& robust,
                              const SolverConfig& cfg = {}) {
  return rpme_clean(std::span<const SpdMatrix<Scalar>>(trials), robust, cfg);
}

}  // namespace rmf
