#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rmf/spd.hpp"

namespace rmf {

/// Linear spatial filter W (output_dim x input_dim); maps C to W C W^T.
struct SpatialFilter {
  Eigen::MatrixXd w;

  Index input_dim() const noexcept { return w.cols(); }
  Index output_dim() const noexcept { return w.rows(); }
  static SpatialFilter identity(Index n) { return {Eigen::MatrixXd::Identity(n, n)}; }
};

SpdMatrixd apply_filter(const SpatialFilter& f, const SpdMatrixd& c);

/// Generalized eigenpairs of mean_a v = lambda (mean_a + mean_b) v, in solver order
/// (ascending lambda). Eigenvectors are normalized to v^T (mean_a + mean_b) v = 1.
struct GevdSpectrum {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // columns
};

GevdSpectrum csp_spectrum(const SpdMatrixd& mean_a, const SpdMatrixd& mean_b);

/// Indices of the `count` largest scores; equal scores keep ascending index order.
std::vector<Index> rank_by_score(const Eigen::VectorXd& scores, Index count);

/// CSP filters: the `n_filters` generalized eigenvectors whose eigenvalue is
/// farthest from 0.5. `n_filters` must be even and at most dim.
SpatialFilter csp_gevd(const SpdMatrixd& mean_a, const SpdMatrixd& mean_b, Index n_filters);

struct AjdResult {
  Eigen::MatrixXd demixing;               // B, dim x dim
  std::vector<double> criterion_history;  // value before the first sweep, then after each sweep
  int sweeps = 0;
};

/// Pham's joint diagonality criterion sum_k w_k [log det diag(B C_k B^T) - log det(B C_k B^T)].
double pham_criterion(const Eigen::MatrixXd& b, std::span<const SpdMatrixd> set, std::span<const double> weights = {});

/// Approximate joint diagonalization by Pham's pairwise (2x2) transformations.
/// Stops when one sweep decreases the criterion by at most cfg.tolerance.
AjdResult pham_ajd(std::span<const SpdMatrixd> set, const SolverConfig& cfg = {}, std::span<const double> weights = {});

inline constexpr Index kAdcspStage1Dim = 28;
inline constexpr Index kAdcspStage2Dim = 10;
inline constexpr int kAdcspAjdSweeps = 1000;

/// Two-stage adaptive CSP. Stage 1 (dim >= 28): arithmetic class means and GEVD
/// down to 28. Stage 2 (dim >= 10): geometric class means of the stage-1 output,
/// Pham AJD (at least kAdcspAjdSweeps sweeps; the last iterate is used if those run out),
/// 10 most discriminant rows. Below 10 channels the filter is the identity.
SpatialFilter adcsp_fit(std::span<const SpdMatrixd> covs, std::span<const int> labels, const SolverConfig& cfg = {});

/// Plain CSP baseline with `filters_per_class` filters per class from arithmetic class means.
/// Identity when the input is not larger than the requested number of filters.
SpatialFilter csp_fit(std::span<const SpdMatrixd> covs, std::span<const int> labels, Index filters_per_class = 4);

}  // namespace rmf
