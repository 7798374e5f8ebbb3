#pragma once

// The manifold classifiers (MDM, MDMF, MF) and the tangent-space logistic
// regression baseline. Binary decision scores are oriented so that higher
// means the larger class label.

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rmf/means.hpp"
#include "rmf/spd.hpp"

namespace rmf {

struct Prediction {
  int label = 0;
  double score = 0.0;                // binary decision score (NaN for multiclass)
  std::vector<double> class_scores;  // one per class, ascending label; higher favours that class
};

/// Sorted distinct labels; throws unless there are at least `min_classes`.
std::vector<int> class_labels(std::span<const int> labels, std::size_t min_classes = 2);

// ---- MDM ------------------------------------------------------------------

struct MdmModel {
  std::vector<int> labels;
  std::vector<ReferencePoint<double>> means;
};

MdmModel mdm_fit(std::span<const SpdMatrixd> covs, std::span<const int> labels, const SolverConfig& cfg = {},
                 const std::optional<RobustConfig>& robust = std::nullopt);
Prediction mdm_score(const MdmModel& model, const SpdMatrixd& c);

// ---- MDMF -----------------------------------------------------------------

struct MdmfModel {
  std::vector<int> labels;
  MeanField<double> field;
  std::vector<std::vector<ReferencePoint<double>>> refs;  // [class][h], ascending

  std::size_t feature_length() const;
};

MdmfModel mdmf_fit(std::span<const SpdMatrixd> covs, std::span<const int> labels,
                   const std::vector<double>& h_grid = default_h_grid(), const SolverConfig& cfg = {},
                   const std::optional<RobustConfig>& robust = std::nullopt);
Prediction mdmf_score(const MdmfModel& model, const SpdMatrixd& c);

/// Squared AIRM distances from `c` to every mean of the field, ordered by class then h.
Eigen::VectorXd distance_features(const MdmfModel& model, const SpdMatrixd& c);

// ---- LDA ------------------------------------------------------------------

inline constexpr double kLdaRidge = 1e-9;

struct LdaModel {
  std::vector<int> labels;
  Eigen::MatrixXd class_means;        // one row per class
  Eigen::MatrixXd pooled_covariance;  // ridge included
  Eigen::VectorXd priors;
  Eigen::MatrixXd coef;               // row c = Sigma^{-1} mu_c
  Eigen::VectorXd intercept;          // -1/2 mu_c^T Sigma^{-1} mu_c + log prior_c
};

/// Rows of `x` are samples. Pooled within-class covariance uses the n - K
/// normalization, plus a ridge of kLdaRidge * tr(Sigma) / p.
LdaModel lda_fit(const Eigen::MatrixXd& x, std::span<const int> labels);
Eigen::VectorXd lda_discriminants(const LdaModel& model, const Eigen::VectorXd& x);
Prediction lda_predict(const LdaModel& model, const Eigen::VectorXd& x);

// ---- MF -------------------------------------------------------------------

struct MfModel {
  MdmfModel field;
  LdaModel lda;
};

MfModel mf_fit(std::span<const SpdMatrixd> covs, std::span<const int> labels,
               const std::vector<double>& h_grid = default_h_grid(), const SolverConfig& cfg = {},
               const std::optional<RobustConfig>& robust = std::nullopt);
Prediction mf_score(const MfModel& model, const SpdMatrixd& c);

// ---- Tangent space + logistic regression ------------------------------------

/// Upper triangle (row-major) of log(R^{-1/2} C R^{-1/2}), off-diagonals scaled by sqrt(2).
Eigen::VectorXd tangent_map(const SpdMatrixd& c, const ReferencePoint<double>& reference);
Eigen::VectorXd tangent_map(const SpdMatrixd& c, const SpdMatrixd& reference);

struct LogisticModel {
  Eigen::VectorXd coef;
  double intercept = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;
};

struct LogisticConfig {
  double l2 = 1.0;  // penalty 0.5 * l2 * ||coef||^2, intercept unpenalized
  double gradient_tolerance = 1e-8;
  int max_iterations = 100;
};

/// L2-penalized logistic regression by damped Newton steps. `y` holds 0/1 targets.
LogisticModel logistic_fit(const Eigen::MatrixXd& x, std::span<const int> y, const LogisticConfig& cfg = {});
double logistic_logit(const LogisticModel& m, const Eigen::VectorXd& x);

struct TsLrModel {
  std::vector<int> labels;
  std::optional<ReferencePoint<double>> reference;
  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_scale;
  std::vector<LogisticModel> models;  // one for binary, one per class (one-vs-rest) otherwise
};

TsLrModel ts_lr_fit(std::span<const SpdMatrixd> covs, std::span<const int> labels, const SolverConfig& cfg = {},
                    const LogisticConfig& lr = {});
Prediction ts_lr_score(const TsLrModel& model, const SpdMatrixd& c);

}  // namespace rmf
