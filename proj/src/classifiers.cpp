#include "rmf/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace rmf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_training(std::span<const SpdMatrixd> covs, std::span<const int> labels) {
  if (covs.size() != labels.size()) throw InvalidInput("fit: covs and labels differ in length");
  if (covs.empty()) throw InvalidInput("fit: no training trials");
  for (const auto& c : covs)
    if (c.dim() != covs.front().dim()) throw InvalidInput("fit: trials of unequal dimension");
}

std::map<int, std::vector<SpdMatrixd>> group(std::span<const SpdMatrixd> covs, std::span<const int> labels) {
  std::map<int, std::vector<SpdMatrixd>> g;
  for (std::size_t i = 0; i < covs.size(); ++i) g[labels[i]].push_back(covs[i]);
  return g;
}

// Picks the first class with the highest score (ties go to the lower label).
Prediction from_scores(const std::vector<int>& labels, std::vector<double> scores) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c)
    if (scores[c] > scores[best]) best = c;
  Prediction p;
  p.label = labels[best];
  p.score = scores.size() == 2 ? scores[1] - scores[0] : kNaN;
  p.class_scores = std::move(scores);
  return p;
}

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

}  // namespace

std::vector<int> class_labels(std::span<const int> labels, std::size_t min_classes) {
  std::set<int> s(labels.begin(), labels.end());
  if (s.size() < min_classes)
    throw InvalidInput("need at least " + std::to_string(min_classes) + " classes, got " + std::to_string(s.size()));
  return {s.begin(), s.end()};
}

// ---- MDM ------------------------------------------------------------------

MdmModel mdm_fit(std::span<const SpdMatrixd> covs, std::span<const int> labels, const SolverConfig& cfg,
                 const std::optional<RobustConfig>& robust) {
  check_training(covs, labels);
  MdmModel m;
  m.labels = class_labels(labels);
  for (const auto& [label, trials] : group(covs, labels)) {
    if (trials.size() < 2) throw InvalidInput("mdm_fit: class " + std::to_string(label) + " has fewer than 2 trials");
    const auto mean = robust ? rpme_clean(trials, *robust, cfg).mean.mean : geometric_mean(trials, {}, std::nullopt, cfg).mean;
    m.means.emplace_back(mean);
  }
  return m;
}

Prediction mdm_score(const MdmModel& model, const SpdMatrixd& c) {
  if (model.means.empty() || c.dim() != model.means.front().dim()) throw InvalidInput("mdm_score: dimension mismatch");
  std::vector<double> s;
  for (const auto& ref : model.means) s.push_back(-ref.distance(c));
  return from_scores(model.labels, std::move(s));
}

// ---- MDMF -----------------------------------------------------------------

std::size_t MdmfModel::feature_length() const { return labels.size() * field.means_per_class(); }

MdmfModel mdmf_fit(std::span<const SpdMatrixd> covs, std::span<const int> labels, const std::vector<double>& h_grid,
                   const SolverConfig& cfg, const std::optional<RobustConfig>& robust) {
  check_training(covs, labels);
  MdmfModel m;
  m.labels = class_labels(labels);
  m.field = build_mean_field(group(covs, labels), h_grid, cfg, robust);
  for (const auto& [label, entries] : m.field.classes) {
    std::vector<ReferencePoint<double>> row;
    for (const auto& e : entries) row.emplace_back(e.mean);
    m.refs.push_back(std::move(row));
  }
  return m;
}

Eigen::VectorXd distance_features(const MdmfModel& model, const SpdMatrixd& c) {
  if (model.refs.empty() || c.dim() != model.refs.front().front().dim())
    throw InvalidInput("distance_features: dimension mismatch");
  Eigen::VectorXd f(Index(model.feature_length()));
  Index k = 0;
  for (const auto& row : model.refs)
    for (const auto& ref : row) f(k++) = ref.squared_distance(c);
  return f;
}

Prediction mdmf_score(const MdmfModel& model, const SpdMatrixd& c) {
  if (model.refs.empty() || c.dim() != model.refs.front().front().dim()) throw InvalidInput("mdmf_score: dimension mismatch");
  std::vector<double> s;
  for (const auto& row : model.refs) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& ref : row) best = std::min(best, ref.distance(c));
    s.push_back(-best);
  }
  return from_scores(model.labels, std::move(s));
}

// ---- LDA ------------------------------------------------------------------

LdaModel lda_fit(const Eigen::MatrixXd& x, std::span<const int> labels) {
  if (std::size_t(x.rows()) != labels.size() || x.rows() == 0) throw InvalidInput("lda_fit: shape mismatch");
  LdaModel m;
  m.labels = class_labels(labels);
  const Index k = Index(m.labels.size());
  const Index p = x.cols();
  const Index n = x.rows();

  m.class_means = Eigen::MatrixXd::Zero(k, p);
  m.priors = Eigen::VectorXd::Zero(k);
  std::vector<Index> cls(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    cls[i] = Index(std::lower_bound(m.labels.begin(), m.labels.end(), labels[i]) - m.labels.begin());
    m.class_means.row(cls[i]) += x.row(Index(i));
    m.priors(cls[i]) += 1.0;
  }
  for (Index c = 0; c < k; ++c) m.class_means.row(c) /= m.priors(c);

  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(p, p);
  for (Index i = 0; i < n; ++i) {
    const Eigen::RowVectorXd d = x.row(i) - m.class_means.row(cls[std::size_t(i)]);
    scatter.noalias() += d.transpose() * d;
  }
  m.pooled_covariance = scatter / double(n > k ? n - k : n);
  m.pooled_covariance.diagonal().array() += kLdaRidge * m.pooled_covariance.trace() / double(p);
  m.priors /= double(n);

  Eigen::LLT<Eigen::MatrixXd> llt(m.pooled_covariance);
  if (llt.info() != Eigen::Success) throw NumericalFailure("lda_fit: pooled covariance is singular after ridge");
  m.coef = llt.solve(m.class_means.transpose()).transpose();
  if (!m.coef.allFinite()) throw NumericalFailure("lda_fit: non-finite discriminant coefficients");
  m.intercept.resize(k);
  for (Index c = 0; c < k; ++c)
    m.intercept(c) = -0.5 * m.class_means.row(c).dot(m.coef.row(c)) + std::log(m.priors(c));
  return m;
}

Eigen::VectorXd lda_discriminants(const LdaModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.coef.cols()) throw InvalidInput("lda: feature length mismatch");
  return model.coef * x + model.intercept;
}

Prediction lda_predict(const LdaModel& model, const Eigen::VectorXd& x) {
  const Eigen::VectorXd g = lda_discriminants(model, x);
  return from_scores(model.labels, std::vector<double>(g.data(), g.data() + g.size()));
}

// ---- MF -------------------------------------------------------------------

MfModel mf_fit(std::span<const SpdMatrixd> covs, std::span<const int> labels, const std::vector<double>& h_grid,
               const SolverConfig& cfg, const std::optional<RobustConfig>& robust) {
  MfModel m{mdmf_fit(covs, labels, h_grid, cfg, robust), {}};
  Eigen::MatrixXd features(Index(covs.size()), Index(m.field.feature_length()));
  for (std::size_t i = 0; i < covs.size(); ++i) features.row(Index(i)) = distance_features(m.field, covs[i]).transpose();
  m.lda = lda_fit(features, labels);
  return m;
}

Prediction mf_score(const MfModel& model, const SpdMatrixd& c) {
  return lda_predict(model.lda, distance_features(model.field, c));
}

// ---- Tangent space + logistic regression ------------------------------------

Eigen::VectorXd tangent_map(const SpdMatrixd& c, const ReferencePoint<double>& reference) {
  if (c.dim() != reference.dim()) throw InvalidInput("tangent_map: dimension mismatch");
  const Eigen::MatrixXd s = reference.log_map(c);
  const Index n = s.rows();
  Eigen::VectorXd v(n * (n + 1) / 2);
  Index k = 0;
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j) v(k++) = i == j ? s(i, j) : std::sqrt(2.0) * s(i, j);
  return v;
}

Eigen::VectorXd tangent_map(const SpdMatrixd& c, const SpdMatrixd& reference) {
  return tangent_map(c, ReferencePoint<double>(reference));
}

LogisticModel logistic_fit(const Eigen::MatrixXd& x, std::span<const int> y, const LogisticConfig& cfg) {
  if (std::size_t(x.rows()) != y.size() || x.rows() == 0) throw InvalidInput("logistic_fit: shape mismatch");
  const Index n = x.rows();
  const Index p = x.cols();
  Eigen::MatrixXd xa(n, p + 1);
  xa << x, Eigen::VectorXd::Ones(n);
  Eigen::VectorXd target(n);
  for (Index i = 0; i < n; ++i) {
    if (y[std::size_t(i)] != 0 && y[std::size_t(i)] != 1) throw InvalidInput("logistic_fit: targets must be 0/1");
    target(i) = y[std::size_t(i)];
  }
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(p + 1, cfg.l2);
  penalty(p) = 0.0;

  auto objective = [&](const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = xa * beta;
    double f = 0.0;
    for (Index i = 0; i < n; ++i) f += softplus(eta(i)) - target(i) * eta(i);
    return f + 0.5 * beta.cwiseProduct(penalty).dot(beta);
  };

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);
  double gnorm = 0.0;
  for (int it = 0;; ++it) {
    const Eigen::VectorXd eta = xa * beta;
    const Eigen::VectorXd mu = eta.unaryExpr([](double t) { return sigmoid(t); });
    const Eigen::VectorXd grad = xa.transpose() * (mu - target) + penalty.cwiseProduct(beta);
    gnorm = grad.norm();
    if (gnorm <= cfg.gradient_tolerance)
      return {beta.head(p), beta(p), it, gnorm};
    if (it == cfg.max_iterations) break;

    const Eigen::VectorXd wt = mu.array() * (1.0 - mu.array());
    Eigen::MatrixXd hess = xa.transpose() * wt.asDiagonal() * xa;
    hess.diagonal() += penalty;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);

    const double f0 = objective(beta);
    const double slope = grad.dot(step);
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      if (objective(beta - t * step) <= f0 - 1e-4 * t * slope) {
        accepted = true;
        break;
      }
    }
    // at roundoff level the objective cannot resolve the decrease; take the Newton step
    beta -= (accepted ? t : 1.0) * step;
  }
  Eigen::MatrixXd last = beta;
  throw ConvergenceFailure("logistic regression did not converge", last, gnorm, cfg.max_iterations);
}

double logistic_logit(const LogisticModel& m, const Eigen::VectorXd& x) { return m.coef.dot(x) + m.intercept; }

TsLrModel ts_lr_fit(std::span<const SpdMatrixd> covs, std::span<const int> labels, const SolverConfig& cfg,
                    const LogisticConfig& lr) {
  check_training(covs, labels);
  TsLrModel m;
  m.labels = class_labels(labels);
  m.reference.emplace(geometric_mean(std::vector<SpdMatrixd>(covs.begin(), covs.end()), {}, std::nullopt, cfg).mean);

  const Index n = Index(covs.size());
  const Index dim = covs.front().dim();
  Eigen::MatrixXd x(n, dim * (dim + 1) / 2);
  for (Index i = 0; i < n; ++i) x.row(i) = tangent_map(covs[std::size_t(i)], *m.reference).transpose();

  m.feature_mean = x.colwise().mean().transpose();
  x.rowwise() -= m.feature_mean.transpose();
  m.feature_scale = (x.colwise().squaredNorm() / double(n)).cwiseSqrt().transpose();
  for (Index j = 0; j < x.cols(); ++j)
    if (!(m.feature_scale(j) > 0.0)) m.feature_scale(j) = 1.0;
  x = x * m.feature_scale.cwiseInverse().asDiagonal();

  auto fit_one = [&](int positive) {
    std::vector<int> y(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == positive ? 1 : 0;
    return logistic_fit(x, y, lr);
  };
  if (m.labels.size() == 2) {
    m.models.push_back(fit_one(m.labels[1]));
  } else {
    for (int c : m.labels) m.models.push_back(fit_one(c));
  }
  return m;
}

Prediction ts_lr_score(const TsLrModel& model, const SpdMatrixd& c) {
  if (!model.reference || c.dim() != model.reference->dim()) throw InvalidInput("ts_lr_score: dimension mismatch");
  const Eigen::VectorXd x =
      (tangent_map(c, *model.reference) - model.feature_mean).cwiseQuotient(model.feature_scale);
  if (model.labels.size() == 2) {
    const double logit = logistic_logit(model.models.front(), x);
    Prediction p;
    p.label = logit > 0.0 ? model.labels[1] : model.labels[0];
    p.score = logit;
    p.class_scores = {-logit, logit};
    return p;
  }
  std::vector<double> s;
  for (const auto& m : model.models) s.push_back(logistic_logit(m, x));
  return from_scores(model.labels, std::move(s));
}

}  // namespace rmf
