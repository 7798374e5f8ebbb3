#pragma once

// Shared generators and independent oracles for the test binaries.

#include <cmath>
#include <initializer_list>
#include <vector>

#include <Eigen/Dense>

#include "rmf/random.hpp"
#include "rmf/spd.hpp"

namespace rmf::test {

inline SpdMatrixd diag(std::initializer_list<double> d) {
  Eigen::VectorXd v(Index(d.size()));
  Index i = 0;
  for (double x : d) v(i++) = x;
  return SpdMatrixd(v.asDiagonal());
}

inline Eigen::MatrixXd gaussian(Index rows, Index cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = rng.normal();
  return m;
}

inline Eigen::MatrixXd random_orthogonal(Index n, Rng& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(n, n, rng));
  return qr.householderQ();
}

/// Q diag(exp(u)) Q^T with log-eigenvalues u uniform in [-log_spread/2, log_spread/2];
/// the condition number is at most exp(log_spread).
inline SpdMatrixd random_spd(Index n, Rng& rng, double log_spread = 2.0) {
  const Eigen::MatrixXd q = random_orthogonal(n, rng);
  Eigen::VectorXd d(n);
  for (Index i = 0; i < n; ++i) d(i) = std::exp(log_spread * (rng.uniform() - 0.5));
  Eigen::MatrixXd m = q * d.asDiagonal() * q.transpose();
  return SpdMatrixd(0.5 * (m + m.transpose()));
}

/// Invertible W with singular values in [1, cond].
inline Eigen::MatrixXd random_congruence(Index n, Rng& rng, double cond) {
  Eigen::VectorXd s(n);
  for (Index i = 0; i < n; ++i) s(i) = std::exp(std::log(cond) * rng.uniform());
  s(0) = 1.0;
  if (n > 1) s(n - 1) = cond;
  return random_orthogonal(n, rng) * s.asDiagonal() * random_orthogonal(n, rng);
}

inline double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / b.norm(); }

/// Scalar weighted power mean; h = 0 is the weighted geometric mean.
inline double scalar_power_mean(const std::vector<double>& x, const std::vector<double>& w, double h) {
  double s = 0.0;
  if (h == 0.0) {
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::log(x[i]);
    return std::exp(s);
  }
  for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], h);
  return std::pow(s, 1.0 / h);
}

/// n matrices Q diag(d_i) Q^T sharing one eigenbasis; the eigenvalues are returned in `eig`.
inline std::vector<SpdMatrixd> commuting_set(Index dim, std::size_t n, Rng& rng,
                                             std::vector<Eigen::VectorXd>& eig, Eigen::MatrixXd& q,
                                             double log_spread = 3.0) {
  q = random_orthogonal(dim, rng);
  std::vector<SpdMatrixd> set;
  eig.clear();
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd d(dim);
    for (Index j = 0; j < dim; ++j) d(j) = std::exp(log_spread * (rng.uniform() - 0.5));
    eig.push_back(d);
    Eigen::MatrixXd m = q * d.asDiagonal() * q.transpose();
    set.emplace_back(0.5 * (m + m.transpose()));
  }
  return set;
}

/// Matrix whose eigenvalues are the scalar power means, eigenvalue-wise.
inline Eigen::MatrixXd commuting_oracle(const std::vector<Eigen::VectorXd>& eig, const Eigen::MatrixXd& q,
                                        const std::vector<double>& w, double h) {
  const Index dim = q.rows();
  Eigen::VectorXd d(dim);
  for (Index j = 0; j < dim; ++j) {
    std::vector<double> x;
    for (const auto& e : eig) x.push_back(e(j));
    d(j) = scalar_power_mean(x, w, h);
  }
  return q * d.asDiagonal() * q.transpose();
}

/// Minimum eigenvalue of a symmetric matrix (Loewner checks).
inline double min_eig(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// ||P - sum_i w_i (P #_h C_i)||_F / ||P||_F, evaluated independently of the solver.
inline double fixed_point_residual(const SpdMatrixd& p, const std::vector<SpdMatrixd>& set, double h) {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p.dim(), p.dim());
  for (const auto& c : set) acc += geodesic(p, c, h).matrix() / double(set.size());
  return (p.matrix() - acc).norm() / p.matrix().norm();
}

inline std::vector<SpdMatrixd> random_set(Rng& rng, Index dim, std::size_t n, double spread = 2.0) {
  std::vector<SpdMatrixd> s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(test::random_spd(dim, rng, spread));
  return s;
}

/// Pair-counting AUC, ties worth one half.
inline double brute_auc(const std::vector<double>& s, const std::vector<int>& pos) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (pos[i] && !pos[j]) {
        pairs += 1;
        wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
  return wins / pairs;
}

// Plain IRLS for the penalized logistic objective, intercept unpenalized:
// beta <- (X^T W X + L)^{-1} X^T W z, z = eta + (y - mu) / w. Fixed iteration count.
inline Eigen::VectorXd irls_oracle(const Eigen::MatrixXd& x, const std::vector<int>& y, double l2) {
  const Index n = x.rows(), p = x.cols();
  Eigen::MatrixXd xa(n, p + 1);
  xa << x, Eigen::VectorXd::Ones(n);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);
  for (int it = 0; it < 100; ++it) {
    Eigen::MatrixXd lhs = Eigen::MatrixXd::Zero(p + 1, p + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p + 1);
    for (Index i = 0; i < n; ++i) {
      const double eta = xa.row(i).dot(beta);
      const double mu = 1.0 / (1.0 + std::exp(-eta));
      const double w = mu * (1 - mu);
      const double z = eta + (y[i] - mu) / w;
      lhs += w * xa.row(i).transpose() * xa.row(i);
      rhs += w * z * xa.row(i).transpose();
    }
    for (Index j = 0; j < p; ++j) lhs(j, j) += l2;
    beta = lhs.fullPivLu().solve(rhs);
  }
  return beta;
}

}  // namespace rmf::test
