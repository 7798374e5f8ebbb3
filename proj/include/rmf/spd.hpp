#pragma once

// Symmetric positive-definite matrices and the affine-invariant geometry on them.
//
// Every matrix function here goes through one symmetric eigendecomposition:
// f(S) = V diag(f(lambda)) V^T. Matrices in this domain are small (dim <= 128),
// so there is no Schur/Pade path.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "rmf/error.hpp"

namespace rmf {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

/// Convergence parameters shared by every iterative solver.
struct SolverConfig {
  double tolerance = 1e-7;
  int max_iterations = 150;

  void validate() const {
    if (!(tolerance > 0.0)) throw InvalidInput("solver tolerance must be > 0");
    if (max_iterations < 1) throw InvalidInput("solver max_iterations must be >= 1");
  }
};

namespace detail {

template <typename Derived>
typename Derived::Scalar asymmetry(const Eigen::MatrixBase<Derived>& m) {
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& m) {
  using S = typename Derived::Scalar;
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  const S scale = m.cwiseAbs().maxCoeff();
  return asymmetry(m) <= S(1e-10) * scale;
}

template <typename Derived>
Mat<typename Derived::Scalar> symmetrized(const Eigen::MatrixBase<Derived>& m) {
  return (m + m.transpose()) / typename Derived::Scalar(2);
}

}  // namespace detail

/// A symmetric positive-definite matrix. Construction validates and never repairs.
template <typename Scalar_>
class SpdMatrix {
 public:
  using Scalar = Scalar_;
  using MatrixType = Mat<Scalar>;

  explicit SpdMatrix(const MatrixType& m) : m_(m) {
    if (m_.rows() == 0 || m_.rows() != m_.cols())
      throw InvalidInput("SPD matrix must be square and non-empty");
    if (!m_.allFinite()) throw InvalidInput("SPD matrix has non-finite entries");
    if (!detail::is_symmetric(m_))
      throw InvalidInput("matrix is not symmetric (asymmetry " + std::to_string(double(detail::asymmetry(m_))) + ")");
    m_ = detail::symmetrized(m_);
    Eigen::LLT<MatrixType> llt(m_);
    if (llt.info() != Eigen::Success) throw InvalidInput("matrix is not positive definite");
  }

  static SpdMatrix identity(Index n) { return SpdMatrix(MatrixType::Identity(n, n)); }

  Index dim() const noexcept { return m_.rows(); }
  const MatrixType& matrix() const noexcept { return m_; }
  Scalar operator()(Index i, Index j) const { return m_(i, j); }

  template <typename NewScalar>
  SpdMatrix<NewScalar> cast() const {
    return SpdMatrix<NewScalar>(m_.template cast<NewScalar>());
  }

 private:
  MatrixType m_;
};

using SpdMatrixd = SpdMatrix<double>;

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order.
template <typename Scalar>
struct SymEig {
  Vec<Scalar> values;
  Mat<Scalar> vectors;
};

namespace detail {

template <typename Scalar>
SymEig<Scalar> eig_unchecked(const Mat<Scalar>& s) {
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(s);
  if (es.info() != Eigen::Success) throw NumericalFailure("symmetric eigensolver did not converge");
  // Eigen returns ascending order
  return {es.eigenvalues().reverse(), es.eigenvectors().rowwise().reverse()};
}

template <typename Scalar>
Vec<Scalar> eigenvalues_unchecked(const Mat<Scalar>& s) {
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(s, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalFailure("symmetric eigensolver did not converge");
  return es.eigenvalues().reverse();
}

template <typename Scalar, typename F>
Mat<Scalar> reassemble(const SymEig<Scalar>& e, F f) {
  Vec<Scalar> fl = e.values.unaryExpr(f);
  Mat<Scalar> r = e.vectors * fl.asDiagonal() * e.vectors.transpose();
  return symmetrized(r);
}

}  // namespace detail

template <typename Derived>
SymEig<typename Derived::Scalar> sym_eig(const Eigen::MatrixBase<Derived>& s) {
  if (!detail::is_symmetric(s)) throw InvalidInput("sym_eig: input is not symmetric");
  return detail::eig_unchecked<typename Derived::Scalar>(detail::symmetrized(s));
}

enum class MatrixFunction { Log, Exp, Sqrt, InvSqrt, Inverse, Power };

/// Applies a scalar function to the spectrum of a symmetric matrix.
/// All functions except Exp require positive eigenvalues.
template <typename Derived>
Mat<typename Derived::Scalar> spd_map(const Eigen::MatrixBase<Derived>& s, MatrixFunction fn,
                                      typename Derived::Scalar t = 1) {
  using S = typename Derived::Scalar;
  auto e = sym_eig(s);
  if (fn != MatrixFunction::Exp && !(e.values.minCoeff() > S(0)))
    throw InvalidInput("spd_map: function requires a positive-definite argument");
  switch (fn) {
    case MatrixFunction::Log: return detail::reassemble(e, [](S x) { return std::log(x); });
    case MatrixFunction::Exp: return detail::reassemble(e, [](S x) { return std::exp(x); });
    case MatrixFunction::Sqrt: return detail::reassemble(e, [](S x) { return std::sqrt(x); });
    case MatrixFunction::InvSqrt: return detail::reassemble(e, [](S x) { return S(1) / std::sqrt(x); });
    case MatrixFunction::Inverse: return detail::reassemble(e, [](S x) { return S(1) / x; });
    case MatrixFunction::Power: return detail::reassemble(e, [t](S x) { return std::pow(x, t); });
  }
  throw InvalidInput("spd_map: unknown function");
}

// Typed shortcuts. SPD inputs are symmetric by construction, so these skip the symmetry check.

template <typename Scalar>
Mat<Scalar> logm(const SpdMatrix<Scalar>& s) {
  return detail::reassemble(detail::eig_unchecked<Scalar>(s.matrix()), [](Scalar x) { return std::log(x); });
}

template <typename Derived>
SpdMatrix<typename Derived::Scalar> expm(const Eigen::MatrixBase<Derived>& sym) {
  using S = typename Derived::Scalar;
  return SpdMatrix<S>(spd_map(sym, MatrixFunction::Exp));
}

template <typename Scalar>
SpdMatrix<Scalar> sqrtm(const SpdMatrix<Scalar>& s) {
  return SpdMatrix<Scalar>(
      detail::reassemble(detail::eig_unchecked<Scalar>(s.matrix()), [](Scalar x) { return std::sqrt(x); }));
}

template <typename Scalar>
SpdMatrix<Scalar> invsqrtm(const SpdMatrix<Scalar>& s) {
  return SpdMatrix<Scalar>(
      detail::reassemble(detail::eig_unchecked<Scalar>(s.matrix()), [](Scalar x) { return Scalar(1) / std::sqrt(x); }));
}

template <typename Scalar>
SpdMatrix<Scalar> powm(const SpdMatrix<Scalar>& s, Scalar t) {
  return SpdMatrix<Scalar>(
      detail::reassemble(detail::eig_unchecked<Scalar>(s.matrix()), [t](Scalar x) { return std::pow(x, t); }));
}

template <typename Scalar>
SpdMatrix<Scalar> inverse(const SpdMatrix<Scalar>& s) {
  return SpdMatrix<Scalar>(
      detail::reassemble(detail::eig_unchecked<Scalar>(s.matrix()), [](Scalar x) { return Scalar(1) / x; }));
}

/// W C W^T for any full-row-rank W.
template <typename Scalar, typename Derived>
SpdMatrix<Scalar> congruence(const Eigen::MatrixBase<Derived>& w, const SpdMatrix<Scalar>& c) {
  if (w.cols() != c.dim()) throw InvalidInput("congruence: dimension mismatch");
  Mat<Scalar> r = w * c.matrix() * w.transpose();
  return SpdMatrix<Scalar>(detail::symmetrized(r));
}

/// A fixed point R on the manifold with R^{1/2} and R^{-1/2} cached. Distances and
/// tangent logs from the same reference reuse one eigendecomposition.
template <typename Scalar>
class ReferencePoint {
 public:
  explicit ReferencePoint(const SpdMatrix<Scalar>& r) : ref_(r) {
    auto e = detail::eig_unchecked<Scalar>(r.matrix());
    sqrt_ = detail::reassemble(e, [](Scalar x) { return std::sqrt(x); });
    inv_sqrt_ = detail::reassemble(e, [](Scalar x) { return Scalar(1) / std::sqrt(x); });
  }

  const SpdMatrix<Scalar>& point() const noexcept { return ref_; }
  Index dim() const noexcept { return ref_.dim(); }
  const Mat<Scalar>& sqrt() const noexcept { return sqrt_; }
  const Mat<Scalar>& inv_sqrt() const noexcept { return inv_sqrt_; }

  /// R^{-1/2} C R^{-1/2}, symmetrized.
  Mat<Scalar> whiten(const SpdMatrix<Scalar>& c) const {
    check(c);
    Mat<Scalar> m = inv_sqrt_ * c.matrix() * inv_sqrt_;
    return detail::symmetrized(m);
  }

  Scalar squared_distance(const SpdMatrix<Scalar>& c) const {
    Vec<Scalar> l = detail::eigenvalues_unchecked<Scalar>(whiten(c));
    if (!(l.minCoeff() > Scalar(0))) throw NumericalFailure("airm_distance: lost positive definiteness");
    return l.array().log().square().sum();
  }

  Scalar distance(const SpdMatrix<Scalar>& c) const { return std::sqrt(squared_distance(c)); }

  /// log(R^{-1/2} C R^{-1/2}): the tangent vector of C at R in whitened coordinates.
  Mat<Scalar> log_map(const SpdMatrix<Scalar>& c) const {
    auto e = detail::eig_unchecked<Scalar>(whiten(c));
    if (!(e.values.minCoeff() > Scalar(0))) throw NumericalFailure("log_map: lost positive definiteness");
    return detail::reassemble(e, [](Scalar x) { return std::log(x); });
  }

  /// R^{1/2} exp(T) R^{1/2} for a symmetric whitened tangent T.
  SpdMatrix<Scalar> exp_map(const Mat<Scalar>& tangent) const {
    auto e = detail::eig_unchecked<Scalar>(detail::symmetrized(tangent));
    Mat<Scalar> m = sqrt_ * detail::reassemble(e, [](Scalar x) { return std::exp(x); }) * sqrt_;
    return SpdMatrix<Scalar>(detail::symmetrized(m));
  }

  /// R^{1/2} (R^{-1/2} C R^{-1/2})^t R^{1/2}.
  SpdMatrix<Scalar> toward(const SpdMatrix<Scalar>& c, Scalar t) const {
    auto e = detail::eig_unchecked<Scalar>(whiten(c));
    if (!(e.values.minCoeff() > Scalar(0))) throw NumericalFailure("geodesic: lost positive definiteness");
    Mat<Scalar> m = sqrt_ * detail::reassemble(e, [t](Scalar x) { return std::pow(x, t); }) * sqrt_;
    return SpdMatrix<Scalar>(detail::symmetrized(m));
  }

 private:
  void check(const SpdMatrix<Scalar>& c) const {
    if (c.dim() != ref_.dim()) throw InvalidInput("dimension mismatch against reference point");
  }

  SpdMatrix<Scalar> ref_;
  Mat<Scalar> sqrt_;
  Mat<Scalar> inv_sqrt_;
};

/// Affine-invariant Riemannian distance ||log(A^{-1/2} B A^{-1/2})||_F.
template <typename Scalar>
Scalar airm_distance(const SpdMatrix<Scalar>& a, const SpdMatrix<Scalar>& b) {
  if (a.dim() != b.dim()) throw InvalidInput("airm_distance: dimension mismatch");
  return ReferencePoint<Scalar>(a).distance(b);
}

/// Point at parameter t on the geodesic from A (t = 0) to B (t = 1).
template <typename Scalar>
SpdMatrix<Scalar> geodesic(const SpdMatrix<Scalar>& a, const SpdMatrix<Scalar>& b, Scalar t) {
  if (a.dim() != b.dim()) throw InvalidInput("geodesic: dimension mismatch");
  if (!(t >= Scalar(0) && t <= Scalar(1))) throw InvalidInput("geodesic: t must lie in [0, 1]");
  if (t == Scalar(0)) return a;
  if (t == Scalar(1)) return b;
  return ReferencePoint<Scalar>(a).toward(b, t);
}

}  // namespace rmf
