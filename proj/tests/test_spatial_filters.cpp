#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rmf/spatial_filters.hpp"
#include "support.hpp"

using namespace rmf;
using rmf::test::diag;

namespace {

double off_diagonal_ratio(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd d = m.diagonal().asDiagonal();
  return (m - d).norm() / d.norm();
}

// Two-class trial set around two random centers.
void two_class_set(Rng& rng, Index dim, int per_class, std::vector<SpdMatrixd>& covs, std::vector<int>& labels) {
  const auto c0 = test::random_spd(dim, rng, 2.0), c1 = test::random_spd(dim, rng, 2.0);
  for (int label = 0; label < 2; ++label)
    for (int i = 0; i < per_class; ++i) {
      Eigen::MatrixXd s = 0.2 * test::gaussian(dim, dim, rng);
      s = 0.5 * (s + s.transpose()).eval();
      const ReferencePoint<double> ref(label == 0 ? c0 : c1);
      covs.push_back(ref.exp_map(s));
      labels.push_back(label);
    }
}

}  // namespace

TEST_CASE("csp_gevd: diagonal hand case") {
  const auto a = diag({4, 1, 1}), b = diag({1, 1, 4});
  const auto spec = csp_spectrum(a, b);
  CHECK(spec.values(0) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(spec.values(1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(spec.values(2) == doctest::Approx(0.8).epsilon(1e-12));

  const auto f = csp_gevd(a, b, 2);
  REQUIRE(f.output_dim() == 2);
  // rows pick coordinates 1 and 3 (0 and 2 zero-based), scaled to unit variance under a + b = 5 I
  std::vector<Index> picked;
  for (Index r = 0; r < 2; ++r) {
    Index arg = 0;
    f.w.row(r).cwiseAbs().maxCoeff(&arg);
    picked.push_back(arg);
    CHECK(std::abs(f.w(r, arg)) == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-12));
    CHECK(f.w.row(r).norm() == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-12));
  }
  std::sort(picked.begin(), picked.end());
  CHECK(picked == std::vector<Index>{0, 2});
}

TEST_CASE("csp_gevd: whitening, complementarity, ties, errors") {
  Rng rng(40);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 2 + 2 * Index(rng.below(6));
    const auto a = test::random_spd(n, rng, 3.0), b = test::random_spd(n, rng, 3.0);
    const auto f = csp_gevd(a, b, n);
    const Eigen::MatrixXd white = f.w * (a.matrix() + b.matrix()) * f.w.transpose();
    CHECK((white - Eigen::MatrixXd::Identity(n, n)).norm() < 1e-8);
    const auto sa = csp_spectrum(a, b), sb = csp_spectrum(b, a);
    for (Index i = 0; i < n; ++i) {
      CHECK(std::abs(sa.values(i) + sb.values(n - 1 - i) - 1.0) < 1e-10);
      CHECK(sa.values(i) > 0.0);
      CHECK(sa.values(i) < 1.0);
    }
  }
  const auto c = test::random_spd(4, rng);
  const auto same = csp_spectrum(c, c);
  CHECK((same.values.array() - 0.5).abs().maxCoeff() < 1e-12);
  const auto f = csp_gevd(c, c, 2);
  const Eigen::MatrixXd expected = same.vectors.leftCols(2).transpose();  // index order on ties
  CHECK((f.w - expected).norm() < 1e-12);

  CHECK_THROWS_AS(csp_gevd(c, c, 6), InvalidInput);
  CHECK_THROWS_AS(csp_gevd(c, c, 3), InvalidInput);
  CHECK_THROWS_AS(csp_gevd(c, test::random_spd(3, rng), 2), InvalidInput);
}

TEST_CASE("rank_by_score is stable on ties") {
  Eigen::VectorXd s(5);
  s << 0.1, 0.3, 0.3, 0.0, 0.3;
  CHECK(rank_by_score(s, 4) == std::vector<Index>{1, 2, 4, 0});
}

TEST_CASE("pham_ajd: diagonal set is a fixed point") {
  const std::vector<SpdMatrixd> set{diag({1, 2, 3}), diag({3, 1, 2}), diag({2, 2, 5})};
  const auto r = pham_ajd(set);
  CHECK(r.criterion_history.front() == doctest::Approx(0.0).epsilon(1e-14));
  const Eigen::MatrixXd b = r.demixing;
  CHECK(off_diagonal_ratio(b) < 1e-12);
}

TEST_CASE("pham_ajd: two matrices are exactly diagonalized") {
  Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 2 + Index(rng.below(8));
    const std::vector<SpdMatrixd> set{test::random_spd(n, rng, 3.0), test::random_spd(n, rng, 3.0)};
    const auto r = pham_ajd(set);
    for (const auto& c : set) CHECK(off_diagonal_ratio(r.demixing * c.matrix() * r.demixing.transpose()) < 1e-6);

    // B = D P V^T for the generalized eigenvectors V (V^T C_1 V = I), so B C_1 V is a scaled permutation
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(set[0].matrix(), set[1].matrix());
    const Eigen::MatrixXd m = r.demixing * set[1].matrix() * ges.eigenvectors();
    for (Index i = 0; i < n; ++i) {
      const double peak = m.row(i).cwiseAbs().maxCoeff();
      CHECK((m.row(i).cwiseAbs().array() > 1e-5 * peak).count() == 1);
    }
  }
}

TEST_CASE("pham_ajd: planted structure recovery and monotone criterion") {
  Rng rng(42);
  const Index n = 6;
  const Eigen::MatrixXd q = test::random_orthogonal(n, rng);
  std::vector<SpdMatrixd> set;
  for (int k = 0; k < 5; ++k) {
    Eigen::VectorXd d(n);
    for (Index i = 0; i < n; ++i) d(i) = std::exp(2.0 * (rng.uniform() - 0.5));
    Eigen::MatrixXd m = q * d.asDiagonal() * q.transpose();
    set.emplace_back(0.5 * (m + m.transpose()));
  }
  const auto r = pham_ajd(set);
  const Eigen::MatrixXd bq = r.demixing * q;  // scaled permutation
  for (Index i = 0; i < n; ++i) {
    const double peak = bq.row(i).cwiseAbs().maxCoeff();
    CHECK((bq.row(i).cwiseAbs().array() > 1e-5 * peak).count() == 1);
  }
  for (std::size_t i = 1; i < r.criterion_history.size(); ++i)
    CHECK(r.criterion_history[i] <= r.criterion_history[i - 1] + 1e-12);
  CHECK(r.criterion_history.size() == std::size_t(r.sweeps) + 1);

  // noisy set: still non-increasing, and less off-diagonal energy than B = I
  std::vector<SpdMatrixd> noisy;
  for (int k = 0; k < 6; ++k) noisy.push_back(test::random_spd(8, rng, 3.0));
  const auto rn = pham_ajd(noisy);
  for (std::size_t i = 1; i < rn.criterion_history.size(); ++i)
    CHECK(rn.criterion_history[i] <= rn.criterion_history[i - 1] + 1e-12);
  CHECK(pham_criterion(rn.demixing, noisy) < pham_criterion(Eigen::MatrixXd::Identity(8, 8), noisy));

  SolverConfig tight;
  tight.max_iterations = 1;
  tight.tolerance = 1e-300;
  CHECK_THROWS_AS(pham_ajd(noisy, tight), ConvergenceFailure);
  CHECK_THROWS_AS(pham_ajd(std::vector<SpdMatrixd>{noisy[0]}), InvalidInput);
}

TEST_CASE("adcsp dimension contract") {
  Rng rng(43);
  for (auto [in, out] : std::vector<std::pair<Index, Index>>{{64, 10}, {30, 10}, {28, 10}, {14, 10}, {10, 10}, {8, 8}, {3, 3}}) {
    std::vector<SpdMatrixd> covs;
    std::vector<int> labels;
    two_class_set(rng, in, 12, covs, labels);
    const auto f = adcsp_fit(covs, labels);
    CHECK(f.input_dim() == in);
    CHECK(f.output_dim() == out);
    for (const auto& c : covs) CHECK(apply_filter(f, c).dim() == out);
    if (in < 10) CHECK(f.w == Eigen::MatrixXd::Identity(in, in));
  }
  std::vector<SpdMatrixd> covs;
  std::vector<int> labels;
  two_class_set(rng, 12, 5, covs, labels);
  std::vector<int> one(labels.size(), 0);
  CHECK_THROWS_AS(adcsp_fit(covs, one), InvalidInput);
}

TEST_CASE("adcsp: multiclass input") {
  Rng rng(44);
  std::vector<SpdMatrixd> covs;
  std::vector<int> labels;
  two_class_set(rng, 32, 8, covs, labels);
  std::vector<SpdMatrixd> more;
  std::vector<int> more_labels;
  two_class_set(rng, 32, 8, more, more_labels);
  for (std::size_t i = 0; i < more.size(); ++i) {
    covs.push_back(more[i]);
    labels.push_back(more_labels[i] + 2);
  }
  CHECK(adcsp_fit(covs, labels).output_dim() == 10);
  CHECK(csp_fit(covs, labels).output_dim() == 16);
}

TEST_CASE("plain CSP baseline and apply_filter") {
  Rng rng(45);
  std::vector<SpdMatrixd> covs;
  std::vector<int> labels;
  two_class_set(rng, 16, 10, covs, labels);
  const auto f = csp_fit(covs, labels);
  CHECK(f.output_dim() == 8);
  const auto small = std::vector<SpdMatrixd>(covs.begin(), covs.end());
  std::vector<SpdMatrixd> c6;
  std::vector<int> l6;
  two_class_set(rng, 6, 5, c6, l6);
  CHECK(csp_fit(c6, l6).w == Eigen::MatrixXd::Identity(6, 6));

  const auto id = SpatialFilter::identity(16);
  CHECK(apply_filter(id, covs[0]).matrix() == covs[0].matrix());
  CHECK_THROWS_AS(apply_filter(id, c6[0]), InvalidInput);

  const Eigen::MatrixXd w = test::random_congruence(16, rng, 50.0);
  const SpatialFilter sq{w};
  CHECK(std::abs(airm_distance(apply_filter(sq, covs[0]), apply_filter(sq, covs[1])) -
                 airm_distance(covs[0], covs[1])) < 1e-8 * airm_distance(covs[0], covs[1]));
}
