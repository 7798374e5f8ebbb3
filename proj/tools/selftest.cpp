// Quick oracle checks runnable from an installed binary (`rmf selftest`).

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "rmf/eval.hpp"
#include "rmf/io/archive.hpp"
#include "rmf/means.hpp"
#include "rmf/spd.hpp"
#include "rmf/stats.hpp"

using namespace rmf;

namespace {

SpdMatrixd diag(std::initializer_list<double> d) {
  Eigen::VectorXd v(Index(d.size()));
  Index i = 0;
  for (double x : d) v(i++) = x;
  return SpdMatrixd(v.asDiagonal());
}

double rel(const SpdMatrixd& a, const SpdMatrixd& b) {
  return (a.matrix() - b.matrix()).norm() / b.matrix().norm();
}

}  // namespace

int run_selftest(std::ostream& out) {
  int failures = 0;
  auto check = [&](const std::string& name, bool ok, double value) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-4s %-44s %.10g\n", ok ? "ok" : "FAIL", name.c_str(), value);
    out << buf;
    failures += !ok;
  };

  try {
    const double e2 = std::exp(2.0);
    const double d = airm_distance(SpdMatrixd::identity(2), diag({e2, e2}));
    check("distance I to diag(e^2, e^2) = 2 sqrt 2", std::abs(d - 2.0 * std::sqrt(2.0)) < 1e-12, d);

    const auto g = geodesic(diag({1, 1}), diag({4, 9}), 0.5);
    check("geodesic midpoint diag(2, 3)", rel(g, diag({2, 3})) < 1e-12, rel(g, diag({2, 3})));

    const std::vector<SpdMatrixd> set{diag({1, 2}), diag({3, 4})};
    const double p1 = std::pow((1 + std::sqrt(3.0)) / 2, 2), p2 = std::pow((std::sqrt(2.0) + 2) / 2, 2);
    const auto pm = power_mean(set, 0.5);
    check("power mean h=0.5 scalar oracle", rel(pm.mean, diag({p1, p2})) < 1e-6, rel(pm.mean, diag({p1, p2})));

    const auto hm = harmonic_mean(set);
    check("harmonic mean diag(1.5, 8/3)", rel(hm, diag({1.5, 8.0 / 3.0})) < 1e-12, rel(hm, diag({1.5, 8.0 / 3.0})));

    const std::vector<SpdMatrixd> pair{diag({1, 1}), diag({4, 9})};
    const auto gm = geometric_mean(pair);
    check("geometric mean of two = midpoint", rel(gm.mean, diag({2, 3})) < 1e-6, rel(gm.mean, diag({2, 3})));

    const std::vector<double> diffs{1, 2, 3};
    const double pp = exact_permutation_test(diffs);
    check("permutation p for (1, 2, 3) = 0.125", pp == 0.125, pp);

    const std::vector<double> ps{0.05, 0.05}, ws{1, 1};
    const double lp = liptak_combine(ps, ws);
    check("Liptak (0.05, 0.05) = 0.0100", std::abs(lp - 0.0100) < 1e-4, lp);

    const std::vector<double> scores{0.8, 0.3, 0.5, 0.1};
    const std::vector<int> pos{1, 1, 0, 0};
    const double auc = auc_roc(scores, pos);
    check("AUC pairs example = 0.75", auc == 0.75, auc);

    const char* digits = "123456789";
    const std::uint32_t crc = io::crc32({reinterpret_cast<const std::uint8_t*>(digits), 9});
    check("CRC-32 check value", crc == 0xCBF43926u, crc);
  } catch (const std::exception& ex) {
    out << "FAIL exception: " << ex.what() << "\n";
    ++failures;
  }
  out << (failures ? "selftest failed\n" : "selftest passed\n");
  return failures;
}
