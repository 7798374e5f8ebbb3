#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "rmf/stats.hpp"
#include "support.hpp"

using namespace rmf;

namespace {

// Composite Simpson integration of the standard normal density from -40 to z.
double phi_quadrature(double z) {
  const double lo = -40.0;
  const int n = 400000;
  const double h = (z - lo) / n;
  auto f = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); };
  double s = f(lo) + f(z);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
  return s * h / 3.0;
}

// Exact sign-flip distribution of W+ by enumeration: its mean and variance.
std::pair<double, double> wplus_moments(const std::vector<double>& ranks) {
  const std::size_t n = ranks.size();
  double m = 0, m2 = 0;
  const std::uint32_t total = 1u << n;
  for (std::uint32_t mask = 0; mask < total; ++mask) {
    double w = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1u) w += ranks[i];
    m += w;
    m2 += w * w;
  }
  m /= total;
  return {m, m2 / total - m * m};
}

PipelineScoreTable table(const std::string& name, const std::vector<std::pair<std::string, std::vector<double>>>& data) {
  PipelineScoreTable t;
  t.pipeline = name;
  for (const auto& [dataset, scores] : data)
    for (std::size_t s = 0; s < scores.size(); ++s) {
      char subject[16];
      std::snprintf(subject, sizeof subject, "s%03zu", s);
      for (int f = 0; f < 2; ++f) t.rows.push_back({dataset, subject, "0", f, scores[s], 0.0, {}});
    }
  return t;
}

}  // namespace

TEST_CASE("normal CDF and quantile against quadrature") {
  for (double z : {-6.0, -3.0, -1.6449, -0.5, 0.0, 0.3, 1.0, 2.3262, 4.0})
    CHECK(std::abs(normal_cdf(z) - phi_quadrature(z)) < 1e-9);
  for (double p : {1e-12, 1e-6, 0.01, 0.05, 0.3, 0.5, 0.77, 0.95, 0.999999}) {
    const double z = normal_quantile(p);
    CHECK(std::abs(normal_cdf(z) - p) <= 1e-9 * std::max(p, 1e-3));
  }
  CHECK(normal_quantile(0.95) == doctest::Approx(1.6448536).epsilon(1e-7));
  CHECK_THROWS_AS(normal_quantile(0.0), InvalidInput);
  CHECK_THROWS_AS(normal_quantile(1.0), InvalidInput);
}

TEST_CASE("exact permutation test") {
  CHECK(exact_permutation_test(std::vector<double>{1, 2, 3}) == 0.125);
  CHECK(exact_permutation_test(std::vector<double>{-1, -2, -3}) == 1.0);
  CHECK(exact_permutation_test(std::vector<double>{0, 0}) == 1.0);
  CHECK_THROWS_AS(exact_permutation_test(std::vector<double>(20, 1.0)), RoutedElsewhere);
  CHECK_THROWS_AS(exact_permutation_test(std::vector<double>{1.0}), InvalidInput);

  // lattice, lower bound, and equivalence with the t statistic
  Rng rng(70);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + rng.below(12);
    std::vector<double> d(n);
    for (auto& x : d) x = rng.normal() + 0.3;
    const double p = exact_permutation_test(d);
    const double scaled = p * double(1u << n);
    CHECK(scaled == std::round(scaled));
    CHECK(p >= 1.0 / double(1u << n));

    auto tstat = [](const std::vector<double>& v) {
      const double m = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
      double ss = 0;
      for (double x : v) ss += (x - m) * (x - m);
      return m / std::sqrt(ss / double(v.size() - 1));
    };
    const double t0 = tstat(d);
    std::uint32_t count = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      std::vector<double> f = d;
      for (std::size_t i = 0; i < n; ++i)
        if (mask >> i & 1u) f[i] = -f[i];
      count += tstat(f) >= t0 - 1e-12;
    }
    CHECK(p == double(count) / double(1u << n));
  }
}

TEST_CASE("Wilcoxon signed-rank") {
  std::vector<double> pos(20);
  std::iota(pos.begin(), pos.end(), 1.0);
  const auto r = wilcoxon_signed_rank(pos);
  CHECK(r.w_plus == 210.0);
  CHECK(r.mean == 105.0);
  CHECK(r.variance == doctest::Approx(717.5).epsilon(1e-14));
  CHECK(r.p < 1e-4);
  CHECK(r.p == doctest::Approx(1.0 - normal_cdf((210.0 - 105.0 - 0.5) / std::sqrt(717.5))).epsilon(1e-12));

  std::vector<double> anti;
  for (int i = 1; i <= 10; ++i) {
    anti.push_back(i);
    anti.push_back(-i);
  }
  const auto a = wilcoxon_signed_rank(anti);
  CHECK(std::abs(a.p - 0.5) < 0.5 / std::sqrt(a.variance));

  const auto z = wilcoxon_signed_rank(std::vector<double>(25, 0.0));
  CHECK(z.degenerate);
  CHECK(z.p == 1.0);
}

TEST_CASE("Wilcoxon tie-corrected moments match sign-flip enumeration") {
  // magnitudes with tie groups; ranks averaged within ties
  const std::vector<double> d{0.5, -0.5, 1.0, 1.5, -1.5, 1.5, 2.0, -3.0, 3.5, 4.0, -4.5, 5.0, 0.0, 6.0};
  const auto r = wilcoxon_signed_rank(d);
  CHECK(r.n_used == 13);
  // ranks of |d| without the zero: 0.5,0.5 -> 1.5; 1.0 -> 3; 1.5 x3 -> 5; 2.0 -> 7; 3.0 -> 8; ...
  const std::vector<double> ranks{1.5, 1.5, 3, 5, 5, 5, 7, 8, 9, 10, 11, 12, 13};
  const auto [mean, var] = wplus_moments(ranks);
  CHECK(r.mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(r.variance == doctest::Approx(var).epsilon(1e-12));
  double w = 0;
  const std::vector<double> nz{0.5, -0.5, 1.0, 1.5, -1.5, 1.5, 2.0, -3.0, 3.5, 4.0, -4.5, 5.0, 6.0};
  for (std::size_t i = 0; i < nz.size(); ++i) w += nz[i] > 0 ? ranks[i] : 0.0;
  CHECK(r.w_plus == w);
  CHECK(r.p == doctest::Approx(1.0 - normal_cdf((w - mean - 0.5) / std::sqrt(var))).epsilon(1e-10));
}

TEST_CASE("Wilcoxon p against a pinned Monte-Carlo sign-flip oracle at n = 20") {
  Rng rng(71);
  std::vector<double> d;
  for (int i = 0; i < 20; ++i) d.push_back(std::round((rng.normal() + 0.4) * 4.0) / 4.0);  // coarse grid -> ties
  const auto r = wilcoxon_signed_rank(d);
  // exact W+ distribution over all 2^n sign patterns (zeros dropped), tail P(W+ >= observed)
  std::vector<double> nz;
  for (double x : d)
    if (x != 0.0) nz.push_back(x);
  std::vector<std::size_t> idx(nz.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return std::abs(nz[a]) < std::abs(nz[b]); });
  std::vector<double> ranks(nz.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && std::abs(nz[idx[j]]) == std::abs(nz[idx[i]])) ++j;
    for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = 0.5 * double(i + j + 1);
    i = j;
  }
  Rng mc(72);
  const int draws = 1 << 16;
  int tail = 0;
  for (int k = 0; k < draws; ++k) {
    double w = 0;
    for (double rk : ranks) w += mc.below(2) ? rk : 0.0;
    tail += w >= r.w_plus;
  }
  const double p_mc = double(tail) / draws;
  MESSAGE("normal approximation " << r.p << " vs sign-flip " << p_mc);
  CHECK(std::abs(r.p - p_mc) < 0.01);
}

TEST_CASE("Liptak combination") {
  CHECK(liptak_combine(std::vector<double>{0.03}, std::vector<double>{7.0}) == doctest::Approx(0.03).epsilon(1e-9));
  CHECK(liptak_combine(std::vector<double>{0.5, 0.5}, std::vector<double>{1, 1}) == doctest::Approx(0.5).epsilon(1e-12));
  const double p = liptak_combine(std::vector<double>{0.05, 0.05}, std::vector<double>{1, 1});
  CHECK(std::abs(p - 0.0100) < 1e-4);
  CHECK(p == doctest::Approx(1.0 - normal_cdf(2.0 * normal_quantile(0.95) / std::sqrt(2.0))).epsilon(1e-12));
  // 0 and 1 are clamped to finite z; 1 - 1e-15 is not exact in double, so only roughly opposite
  CHECK(std::abs(liptak_combine(std::vector<double>{0.0, 1.0}, std::vector<double>{1, 1}) - 0.5) < 1e-3);
  CHECK_THROWS_AS(liptak_combine(std::vector<double>{}, std::vector<double>{}), InvalidInput);
  CHECK_THROWS_AS(liptak_combine(std::vector<double>{0.1}, std::vector<double>{0.0}), InvalidInput);

  Rng rng(73);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> ps{rng.uniform() * 0.9 + 0.05, rng.uniform() * 0.9 + 0.05, rng.uniform() * 0.9 + 0.05};
    const std::vector<double> ws{1.0, 2.0, 3.0};
    const double base = liptak_combine(ps, ws);
    ps[1] *= 0.5;
    CHECK(liptak_combine(ps, ws) <= base);
  }
}

TEST_CASE("SMD") {
  const std::vector<double> a{0.5, 0.5, 0.5, 0.5}, b{0.7, 0.5, 0.6, 0.6};
  const auto r = smd(a, b);
  CHECK(r.smd == doctest::Approx(0.1 / 0.0816497).epsilon(1e-6));
  CHECK(r.smd == doctest::Approx(1.2247449).epsilon(1e-6));
  CHECK(r.ci_low == doctest::Approx(r.smd - 0.98).epsilon(1e-12));
  CHECK(r.ci_high == doctest::Approx(r.smd + 0.98).epsilon(1e-12));
  CHECK_FALSE(r.degenerate);

  const auto same = smd(a, a);
  CHECK(same.degenerate);
  CHECK(same.smd == 0.0);
  const std::vector<double> shifted{0.6, 0.6, 0.6, 0.6};
  CHECK(smd(a, shifted).degenerate);
  CHECK_THROWS_AS(smd(std::vector<double>{1.0}, std::vector<double>{2.0}), InvalidInput);
}

TEST_CASE("meta_compare") {
  // one dataset, n = 3, B always wins
  const auto a = table("A", {{"d1", {0.6, 0.7, 0.65}}});
  const auto b = table("B", {{"d1", {0.7, 0.75, 0.8}}});
  const auto r = meta_compare(a, b);
  REQUIRE(r.datasets.size() == 1);
  CHECK(r.datasets[0].p == 0.125);
  CHECK(r.datasets[0].test == "permutation");
  CHECK(r.combined_p == doctest::Approx(0.125).epsilon(1e-9));
  CHECK(r.pipeline_a == "A");
  CHECK(r.pipeline_b == "B");

  // identical tables
  const auto self = meta_compare(a, a);
  CHECK(self.datasets[0].effect.smd == 0.0);
  CHECK(self.combined_p > 0.5);

  // weights: n = 4 and n = 16 -> the larger dataset weighs 4 / (2 + 4)
  Rng rng(74);
  std::vector<double> a4, b4, a16, b16;
  for (int i = 0; i < 4; ++i) {
    a4.push_back(0.6 + 0.05 * rng.uniform());
    b4.push_back(0.6 + 0.05 * rng.uniform());
  }
  for (int i = 0; i < 16; ++i) {
    a16.push_back(0.6 + 0.05 * rng.uniform());
    b16.push_back(0.65 + 0.05 * rng.uniform());
  }
  const auto w = meta_compare(table("A", {{"small", a4}, {"large", a16}}), table("B", {{"small", b4}, {"large", b16}}));
  double s_small = 0, s_large = 0;
  for (const auto& d : w.datasets) (d.dataset == "small" ? s_small : s_large) = d.effect.smd;
  CHECK(w.meta_smd == doctest::Approx(s_small / 3.0 + 2.0 * s_large / 3.0).epsilon(1e-12));

  // antisymmetry
  const auto ab = meta_compare(table("A", {{"x", a16}}), table("B", {{"x", b16}}));
  const auto ba = meta_compare(table("B", {{"x", b16}}), table("A", {{"x", a16}}));
  CHECK(ba.datasets[0].effect.smd == doctest::Approx(-ab.datasets[0].effect.smd).epsilon(1e-12));
  CHECK(ab.combined_p < 0.5);
  CHECK(ba.combined_p > 0.5);

  // Wilcoxon routing at n >= 20
  std::vector<double> a25, b25;
  for (int i = 0; i < 25; ++i) {
    a25.push_back(0.6 + 0.05 * rng.uniform());
    b25.push_back(0.62 + 0.05 * rng.uniform());
  }
  const auto big = meta_compare(table("A", {{"x", a25}}), table("B", {{"x", b25}}));
  CHECK(big.datasets[0].test == "wilcoxon");

  // mismatched cells
  auto broken = b;
  broken.rows.back().fold = 9;
  CHECK_THROWS_AS(meta_compare(a, broken), InvalidInput);
}

TEST_CASE("subject score: folds, then sessions") {
  PipelineScoreTable a, b;
  a.pipeline = "A";
  b.pipeline = "B";
  // subject x: session 0 folds {0.5, 0.7}, session 1 folds {0.9, 0.9, 0.9} -> (0.6 + 0.9) / 2
  for (double v : {0.5, 0.7}) a.rows.push_back({"d", "x", "0", int(a.rows.size()), v, 0.0, {}});
  for (double v : {0.9, 0.9, 0.9}) a.rows.push_back({"d", "x", "1", int(a.rows.size()), v, 0.0, {}});
  a.rows.push_back({"d", "y", "0", 0, 0.5, 0.0, {}});
  b = a;
  b.pipeline = "B";
  const auto pairs = pair_tables(a, b);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].a[0] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(pairs[0].subjects == std::vector<std::string>{"x", "y"});
}

TEST_CASE("significance marks") {
  CHECK(significance_marks(0.0001) == "***");
  CHECK(significance_marks(0.005) == "**");
  CHECK(significance_marks(0.03) == "*");
  CHECK(significance_marks(0.2).empty());
}
