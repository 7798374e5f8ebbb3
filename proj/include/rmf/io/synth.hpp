#pragma once

// Seeded synthetic trial generators.
//
// Stream scheme: trial t of class c draws from Rng::stream(seed, {id("trial"), c, t});
// random class centers from {id("center"), c}; the mixing matrix from {id("mixing")}.
// Trials are written class-major (all of class 0, then class 1, ...).

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rmf/io/archive.hpp"
#include "rmf/io/config.hpp"
#include "rmf/random.hpp"

namespace rmf::io {

enum class Generator { RiemannianGaussian, MixedSources };

struct SynthSpec {
  Generator generator = Generator::RiemannianGaussian;
  std::uint64_t seed = 0;
  int channels = 0;
  std::vector<int> trials_per_class;     // one entry per class
  std::vector<double> sigma;             // riemannian-gaussian dispersion, one per class
  std::vector<Eigen::MatrixXd> centers;  // riemannian-gaussian, one per class
  std::vector<Eigen::VectorXd> source_variance;  // mixed-sources, one profile per class
  int samples = 0;                       // mixed-sources only
  double noise_variance = 0.01;          // mixed-sources sensor noise

  int n_classes() const { return int(trials_per_class.size()); }
  void validate() const;

  /// Reads a generator config; see docs/formats.md for the keys.
  static SynthSpec from_config(const Config& cfg);
};

/// Random SPD center Q diag(exp(spread * u)) Q^T, u uniform on [-1, 1], Q a random rotation.
Eigen::MatrixXd random_center(int dim, double spread, Rng& rng);

/// Symmetric matrix with N(0, sigma^2) diagonal and N(0, sigma^2 / 2) off-diagonal entries.
Eigen::MatrixXd symmetric_gaussian(int dim, double sigma, Rng& rng);

TrialArchive synth_riemannian_gaussian(const SynthSpec& spec);
TrialArchive synth_mixed_sources(const SynthSpec& spec);
TrialArchive synthesize(const SynthSpec& spec);

}  // namespace rmf::io
