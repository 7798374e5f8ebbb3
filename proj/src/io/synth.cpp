#include "rmf/io/synth.hpp"

#include <cmath>

#include "rmf/error.hpp"
#include "rmf/spd.hpp"

namespace rmf::io {

namespace {

Eigen::MatrixXd gaussian_matrix(Index rows, Index cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = rng.normal();
  return m;
}

Eigen::MatrixXd parse_center(const std::string& value, int dim, int cls, std::uint64_t seed,
                             const std::string& key) {
  if (value == "identity") return Eigen::MatrixXd::Identity(dim, dim);
  const auto colon = value.find(':');
  const std::string head = value.substr(0, colon);
  const std::string tail = colon == std::string::npos ? "" : value.substr(colon + 1);
  if (head == "diag") {
    const auto items = split_list(tail);
    if (int(items.size()) != dim)
      throw InvalidInput(key + ": diag needs " + std::to_string(dim) + " entries, got " +
                         std::to_string(items.size()));
    Eigen::VectorXd d(dim);
    for (int i = 0; i < dim; ++i) d(i) = parse_double(items[i], key);
    return d.asDiagonal();
  }
  if (head == "random") {
    const double spread = tail.empty() ? 1.0 : parse_double(tail, key);
    auto rng = Rng::stream(seed, {stream_id("center"), std::uint64_t(cls)});
    return random_center(dim, spread, rng);
  }
  throw InvalidInput(key + ": expected identity, diag:<values> or random[:spread]");
}

}  // namespace

Eigen::MatrixXd random_center(int dim, double spread, Rng& rng) {
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian_matrix(dim, dim, rng));
  const Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd d(dim);
  for (int i = 0; i < dim; ++i) d(i) = std::exp(spread * (2.0 * rng.uniform() - 1.0));
  return detail::symmetrized(Eigen::MatrixXd(q * d.asDiagonal() * q.transpose()));
}

Eigen::MatrixXd symmetric_gaussian(int dim, double sigma, Rng& rng) {
  Eigen::MatrixXd s(dim, dim);
  const double off = sigma / std::sqrt(2.0);
  for (int i = 0; i < dim; ++i) {
    s(i, i) = sigma * rng.normal();
    for (int j = i + 1; j < dim; ++j) s(i, j) = s(j, i) = off * rng.normal();
  }
  return s;
}

void SynthSpec::validate() const {
  const int k = n_classes();
  if (k < 2) throw InvalidInput("synth: at least 2 classes required");
  if (channels < 1) throw InvalidInput("synth: channels must be >= 1");
  for (int n : trials_per_class)
    if (n < 1) throw InvalidInput("synth: trials per class must be >= 1");
  if (generator == Generator::RiemannianGaussian) {
    if (int(sigma.size()) != k || int(centers.size()) != k)
      throw InvalidInput("synth: need one sigma and one center per class");
    for (double s : sigma)
      if (!(s > 0.0) || !std::isfinite(s)) throw InvalidInput("synth: sigma must be > 0");
    for (const auto& m : centers) {
      if (m.rows() != channels || m.cols() != channels)
        throw InvalidInput("synth: center dimension does not match channels");
      SpdMatrixd check(m);  // throws InvalidInput when not SPD
    }
  } else {
    if (int(source_variance.size()) != k) throw InvalidInput("synth: need one source-variance profile per class");
    const Index sources = source_variance[0].size();
    if (sources < 1 || sources > channels) throw InvalidInput("synth: need 1 <= sources <= channels");
    bool differ = false;
    for (const auto& v : source_variance) {
      if (v.size() != sources) throw InvalidInput("synth: source-variance profiles differ in length");
      if (!v.allFinite() || (v.array() <= 0.0).any()) throw InvalidInput("synth: source variances must be > 0");
      differ = differ || v != source_variance[0];
    }
    // Identical profiles are allowed: they give the null case.
    (void)differ;
    if (samples < 2) throw InvalidInput("synth: samples must be >= 2");
    if (!(noise_variance >= 0.0)) throw InvalidInput("synth: noise variance must be >= 0");
  }
}

SynthSpec SynthSpec::from_config(const Config& cfg) {
  SynthSpec s;
  const auto gen = cfg.get_string("generator");
  if (gen == "riemannian-gaussian")
    s.generator = Generator::RiemannianGaussian;
  else if (gen == "mixed-sources")
    s.generator = Generator::MixedSources;
  else
    throw InvalidInput("generator: expected riemannian-gaussian or mixed-sources, got '" + gen + "'");

  s.seed = cfg.get_uint("seed");
  s.channels = int(cfg.get_int("channels"));
  const int k = int(cfg.get_int("classes"));
  if (k < 2) throw InvalidInput("classes: at least 2 required");

  auto per_class = [k](std::vector<auto> v, const std::string& key) {
    if (v.size() == 1) v.assign(k, v[0]);
    if (int(v.size()) != k) throw InvalidInput(key + ": expected 1 or " + std::to_string(k) + " values");
    return v;
  };
  for (auto n : per_class(cfg.get_ints("trials_per_class"), "trials_per_class")) s.trials_per_class.push_back(int(n));

  if (s.generator == Generator::RiemannianGaussian) {
    s.sigma = per_class(cfg.get_doubles("sigma"), "sigma");
    if (s.channels < 1) throw InvalidInput("channels must be >= 1");
    for (int c = 0; c < k; ++c) {
      const std::string key = "center." + std::to_string(c);
      s.centers.push_back(parse_center(cfg.get_string(key, "identity"), s.channels, c, s.seed, key));
    }
  } else {
    s.samples = int(cfg.get_int("samples"));
    s.noise_variance = cfg.get_double("noise_variance", 0.01);
    for (int c = 0; c < k; ++c) {
      const auto v = cfg.get_doubles("variance." + std::to_string(c));
      s.source_variance.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), Index(v.size())));
    }
  }
  cfg.reject_unused();
  s.validate();
  return s;
}

TrialArchive synth_riemannian_gaussian(const SynthSpec& spec) {
  if (spec.generator != Generator::RiemannianGaussian) throw InvalidInput("spec is not riemannian-gaussian");
  spec.validate();
  TrialArchive a;
  a.kind = ArchiveKind::Covariance;
  a.n_classes = std::uint32_t(spec.n_classes());
  a.rows = a.cols = std::uint32_t(spec.channels);
  for (int c = 0; c < spec.n_classes(); ++c) {
    const Eigen::MatrixXd half = sqrtm(SpdMatrixd(spec.centers[c])).matrix();
    for (int t = 0; t < spec.trials_per_class[c]; ++t) {
      auto rng = Rng::stream(spec.seed, {stream_id("trial"), std::uint64_t(c), std::uint64_t(t)});
      const Eigen::MatrixXd e = spd_map(symmetric_gaussian(spec.channels, spec.sigma[c], rng), MatrixFunction::Exp);
      a.payload.push_back(detail::symmetrized(Eigen::MatrixXd(half * e * half)));
      a.labels.push_back(std::uint32_t(c));
    }
  }
  return a;
}

TrialArchive synth_mixed_sources(const SynthSpec& spec) {
  if (spec.generator != Generator::MixedSources) throw InvalidInput("spec is not mixed-sources");
  spec.validate();
  const Index sources = spec.source_variance[0].size();
  auto mix_rng = Rng::stream(spec.seed, {stream_id("mixing")});
  const Eigen::MatrixXd mixing = gaussian_matrix(spec.channels, sources, mix_rng);
  const double noise_sd = std::sqrt(spec.noise_variance);

  TrialArchive a;
  a.kind = ArchiveKind::TimeSeries;
  a.n_classes = std::uint32_t(spec.n_classes());
  a.rows = std::uint32_t(spec.channels);
  a.cols = std::uint32_t(spec.samples);
  for (int c = 0; c < spec.n_classes(); ++c) {
    const Eigen::MatrixXd a_scaled = mixing * spec.source_variance[c].cwiseSqrt().asDiagonal();
    for (int t = 0; t < spec.trials_per_class[c]; ++t) {
      auto rng = Rng::stream(spec.seed, {stream_id("trial"), std::uint64_t(c), std::uint64_t(t)});
      const Eigen::MatrixXd z = gaussian_matrix(sources, spec.samples, rng);
      const Eigen::MatrixXd eps = noise_sd * gaussian_matrix(spec.channels, spec.samples, rng);
      a.payload.push_back(a_scaled * z + eps);
      a.labels.push_back(std::uint32_t(c));
    }
  }
  return a;
}

TrialArchive synthesize(const SynthSpec& spec) {
  return spec.generator == Generator::RiemannianGaussian ? synth_riemannian_gaussian(spec) : synth_mixed_sources(spec);
}

}  // namespace rmf::io
