#include "rmf/covariance.hpp"

#include <algorithm>

namespace rmf {

OasEstimate oas_estimate(const Eigen::MatrixXd& data) {
  const Index p = data.rows();
  const Index n = data.cols();
  if (p < 1) throw InvalidInput("oas: trial has no channels");
  if (n < 2) throw InvalidInput("oas: need at least 2 samples");
  if (!data.allFinite()) throw InvalidInput("oas: trial contains NaN or Inf");

  const Eigen::MatrixXd centered = data.colwise() - data.rowwise().mean();
  Eigen::MatrixXd s = centered * centered.transpose() / double(n);
  s = (s + s.transpose()) / 2.0;

  const double tr = s.trace();
  if (!(tr > 0.0)) throw DegenerateInput("oas: every channel is constant");
  const double tr2 = s.squaredNorm();  // tr(S^2) for symmetric S
  const double pd = double(p);
  const double nd = double(n);

  const double num = (1.0 - 2.0 / pd) * tr2 + tr * tr;
  const double den = (nd + 1.0 - 2.0 / pd) * (tr2 - tr * tr / pd);
  const double rho = den > 0.0 ? std::clamp(num / den, 0.0, 1.0) : 1.0;

  const double mu = tr / pd;
  Eigen::MatrixXd shrunk = (1.0 - rho) * s;
  shrunk.diagonal().array() += rho * mu;
  if (rho == 1.0) shrunk = mu * Eigen::MatrixXd::Identity(p, p);
  return {SpdMatrixd(shrunk), rho, n < p};
}

}  // namespace rmf
