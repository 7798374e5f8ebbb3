#pragma once

#include <Eigen/Dense>

#include "rmf/spd.hpp"

namespace rmf {

/// One multichannel trial: rows are channels, columns are samples.
struct TimeSeriesTrial {
  Eigen::MatrixXd data;
  int label = 0;
};

struct OasEstimate {
  SpdMatrixd covariance;
  double shrinkage;   // rho in [0, 1]
  bool undersampled;  // fewer samples than channels
};

/// Oracle Approximating Shrinkage of the 1/n sample covariance toward tr(S)/p * I.
OasEstimate oas_estimate(const Eigen::MatrixXd& data);

inline SpdMatrixd oas_covariance(const Eigen::MatrixXd& data) { return oas_estimate(data).covariance; }
inline SpdMatrixd oas_covariance(const TimeSeriesTrial& trial) { return oas_estimate(trial.data).covariance; }

}  // namespace rmf
