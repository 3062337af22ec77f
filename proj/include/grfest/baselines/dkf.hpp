#pragma once

#include <Eigen/Dense>
#include <optional>

#include "grfest/mhe/mhe_estimator.hpp"

namespace grfest {

/// Disturbance Kalman filter: the MHE state (forces as random-walk
/// disturbances) propagated and updated in covariance form without any
/// contact constraints. It shares the per-tick LTV stage with the MHE; VO
/// couples consecutive states, so the previous state is cloned for the update.
/// On identical inputs it matches the unconstrained window-1 MHE.
class Dkf {
 public:
  Dkf(RobotModel model, NoiseModel noise, double rate_hz, const EstimatorState& initial);

  EstimateOut step(const TickInput& input);

  const Eigen::VectorXd& mean() const { return x_; }
  const Eigen::MatrixXd& covariance() const { return P_; }
  /// True when the last update needed eigenvalue clamping to stay PSD.
  bool lastClamped() const { return clamped_; }

 private:
  RobotModel model_;
  NoiseModel noise_;
  ModelOptions options_;
  StateLayout layout_;
  Eigen::VectorXd x_;
  Eigen::MatrixXd P_;
  std::optional<LinearStage> prev_stage_;
  double prev_pitch_ = 0.0;
  VoInterpolator vo_;
  long tick_ = 0;
  bool clamped_ = false;
};

}  // namespace grfest
