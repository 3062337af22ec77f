#pragma once

#include <Eigen/Dense>
#include <vector>

#include "grfest/dynamics/dynamics.hpp"

namespace grfest {

struct MboOutput {
  Eigen::VectorXd residual;             // external generalized force estimate
  std::vector<Eigen::Vector2d> forces;  // per foot; zero for feet not in contact
};

/// First-order generalized-momentum observer
///   r = K_O (m(t) - integral_0^t (C^T qdot - G + B u + r) dt - m(0)),
/// with per-foot forces recovered by least squares on the stacked stance
/// Jacobian transposes J^T f = r.
class Mbo {
 public:
  Mbo(RobotModel model, Eigen::VectorXd gain, double dt);
  Mbo(RobotModel model, double gain, double dt);

  /// `state` carries the base pose and velocity (ground truth in the benchmark)
  /// together with the measured joint positions and rates.
  MboOutput step(const GeneralizedState& state, const Eigen::VectorXd& torque,
                 const std::vector<bool>& contact);

  const Eigen::VectorXd& residual() const { return r_; }

 private:
  RobotModel model_;
  Eigen::VectorXd gain_;
  double dt_;
  Eigen::VectorXd m0_, integral_, r_, prev_rate_;
  bool started_ = false;
};

}  // namespace grfest
