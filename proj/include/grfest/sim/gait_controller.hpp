#pragma once

#include <Eigen/Dense>

#include "grfest/dynamics/robot_model.hpp"
#include "grfest/sim/simulator.hpp"

namespace grfest {

struct GaitParams {
  double step_period = 0.25;    // s, nominal single-support duration
  double step_length = 0.06;    // m, nominal foot-to-foot advance per step
  double swing_height = 0.05;   // m, swing-foot apex
  double hip_height = 0.44;     // m, desired hip height over the ground
  double stance_width = 0.16;   // m, fore-aft foot separation of the standing posture
  double torso_pitch = 0.0;     // rad
  double joint_kp = 250.0;      // N m / rad
  double joint_kd = 4.0;        // N m s / rad; higher values chatter against the stiff ground under ZOH
  double swing_kp = 100.0;      // N m / rad; the unloaded leg needs gains stable at the control rate
  double swing_kd = 2.0;        // N m s / rad
  double torso_kp = 200.0;      // N m / rad
  double torso_kd = 15.0;       // N m s / rad
  double torque_limit = 30.0;   // N m
  double start_delay = 0.3;     // s standing before the first step

  /// Zero step length and swing height select the standing posture.
  bool standing() const { return step_length == 0.0 && swing_height == 0.0; }
  double desiredSpeed() const { return step_length / step_period; }
};

/// Joint angles of the reference standing posture (knees flexed) for a
/// two-link-per-leg model standing at `hip_height`, feet spread fore-aft by
/// `stance_width` (leg 0 in front).
Eigen::VectorXd referencePosture(const RobotModel& model, double hip_height,
                                 double stance_width);

/// Joint-space PD tracking of a cyclic swing/stance pattern for a two-legged
/// model. The stance hip regulates torso pitch, the stance knee keeps the hip
/// height, and the swing foot follows a world-frame arc towards a step
/// location chosen from the linear-inverted-pendulum state (deadbeat
/// step-to-step law). Support switches at swing touchdown. Reads the true state.
class GaitController {
 public:
  GaitController(RobotModel model, GaitParams params);

  /// Must be called with non-decreasing t.
  Eigen::VectorXd torques(const SimState& sim, double t);

  /// Current stance foot (-1 while standing).
  int stanceFoot() const { return stance_; }
  const GaitParams& params() const { return params_; }

 private:
  Eigen::VectorXd standingTorques(const SimState& sim) const;
  Eigen::VectorXd gravityFeedForward(const SimState& sim, const std::vector<double>& load_share) const;
  double stepLength(const SimState& sim, double time_left) const;
  void startStep(const SimState& sim, int stance, double t);

  RobotModel model_;
  GaitParams params_;
  Eigen::VectorXd posture_;
  double lip_rate_;  // sqrt(g / h)

  int stance_ = -1;
  double step_start_ = 0.0;
  Eigen::Vector2d liftoff_;
  double stance_x_ = 0.0;
};

}  // namespace grfest
