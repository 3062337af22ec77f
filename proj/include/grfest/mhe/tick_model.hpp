#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "grfest/dynamics/dynamics.hpp"
#include "grfest/mhe/linear_window.hpp"
#include "grfest/sim/sensors.hpp"

namespace grfest {

/// Offsets of the blocks of x = [p, v, b_a, m, f_0, f_1, ...].
class StateLayout {
 public:
  StateLayout() = default;
  explicit StateLayout(const RobotModel& model)
      : dof_(model.dof()), feet_(model.numFeet()) {}

  static constexpr int position = 0;
  static constexpr int velocity = 2;
  static constexpr int bias = 4;
  static constexpr int momentum = 6;
  int force(FootId foot) const { return momentum + dof_ + 2 * foot; }
  int dof() const { return dof_; }
  int numFeet() const { return feet_; }
  int dim() const { return 6 + dof_ + 2 * feet_; }

 private:
  int dof_ = 0;
  int feet_ = 0;
};

struct EstimatorState {
  Eigen::Vector2d p = Eigen::Vector2d::Zero();
  Eigen::Vector2d v = Eigen::Vector2d::Zero();
  Eigen::Vector2d b_a = Eigen::Vector2d::Zero();
  Eigen::VectorXd m;
  std::vector<Eigen::Vector2d> f;

  Eigen::VectorXd pack() const;
  static EstimatorState unpack(const StateLayout& layout, const Eigen::VectorXd& x);
};

/// Process and measurement noise. Process entries are densities (per sqrt(s));
/// sensor entries are per-sample standard deviations.
struct NoiseModel {
  double position = 0.01;       // m / sqrt(s)
  double velocity = 0.02;       // m/s / sqrt(s), added to the accelerometer contribution
  double accel = 0.04;          // m/s^2
  double bias_walk = 1e-3;      // m/s^2 / sqrt(s)
  double momentum = 1.0;        // per momentum row / sqrt(s)
  double force = 150.0;         // N / sqrt(s)

  double gyro = 0.002;          // rad/s
  double encoder_velocity = 0.02;  // rad/s
  double odometry_floor = 0.005;   // m/s, slip and kinematic model error
  double momentum_floor = 1e-3;    // per momentum row
  double vo = 0.002;               // m per interpolated tick displacement

  // Initial (prior) standard deviations.
  double prior_position = 0.01;
  double prior_velocity = 0.05;
  double prior_bias = 0.1;
  double prior_momentum = 0.5;
  double prior_force = 20.0;

  void validate() const;
  /// All variances multiplied by `factor`.
  NoiseModel scaled(double factor) const;
  Eigen::MatrixXd priorCovariance(const StateLayout& layout) const;
};

/// Everything the estimators consume at one estimator tick.
struct TickInput {
  double t = 0.0;
  Eigen::Vector2d accel = Eigen::Vector2d::Zero();
  double gyro = 0.0;
  Eigen::VectorXd joint_position;
  Eigen::VectorXd joint_velocity;
  Eigen::VectorXd torque;
  std::vector<bool> contact;
  double pitch = 0.0;                 // from the orientation stage
  std::optional<VoSample> vo;         // increment whose aligned end is this tick
};

struct ModelOptions {
  double dt = 0.005;        // estimator period
  bool constraints = true;  // contact complementarity rows
  bool slippery = false;    // keep only the normal component of the stance-velocity rows
  // Momentum integrates the force at the end of the step (semi-implicit Euler),
  // so the newest force is observed through the newest momentum.
  bool force_at_step_end = true;
};

/// Leg-odometry base velocity from a stance foot:
///   y_v = -R J_b alpha_dot - R (w x fk).
/// `valid` is false when the contact switch is open.
struct OdometryMeasurement {
  Eigen::Vector2d value = Eigen::Vector2d::Zero();
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Identity();
  bool valid = false;
};

OdometryMeasurement legOdometryMeasurement(const RobotModel& model, double pitch,
                                           const Eigen::VectorXd& joint_position,
                                           const Eigen::VectorXd& joint_velocity, double gyro,
                                           bool contact, FootId foot, const NoiseModel& noise = {});

/// y_m = M2 [w; alpha_dot], measuring m - M1 v.
Eigen::VectorXd momentumMeasurement(const DynamicsTerms& terms, double gyro,
                                    const Eigen::VectorXd& joint_velocity);

/// Configuration used for linearization: measured joints, estimated pitch,
/// previous base-velocity estimate, measured rates.
GeneralizedState linearizationState(const RobotModel& model, const TickInput& input,
                                    const Eigen::Vector2d& velocity_estimate);

/// Builds the LTV stage of one tick: transition to the next tick, leg-odometry
/// and momentum measurements, and (optionally) complementarity constraints.
LinearStage buildTickStage(const RobotModel& model, const TickInput& input,
                           const Eigen::Vector2d& velocity_estimate, const NoiseModel& noise,
                           const ModelOptions& options);

/// VO residual R_k^T (p_{k+1} - p_k) = displacement, attached to the stage of tick k.
RelativeMeasurement voMeasurement(const StateLayout& layout, double pitch,
                                  const Eigen::Vector2d& displacement, const NoiseModel& noise);

}  // namespace grfest
