#pragma once

#include <Eigen/Dense>
#include <deque>
#include <optional>

namespace grfest {

struct OrientationEstimate {
  double pitch = 0.0;            // rad, wrapped to (-pi, pi]
  double pitch_rate_bias = 0.0;  // rad/s
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Identity();
};

struct OrientationSettings {
  double gyro_std = 0.002;        // rad/s, white gyro noise
  double bias_walk_std = 1e-4;    // rad/s sqrt(s)
  double accel_pitch_std = 0.05;  // rad, gravity-direction measurement when quasi-static
  double vo_rotation_std = 0.003; // rad per VO rotation increment
  double gravity = 9.81;
  // The accelerometer standard deviation grows by dynamic_weight * (spread of
  // the last dynamic_window samples) / g, so body accelerations that still pass
  // the magnitude gate do not drag the pitch.
  double dynamic_weight = 10.0;
  int dynamic_window = 50;
  double gate_low = 0.8;          // accepted |a| range as a multiple of gravity
  double gate_high = 1.2;
};

/// Kalman filter on pitch and gyro bias. Predict integrates the gyro;
/// the accelerometer corrects pitch from the gravity direction while the
/// specific force is quasi-static; an optional VO rotation increment corrects
/// the change of pitch since a stored anchor.
class OrientationFilter {
 public:
  explicit OrientationFilter(OrientationSettings settings = {},
                             OrientationEstimate initial = {});

  void predict(double gyro, double dt);

  /// Returns false if the accelerometer sample was gated out (estimate unchanged).
  bool correct(const Eigen::Vector2d& accel,
               std::optional<double> vo_rotation_increment = std::nullopt);

  /// Clones the current pitch as the epoch the next VO rotation increment is
  /// measured from (stochastic cloning keeps its correlation with the state).
  void setVoAnchor() { cloneAnchor(); }

  const OrientationEstimate& estimate() const { return estimate_; }
  bool lastAccelGated() const { return last_gated_; }

 private:
  void scalarUpdate(const Eigen::RowVector3d& h, double innovation, double variance);
  void cloneAnchor();
  void publish();

  OrientationSettings settings_;
  OrientationEstimate estimate_;
  Eigen::Vector3d x_;  // pitch, gyro bias, pitch at the VO anchor
  Eigen::Matrix3d P_;
  std::deque<Eigen::Vector2d> recent_accel_;
  bool last_gated_ = false;
};

/// Pitch implied by a quasi-static body-frame specific force.
double accelPitch(const Eigen::Vector2d& accel);

}  // namespace grfest
