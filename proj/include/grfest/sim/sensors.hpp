#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "grfest/dynamics/pose2.hpp"
#include "grfest/dynamics/robot_model.hpp"
#include "grfest/sim/simulator.hpp"

namespace grfest {

/// Sensor noise standard deviations (per sample unless noted).
struct NoiseConfig {
  double accel_std = 0.04;         // m/s^2
  double gyro_std = 0.002;         // rad/s
  double encoder_vel_std = 0.02;   // rad/s
  double encoder_pos_std = 0.01;   // rad
  double effort_std = 0.01;        // N m
  double vo_trans_std = 0.002;     // m per VO increment
  double vo_rot_std = 0.002;       // rad per VO increment
  Eigen::Vector2d accel_bias = Eigen::Vector2d::Constant(0.05);  // m/s^2, constant part
  double accel_bias_walk_std = 0.0;  // m/s^2 sqrt(s)
  std::uint64_t seed = 1;

  void validate() const;
  static NoiseConfig noiseless();
};

struct SensorRates {
  double imu_hz = 200.0;  // IMU, encoders, effort and contact switches
  double vo_hz = 50.0;
  int contact_delay = 0;  // samples of delay on the contact switches
};

struct ImuSample {
  double t = 0.0;
  Eigen::Vector2d accel = Eigen::Vector2d::Zero();  // body-frame specific force
  double gyro = 0.0;                                // pitch rate
};

struct EncoderSample {
  double t = 0.0;
  Eigen::VectorXd position;
  Eigen::VectorXd velocity;
};

struct EffortSample {
  double t = 0.0;
  Eigen::VectorXd torque;
};

struct ContactSample {
  double t = 0.0;
  std::vector<bool> contact;
};

/// Relative base motion between two VO epochs expressed in the body frame at t_i.
struct VoSample {
  double t_i = 0.0;
  double t_j = 0.0;
  Eigen::Vector2d translation = Eigen::Vector2d::Zero();
  double rotation = 0.0;

  Pose2 pose() const { return {translation, rotation}; }
};

/// IMU, encoder, effort and contact streams share one time base (index k).
struct SensorLog {
  std::vector<ImuSample> imu;
  std::vector<EncoderSample> encoders;
  std::vector<EffortSample> efforts;
  std::vector<ContactSample> contacts;
  std::vector<VoSample> vo;
  std::vector<SimState> truth;  // full-rate trace

  std::size_t size() const { return imu.size(); }
};

/// Body-frame specific force sensed by an accelerometer at the base origin.
Eigen::Vector2d specificForce(const RobotModel& model, const SimState& sim);

/// Samples a truth trace into noisy sensor streams. `camera` is the camera
/// pose in the body frame; VO noise is applied in the camera frame.
/// Throws ContractError if a rate does not divide the trace rate.
SensorLog synthesizeSensors(const std::vector<SimState>& truth, const RobotModel& model,
                            const NoiseConfig& noise, const SensorRates& rates = {},
                            const Pose2& camera = Pose2());

}  // namespace grfest
