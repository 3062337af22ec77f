#include "grfest/orientation/orientation_filter.hpp"

#include <cmath>

#include "grfest/dynamics/pose2.hpp"
#include "grfest/contract_error.hpp"

namespace grfest {

double accelPitch(const Eigen::Vector2d& accel) { return std::atan2(accel.x(), accel.y()); }

OrientationFilter::OrientationFilter(OrientationSettings settings, OrientationEstimate initial)
    : settings_(settings), estimate_(initial) {
  if (!(settings_.gyro_std >= 0.0) || !(settings_.bias_walk_std >= 0.0) ||
      !(settings_.accel_pitch_std > 0.0) || !(settings_.vo_rotation_std > 0.0) ||
      !(settings_.dynamic_weight >= 0.0) || settings_.dynamic_window < 1)
    throw ContractError("orientation: invalid noise settings");
  estimate_.pitch = wrapAngle(estimate_.pitch);
  x_ << estimate_.pitch, estimate_.pitch_rate_bias, estimate_.pitch;
  P_.setZero();
  P_.topLeftCorner<2, 2>() = estimate_.covariance;
  cloneAnchor();
}

void OrientationFilter::cloneAnchor() {
  x_(2) = x_(0);
  P_.row(2) = P_.row(0);
  P_.col(2) = P_.col(0);
  P_(2, 2) = P_(0, 0);
}

void OrientationFilter::publish() {
  estimate_.pitch = x_(0);
  estimate_.pitch_rate_bias = x_(1);
  estimate_.covariance = P_.topLeftCorner<2, 2>();
}

void OrientationFilter::predict(double gyro, double dt) {
  if (!(dt > 0.0)) throw ContractError("orientation: dt must be positive");
  x_(0) = wrapAngle(x_(0) + (gyro - x_(1)) * dt);
  Eigen::Matrix3d F = Eigen::Matrix3d::Identity();
  F(0, 1) = -dt;
  const Eigen::Vector3d q(settings_.gyro_std * settings_.gyro_std * dt * dt,
                          settings_.bias_walk_std * settings_.bias_walk_std * dt, 0.0);
  const Eigen::Matrix3d P = F * P_ * F.transpose() + Eigen::Matrix3d(q.asDiagonal());
  P_ = 0.5 * (P + P.transpose());
  publish();
}

void OrientationFilter::scalarUpdate(const Eigen::RowVector3d& h, double innovation,
                                     double variance) {
  const double s = h * P_ * h.transpose() + variance;
  const Eigen::Vector3d K = P_ * h.transpose() / s;
  x_ += K * innovation;
  x_(0) = wrapAngle(x_(0));
  // Joseph form keeps the covariance symmetric positive semidefinite.
  const Eigen::Matrix3d I_KH = Eigen::Matrix3d::Identity() - K * h;
  const Eigen::Matrix3d updated = I_KH * P_ * I_KH.transpose() + variance * K * K.transpose();
  P_ = 0.5 * (updated + updated.transpose());
}

bool OrientationFilter::correct(const Eigen::Vector2d& accel,
                                std::optional<double> vo_rotation_increment) {
  const double norm = accel.norm();
  last_gated_ = !(norm >= settings_.gate_low * settings_.gravity &&
                  norm <= settings_.gate_high * settings_.gravity);
  recent_accel_.push_back(accel);
  if (static_cast<int>(recent_accel_.size()) > settings_.dynamic_window) recent_accel_.pop_front();
  if (!last_gated_) {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& a : recent_accel_) mean += a;
    mean /= static_cast<double>(recent_accel_.size());
    double spread = 0.0;
    for (const auto& a : recent_accel_) spread += (a - mean).squaredNorm();
    spread /= static_cast<double>(recent_accel_.size());
    const double dynamic = settings_.dynamic_weight * settings_.dynamic_weight * spread /
                           (settings_.gravity * settings_.gravity);
    scalarUpdate(Eigen::RowVector3d(1.0, 0.0, 0.0), wrapAngle(accelPitch(accel) - x_(0)),
                 settings_.accel_pitch_std * settings_.accel_pitch_std + dynamic);
  }
  if (vo_rotation_increment) {
    // The increment measures pitch now minus the cloned pitch at the anchor.
    const double predicted = wrapAngle(x_(0) - x_(2));
    scalarUpdate(Eigen::RowVector3d(1.0, 0.0, -1.0), wrapAngle(*vo_rotation_increment - predicted),
                 settings_.vo_rotation_std * settings_.vo_rotation_std);
    cloneAnchor();
  }
  publish();
  return !last_gated_;
}

}  // namespace grfest
