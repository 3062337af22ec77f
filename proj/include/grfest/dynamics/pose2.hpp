#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

namespace grfest {

/// Wraps an angle to (-pi, pi].
inline double wrapAngle(double angle) {
  double a = std::remainder(angle, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

/// Rigid transform in the x-z plane: x_parent = R(angle) x_child + translation.
struct Pose2 {
  Eigen::Vector2d translation = Eigen::Vector2d::Zero();
  double angle = 0.0;

  Pose2() = default;
  Pose2(Eigen::Vector2d t, double a) : translation(std::move(t)), angle(a) {}

  Eigen::Matrix2d rotation() const {
    const double c = std::cos(angle), s = std::sin(angle);
    return (Eigen::Matrix2d() << c, -s, s, c).finished();
  }

  Pose2 operator*(const Pose2& other) const {
    return {translation + rotation() * other.translation, wrapAngle(angle + other.angle)};
  }

  Pose2 inverse() const { return {-(rotation().transpose() * translation), wrapAngle(-angle)}; }
};

}  // namespace grfest
