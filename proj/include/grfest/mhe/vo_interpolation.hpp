#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "grfest/dynamics/pose2.hpp"
#include "grfest/sim/sensors.hpp"

namespace grfest {

/// Interpolated base displacement from tick `tick` to `tick + 1`, expressed in
/// the body frame at `tick`.
struct VoTickDisplacement {
  long tick = 0;
  Eigen::Vector2d displacement = Eigen::Vector2d::Zero();
};

/// Index of the tick closest to `t`; ties go to the earlier tick.
long alignToTick(double t, double t0, double period);

/// Streams VO increments into per-tick displacements. Increments are chained
/// into keyframe poses; between consecutive keyframes the translation follows a
/// cubic Bezier segment whose end tangents are finite differences of the
/// keyframes (central at the older keyframe when available, backward at the
/// newest so no future increment is needed). Heading is interpolated linearly.
/// Within one increment the per-tick displacements, rotated back to the
/// keyframe frame, sum to the increment translation.
class VoInterpolator {
 public:
  explicit VoInterpolator(double tick_period, double t0 = 0.0);

  /// Returns the displacements of the ticks covered by `sample`. A sample that
  /// does not start where the previous one ended restarts the chain; ticks in
  /// the gap get no measurement.
  std::vector<VoTickDisplacement> add(const VoSample& sample);

 private:
  struct Key {
    long tick;
    Pose2 pose;
  };
  double period_;
  double t0_;
  std::optional<Key> prev_, cur_;
};

std::vector<VoTickDisplacement> interpolateVo(const std::vector<VoSample>& samples,
                                              double tick_period, double t0 = 0.0);

}  // namespace grfest
