#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "grfest/contract_error.hpp"

namespace grfest {

struct LinkParams {
  double mass = 0.0;        // kg
  double com_offset = 0.0;  // m, along the link from its proximal joint
  double inertia = 0.0;     // kg m^2 about the link CoM
  double length = 0.0;      // m
};

struct LegParams {
  std::string name;
  Eigen::Vector2d hip_offset = Eigen::Vector2d::Zero();  // body frame
  std::vector<LinkParams> links;                         // hip first
};

using FootId = int;

/// Planar floating-base robot: base (x, z, pitch) followed by serial legs
/// that end in point feet. Generalized coordinates are
///   q = [p_x, p_z, theta, alpha_0 ... alpha_{n-1}]
/// with the joints of leg 0 first. Link angles are relative to the parent;
/// at alpha = 0 every link hangs straight down (-z of the base frame).
class RobotModel {
 public:
  RobotModel() = default;
  RobotModel(double base_mass, double base_inertia, std::vector<LegParams> legs,
             double gravity = 9.81);

  /// Reference biped: two hip+knee legs, n = 4.
  static RobotModel referenceBiped();

  double baseMass() const { return base_mass_; }
  double baseInertia() const { return base_inertia_; }
  double gravity() const { return gravity_; }
  const std::vector<LegParams>& legs() const { return legs_; }

  int numJoints() const { return num_joints_; }
  int dof() const { return 3 + num_joints_; }
  int numFeet() const { return static_cast<int>(legs_.size()); }
  std::vector<FootId> footIds() const;

  /// Index into q of the first joint of leg `foot`.
  int jointOffset(FootId foot) const;

  /// (3+n) x n selection matrix B. Base rows are zero.
  const Eigen::MatrixXd& actuationMap() const { return actuation_map_; }

  double totalMass() const;

  void checkFoot(FootId foot) const;

 private:
  void validate() const;

  double base_mass_ = 0.0;
  double base_inertia_ = 0.0;
  std::vector<LegParams> legs_;
  double gravity_ = 9.81;
  int num_joints_ = 0;
  std::vector<int> joint_offsets_;
  Eigen::MatrixXd actuation_map_;
};

struct GeneralizedState {
  Eigen::VectorXd q;
  Eigen::VectorXd qdot;

  static GeneralizedState zero(const RobotModel& model);

  Eigen::Vector2d basePosition() const { return q.head<2>(); }
  double pitch() const { return q(2); }
  Eigen::VectorXd joints() const { return q.tail(q.size() - 3); }
  Eigen::Vector2d baseVelocity() const { return qdot.head<2>(); }
  double pitchRate() const { return qdot(2); }
  Eigen::VectorXd jointRates() const { return qdot.tail(qdot.size() - 3); }
};

void checkState(const RobotModel& model, const GeneralizedState& state);

}  // namespace grfest
