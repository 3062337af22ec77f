#pragma once

#include <Eigen/Dense>
#include <vector>

#include "grfest/dynamics/robot_model.hpp"

namespace grfest {

/// Equation of motion terms for  M qdd + C qd + G = B u + sum_i J_i^T f_i.
///
/// C comes from the Christoffel symbols of M so that Mdot = C + C^T.
/// The splits follow the partition q = [p (2); theta, alpha (1+n)]:
///   M = [M1 M2],  C = [C1; C2].
struct DynamicsTerms {
  Eigen::MatrixXd M;
  Eigen::MatrixXd C;
  Eigen::VectorXd G;
  Eigen::MatrixXd M1;  // (3+n) x 2
  Eigen::MatrixXd M2;  // (3+n) x (1+n)
  Eigen::MatrixXd C1;  // 2 x (3+n)
  Eigen::MatrixXd C2;  // (1+n) x (3+n)
};

struct FootKinematics {
  Eigen::Vector2d fk;          // body frame, relative to the base origin
  Eigen::MatrixXd J_b;         // 2 x n, d fk / d alpha
  Eigen::MatrixXd J_i;         // 2 x (3+n), world foot velocity = J_i qdot
  Eigen::Vector2d v_foot;      // world frame
  Eigen::Vector2d p_world;     // world frame
};

/// Planar rotation of the base frame by `angle` (counter-clockwise in x-z).
Eigen::Matrix2d rotation2d(double angle);

/// d/dangle rotation2d(angle) = rotation2d(angle) * skew2d().
Eigen::Matrix2d skew2d();

DynamicsTerms computeDynamicsTerms(const RobotModel& model, const GeneralizedState& state);

/// M(q) only; cheaper when C is not needed.
Eigen::MatrixXd massMatrix(const RobotModel& model, const Eigen::VectorXd& q);

/// Gravity vector G(q) (+z up, so the base z entry is +m_total g).
Eigen::VectorXd gravityVector(const RobotModel& model, const Eigen::VectorXd& q);

/// C(q, qdot) qdot + G(q).
Eigen::VectorXd biasForces(const RobotModel& model, const GeneralizedState& state);

FootKinematics computeFootKinematics(const RobotModel& model, const GeneralizedState& state,
                                     FootId foot);

Eigen::Vector2d footPositionWorld(const RobotModel& model, const Eigen::VectorXd& q, FootId foot);

Eigen::VectorXd generalizedMomentum(const RobotModel& model, const GeneralizedState& state);

/// Linearized momentum rate
///   mdot = C1^T v + C2^T [w; alpha_dot] - G + B u + sum_i J_i^T f_i
/// with the matrices taken from `terms` (evaluated at the estimate).
Eigen::VectorXd momentumRate(const DynamicsTerms& terms, const Eigen::MatrixXd& actuation_map,
                             const Eigen::Vector2d& base_velocity, double measured_pitch_rate,
                             const Eigen::VectorXd& measured_joint_rates,
                             const Eigen::VectorXd& torques,
                             const std::vector<Eigen::MatrixXd>& contact_jacobians,
                             const std::vector<Eigen::Vector2d>& grfs);

/// Convenience overload that evaluates dynamics and contact Jacobians at `estimate`
/// and uses the base velocity of `estimate`.
Eigen::VectorXd momentumRate(const RobotModel& model, const GeneralizedState& estimate,
                             double measured_pitch_rate, const Eigen::VectorXd& measured_joint_rates,
                             const Eigen::VectorXd& torques, const std::vector<Eigen::Vector2d>& grfs);

struct CenterOfMass {
  Eigen::Vector2d position;
  Eigen::MatrixXd jacobian;  // 2 x (3+n)
};

CenterOfMass centerOfMass(const RobotModel& model, const Eigen::VectorXd& q);

double kineticEnergy(const RobotModel& model, const GeneralizedState& state);
double potentialEnergy(const RobotModel& model, const Eigen::VectorXd& q);

}  // namespace grfest
