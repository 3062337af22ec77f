#include "grfest/sim/gait_controller.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "grfest/dynamics/dynamics.hpp"

namespace grfest {
namespace {

// Absolute thigh/shank angles placing the foot at `rel` (world-aligned,
// relative to the hip). Knee bends backwards (negative relative angle).
std::pair<double, double> twoLinkIk(double l1, double l2, Eigen::Vector2d rel) {
  const double reach = std::clamp(rel.norm(), std::abs(l1 - l2) + 1e-3, l1 + l2 - 1e-3);
  const double c = (reach * reach - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
  const double knee = -std::acos(std::clamp(c, -1.0, 1.0));
  const double dir = std::atan2(rel.x(), -rel.y());
  const double thigh = dir - std::atan2(l2 * std::sin(knee), l1 + l2 * std::cos(knee));
  return {thigh, thigh + knee};
}

void requireTwoLinkLegs(const RobotModel& model) {
  for (const auto& leg : model.legs())
    if (leg.links.size() != 2) throw ContractError("gait controller needs two-link legs");
}

double smoothstep(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return s * s * (3.0 - 2.0 * s);
}

}  // namespace

Eigen::VectorXd referencePosture(const RobotModel& model, double hip_height,
                                 double stance_width) {
  requireTwoLinkLegs(model);
  Eigen::VectorXd joints(model.numJoints());
  for (FootId foot : model.footIds()) {
    const auto& leg = model.legs()[foot];
    const double x = model.numFeet() == 1 ? 0.0 : (foot == 0 ? 0.5 : -0.5) * stance_width;
    const auto [thigh, shank] =
        twoLinkIk(leg.links[0].length, leg.links[1].length, Eigen::Vector2d(x, -hip_height));
    const int j = model.jointOffset(foot) - 3;
    joints(j) = thigh;
    joints(j + 1) = shank - thigh;
  }
  return joints;
}

GaitController::GaitController(RobotModel model, GaitParams params)
    : model_(std::move(model)), params_(params) {
  requireTwoLinkLegs(model_);
  if (!(params_.step_period > 0.0)) throw ContractError("gait: step period must be positive");
  if (!(params_.hip_height > 0.0)) throw ContractError("gait: hip height must be positive");
  posture_ = referencePosture(model_, params_.hip_height, params_.stance_width);
  lip_rate_ = std::sqrt(model_.gravity() / params_.hip_height);
}

Eigen::VectorXd GaitController::gravityFeedForward(const SimState& sim,
                                                   const std::vector<double>& load_share) const {
  Eigen::VectorXd gen = gravityVector(model_, sim.state.q);
  const double weight = model_.totalMass() * model_.gravity();
  for (FootId foot : model_.footIds()) {
    if (load_share[foot] <= 0.0) continue;
    const auto kin = computeFootKinematics(model_, sim.state, foot);
    gen -= kin.J_i.transpose() * Eigen::Vector2d(0.0, load_share[foot] * weight);
  }
  return gen.tail(model_.numJoints());
}

Eigen::VectorXd GaitController::standingTorques(const SimState& sim) const {
  const Eigen::VectorXd alpha = sim.state.joints();
  const Eigen::VectorXd alpha_dot = sim.state.jointRates();
  std::vector<double> share(model_.numFeet(), 1.0 / model_.numFeet());
  Eigen::VectorXd tau = gravityFeedForward(sim, share);
  tau += params_.joint_kp * (posture_ - alpha) - params_.joint_kd * alpha_dot;
  return tau.cwiseMax(-params_.torque_limit).cwiseMin(params_.torque_limit);
}

void GaitController::startStep(const SimState& sim, int stance, double t) {
  stance_ = stance;
  step_start_ = t;
  liftoff_ = footPositionWorld(model_, sim.state.q, 1 - stance);
  stance_x_ = footPositionWorld(model_, sim.state.q, stance).x();
}

// Foot-to-foot step length from the predicted pre-impact LIP state:
//   u = u* + (p- - p*) + coth(lambda T)/lambda (v- - v*).
double GaitController::stepLength(const SimState& sim, double time_left) const {
  const CenterOfMass com = centerOfMass(model_, sim.state.q);
  const double p = com.position.x() - stance_x_;
  const double v = com.jacobian.row(0).dot(sim.state.qdot);
  const double lam = lip_rate_;
  const double ch = std::cosh(lam * time_left), sh = std::sinh(lam * time_left);
  const double p_pre = p * ch + v / lam * sh;
  const double v_pre = p * lam * sh + v * ch;

  const double T = params_.step_period;
  const double u_star = params_.step_length;
  const double p_star = 0.5 * u_star;
  const double v_star = lam * p_star / std::tanh(0.5 * lam * T);
  const double u = u_star + (p_pre - p_star) + (v_pre - v_star) / (lam * std::tanh(lam * T));
  return std::clamp(u, -0.15, 0.35);
}

Eigen::VectorXd GaitController::torques(const SimState& sim, double t) {
  checkState(model_, sim.state);
  if (params_.standing() || t < params_.start_delay || model_.numFeet() != 2)
    return standingTorques(sim);

  const GaitParams& p = params_;
  // First step: stand on the rear leg and swing the front one.
  if (stance_ < 0) startStep(sim, 1, t);
  {
    const double elapsed = t - step_start_;
    const int swing = 1 - stance_;
    const bool touchdown = sim.contact[swing] && elapsed > 0.5 * p.step_period;
    if (touchdown || elapsed > 1.5 * p.step_period) startStep(sim, swing, t);
  }
  const int stance = stance_;
  const int swing = 1 - stance;
  const double elapsed = t - step_start_;
  const double phase = elapsed / p.step_period;

  const double theta = sim.state.pitch();
  const double omega = sim.state.pitchRate();
  const Eigen::VectorXd alpha = sim.state.joints();
  const Eigen::VectorXd alpha_dot = sim.state.jointRates();

  std::vector<double> share(2, 0.0);
  share[stance] = 1.0;
  Eigen::VectorXd tau = gravityFeedForward(sim, share);

  // Swing leg: world-frame arc from the liftoff point to the planned foothold.
  {
    const auto& leg = model_.legs()[swing];
    const int j = model_.jointOffset(swing) - 3;
    const double target_x = stance_x_ + stepLength(sim, std::max(0.0, p.step_period - elapsed));
    const Eigen::Vector2d hip = sim.state.basePosition() + rotation2d(theta) * leg.hip_offset;
    const Eigen::Vector2d hip_rate = sim.state.baseVelocity();
    // Joint targets relative to the hip at phase s, extrapolating the hip linearly.
    auto joints = [&](double s, double ahead) {
      const double x = liftoff_.x() + (target_x - liftoff_.x()) * smoothstep(s / 0.8);
      // sin^2 lands with zero target velocity; the slow final descent finds the ground.
      const double arc = std::sin(std::numbers::pi * std::min(s, 1.0));
      const double z = p.swing_height * arc * arc - 0.03 * std::clamp((s - 0.85) / 0.65, 0.0, 1.0);
      const auto [thigh, shank] = twoLinkIk(leg.links[0].length, leg.links[1].length,
                                            Eigen::Vector2d(x, z) - hip - ahead * hip_rate);
      return Eigen::Vector2d(thigh - theta, shank - thigh);
    };
    const double h = 1e-3;
    const Eigen::Vector2d target = joints(phase, 0.0);
    const Eigen::Vector2d target_rate = (joints(phase + h / p.step_period, h) - target) / h;
    for (int i = 0; i < 2; ++i)
      tau(j + i) += p.swing_kp * (target(i) - alpha(j + i)) +
                    p.swing_kd * (target_rate(i) - alpha_dot(j + i) - (i == 0 ? omega : 0.0));
  }

  // Stance leg: knee keeps the hip height, hip stabilizes the torso.
  {
    const auto& leg = model_.legs()[stance];
    const int j = model_.jointOffset(stance) - 3;
    const Eigen::Vector2d foot = footPositionWorld(model_, sim.state.q, stance);
    const Eigen::Vector2d hip = sim.state.basePosition() + rotation2d(theta) * leg.hip_offset;
    const auto [thigh, shank] = twoLinkIk(leg.links[0].length, leg.links[1].length,
                                          Eigen::Vector2d(foot.x() - hip.x(), -p.hip_height));
    tau(j + 1) += p.joint_kp * ((shank - thigh) - alpha(j + 1)) - p.joint_kd * alpha_dot(j + 1);

    const int js = model_.jointOffset(swing) - 3;
    const double torso = p.torso_kp * (p.torso_pitch - theta) - p.torso_kd * omega;
    tau(j) = -torso - tau(js);
  }

  return tau.cwiseMax(-p.torque_limit).cwiseMin(p.torque_limit);
}

}  // namespace grfest
