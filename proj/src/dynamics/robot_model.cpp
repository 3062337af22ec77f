#include "grfest/dynamics/robot_model.hpp"

#include <numeric>

namespace grfest {

RobotModel::RobotModel(double base_mass, double base_inertia,
                       std::vector<LegParams> legs, double gravity)
    : base_mass_(base_mass),
      base_inertia_(base_inertia),
      legs_(std::move(legs)),
      gravity_(gravity) {
  int offset = 3;
  for (const auto& leg : legs_) {
    joint_offsets_.push_back(offset);
    offset += static_cast<int>(leg.links.size());
  }
  num_joints_ = offset - 3;

  actuation_map_ = Eigen::MatrixXd::Zero(dof(), num_joints_);
  for (int j = 0; j < num_joints_; ++j) actuation_map_(3 + j, j) = 1.0;

  validate();
}

RobotModel RobotModel::referenceBiped() {
  LinkParams thigh{0.8, 0.10, 0.0060, 0.25};
  LinkParams shank{0.3, 0.10, 0.0025, 0.25};
  LegParams left{"left", Eigen::Vector2d::Zero(), {thigh, shank}};
  LegParams right{"right", Eigen::Vector2d::Zero(), {thigh, shank}};
  return RobotModel(6.0, 0.15, {left, right});
}

std::vector<FootId> RobotModel::footIds() const {
  std::vector<FootId> ids(legs_.size());
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

int RobotModel::jointOffset(FootId foot) const {
  checkFoot(foot);
  return joint_offsets_[foot];
}

double RobotModel::totalMass() const {
  double m = base_mass_;
  for (const auto& leg : legs_)
    for (const auto& link : leg.links) m += link.mass;
  return m;
}

void RobotModel::checkFoot(FootId foot) const {
  if (foot < 0 || foot >= numFeet())
    throw ContractError("unknown foot id " + std::to_string(foot));
}

void RobotModel::validate() const {
  if (!(base_mass_ > 0.0) || !(base_inertia_ > 0.0))
    throw ContractError("base mass and inertia must be positive");
  if (!(gravity_ >= 0.0)) throw ContractError("gravity must be non-negative");
  for (const auto& leg : legs_) {
    if (leg.links.empty())
      throw ContractError("leg '" + leg.name + "' has no links");
    for (const auto& link : leg.links) {
      if (!(link.mass > 0.0) || !(link.inertia > 0.0) || !(link.length > 0.0))
        throw ContractError("leg '" + leg.name +
                            "': link mass, inertia and length must be positive");
    }
  }
}

GeneralizedState GeneralizedState::zero(const RobotModel& model) {
  return {Eigen::VectorXd::Zero(model.dof()), Eigen::VectorXd::Zero(model.dof())};
}

void checkState(const RobotModel& model, const GeneralizedState& state) {
  if (state.q.size() != model.dof() || state.qdot.size() != model.dof())
    throw ContractError("state dimension " + std::to_string(state.q.size()) + "/" +
                        std::to_string(state.qdot.size()) + " does not match model dof " +
                        std::to_string(model.dof()));
}

}  // namespace grfest
