#include "grfest/baselines/mbo.hpp"

#include "grfest/contract_error.hpp"

namespace grfest {

Mbo::Mbo(RobotModel model, Eigen::VectorXd gain, double dt)
    : model_(std::move(model)), gain_(std::move(gain)), dt_(dt) {
  if (gain_.size() != model_.dof() || !(gain_.minCoeff() > 0.0))
    throw ContractError("mbo: gain must be positive with one entry per generalized coordinate");
  if (!(dt_ > 0.0)) throw ContractError("mbo: dt must be positive");
}

Mbo::Mbo(RobotModel model, double gain, double dt)
    : Mbo(model, Eigen::VectorXd::Constant(model.dof(), gain), dt) {}

MboOutput Mbo::step(const GeneralizedState& state, const Eigen::VectorXd& torque,
                    const std::vector<bool>& contact) {
  checkState(model_, state);
  if (torque.size() != model_.numJoints() || static_cast<int>(contact.size()) != model_.numFeet())
    throw ContractError("mbo: input dimension mismatch");
  const DynamicsTerms terms = computeDynamicsTerms(model_, state);
  const Eigen::VectorXd m = terms.M * state.qdot;
  const Eigen::VectorXd rate =
      terms.C.transpose() * state.qdot - terms.G + model_.actuationMap() * torque;
  if (!started_) {
    m0_ = m;
    integral_ = Eigen::VectorXd::Zero(m.size());
    r_ = Eigen::VectorXd::Zero(m.size());
    started_ = true;
  } else {
    // Trapezoidal in the model rate; the residual enters at its last value.
    integral_ += dt_ * (0.5 * (prev_rate_ + rate) + r_);
    r_ = gain_.cwiseProduct(m - integral_ - m0_);
  }
  prev_rate_ = rate;

  MboOutput out;
  out.residual = r_;
  out.forces.assign(model_.numFeet(), Eigen::Vector2d::Zero());
  std::vector<FootId> stance;
  for (FootId foot : model_.footIds())
    if (contact[foot]) stance.push_back(foot);
  if (stance.empty()) return out;
  Eigen::MatrixXd Jt(model_.dof(), 2 * stance.size());
  for (std::size_t i = 0; i < stance.size(); ++i)
    Jt.middleCols(2 * i, 2) = computeFootKinematics(model_, state, stance[i]).J_i.transpose();
  const Eigen::VectorXd f = Jt.colPivHouseholderQr().solve(r_);
  for (std::size_t i = 0; i < stance.size(); ++i) out.forces[stance[i]] = f.segment<2>(2 * i);
  return out;
}

}  // namespace grfest
