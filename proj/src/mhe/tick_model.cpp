#include "grfest/mhe/tick_model.hpp"

#include <cmath>

#include "grfest/contract_error.hpp"

namespace grfest {

Eigen::VectorXd EstimatorState::pack() const {
  const int dof = static_cast<int>(m.size());
  Eigen::VectorXd x(6 + dof + 2 * static_cast<int>(f.size()));
  x << p, v, b_a, m, Eigen::VectorXd::Zero(2 * f.size());
  for (std::size_t i = 0; i < f.size(); ++i) x.segment<2>(6 + dof + 2 * i) = f[i];
  return x;
}

EstimatorState EstimatorState::unpack(const StateLayout& layout, const Eigen::VectorXd& x) {
  if (x.size() != layout.dim()) throw ContractError("estimator state: dimension mismatch");
  EstimatorState s;
  s.p = x.segment<2>(StateLayout::position);
  s.v = x.segment<2>(StateLayout::velocity);
  s.b_a = x.segment<2>(StateLayout::bias);
  s.m = x.segment(StateLayout::momentum, layout.dof());
  for (int i = 0; i < layout.numFeet(); ++i) s.f.push_back(x.segment<2>(layout.force(i)));
  return s;
}

void NoiseModel::validate() const {
  for (double v : {position, velocity, accel, bias_walk, momentum, force, gyro, encoder_velocity,
                   odometry_floor, momentum_floor, vo, prior_position, prior_velocity, prior_bias,
                   prior_momentum, prior_force})
    if (!(v > 0.0) || !std::isfinite(v))
      throw ContractError("noise model: standard deviations must be positive");
}

NoiseModel NoiseModel::scaled(double factor) const {
  if (!(factor > 0.0)) throw ContractError("noise model: scale must be positive");
  const double s = std::sqrt(factor);
  NoiseModel n = *this;
  for (double* v : {&n.position, &n.velocity, &n.accel, &n.bias_walk, &n.momentum, &n.force,
                    &n.gyro, &n.encoder_velocity, &n.odometry_floor, &n.momentum_floor, &n.vo,
                    &n.prior_position, &n.prior_velocity, &n.prior_bias, &n.prior_momentum,
                    &n.prior_force})
    *v *= s;
  return n;
}

Eigen::MatrixXd NoiseModel::priorCovariance(const StateLayout& layout) const {
  Eigen::VectorXd d(layout.dim());
  d.segment<2>(StateLayout::position).setConstant(prior_position * prior_position);
  d.segment<2>(StateLayout::velocity).setConstant(prior_velocity * prior_velocity);
  d.segment<2>(StateLayout::bias).setConstant(prior_bias * prior_bias);
  d.segment(StateLayout::momentum, layout.dof()).setConstant(prior_momentum * prior_momentum);
  d.tail(2 * layout.numFeet()).setConstant(prior_force * prior_force);
  return d.asDiagonal();
}

OdometryMeasurement legOdometryMeasurement(const RobotModel& model, double pitch,
                                           const Eigen::VectorXd& joint_position,
                                           const Eigen::VectorXd& joint_velocity, double gyro,
                                           bool contact, FootId foot, const NoiseModel& noise) {
  model.checkFoot(foot);
  OdometryMeasurement out;
  out.valid = contact;
  if (!contact) return out;
  GeneralizedState s = GeneralizedState::zero(model);
  s.q(2) = pitch;
  s.q.tail(model.numJoints()) = joint_position;
  s.qdot.tail(model.numJoints()) = joint_velocity;
  const FootKinematics kin = computeFootKinematics(model, s, foot);
  const Eigen::Matrix2d R = rotation2d(pitch);
  const Eigen::Vector2d lever = R * skew2d() * kin.fk;
  out.value = -R * kin.J_b * joint_velocity - gyro * lever;
  const Eigen::MatrixXd RJ = R * kin.J_b;
  out.covariance = noise.encoder_velocity * noise.encoder_velocity * RJ * RJ.transpose() +
                   noise.gyro * noise.gyro * lever * lever.transpose() +
                   noise.odometry_floor * noise.odometry_floor * Eigen::Matrix2d::Identity();
  return out;
}

Eigen::VectorXd momentumMeasurement(const DynamicsTerms& terms, double gyro,
                                    const Eigen::VectorXd& joint_velocity) {
  if (joint_velocity.size() + 1 != terms.M2.cols())
    throw ContractError("momentum measurement: joint rate dimension mismatch");
  Eigen::VectorXd rates(joint_velocity.size() + 1);
  rates << gyro, joint_velocity;
  return terms.M2 * rates;
}

GeneralizedState linearizationState(const RobotModel& model, const TickInput& input,
                                    const Eigen::Vector2d& velocity_estimate) {
  const int n = model.numJoints();
  if (input.joint_position.size() != n || input.joint_velocity.size() != n ||
      input.torque.size() != n || static_cast<int>(input.contact.size()) != model.numFeet())
    throw ContractError("tick input: dimension mismatch");
  GeneralizedState s = GeneralizedState::zero(model);
  s.q(2) = input.pitch;
  s.q.tail(n) = input.joint_position;
  s.qdot.head<2>() = velocity_estimate;
  s.qdot(2) = input.gyro;
  s.qdot.tail(n) = input.joint_velocity;
  return s;
}

LinearStage buildTickStage(const RobotModel& model, const TickInput& input,
                           const Eigen::Vector2d& velocity_estimate, const NoiseModel& noise,
                           const ModelOptions& options) {
  if (!(options.dt > 0.0)) throw ContractError("tick model: dt must be positive");
  const StateLayout L(model);
  const int D = L.dim();
  const int dof = model.dof();
  const double dt = options.dt;
  const GeneralizedState q_hat = linearizationState(model, input, velocity_estimate);
  const DynamicsTerms terms = computeDynamicsTerms(model, q_hat);
  const Eigen::Matrix2d R = rotation2d(input.pitch);
  const Eigen::Vector2d gravity(0.0, -model.gravity());

  std::vector<FootKinematics> kin;
  for (FootId foot : model.footIds()) kin.push_back(computeFootKinematics(model, q_hat, foot));

  LinearStage s;
  // Transition.
  s.A = Eigen::MatrixXd::Identity(D, D);
  s.b = Eigen::VectorXd::Zero(D);
  s.A.block<2, 2>(L.position, L.velocity) = dt * Eigen::Matrix2d::Identity();
  s.A.block<2, 2>(L.position, L.bias) = -0.5 * dt * dt * R;
  s.A.block<2, 2>(L.velocity, L.bias) = -dt * R;
  const Eigen::Vector2d accel_world = R * input.accel + gravity;
  s.b.segment<2>(L.position) = 0.5 * dt * dt * accel_world;
  s.b.segment<2>(L.velocity) = dt * accel_world;

  Eigen::VectorXd rates(dof - 2);
  rates << input.gyro, input.joint_velocity;
  s.A.block(L.momentum, L.velocity, dof, 2) = dt * terms.C1.transpose();
  for (FootId foot : model.footIds())
    s.A.block(L.momentum, L.force(foot), dof, 2) = dt * kin[foot].J_i.transpose();
  s.b.segment(L.momentum, dof) =
      dt * (terms.C2.transpose() * rates - terms.G + model.actuationMap() * input.torque);

  Eigen::VectorXd q(D);
  q.segment<2>(L.position).setConstant(noise.position * noise.position * dt);
  q.segment<2>(L.velocity)
      .setConstant(noise.velocity * noise.velocity * dt + std::pow(noise.accel * dt, 2));
  q.segment<2>(L.bias).setConstant(noise.bias_walk * noise.bias_walk * dt);
  q.segment(L.momentum, dof).setConstant(noise.momentum * noise.momentum * dt);
  q.tail(2 * model.numFeet()).setConstant(noise.force * noise.force * dt);
  s.Q = q.asDiagonal();
  if (options.force_at_step_end) {
    // m+ = m + dt (... + J^T f+) with f+ = f + w_f: the force noise also enters
    // the momentum row, w_m' = w_m + dt J^T w_f.
    Eigen::MatrixXd T = Eigen::MatrixXd::Identity(D, D);
    for (FootId foot : model.footIds())
      T.block(L.momentum, L.force(foot), dof, 2) = dt * kin[foot].J_i.transpose();
    s.Q = T * s.Q * T.transpose();
  }

  // Measurements: leg odometry per stance foot, then generalized momentum.
  std::vector<OdometryMeasurement> odo;
  for (FootId foot : model.footIds()) {
    auto m = legOdometryMeasurement(model, input.pitch, input.joint_position, input.joint_velocity,
                                    input.gyro, input.contact[foot], foot, noise);
    if (m.valid) odo.push_back(m);
  }
  const int rows = 2 * static_cast<int>(odo.size()) + dof;
  s.H = Eigen::MatrixXd::Zero(rows, D);
  s.y.resize(rows);
  s.R = Eigen::MatrixXd::Zero(rows, rows);
  int r = 0;
  for (const auto& m : odo) {
    s.H.block<2, 2>(r, L.velocity).setIdentity();
    s.y.segment<2>(r) = m.value;
    s.R.block<2, 2>(r, r) = m.covariance;
    r += 2;
  }
  s.H.block(r, L.velocity, dof, 2) = -terms.M1;
  s.H.block(r, L.momentum, dof, dof).setIdentity();
  s.y.segment(r, dof) = momentumMeasurement(terms, input.gyro, input.joint_velocity);
  Eigen::VectorXd rate_var(dof - 2);
  rate_var << noise.gyro * noise.gyro,
      Eigen::VectorXd::Constant(dof - 3, noise.encoder_velocity * noise.encoder_velocity);
  s.R.block(r, r, dof, dof) =
      terms.M2 * rate_var.asDiagonal() * terms.M2.transpose() +
      noise.momentum_floor * noise.momentum_floor * Eigen::MatrixXd::Identity(dof, dof);

  // Contact complementarity: swing force zero; stance foot velocity
  // J M^-1 m = 0 (normal row only on slippery ground); stance normal force >= 0.
  s.E.resize(0, D);
  s.e.resize(0);
  s.G.resize(0, D);
  s.h.resize(0);
  if (options.constraints) {
    const Eigen::MatrixXd Minv = terms.M.ldlt().solve(Eigen::MatrixXd::Identity(dof, dof));
    std::vector<Eigen::RowVectorXd> eq_rows, in_rows;
    for (FootId foot : model.footIds()) {
      if (!input.contact[foot]) {
        for (int a = 0; a < 2; ++a) {
          Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(D);
          row(L.force(foot) + a) = 1.0;
          eq_rows.push_back(row);
        }
        continue;
      }
      const Eigen::MatrixXd JMinv = kin[foot].J_i * Minv;
      for (int a = options.slippery ? 1 : 0; a < 2; ++a) {
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(D);
        row.segment(L.momentum, dof) = JMinv.row(a);
        eq_rows.push_back(row);
      }
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(D);
      row(L.force(foot) + 1) = -1.0;
      in_rows.push_back(row);
    }
    s.E.resize(eq_rows.size(), D);
    for (std::size_t i = 0; i < eq_rows.size(); ++i) s.E.row(i) = eq_rows[i];
    s.e = Eigen::VectorXd::Zero(eq_rows.size());
    s.G.resize(in_rows.size(), D);
    for (std::size_t i = 0; i < in_rows.size(); ++i) s.G.row(i) = in_rows[i];
    s.h = Eigen::VectorXd::Zero(in_rows.size());
  }
  return s;
}

RelativeMeasurement voMeasurement(const StateLayout& layout, double pitch,
                                  const Eigen::Vector2d& displacement, const NoiseModel& noise) {
  const int D = layout.dim();
  const Eigen::Matrix2d Rt = rotation2d(pitch).transpose();
  RelativeMeasurement m;
  m.L_cur = Eigen::MatrixXd::Zero(2, D);
  m.L_next = Eigen::MatrixXd::Zero(2, D);
  m.L_cur.block<2, 2>(0, StateLayout::position) = -Rt;
  m.L_next.block<2, 2>(0, StateLayout::position) = Rt;
  m.y = displacement;
  m.R = noise.vo * noise.vo * Eigen::Matrix2d::Identity();
  return m;
}

}  // namespace grfest
