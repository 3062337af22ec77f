#include "grfest/dynamics/dynamics.hpp"

#include <cmath>
#include <cstdint>

namespace grfest {
namespace {

// A world-frame point on the floating chain is
//   P(q) = p_base + sum_t R(phi_t) r_t,   phi_t = sum_{j in S_t} q_j,
// where every S_t contains the pitch coordinate and a prefix of one leg.
struct ChainTerm {
  std::uint32_t mask;
  Eigen::Vector2d local;
};

struct ChainPoint {
  std::vector<ChainTerm> terms;
};

struct Body {
  double mass;
  double inertia;
  std::uint32_t angle_mask;
  ChainPoint com;
};

constexpr std::uint32_t bit(int j) { return std::uint32_t{1} << j; }

double maskedSum(const Eigen::VectorXd& q, std::uint32_t mask) {
  double s = 0.0;
  for (int j = 2; j < q.size(); ++j)
    if (mask & bit(j)) s += q(j);
  return s;
}

std::vector<Body> buildBodies(const RobotModel& model) {
  std::vector<Body> bodies;
  bodies.push_back({model.baseMass(), model.baseInertia(), bit(2), {}});
  for (FootId foot : model.footIds()) {
    const LegParams& leg = model.legs()[foot];
    std::vector<ChainTerm> proximal{{bit(2), leg.hip_offset}};
    std::uint32_t mask = bit(2);
    int j = model.jointOffset(foot);
    for (const LinkParams& link : leg.links) {
      mask |= bit(j++);
      ChainPoint com{proximal};
      com.terms.push_back({mask, Eigen::Vector2d(0.0, -link.com_offset)});
      bodies.push_back({link.mass, link.inertia, mask, std::move(com)});
      proximal.push_back({mask, Eigen::Vector2d(0.0, -link.length)});
    }
  }
  return bodies;
}

ChainPoint footPoint(const RobotModel& model, FootId foot) {
  model.checkFoot(foot);
  const LegParams& leg = model.legs()[foot];
  ChainPoint pt{{{bit(2), leg.hip_offset}}};
  std::uint32_t mask = bit(2);
  int j = model.jointOffset(foot);
  for (const LinkParams& link : leg.links) {
    mask |= bit(j++);
    pt.terms.push_back({mask, Eigen::Vector2d(0.0, -link.length)});
  }
  return pt;
}

// Position, Jacobian and (optionally) the Jacobian derivatives dJ/dq_k.
struct PointEval {
  Eigen::Vector2d position;
  Eigen::MatrixXd jacobian;              // 2 x nq
  std::vector<Eigen::Vector2d> rotated;  // R(phi_t) r_t per term
};

PointEval evalPoint(const ChainPoint& pt, const Eigen::VectorXd& q) {
  const int nq = static_cast<int>(q.size());
  PointEval out;
  out.position = q.head<2>();
  out.jacobian = Eigen::MatrixXd::Zero(2, nq);
  out.jacobian(0, 0) = 1.0;
  out.jacobian(1, 1) = 1.0;
  const Eigen::Matrix2d S = skew2d();
  out.rotated.reserve(pt.terms.size());
  for (const auto& term : pt.terms) {
    const Eigen::Vector2d r = rotation2d(maskedSum(q, term.mask)) * term.local;
    const Eigen::Vector2d dr = S * r;  // R S r_local == S R r_local in 2D
    out.position += r;
    out.rotated.push_back(r);
    for (int j = 2; j < nq; ++j)
      if (term.mask & bit(j)) out.jacobian.col(j) += dr;
  }
  return out;
}

// Column j of d(jacobian)/dq_k.
Eigen::MatrixXd jacobianDerivative(const ChainPoint& pt, const PointEval& ev, int k, int nq) {
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2, nq);
  if (k < 2) return H;
  for (std::size_t t = 0; t < pt.terms.size(); ++t) {
    const std::uint32_t mask = pt.terms[t].mask;
    if (!(mask & bit(k))) continue;
    for (int j = 2; j < nq; ++j)
      if (mask & bit(j)) H.col(j) -= ev.rotated[t];
  }
  return H;
}

Eigen::RowVectorXd angularJacobian(std::uint32_t mask, int nq) {
  Eigen::RowVectorXd jw = Eigen::RowVectorXd::Zero(nq);
  for (int j = 2; j < nq; ++j)
    if (mask & bit(j)) jw(j) = 1.0;
  return jw;
}

}  // namespace

Eigen::Matrix2d rotation2d(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return (Eigen::Matrix2d() << c, -s, s, c).finished();
}

Eigen::Matrix2d skew2d() { return (Eigen::Matrix2d() << 0.0, -1.0, 1.0, 0.0).finished(); }

Eigen::MatrixXd massMatrix(const RobotModel& model, const Eigen::VectorXd& q) {
  const int nq = model.dof();
  if (q.size() != nq) throw ContractError("q dimension does not match model dof");
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nq, nq);
  for (const Body& body : buildBodies(model)) {
    const PointEval ev = evalPoint(body.com, q);
    const Eigen::RowVectorXd jw = angularJacobian(body.angle_mask, nq);
    M.noalias() += body.mass * ev.jacobian.transpose() * ev.jacobian;
    M.noalias() += body.inertia * jw.transpose() * jw;
  }
  return M;
}

Eigen::VectorXd gravityVector(const RobotModel& model, const Eigen::VectorXd& q) {
  const int nq = model.dof();
  if (q.size() != nq) throw ContractError("q dimension does not match model dof");
  Eigen::VectorXd G = Eigen::VectorXd::Zero(nq);
  for (const Body& body : buildBodies(model))
    G += body.mass * model.gravity() * evalPoint(body.com, q).jacobian.row(1).transpose();
  return G;
}

DynamicsTerms computeDynamicsTerms(const RobotModel& model, const GeneralizedState& state) {
  checkState(model, state);
  const int nq = model.dof();
  const Eigen::VectorXd& q = state.q;
  const Eigen::VectorXd& qd = state.qdot;

  DynamicsTerms out;
  out.M = Eigen::MatrixXd::Zero(nq, nq);
  out.G = Eigen::VectorXd::Zero(nq);
  std::vector<Eigen::MatrixXd> dM(nq, Eigen::MatrixXd::Zero(nq, nq));

  for (const Body& body : buildBodies(model)) {
    const PointEval ev = evalPoint(body.com, q);
    const Eigen::RowVectorXd jw = angularJacobian(body.angle_mask, nq);
    out.M.noalias() += body.mass * ev.jacobian.transpose() * ev.jacobian;
    out.M.noalias() += body.inertia * jw.transpose() * jw;
    out.G += body.mass * model.gravity() * ev.jacobian.row(1).transpose();
    for (int k = 2; k < nq; ++k) {
      const Eigen::MatrixXd H = jacobianDerivative(body.com, ev, k, nq);
      const Eigen::MatrixXd JtH = ev.jacobian.transpose() * H;
      dM[k].noalias() += body.mass * (JtH + JtH.transpose());
    }
  }

  // C_ij = sum_k 1/2 (dM_ij/dq_k + dM_ik/dq_j - dM_jk/dq_i) qd_k
  out.C = Eigen::MatrixXd::Zero(nq, nq);
  for (int k = 0; k < nq; ++k) {
    if (qd(k) == 0.0) continue;
    out.C += 0.5 * qd(k) * dM[k];
  }
  for (int i = 0; i < nq; ++i)
    for (int j = 0; j < nq; ++j) {
      double s = 0.0;
      for (int k = 0; k < nq; ++k) s += (dM[j](i, k) - dM[i](j, k)) * qd(k);
      out.C(i, j) += 0.5 * s;
    }

  out.M1 = out.M.leftCols(2);
  out.M2 = out.M.rightCols(nq - 2);
  out.C1 = out.C.topRows(2);
  out.C2 = out.C.bottomRows(nq - 2);
  return out;
}

Eigen::VectorXd biasForces(const RobotModel& model, const GeneralizedState& state) {
  const DynamicsTerms terms = computeDynamicsTerms(model, state);
  return terms.C * state.qdot + terms.G;
}

FootKinematics computeFootKinematics(const RobotModel& model, const GeneralizedState& state,
                                     FootId foot) {
  checkState(model, state);
  const ChainPoint pt = footPoint(model, foot);
  const PointEval ev = evalPoint(pt, state.q);
  const int n = model.numJoints();

  FootKinematics out;
  out.p_world = ev.position;
  out.J_i = ev.jacobian;
  out.v_foot = ev.jacobian * state.qdot;

  const Eigen::Matrix2d Rt = rotation2d(state.pitch()).transpose();
  out.fk = Rt * (ev.position - state.basePosition());
  out.J_b = Rt * ev.jacobian.rightCols(n);
  return out;
}

Eigen::Vector2d footPositionWorld(const RobotModel& model, const Eigen::VectorXd& q, FootId foot) {
  if (q.size() != model.dof()) throw ContractError("q dimension does not match model dof");
  return evalPoint(footPoint(model, foot), q).position;
}

Eigen::VectorXd generalizedMomentum(const RobotModel& model, const GeneralizedState& state) {
  checkState(model, state);
  return massMatrix(model, state.q) * state.qdot;
}

Eigen::VectorXd momentumRate(const DynamicsTerms& terms, const Eigen::MatrixXd& actuation_map,
                             const Eigen::Vector2d& base_velocity, double measured_pitch_rate,
                             const Eigen::VectorXd& measured_joint_rates,
                             const Eigen::VectorXd& torques,
                             const std::vector<Eigen::MatrixXd>& contact_jacobians,
                             const std::vector<Eigen::Vector2d>& grfs) {
  const int nq = static_cast<int>(terms.M.rows());
  if (measured_joint_rates.size() != nq - 3 || torques.size() != actuation_map.cols())
    throw ContractError("momentumRate: rate/torque dimension mismatch");
  if (contact_jacobians.size() != grfs.size())
    throw ContractError("momentumRate: one Jacobian per force required");

  Eigen::VectorXd rest(nq - 2);
  rest << measured_pitch_rate, measured_joint_rates;
  Eigen::VectorXd mdot = terms.C1.transpose() * base_velocity + terms.C2.transpose() * rest -
                         terms.G + actuation_map * torques;
  for (std::size_t i = 0; i < grfs.size(); ++i) mdot += contact_jacobians[i].transpose() * grfs[i];
  return mdot;
}

Eigen::VectorXd momentumRate(const RobotModel& model, const GeneralizedState& estimate,
                             double measured_pitch_rate, const Eigen::VectorXd& measured_joint_rates,
                             const Eigen::VectorXd& torques, const std::vector<Eigen::Vector2d>& grfs) {
  const DynamicsTerms terms = computeDynamicsTerms(model, estimate);
  if (static_cast<int>(grfs.size()) != model.numFeet())
    throw ContractError("momentumRate: one force per foot required");
  std::vector<Eigen::MatrixXd> jacobians;
  for (FootId foot : model.footIds())
    jacobians.push_back(computeFootKinematics(model, estimate, foot).J_i);
  return momentumRate(terms, model.actuationMap(), estimate.baseVelocity(), measured_pitch_rate,
                      measured_joint_rates, torques, jacobians, grfs);
}

CenterOfMass centerOfMass(const RobotModel& model, const Eigen::VectorXd& q) {
  if (q.size() != model.dof()) throw ContractError("q dimension does not match model dof");
  CenterOfMass com{Eigen::Vector2d::Zero(), Eigen::MatrixXd::Zero(2, model.dof())};
  double total = 0.0;
  for (const Body& body : buildBodies(model)) {
    const PointEval ev = evalPoint(body.com, q);
    com.position += body.mass * ev.position;
    com.jacobian += body.mass * ev.jacobian;
    total += body.mass;
  }
  com.position /= total;
  com.jacobian /= total;
  return com;
}

double kineticEnergy(const RobotModel& model, const GeneralizedState& state) {
  checkState(model, state);
  return 0.5 * state.qdot.dot(massMatrix(model, state.q) * state.qdot);
}

double potentialEnergy(const RobotModel& model, const Eigen::VectorXd& q) {
  if (q.size() != model.dof()) throw ContractError("q dimension does not match model dof");
  double u = 0.0;
  for (const Body& body : buildBodies(model))
    u += body.mass * model.gravity() * evalPoint(body.com, q).position.y();
  return u;
}

}  // namespace grfest
