#include "grfest/sim/simulator.hpp"

#include <algorithm>
#include <cmath>

namespace grfest {

SimState SimState::initial(const RobotModel& model, const GeneralizedState& state) {
  checkState(model, state);
  SimState sim;
  sim.state = state;
  sim.contact.assign(model.numFeet(), false);
  sim.grf.assign(model.numFeet(), Eigen::Vector2d::Zero());
  sim.qddot = Eigen::VectorXd::Zero(model.dof());
  sim.torques = Eigen::VectorXd::Zero(model.numJoints());
  return sim;
}

namespace {

struct ContactSolve {
  std::vector<Eigen::Vector2d> forces;
  Eigen::VectorXd qddot;
};

// Normal force from the penetration spring-damper. Friction is regularized
// viscous friction mu N clamp(v / v_slip), evaluated at the tangential foot
// velocity predicted one step `h` ahead with the friction itself treated
// implicitly (diagonal effective mass). Explicit evaluation is unstable once
// h mu N / (v_slip m_eff) > 2, which a light shank reaches easily.
ContactSolve solveContact(const RobotModel& model, const GeneralizedState& state,
                          const Eigen::VectorXd& torques, const ContactParams& params, double h) {
  const DynamicsTerms terms = computeDynamicsTerms(model, state);
  const auto M = terms.M.ldlt();
  Eigen::VectorXd rhs = model.actuationMap() * torques - terms.C * state.qdot - terms.G;
  ContactSolve out;
  out.forces.assign(model.numFeet(), Eigen::Vector2d::Zero());
  std::vector<FootKinematics> kin;
  std::vector<FootId> active;
  for (FootId foot : model.footIds()) {
    kin.push_back(computeFootKinematics(model, state, foot));
    const double depth = -kin[foot].p_world.y();
    if (depth <= 0.0) continue;
    const double normal = params.stiffness * depth - params.damping * kin[foot].v_foot.y();
    if (normal <= params.threshold) continue;
    out.forces[foot] = Eigen::Vector2d(0.0, normal);
    rhs += kin[foot].J_i.row(1).transpose() * normal;
    active.push_back(foot);
  }
  Eigen::VectorXd qdd = M.solve(rhs);
  // One Gauss-Seidel pass over the feet; each sees the friction of the previous ones.
  for (FootId foot : active) {
    const Eigen::VectorXd jt = kin[foot].J_i.row(0).transpose();
    const Eigen::VectorXd Minv_jt = M.solve(jt);
    const double w = jt.dot(Minv_jt);
    const double cap = params.friction * out.forces[foot].y();
    const double gain = cap / params.slip_velocity;
    const double v_pred = (kin[foot].v_foot.x() + h * jt.dot(qdd)) / (1.0 + h * gain * w);
    const double ft = -cap * std::clamp(v_pred / params.slip_velocity, -1.0, 1.0);
    out.forces[foot].x() = ft;
    qdd += Minv_jt * ft;
  }
  out.qddot = std::move(qdd);
  return out;
}

}  // namespace

std::vector<Eigen::Vector2d> contactForces(const RobotModel& model, const GeneralizedState& state,
                                           const Eigen::VectorXd& torques,
                                           const ContactParams& params) {
  return solveContact(model, state, torques, params, params.max_substep).forces;
}

void annotate(const RobotModel& model, SimState& sim, const Eigen::VectorXd& torques,
              const ContactParams& params) {
  ContactSolve c = solveContact(model, sim.state, torques, params, params.max_substep);
  sim.grf = std::move(c.forces);
  sim.contact.assign(model.numFeet(), false);
  for (FootId foot : model.footIds()) sim.contact[foot] = sim.grf[foot].y() > params.threshold;
  sim.torques = torques;
  sim.qddot = std::move(c.qddot);
}

SimState step(const RobotModel& model, const SimState& sim, const Eigen::VectorXd& torques,
              double dt, const ContactParams& params) {
  if (!(dt > 0.0)) throw ContractError("step: dt must be positive");
  if (torques.size() != model.numJoints()) throw ContractError("step: torque dimension mismatch");
  checkState(model, sim.state);

  const int substeps = std::max(1, static_cast<int>(std::ceil(dt / params.max_substep - 1e-9)));
  const double h = dt / substeps;

  GeneralizedState s = sim.state;
  for (int i = 0; i < substeps; ++i) {
    const Eigen::VectorXd qdd = solveContact(model, s, torques, params, h).qddot;
    const Eigen::VectorXd qd_next = s.qdot + h * qdd;
    s.q += 0.5 * h * (s.qdot + qd_next);
    s.qdot = qd_next;
    if (!s.q.allFinite() || !s.qdot.allFinite() || s.qdot.cwiseAbs().maxCoeff() > 1e4)
      throw SimulationFault("simulation diverged", sim.time + (i + 1) * h);
  }

  SimState out;
  out.state = std::move(s);
  out.time = sim.time + dt;
  annotate(model, out, torques, params);
  return out;
}

double mechanicalEnergy(const RobotModel& model, const GeneralizedState& state,
                        const ContactParams& params) {
  double e = kineticEnergy(model, state) + potentialEnergy(model, state.q);
  for (FootId foot : model.footIds()) {
    const double depth = -footPositionWorld(model, state.q, foot).y();
    if (depth > 0.0) e += 0.5 * params.stiffness * depth * depth;
  }
  return e;
}

GeneralizedState standingState(const RobotModel& model, const Eigen::VectorXd& joints,
                               double ground_clearance) {
  if (joints.size() != model.numJoints()) throw ContractError("standingState: joint dimension");
  GeneralizedState s = GeneralizedState::zero(model);
  s.q.tail(model.numJoints()) = joints;
  double lowest = 0.0;
  for (FootId foot : model.footIds())
    lowest = std::min(lowest, footPositionWorld(model, s.q, foot).y());
  s.q(1) = -lowest + ground_clearance;
  return s;
}

}  // namespace grfest
