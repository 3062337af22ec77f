#include "grfest/sim/scenario.hpp"

#include <cmath>

namespace grfest {

std::vector<SimState> simulateGait(const RobotModel& model, GaitController controller,
                                   const GeneralizedState& initial,
                                   const SimulationSettings& settings) {
  if (!(settings.duration > 0.0)) throw ContractError("simulateGait: duration must be positive");
  const double ratio = settings.trace_hz / settings.control_hz;
  const long hold = std::lround(ratio);
  if (hold < 1 || std::abs(ratio - static_cast<double>(hold)) > 1e-9)
    throw ContractError("simulateGait: trace rate must be a multiple of the control rate");

  const double dt = 1.0 / settings.trace_hz;
  const long steps = std::lround(settings.duration * settings.trace_hz);

  std::vector<SimState> trace;
  trace.reserve(steps + 1);
  SimState sim = SimState::initial(model, initial);
  Eigen::VectorXd tau = Eigen::VectorXd::Zero(model.numJoints());
  for (long k = 0; k <= steps; ++k) {
    sim.time = static_cast<double>(k) * dt;
    if (k % hold == 0) tau = controller.torques(sim, sim.time);
    annotate(model, sim, tau, settings.contact);
    trace.push_back(sim);
    if (k == steps) break;
    sim = step(model, sim, tau, dt, settings.contact);
  }
  return trace;
}

GeneralizedState defaultInitialState(const RobotModel& model, const GaitParams& gait,
                                     const ContactParams& contact) {
  GeneralizedState s = standingState(model, referencePosture(model, gait.hip_height, gait.stance_width));
  // Pre-compress the ground springs by the static share of the weight.
  const double share = model.totalMass() * model.gravity() / model.numFeet();
  s.q(1) -= share / contact.stiffness;
  return s;
}

}  // namespace grfest
