#pragma once

#include <vector>

#include "grfest/sim/gait_controller.hpp"
#include "grfest/sim/simulator.hpp"

namespace grfest {

struct SimulationSettings {
  double duration = 10.0;    // s
  double control_hz = 500.0; // controller update rate (zero-order hold)
  double trace_hz = 1000.0;  // truth recording rate; sensor rates must divide it
  ContactParams contact;
};

/// Runs the closed loop from `initial` and returns the truth trace sampled at
/// trace_hz (first sample at t = 0). trace_hz must be a multiple of control_hz.
std::vector<SimState> simulateGait(const RobotModel& model, GaitController controller,
                                   const GeneralizedState& initial,
                                   const SimulationSettings& settings);

/// Initial state of the default scenarios: reference posture, feet on the ground.
GeneralizedState defaultInitialState(const RobotModel& model, const GaitParams& gait,
                                     const ContactParams& contact = {});

}  // namespace grfest
