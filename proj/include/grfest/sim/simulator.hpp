#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "grfest/dynamics/dynamics.hpp"
#include "grfest/dynamics/robot_model.hpp"

namespace grfest {

class SimulationFault : public std::runtime_error {
 public:
  SimulationFault(const std::string& what, double time)
      : std::runtime_error(what + " at t=" + std::to_string(time)), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// Compliant ground with regularized Coulomb friction.
struct ContactParams {
  double stiffness = 1e5;        // N/m
  double damping = 1e3;          // N s/m
  double friction = 0.7;         // mu
  double slip_velocity = 0.01;   // m/s, tangential speed at which friction saturates
  double threshold = 2.0;        // N, normal force below which the foot is treated as free
  double max_substep = 5e-5;     // s
};

struct SimState {
  GeneralizedState state;
  double time = 0.0;
  std::vector<bool> contact;                // per foot
  std::vector<Eigen::Vector2d> grf;         // per foot, world frame, (tangential, normal)
  Eigen::VectorXd qddot;                    // acceleration at `time` under `torques`
  Eigen::VectorXd torques;                  // applied from `time` on

  static SimState initial(const RobotModel& model, const GeneralizedState& state);
};

/// Per-foot contact forces at a state under `torques` (the deadband below the
/// threshold is applied). Friction depends on the applied torques because it is
/// evaluated at the foot velocity predicted one substep ahead.
std::vector<Eigen::Vector2d> contactForces(const RobotModel& model, const GeneralizedState& state,
                                           const Eigen::VectorXd& torques,
                                           const ContactParams& params);

/// Fills contact, grf, qddot and torques of `sim` for the given torques.
void annotate(const RobotModel& model, SimState& sim, const Eigen::VectorXd& torques,
              const ContactParams& params);

/// Advances by `dt` with fixed substeps. Velocity is updated with the new
/// acceleration and position with the mean of the old and new velocity, which
/// integrates constant acceleration exactly.
SimState step(const RobotModel& model, const SimState& sim, const Eigen::VectorXd& torques,
              double dt, const ContactParams& params = {});

/// Kinetic + gravitational + ground-spring energy.
double mechanicalEnergy(const RobotModel& model, const GeneralizedState& state,
                        const ContactParams& params);

/// Base height above which the feet just touch the ground for the given joint angles
/// and zero pitch.
GeneralizedState standingState(const RobotModel& model, const Eigen::VectorXd& joints,
                               double ground_clearance = 0.0);

}  // namespace grfest
