#pragma once

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <vector>

#include "grfest/mhe/linear_window.hpp"
#include "grfest/mhe/tick_model.hpp"
#include "grfest/mhe/vo_interpolation.hpp"

namespace grfest {

struct MheOptions {
  int window_size = 8;    // states in the window
  double rate_hz = 200.0;
  bool constraints = true;
  bool slippery = false;
  QpSettings qp;
};

/// Per-tick estimator output shared by all estimators.
struct EstimateOut {
  double t = 0.0;
  EstimatorState state;
  std::string status = "solved";  // QP status, or "filter" for recursive estimators
  int iterations = 0;
  double solve_time_ms = 0.0;
  bool degraded = false;          // solve failed; previous estimate propagated
  bool arrival_regularized = false;

  // Checks over every state of the solved window (MHE only), measured outside
  // solve_time_ms. Filters leave the defaults.
  double kkt_residual = 0.0;
  double window_min_normal_force = std::numeric_limits<double>::infinity();
  double window_max_swing_force = 0.0;  // largest |f| of a foot whose switch is open
};

/// Decentralized moving-horizon estimator of base position/velocity,
/// accelerometer bias, generalized momentum and ground reaction forces.
/// Each tick: build the LTV stage at the current linearization point, attach
/// interpolated VO to buffered ticks, slide the window (Schur-complement
/// arrival cost), solve the window QP warm-started, report the newest state.
class MheEstimator {
 public:
  MheEstimator(RobotModel model, NoiseModel noise, MheOptions options,
               const EstimatorState& initial);

  EstimateOut step(const TickInput& input);

  const MovingHorizon& window() const { return window_; }
  const StateLayout& layout() const { return layout_; }
  const MheOptions& options() const { return options_; }

 private:
  RobotModel model_;
  NoiseModel noise_;
  MheOptions options_;
  ModelOptions model_options_;
  StateLayout layout_;
  MovingHorizon window_;
  VoInterpolator vo_;
  std::vector<long> ticks_;      // tick index of each buffered stage
  std::vector<double> pitches_;  // orientation snapshot of each buffered stage
  std::vector<std::vector<bool>> contacts_;
  long next_tick_ = 0;
  Eigen::VectorXd last_;
  bool started_ = false;
};

}  // namespace grfest
