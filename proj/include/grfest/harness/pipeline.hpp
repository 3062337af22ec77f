#pragma once

#include <string>
#include <vector>

#include "grfest/baselines/dkf.hpp"
#include "grfest/baselines/mbo.hpp"
#include "grfest/mhe/mhe_estimator.hpp"
#include "grfest/orientation/orientation_filter.hpp"
#include "grfest/sim/sensors.hpp"

namespace grfest {

/// Runs the orientation filter over the log and packs every sample into a
/// TickInput. A VO increment is attached to the tick its end epoch aligns to.
/// The filter starts from `initial_pitch`.
std::vector<TickInput> buildTickInputs(const SensorLog& log, const RobotModel& model,
                                       double initial_pitch,
                                       const OrientationSettings& settings = {});

/// Truth position and velocity at the first sample, momentum M(q) qdot, zero
/// bias, and the weight split evenly over the feet in contact.
EstimatorState initialEstimatorState(const RobotModel& model, const SimState& truth);

/// Truth sample nearest to `t`. Throws ContractError on an empty trace.
const SimState& nearestTruth(const std::vector<SimState>& truth, double t);

enum class EstimatorKind { mhe, mhe_nc, dkf, mbo };

EstimatorKind parseEstimatorKind(const std::string& name);
std::string toString(EstimatorKind kind);

struct EstimatorSettings {
  NoiseModel noise;
  int window_size = 8;
  double rate_hz = 200.0;
  double mbo_gain = 50.0;  // 1/s
  bool slippery = false;   // MHE only: stance rows keep the normal velocity component
  QpSettings qp;
};

/// Runs one estimator over the ticks. MBO additionally reads the truth base
/// pose and velocity from `log.truth`; the others never touch the truth.
std::vector<EstimateOut> runEstimator(EstimatorKind kind, const RobotModel& model,
                                      const SensorLog& log, const std::vector<TickInput>& ticks,
                                      const EstimatorSettings& settings);

}  // namespace grfest
