#include "grfest/harness/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "grfest/contract_error.hpp"
#include "grfest/mhe/vo_interpolation.hpp"

namespace grfest {

std::vector<TickInput> buildTickInputs(const SensorLog& log, const RobotModel& model,
                                       double initial_pitch, const OrientationSettings& settings) {
  const std::size_t N = log.size();
  if (log.encoders.size() != N || log.efforts.size() != N || log.contacts.size() != N)
    throw ContractError("sensor log: streams of unequal length");
  if (N < 2) throw ContractError("sensor log: need at least two samples");
  const double t0 = log.imu.front().t;
  const double period = log.imu[1].t - t0;

  std::vector<TickInput> ticks(N);
  for (std::size_t k = 0; k < N; ++k) {
    TickInput& in = ticks[k];
    in.t = log.imu[k].t;
    in.accel = log.imu[k].accel;
    in.gyro = log.imu[k].gyro;
    in.joint_position = log.encoders[k].position;
    in.joint_velocity = log.encoders[k].velocity;
    in.torque = log.efforts[k].torque;
    in.contact = log.contacts[k].contact;
    if (in.joint_position.size() != model.numJoints())
      throw ContractError("sensor log: encoder dimension does not match the model");
  }
  for (const VoSample& vo : log.vo) {
    const long end = alignToTick(vo.t_j, t0, period);
    if (end >= 0 && end < static_cast<long>(N)) ticks[end].vo = vo;
  }

  OrientationEstimate init;
  init.pitch = initial_pitch;
  init.covariance = Eigen::Vector2d(1e-4, 1e-6).asDiagonal();
  OrientationFilter filter(settings, init);
  filter.setVoAnchor();
  long anchor_tick = 0;
  for (std::size_t k = 0; k < N; ++k) {
    if (k > 0) filter.predict(ticks[k - 1].gyro, ticks[k].t - ticks[k - 1].t);
    std::optional<double> rotation;
    // The anchor is only valid when the increment starts where the last one ended.
    if (ticks[k].vo && alignToTick(ticks[k].vo->t_i, t0, period) == anchor_tick)
      rotation = ticks[k].vo->rotation;
    filter.correct(ticks[k].accel, rotation);
    if (ticks[k].vo) {
      filter.setVoAnchor();
      anchor_tick = static_cast<long>(k);
    }
    ticks[k].pitch = filter.estimate().pitch;
  }
  return ticks;
}

EstimatorState initialEstimatorState(const RobotModel& model, const SimState& truth) {
  EstimatorState s;
  s.p = truth.state.basePosition();
  s.v = truth.state.baseVelocity();
  s.m = computeDynamicsTerms(model, truth.state).M * truth.state.qdot;
  int stance = 0;
  for (bool c : truth.contact) stance += c ? 1 : 0;
  const double share = stance > 0 ? model.totalMass() * model.gravity() / stance : 0.0;
  for (FootId foot : model.footIds())
    s.f.emplace_back(0.0, truth.contact.at(foot) ? share : 0.0);
  return s;
}

const SimState& nearestTruth(const std::vector<SimState>& truth, double t) {
  if (truth.empty()) throw ContractError("truth trace is empty");
  auto it = std::lower_bound(truth.begin(), truth.end(), t,
                             [](const SimState& s, double v) { return s.time < v; });
  if (it == truth.end()) return truth.back();
  if (it != truth.begin() && t - std::prev(it)->time <= it->time - t) return *std::prev(it);
  return *it;
}

EstimatorKind parseEstimatorKind(const std::string& name) {
  if (name == "mhe") return EstimatorKind::mhe;
  if (name == "mhe_nc") return EstimatorKind::mhe_nc;
  if (name == "dkf") return EstimatorKind::dkf;
  if (name == "mbo") return EstimatorKind::mbo;
  throw ContractError("unknown estimator '" + name + "'");
}

std::string toString(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::mhe: return "mhe";
    case EstimatorKind::mhe_nc: return "mhe_nc";
    case EstimatorKind::dkf: return "dkf";
    case EstimatorKind::mbo: return "mbo";
  }
  return "unknown";
}

std::vector<EstimateOut> runEstimator(EstimatorKind kind, const RobotModel& model,
                                      const SensorLog& log, const std::vector<TickInput>& ticks,
                                      const EstimatorSettings& settings) {
  if (ticks.empty()) throw ContractError("no estimator ticks");
  const EstimatorState initial = initialEstimatorState(model, nearestTruth(log.truth, ticks[0].t));
  std::vector<EstimateOut> out;
  out.reserve(ticks.size());
  switch (kind) {
    case EstimatorKind::mhe:
    case EstimatorKind::mhe_nc: {
      MheOptions options;
      options.window_size = settings.window_size;
      options.rate_hz = settings.rate_hz;
      options.constraints = kind == EstimatorKind::mhe;
      options.slippery = settings.slippery;
      options.qp = settings.qp;
      MheEstimator mhe(model, settings.noise, options, initial);
      for (const TickInput& in : ticks) out.push_back(mhe.step(in));
      break;
    }
    case EstimatorKind::dkf: {
      Dkf dkf(model, settings.noise, settings.rate_hz, initial);
      for (const TickInput& in : ticks) out.push_back(dkf.step(in));
      break;
    }
    case EstimatorKind::mbo: {
      Mbo mbo(model, settings.mbo_gain, 1.0 / settings.rate_hz);
      const StateLayout layout(model);
      for (const TickInput& in : ticks) {
        const auto start = std::chrono::steady_clock::now();
        const SimState& truth = nearestTruth(log.truth, in.t);
        // Ground-truth base pose and velocity, measured joints.
        GeneralizedState s = truth.state;
        s.q.tail(model.numJoints()) = in.joint_position;
        s.qdot.tail(model.numJoints()) = in.joint_velocity;
        const MboOutput r = mbo.step(s, in.torque, in.contact);
        EstimateOut e;
        e.t = in.t;
        e.status = "filter";
        e.state.p = s.basePosition();
        e.state.v = s.baseVelocity();
        e.state.m = computeDynamicsTerms(model, s).M * s.qdot;
        e.state.f = r.forces;
        e.solve_time_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        out.push_back(std::move(e));
      }
      break;
    }
  }
  return out;
}

}  // namespace grfest
