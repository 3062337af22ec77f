#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "grfest/baselines/dkf.hpp"
#include "grfest/baselines/mbo.hpp"
#include "grfest/contract_error.hpp"
#include "grfest/harness/pipeline.hpp"
#include "grfest/sim/scenario.hpp"

namespace grfest {
namespace {

const RobotModel& biped() {
  static const RobotModel model = RobotModel::referenceBiped();
  return model;
}

struct LoggedRun {
  SensorLog log;
  std::vector<TickInput> ticks;
};

LoggedRun makeRun(const GaitParams& gait, double duration, const NoiseConfig& noise) {
  SimulationSettings settings;
  settings.duration = duration;
  const auto truth = simulateGait(biped(), GaitController(biped(), gait),
                                  defaultInitialState(biped(), gait), settings);
  LoggedRun run;
  run.log = synthesizeSensors(truth, biped(), noise);
  run.ticks = buildTickInputs(run.log, biped(), truth.front().state.pitch());
  return run;
}

const LoggedRun& noisyWalk() {
  static const LoggedRun run = makeRun(GaitParams(), 2.0, NoiseConfig());
  return run;
}

GaitParams standingGait() {
  GaitParams gait;
  gait.step_length = 0.0;
  gait.swing_height = 0.0;
  return gait;
}

EstimatorState initialState(const LoggedRun& run) {
  return initialEstimatorState(biped(), nearestTruth(run.log.truth, run.ticks[0].t));
}

// --- DKF ----------------------------------------------------------------------

TEST(DkfTest, MatchesUnconstrainedWindowOneMhe) {
  const LoggedRun& run = noisyWalk();
  MheOptions options;
  options.window_size = 1;
  options.constraints = false;
  options.qp.eps_abs = options.qp.eps_rel = 1e-10;
  MheEstimator mhe(biped(), NoiseModel(), options, initialState(run));
  Dkf dkf(biped(), NoiseModel(), options.rate_hz, initialState(run));
  double worst = 0.0;
  for (const TickInput& tick : run.ticks) {
    const Eigen::VectorXd a = mhe.step(tick).state.pack();
    const Eigen::VectorXd b = dkf.step(tick).state.pack();
    worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(DkfTest, UnobservedPositionCovarianceGrows) {
  LoggedRun run = noisyWalk();
  Dkf dkf(biped(), NoiseModel(), 200.0, initialState(run));
  double previous = 0.0;
  for (std::size_t k = 0; k < 100; ++k) {
    TickInput tick = run.ticks[k];
    tick.vo.reset();
    dkf.step(tick);
    const double var = dkf.covariance().block<2, 2>(StateLayout::position, StateLayout::position).trace();
    EXPECT_GT(var, previous) << "tick " << k;
    previous = var;
  }
}

TEST(DkfTest, CovarianceStaysSymmetricPositiveDefinite) {
  const LoggedRun& run = noisyWalk();
  Dkf dkf(biped(), NoiseModel(), 200.0, initialState(run));
  for (const TickInput& tick : run.ticks) {
    dkf.step(tick);
    const Eigen::MatrixXd& P = dkf.covariance();
    ASSERT_EQ(P, P.transpose());
    ASSERT_EQ(Eigen::LLT<Eigen::MatrixXd>(P).info(), Eigen::Success);
  }
}

TEST(DkfTest, StandingNoiselessForcesCarryTheWeight) {
  const LoggedRun run = makeRun(standingGait(), 3.0, NoiseConfig::noiseless());
  Dkf dkf(biped(), NoiseModel(), 200.0, initialState(run));
  const double weight = biped().totalMass() * biped().gravity();
  double worst = 0.0;
  for (const TickInput& tick : run.ticks) {
    const EstimateOut out = dkf.step(tick);
    if (tick.t < 1.0) continue;
    double fz = 0.0;
    for (const auto& f : out.state.f) fz += f.y();
    worst = std::max(worst, std::abs(fz - weight) / weight);
  }
  EXPECT_LT(worst, 0.01);
}

TEST(DkfTest, RejectsInvalidConstruction) {
  EstimatorState bad = initialState(noisyWalk());
  EXPECT_THROW(Dkf(biped(), NoiseModel(), 0.0, bad), ContractError);
  bad.f.pop_back();
  EXPECT_THROW(Dkf(biped(), NoiseModel(), 200.0, bad), ContractError);
}

// --- MBO ----------------------------------------------------------------------

// Robot held still in a standing posture: torques plus stance forces F balance
// gravity, so the momentum never changes and the observer sees J^T F.
struct PinnedStance {
  GeneralizedState state;
  Eigen::VectorXd torque;
  Eigen::VectorXd forces;  // [f_0; f_1]
  Eigen::VectorXd external;
};

PinnedStance pinnedStance() {
  PinnedStance p;
  const GaitParams gait;
  p.state = defaultInitialState(biped(), gait);
  p.state.qdot.setZero();
  Eigen::MatrixXd Jt(biped().dof(), 4);
  for (FootId foot : biped().footIds())
    Jt.middleCols(2 * foot, 2) = computeFootKinematics(biped(), p.state, foot).J_i.transpose();
  const Eigen::VectorXd G = gravityVector(biped(), p.state.q);
  // Base rows fix three force combinations; add an internal squeeze for the fourth.
  p.forces = Jt.topRows(3).completeOrthogonalDecomposition().solve(G.head(3));
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(Jt.topRows(3));
  p.forces += 5.0 * lu.kernel().col(0).normalized();
  p.external = Jt * p.forces;
  p.torque = (G - p.external).tail(biped().numJoints());
  return p;
}

TEST(MboTest, StepResponseHasTheGainTimeConstant) {
  const PinnedStance p = pinnedStance();
  const double gain = 50.0, dt = 1e-4;
  Mbo mbo(biped(), gain, dt);
  double crossing = -1.0;
  MboOutput out;
  for (int k = 0; k <= 2000; ++k) {
    out = mbo.step(p.state, p.torque, {true, true});
    const double fraction = out.residual.dot(p.external) / p.external.squaredNorm();
    if (crossing < 0.0 && fraction >= 1.0 - std::exp(-1.0)) crossing = k * dt;
  }
  EXPECT_NEAR(crossing, 1.0 / gain, 0.05 / gain);
  EXPECT_LT((out.residual - p.external).norm(), 1e-3 * p.external.norm());
  Eigen::VectorXd f(4);
  f << out.forces[0], out.forces[1];
  EXPECT_LT((f - p.forces).norm(), 1e-3 * p.forces.norm());
}

TEST(MboTest, ForcesAreZeroForFeetOutOfContact) {
  const PinnedStance p = pinnedStance();
  Mbo mbo(biped(), 50.0, 1e-3);
  for (int k = 0; k < 10; ++k) {
    const MboOutput out = mbo.step(p.state, p.torque, {true, false});
    EXPECT_EQ(out.forces[1], Eigen::Vector2d::Zero());
  }
  const MboOutput flight = mbo.step(p.state, p.torque, {false, false});
  EXPECT_EQ(flight.forces[0], Eigen::Vector2d::Zero());
  EXPECT_GT(flight.residual.norm(), 0.0);
}

// Airborne robot with moving legs and no torque: no external force at all.
std::vector<SimState> airborneTrace(double dt, int steps) {
  GeneralizedState s = GeneralizedState::zero(biped());
  s.q(1) = 50.0;
  s.q.tail(4) << 0.3, -0.6, -0.2, 0.5;
  s.qdot << 0.4, 2.0, 0.5, 1.5, -2.0, 1.0, 0.7;
  std::vector<SimState> trace{SimState::initial(biped(), s)};
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(4);
  for (int k = 0; k < steps; ++k) trace.push_back(step(biped(), trace.back(), zero, dt));
  return trace;
}

TEST(MboTest, ResidualDecaysWithoutExternalForce) {
  const double gain = 50.0, dt = 1e-3;
  const auto trace = airborneTrace(dt, static_cast<int>(5.0 / gain / dt) + 1);
  Mbo mbo(biped(), gain, dt);
  MboOutput out;
  for (const SimState& s : trace) out = mbo.step(s.state, Eigen::VectorXd::Zero(4), {false, false});
  EXPECT_LT(out.residual.norm(), 1e-3);
}

TEST(MboTest, ResidualIsZeroAlongAForceFreeTrajectory) {
  const double dt = 1e-3;
  const auto trace = airborneTrace(dt, 300);
  Mbo mbo(biped(), 50.0, dt);
  double worst = 0.0;
  for (const SimState& s : trace)
    worst = std::max(worst, mbo.step(s.state, Eigen::VectorXd::Zero(4), {false, false})
                                .residual.cwiseAbs()
                                .maxCoeff());
  EXPECT_LT(worst, 1e-3);
}

TEST(MboTest, RejectsNonPositiveGain) {
  EXPECT_THROW(Mbo(biped(), 0.0, 1e-3), ContractError);
  EXPECT_THROW(Mbo(biped(), 50.0, 0.0), ContractError);
  Eigen::VectorXd gain = Eigen::VectorXd::Constant(7, 50.0);
  gain(3) = -1.0;
  EXPECT_THROW(Mbo(biped(), gain, 1e-3), ContractError);
}

}  // namespace
}  // namespace grfest
