#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numeric>

#include "grfest/contract_error.hpp"
#include "grfest/dynamics/dynamics.hpp"
#include "grfest/sim/scenario.hpp"
#include "grfest/sim/sensors.hpp"

namespace grfest {
namespace {

const RobotModel& biped() {
  static const RobotModel model = RobotModel::referenceBiped();
  return model;
}

const std::vector<SimState>& walkingTruth() {
  static const std::vector<SimState> truth = [] {
    SimulationSettings settings;
    settings.duration = 10.0;
    const GaitParams gait;
    return simulateGait(biped(), GaitController(biped(), gait),
                        defaultInitialState(biped(), gait), settings);
  }();
  return truth;
}

std::vector<SimState> standingTruth(double duration) {
  GaitParams gait;
  gait.step_length = 0.0;
  gait.swing_height = 0.0;
  SimulationSettings settings;
  settings.duration = duration;
  return simulateGait(biped(), GaitController(biped(), gait), defaultInitialState(biped(), gait),
                      settings);
}

TEST(SimulatorTest, AirborneRobotFollowsABallisticParabola) {
  GeneralizedState s = GeneralizedState::zero(biped());
  s.q(1) = 5.0;
  s.qdot(0) = 0.3;
  s.qdot(1) = 1.2;
  SimState sim = SimState::initial(biped(), s);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(4);
  for (int k = 0; k < 100; ++k) sim = step(biped(), sim, zero, 0.002);
  const double t = 0.2, g = biped().gravity();
  EXPECT_NEAR(sim.time, t, 1e-12);
  EXPECT_NEAR(sim.state.q(0), 0.3 * t, 1e-6);
  EXPECT_NEAR(sim.state.q(1), 5.0 + 1.2 * t - 0.5 * g * t * t, 1e-6);
  EXPECT_NEAR(sim.state.q(2), 0.0, 1e-9);
  for (bool c : sim.contact) {
    EXPECT_FALSE(c);
  }
}

TEST(SimulatorTest, StandingRobotCarriesItsWeight) {
  const auto truth = standingTruth(1.0);
  const SimState& last = truth.back();
  double fz = 0.0;
  for (const auto& f : last.grf) fz += f.y();
  const double weight = biped().totalMass() * biped().gravity();
  EXPECT_NEAR(fz, weight, 0.01 * weight);
  for (bool c : last.contact) {
    EXPECT_TRUE(c);
  }
}

// Joints carry passive spring-dampers; an unsprung leg folds and spins, which
// audits the integrator rather than the contact. The spring potential is part
// of the audited energy.
TEST(SimulatorTest, PassiveDropDissipatesEnergyAfterTouchdown) {
  const ContactParams params;
  GeneralizedState s = defaultInitialState(biped(), GaitParams{}, params);
  s.q(1) += 0.05;
  const Eigen::VectorXd rest = s.joints();
  const double K = 250.0, D = 4.0;
  auto energy = [&](const SimState& x) {
    return mechanicalEnergy(biped(), x.state, params) + 0.5 * K * (x.state.joints() - rest).squaredNorm();
  };
  SimState sim = SimState::initial(biped(), s);
  bool touched = false;
  double previous = energy(sim);
  for (int k = 0; k < 600; ++k) {
    const Eigen::VectorXd tau = -K * (sim.state.joints() - rest) - D * sim.state.jointRates();
    sim = step(biped(), sim, tau, 0.001, params);
    const double e = energy(sim);
    if (touched) {
      EXPECT_LE(e, previous + 1e-9) << "t = " << sim.time;
    }
    touched = touched || std::any_of(sim.contact.begin(), sim.contact.end(), [](bool c) { return c; });
    previous = e;
  }
  EXPECT_TRUE(touched);
  EXPECT_LT(previous, energy(SimState::initial(biped(), s)) - 1.0);
}

TEST(SimulatorTest, NonFiniteTorqueIsAFault) {
  SimState sim = SimState::initial(biped(), defaultInitialState(biped(), GaitParams{}));
  Eigen::VectorXd tau = Eigen::VectorXd::Zero(4);
  tau(0) = std::nan("");
  EXPECT_THROW(step(biped(), sim, tau, 0.002), std::exception);
  EXPECT_THROW(step(biped(), sim, Eigen::VectorXd::Zero(4), -0.001), ContractError);
}

TEST(SimulatorTest, TruthForcesVanishWithoutContact) {
  for (const SimState& s : walkingTruth())
    for (std::size_t i = 0; i < s.contact.size(); ++i)
      if (!s.contact[i]) {
        EXPECT_TRUE(s.grf[i].isZero(0.0)) << "t = " << s.time;
      }
}

TEST(GaitTest, StandingPostureHoldsItsHeight) {
  const auto truth = standingTruth(5.0);
  double drift = 0.0;
  for (const SimState& s : truth)
    drift = std::max(drift, std::abs(s.state.q(1) - truth.front().state.q(1)));
  EXPECT_LT(drift, 0.01);
}

TEST(GaitTest, NominalGaitWalksForward) {
  const auto& truth = walkingTruth();
  const double speed = (truth.back().state.q(0) - truth.front().state.q(0)) / truth.back().time;
  EXPECT_GE(speed, 0.05);
  EXPECT_LE(speed, 0.5);
  // Sustained: every second makes forward progress and the torso stays up.
  for (std::size_t k = 1000; k < truth.size(); k += 1000) {
    EXPECT_GT(truth[k].state.q(0), truth[k - 1000].state.q(0) + 0.02);
    EXPECT_GT(truth[k].state.q(1), 0.3);
  }
}

TEST(GaitTest, TorquesRespectTheLimit) {
  const double limit = GaitParams{}.torque_limit;
  for (const SimState& s : walkingTruth()) {
    EXPECT_LE(s.torques.cwiseAbs().maxCoeff(), limit + 1e-12);
  }
}

TEST(GaitTest, FeetAlternate) {
  const auto& truth = walkingTruth();
  int switches = 0;
  for (std::size_t k = 1; k < truth.size(); ++k)
    if (truth[k].contact != truth[k - 1].contact) ++switches;
  // Roughly four switches per 0.25 s step cycle pair; chatter would multiply this.
  EXPECT_GT(switches, 40);
  EXPECT_LT(switches, 200);
}

// Sampled at the substep rate, where the acceleration is held constant over
// each sample interval; coarser sampling aliases the millisecond touchdown impacts.
TEST(GaitTest, MomentumRateMatchesFiniteDifferencesAlongTheTrajectory) {
  const GaitParams gait;
  SimulationSettings settings;
  settings.duration = 1.5;
  settings.trace_hz = 1.0 / settings.contact.max_substep;
  const auto truth = simulateGait(biped(), GaitController(biped(), gait),
                                  defaultInitialState(biped(), gait), settings);
  const std::size_t first = truth.size() / 3;
  double err = 0.0, ref = 0.0;
  for (std::size_t k = first; k + 1 < truth.size(); ++k) {
    const SimState& s = truth[k];
    const Eigen::VectorXd fd = (generalizedMomentum(biped(), truth[k + 1].state) -
                                generalizedMomentum(biped(), s.state)) /
                               (truth[k + 1].time - s.time);
    const Eigen::VectorXd rate = momentumRate(biped(), s.state, s.state.pitchRate(),
                                              s.state.jointRates(), s.torques, s.grf);
    err += (fd - rate).squaredNorm();
    ref += rate.squaredNorm();
  }
  EXPECT_LT(std::sqrt(err / ref), 0.02);
}

TEST(SensorsTest, NoiselessSensorsReproduceTruth) {
  const auto& truth = walkingTruth();
  const SensorLog log = synthesizeSensors(truth, biped(), NoiseConfig::noiseless());
  ASSERT_EQ(log.size(), 2001u);
  for (std::size_t k = 0; k < log.size(); ++k) {
    const SimState& s = truth[5 * k];
    EXPECT_EQ(log.imu[k].t, s.time);
    EXPECT_TRUE(log.imu[k].accel == specificForce(biped(), s));
    EXPECT_EQ(log.imu[k].gyro, s.state.pitchRate());
    EXPECT_TRUE(log.encoders[k].position == s.state.joints());
    EXPECT_TRUE(log.encoders[k].velocity == s.state.jointRates());
    EXPECT_TRUE(log.efforts[k].torque == s.torques);
    EXPECT_EQ(log.contacts[k].contact, s.contact);
  }
}

TEST(SensorsTest, NoiselessVoIncrementsComposeToTheFinalPose) {
  const auto& truth = walkingTruth();
  const Pose2 camera(Eigen::Vector2d(0.1, 0.05), 0.2);
  const SensorLog log = synthesizeSensors(truth, biped(), NoiseConfig::noiseless(), {}, camera);
  Pose2 pose(truth.front().state.basePosition(), truth.front().state.pitch());
  for (std::size_t i = 0; i < log.vo.size(); ++i) {
    if (i > 0) {
      EXPECT_EQ(log.vo[i].t_i, log.vo[i - 1].t_j);
    }
    pose = pose * log.vo[i].pose();
  }
  const SimState& end = truth[std::lround(log.vo.back().t_j * 1000.0)];
  EXPECT_LT((pose.translation - end.state.basePosition()).norm(), 1e-9);
  EXPECT_NEAR(pose.angle, end.state.pitch(), 1e-9);
}

TEST(SensorsTest, SameSeedGivesIdenticalLogs) {
  const auto& truth = walkingTruth();
  NoiseConfig noise;
  noise.seed = 42;
  const SensorLog a = synthesizeSensors(truth, biped(), noise);
  const SensorLog b = synthesizeSensors(truth, biped(), noise);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_TRUE(a.imu[k].accel == b.imu[k].accel);
    EXPECT_TRUE(a.encoders[k].velocity == b.encoders[k].velocity);
  }
  noise.seed = 43;
  const SensorLog c = synthesizeSensors(truth, biped(), noise);
  EXPECT_FALSE(a.imu[10].accel == c.imu[10].accel);
}

TEST(SensorsTest, AccelerometerNoiseHasTheConfiguredSpread) {
  // 10^5 samples of a resting robot in flight-free stance.
  std::vector<SimState> truth(100001, SimState::initial(biped(), defaultInitialState(biped(), GaitParams{})));
  for (std::size_t k = 0; k < truth.size(); ++k) {
    truth[k].time = 0.005 * k;
    truth[k].qddot = Eigen::VectorXd::Zero(biped().dof());
  }
  NoiseConfig noise = NoiseConfig::noiseless();
  noise.accel_std = 0.04;
  const SensorLog log = synthesizeSensors(truth, biped(), noise);
  std::vector<double> err;
  for (std::size_t k = 0; k < log.size(); ++k)
    err.push_back(log.imu[k].accel.x() - specificForce(biped(), truth[k]).x());
  const double mean = std::accumulate(err.begin(), err.end(), 0.0) / err.size();
  double var = 0.0;
  for (double e : err) var += (e - mean) * (e - mean);
  const double std = std::sqrt(var / (err.size() - 1));
  EXPECT_GE(std, 0.038);
  EXPECT_LE(std, 0.042);
}

TEST(SensorsTest, StandingAccelerometerReadsGravityUpwards) {
  const auto truth = standingTruth(1.0);
  const SensorLog log = synthesizeSensors(truth, biped(), NoiseConfig::noiseless());
  const Eigen::Vector2d a = log.imu.back().accel;
  EXPECT_NEAR(a.norm(), biped().gravity(), 1e-3);
  EXPECT_GT(a.y(), 0.0);
}

TEST(SensorsTest, ContactDelayShiftsTheSwitches) {
  const auto& truth = walkingTruth();
  SensorRates rates;
  rates.contact_delay = 2;
  const SensorLog log = synthesizeSensors(truth, biped(), NoiseConfig::noiseless(), rates);
  for (std::size_t k = 2; k < log.size(); ++k) {
    EXPECT_EQ(log.contacts[k].contact, truth[5 * (k - 2)].contact);
  }
}

TEST(SensorsTest, RejectsRatesThatDoNotDivideTheTrace) {
  SensorRates rates;
  rates.imu_hz = 300.0;
  EXPECT_THROW(synthesizeSensors(walkingTruth(), biped(), NoiseConfig{}, rates), ContractError);
  NoiseConfig noise;
  noise.gyro_std = -1.0;
  EXPECT_THROW(synthesizeSensors(walkingTruth(), biped(), noise), ContractError);
}

}  // namespace
}  // namespace grfest
