#include "grfest/sim/sensors.hpp"

#include <cmath>
#include <random>

namespace grfest {

void NoiseConfig::validate() const {
  for (double s : {accel_std, gyro_std, encoder_vel_std, encoder_pos_std, effort_std,
                   vo_trans_std, vo_rot_std, accel_bias_walk_std})
    if (!(s >= 0.0)) throw ContractError("noise: standard deviations must be non-negative");
  if (!accel_bias.allFinite()) throw ContractError("noise: accel bias must be finite");
}

NoiseConfig NoiseConfig::noiseless() {
  NoiseConfig n;
  n.accel_std = n.gyro_std = n.encoder_vel_std = n.encoder_pos_std = n.effort_std = 0.0;
  n.vo_trans_std = n.vo_rot_std = n.accel_bias_walk_std = 0.0;
  n.accel_bias.setZero();
  return n;
}

Eigen::Vector2d specificForce(const RobotModel& model, const SimState& sim) {
  const Eigen::Vector2d gravity(0.0, -model.gravity());
  const Eigen::Vector2d accel = sim.qddot.head<2>();
  return rotation2d(sim.state.pitch()).transpose() * (accel - gravity);
}

namespace {

long decimation(double trace_hz, double rate, const char* what) {
  if (!(rate > 0.0)) throw ContractError(std::string("sensors: ") + what + " rate must be positive");
  const double ratio = trace_hz / rate;
  const long r = std::lround(ratio);
  if (r < 1 || std::abs(ratio - static_cast<double>(r)) > 1e-6)
    throw ContractError(std::string("sensors: ") + what + " rate must divide the trace rate");
  return r;
}

class Gaussian {
 public:
  explicit Gaussian(std::uint64_t seed) : engine_(seed) {}
  double operator()(double std) { return std > 0.0 ? std * unit_(engine_) : 0.0; }
  Eigen::VectorXd vector(int n, double std) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = (*this)(std);
    return v;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> unit_{0.0, 1.0};
};

}  // namespace

SensorLog synthesizeSensors(const std::vector<SimState>& truth, const RobotModel& model,
                            const NoiseConfig& noise, const SensorRates& rates,
                            const Pose2& camera) {
  noise.validate();
  if (truth.size() < 2) throw ContractError("sensors: truth trace needs at least two samples");
  const double trace_dt = truth[1].time - truth[0].time;
  if (!(trace_dt > 0.0)) throw ContractError("sensors: truth trace must be strictly increasing");
  const double trace_hz = 1.0 / trace_dt;
  const long imu_every = decimation(trace_hz, rates.imu_hz, "IMU");
  const long vo_every = decimation(trace_hz, rates.vo_hz, "VO");
  if (rates.contact_delay < 0) throw ContractError("sensors: contact delay must be non-negative");

  Gaussian gauss(noise.seed);
  SensorLog log;
  log.truth = truth;
  const int n = model.numJoints();
  const double imu_dt = 1.0 / rates.imu_hz;

  Eigen::Vector2d bias = noise.accel_bias;
  std::vector<std::vector<bool>> contact_history;
  for (std::size_t k = 0; k < truth.size(); k += imu_every) {
    const SimState& s = truth[k];
    ImuSample imu;
    imu.t = s.time;
    imu.accel = specificForce(model, s) + bias +
                Eigen::Vector2d(gauss(noise.accel_std), gauss(noise.accel_std));
    imu.gyro = s.state.pitchRate() + gauss(noise.gyro_std);
    log.imu.push_back(imu);

    EncoderSample enc;
    enc.t = s.time;
    enc.position = s.state.joints() + gauss.vector(n, noise.encoder_pos_std);
    enc.velocity = s.state.jointRates() + gauss.vector(n, noise.encoder_vel_std);
    log.encoders.push_back(std::move(enc));

    log.efforts.push_back({s.time, s.torques + gauss.vector(n, noise.effort_std)});

    contact_history.push_back(s.contact);
    const std::size_t idx = contact_history.size() > static_cast<std::size_t>(rates.contact_delay)
                                ? contact_history.size() - 1 - rates.contact_delay
                                : 0;
    log.contacts.push_back({s.time, contact_history[idx]});

    const double walk = noise.accel_bias_walk_std * std::sqrt(imu_dt);
    bias += Eigen::Vector2d(gauss(walk), gauss(walk));
  }

  auto cameraPose = [&](const SimState& s) {
    return Pose2(s.state.basePosition(), s.state.pitch()) * camera;
  };
  const Pose2 camera_inv = camera.inverse();
  for (std::size_t i = 0; i + vo_every < truth.size(); i += vo_every) {
    const SimState& a = truth[i];
    const SimState& b = truth[i + vo_every];
    Pose2 delta = cameraPose(a).inverse() * cameraPose(b);
    delta.translation += Eigen::Vector2d(gauss(noise.vo_trans_std), gauss(noise.vo_trans_std));
    delta.angle = wrapAngle(delta.angle + gauss(noise.vo_rot_std));
    const Pose2 body = camera * delta * camera_inv;
    log.vo.push_back({a.time, b.time, body.translation, body.angle});
  }
  return log;
}

}  // namespace grfest
