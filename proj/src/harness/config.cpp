#include "grfest/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace grfest {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> splitList(const std::string& value) {
  std::vector<std::string> items;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) items.push_back(trim(item));
  if (items.size() == 1 && items[0].empty()) items.clear();
  return items;
}

bool toDouble(const std::string& s, double& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && !s.empty();
}

std::string readFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<ConfigSection> parseConfig(const std::string& text, const std::string& origin) {
  std::vector<ConfigSection> sections;
  std::set<std::string> seen_sections;
  std::set<std::string> seen_keys;
  std::stringstream ss(text);
  std::string raw;
  int line = 0;
  auto fail = [&](const std::string& what) {
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + what);
  };
  while (std::getline(ss, raw)) {
    ++line;
    const std::string s = trim(raw.substr(0, raw.find('#')));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail("unterminated section header");
      const std::string name = trim(s.substr(1, s.size() - 2));
      if (name.empty()) fail("empty section name");
      if (!seen_sections.insert(name).second) fail("repeated section [" + name + "]");
      sections.push_back({name, line, {}});
      seen_keys.clear();
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'");
    if (sections.empty()) fail("entry before the first section");
    const std::string key = trim(s.substr(0, eq));
    if (key.empty()) fail("empty key");
    if (!seen_keys.insert(key).second) fail("repeated key '" + key + "'");
    sections.back().entries.push_back({key, trim(s.substr(eq + 1)), line});
  }
  return sections;
}

std::vector<ConfigSection> loadConfigFile(const std::filesystem::path& path) {
  return parseConfig(readFile(path), path.string());
}

SectionReader::SectionReader(const ConfigSection& section, std::string origin)
    : section_(section), origin_(std::move(origin)) {}

void SectionReader::fail(const ConfigEntry& entry, const std::string& what) const {
  throw ConfigError(origin_ + ":" + std::to_string(entry.line) + ": [" + section_.name + "] " +
                    entry.key + ": " + what);
}

SectionReader& SectionReader::number(const std::string& key, double& out) {
  setters_[key] = [this, &out](const ConfigEntry& e) {
    if (!toDouble(e.value, out)) fail(e, "expected a number, got '" + e.value + "'");
  };
  return *this;
}

SectionReader& SectionReader::integer(const std::string& key, int& out) {
  setters_[key] = [this, &out](const ConfigEntry& e) {
    const char* end = e.value.data() + e.value.size();
    auto [ptr, ec] = std::from_chars(e.value.data(), end, out);
    if (ec != std::errc() || ptr != end || e.value.empty())
      fail(e, "expected an integer, got '" + e.value + "'");
  };
  return *this;
}

SectionReader& SectionReader::seed(const std::string& key, std::uint64_t& out) {
  setters_[key] = [this, &out](const ConfigEntry& e) {
    const char* end = e.value.data() + e.value.size();
    auto [ptr, ec] = std::from_chars(e.value.data(), end, out);
    if (ec != std::errc() || ptr != end || e.value.empty())
      fail(e, "expected a non-negative integer, got '" + e.value + "'");
  };
  return *this;
}

SectionReader& SectionReader::flag(const std::string& key, bool& out) {
  setters_[key] = [this, &out](const ConfigEntry& e) {
    if (e.value == "true" || e.value == "1") out = true;
    else if (e.value == "false" || e.value == "0") out = false;
    else fail(e, "expected true or false, got '" + e.value + "'");
  };
  return *this;
}

SectionReader& SectionReader::text(const std::string& key, std::string& out) {
  setters_[key] = [&out](const ConfigEntry& e) { out = e.value; };
  return *this;
}

SectionReader& SectionReader::numbers(const std::string& key, std::vector<double>& out) {
  setters_[key] = [this, &out](const ConfigEntry& e) {
    out.clear();
    for (const std::string& item : splitList(e.value)) {
      double v = 0.0;
      if (!toDouble(item, v)) fail(e, "expected a comma-separated list of numbers");
      out.push_back(v);
    }
  };
  return *this;
}

SectionReader& SectionReader::words(const std::string& key, std::vector<std::string>& out) {
  setters_[key] = [&out](const ConfigEntry& e) { out = splitList(e.value); };
  return *this;
}

SectionReader& SectionReader::vector2(const std::string& key, Eigen::Vector2d& out) {
  setters_[key] = [this, &out](const ConfigEntry& e) {
    const auto items = splitList(e.value);
    if (items.size() != 2 || !toDouble(items[0], out.x()) || !toDouble(items[1], out.y()))
      fail(e, "expected two comma-separated numbers");
  };
  return *this;
}

void SectionReader::apply() const {
  for (const ConfigEntry& e : section_.entries) {
    auto it = setters_.find(e.key);
    if (it == setters_.end()) fail(e, "unknown key");
    it->second(e);
  }
}

RobotModel parseRobotModel(const std::string& text, const std::string& origin) {
  const auto sections = parseConfig(text, origin);
  double mass = 0.0, inertia = 0.0, gravity = 9.81;
  bool have_base = false;
  std::vector<LegParams> legs;
  for (const ConfigSection& section : sections) {
    SectionReader reader(section, origin);
    if (section.name == "base") {
      have_base = true;
      reader.number("mass", mass).number("inertia", inertia).number("gravity", gravity).apply();
    } else if (section.name.rfind("leg.", 0) == 0) {
      LegParams leg;
      leg.name = section.name.substr(4);
      std::vector<double> masses, coms, inertias, lengths;
      reader.vector2("hip_offset", leg.hip_offset)
          .numbers("masses", masses)
          .numbers("com_offsets", coms)
          .numbers("inertias", inertias)
          .numbers("lengths", lengths)
          .apply();
      if (masses.empty() || coms.size() != masses.size() || inertias.size() != masses.size() ||
          lengths.size() != masses.size())
        throw ConfigError(origin + ":" + std::to_string(section.line) + ": [" + section.name +
                          "] needs masses, com_offsets, inertias and lengths of equal length");
      for (std::size_t i = 0; i < masses.size(); ++i)
        leg.links.push_back({masses[i], coms[i], inertias[i], lengths[i]});
      legs.push_back(std::move(leg));
    } else {
      throw ConfigError(origin + ":" + std::to_string(section.line) + ": unknown section [" +
                        section.name + "]");
    }
  }
  if (!have_base) throw ConfigError(origin + ": missing [base] section");
  if (legs.empty()) throw ConfigError(origin + ": no [leg.<name>] sections");
  try {
    return RobotModel(mass, inertia, std::move(legs), gravity);
  } catch (const ContractError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

RobotModel loadRobotModel(const std::filesystem::path& path) {
  return parseRobotModel(readFile(path), path.string());
}

void ScenarioConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid scenario: " + what);
  };
  require(simulation.duration > 0.0, "duration must be positive");
  require(estimator.window_size >= 1, "window_size must be at least 1");
  require(!estimators.empty(), "no estimators selected");
  require(rates.imu_hz > 0.0 && rates.vo_hz > 0.0, "sensor rates must be positive");
  require(simulation.control_hz > 0.0 && simulation.trace_hz > 0.0, "simulation rates must be positive");
  require(estimator.rate_hz == rates.imu_hz, "estimator rate must equal the IMU rate");
  require(gait.step_period > 0.0 && gait.torque_limit > 0.0, "gait period and torque limit must be positive");
  require(estimator.mbo_gain > 0.0, "mbo_gain must be positive");
  try {
    sensor_noise.validate();
    estimator.noise.validate();
  } catch (const ContractError& e) {
    throw ConfigError(std::string("invalid scenario: ") + e.what());
  }
}

RobotModel ScenarioConfig::robotModel() const {
  return model_path.empty() ? RobotModel::referenceBiped() : loadRobotModel(model_path);
}

std::vector<EstimatorKind> parseEstimatorList(const std::string& list) {
  std::vector<EstimatorKind> kinds;
  for (const std::string& name : splitList(list)) {
    try {
      const EstimatorKind kind = parseEstimatorKind(name);
      if (std::find(kinds.begin(), kinds.end(), kind) != kinds.end())
        throw ConfigError("estimator '" + name + "' listed twice");
      kinds.push_back(kind);
    } catch (const ContractError& e) {
      throw ConfigError(e.what());
    }
  }
  if (kinds.empty()) throw ConfigError("empty estimator list");
  return kinds;
}

ScenarioConfig parseScenarioConfig(const std::string& text, const std::string& origin,
                                   const std::filesystem::path& base_dir) {
  ScenarioConfig c;
  for (const ConfigSection& section : parseConfig(text, origin)) {
    SectionReader r(section, origin);
    const std::string& name = section.name;
    if (name == "scenario") {
      std::string estimators;
      r.text("model", c.model_path)
          .number("duration", c.simulation.duration)
          .seed("seed", c.sensor_noise.seed)
          .text("output", c.output_dir)
          .text("estimators", estimators)
          .apply();
      if (!estimators.empty()) c.estimators = parseEstimatorList(estimators);
    } else if (name == "gait") {
      GaitParams& g = c.gait;
      r.number("step_period", g.step_period)
          .number("step_length", g.step_length)
          .number("swing_height", g.swing_height)
          .number("hip_height", g.hip_height)
          .number("stance_width", g.stance_width)
          .number("torso_pitch", g.torso_pitch)
          .number("joint_kp", g.joint_kp)
          .number("joint_kd", g.joint_kd)
          .number("swing_kp", g.swing_kp)
          .number("swing_kd", g.swing_kd)
          .number("torso_kp", g.torso_kp)
          .number("torso_kd", g.torso_kd)
          .number("torque_limit", g.torque_limit)
          .number("start_delay", g.start_delay)
          .apply();
    } else if (name == "simulation") {
      SimulationSettings& s = c.simulation;
      r.number("control_hz", s.control_hz)
          .number("trace_hz", s.trace_hz)
          .number("contact_stiffness", s.contact.stiffness)
          .number("contact_damping", s.contact.damping)
          .number("friction", s.contact.friction)
          .number("slip_velocity", s.contact.slip_velocity)
          .number("contact_threshold", s.contact.threshold)
          .number("max_substep", s.contact.max_substep)
          .apply();
    } else if (name == "sensors") {
      NoiseConfig& n = c.sensor_noise;
      r.number("imu_hz", c.rates.imu_hz)
          .number("vo_hz", c.rates.vo_hz)
          .integer("contact_delay", c.rates.contact_delay)
          .number("accel_std", n.accel_std)
          .number("gyro_std", n.gyro_std)
          .number("encoder_vel_std", n.encoder_vel_std)
          .number("encoder_pos_std", n.encoder_pos_std)
          .number("effort_std", n.effort_std)
          .number("vo_trans_std", n.vo_trans_std)
          .number("vo_rot_std", n.vo_rot_std)
          .vector2("accel_bias", n.accel_bias)
          .number("accel_bias_walk_std", n.accel_bias_walk_std)
          .vector2("camera_offset", c.camera.translation)
          .number("camera_pitch", c.camera.angle)
          .apply();
    } else if (name == "orientation") {
      OrientationSettings& o = c.orientation;
      r.number("gyro_std", o.gyro_std)
          .number("bias_walk_std", o.bias_walk_std)
          .number("accel_pitch_std", o.accel_pitch_std)
          .number("vo_rotation_std", o.vo_rotation_std)
          .number("dynamic_weight", o.dynamic_weight)
          .integer("dynamic_window", o.dynamic_window)
          .number("gate_low", o.gate_low)
          .number("gate_high", o.gate_high)
          .apply();
    } else if (name == "estimator") {
      EstimatorSettings& e = c.estimator;
      r.integer("window_size", e.window_size)
          .number("rate_hz", e.rate_hz)
          .number("mbo_gain", e.mbo_gain)
          .flag("slippery", e.slippery)
          .apply();
    } else if (name == "noise") {
      NoiseModel& n = c.estimator.noise;
      r.number("position", n.position)
          .number("velocity", n.velocity)
          .number("accel", n.accel)
          .number("bias_walk", n.bias_walk)
          .number("momentum", n.momentum)
          .number("force", n.force)
          .number("gyro", n.gyro)
          .number("encoder_velocity", n.encoder_velocity)
          .number("odometry_floor", n.odometry_floor)
          .number("momentum_floor", n.momentum_floor)
          .number("vo", n.vo)
          .number("prior_position", n.prior_position)
          .number("prior_velocity", n.prior_velocity)
          .number("prior_bias", n.prior_bias)
          .number("prior_momentum", n.prior_momentum)
          .number("prior_force", n.prior_force)
          .apply();
    } else if (name == "qp") {
      QpSettings& q = c.estimator.qp;
      r.number("eps_abs", q.eps_abs)
          .number("eps_rel", q.eps_rel)
          .integer("max_iter", q.max_iter)
          .number("rho", q.rho)
          .number("sigma", q.sigma)
          .number("alpha", q.alpha)
          .flag("adaptive_rho", q.adaptive_rho)
          .integer("scaling_iters", q.scaling_iters)
          .flag("polish", q.polish)
          .apply();
    } else {
      throw ConfigError(origin + ":" + std::to_string(section.line) + ": unknown section [" + name + "]");
    }
  }
  if (!c.model_path.empty() && std::filesystem::path(c.model_path).is_relative() && !base_dir.empty())
    c.model_path = (base_dir / c.model_path).string();
  c.validate();
  return c;
}

ScenarioConfig loadScenarioConfig(const std::filesystem::path& path) {
  return parseScenarioConfig(readFile(path), path.string(), path.parent_path());
}

}  // namespace grfest
