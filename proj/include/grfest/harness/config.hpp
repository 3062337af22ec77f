#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "grfest/dynamics/pose2.hpp"
#include "grfest/dynamics/robot_model.hpp"
#include "grfest/harness/pipeline.hpp"
#include "grfest/sim/scenario.hpp"
#include "grfest/sim/sensors.hpp"

namespace grfest {

/// Malformed or invalid configuration. The CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct ConfigSection {
  std::string name;
  int line = 0;
  std::vector<ConfigEntry> entries;
};

/// Flat text config: `[section]` headers followed by `key = value` lines.
/// `#` starts a comment. Entries before the first header, repeated sections
/// and repeated keys are errors.
std::vector<ConfigSection> parseConfig(const std::string& text, const std::string& origin);

/// Reads and parses a file; throws ConfigError if it cannot be read.
std::vector<ConfigSection> loadConfigFile(const std::filesystem::path& path);

/// Binds the keys of one section to setters and rejects unknown keys.
class SectionReader {
 public:
  SectionReader(const ConfigSection& section, std::string origin);

  SectionReader& number(const std::string& key, double& out);
  SectionReader& integer(const std::string& key, int& out);
  SectionReader& seed(const std::string& key, std::uint64_t& out);
  SectionReader& flag(const std::string& key, bool& out);
  SectionReader& text(const std::string& key, std::string& out);
  SectionReader& numbers(const std::string& key, std::vector<double>& out);
  SectionReader& words(const std::string& key, std::vector<std::string>& out);
  SectionReader& vector2(const std::string& key, Eigen::Vector2d& out);

  /// Applies the bound setters; throws ConfigError on the first unknown key
  /// or unparsable value.
  void apply() const;

 private:
  [[noreturn]] void fail(const ConfigEntry& entry, const std::string& what) const;

  const ConfigSection& section_;
  std::string origin_;
  std::map<std::string, std::function<void(const ConfigEntry&)>> setters_;
};

/// Robot description: `[base]` with mass, inertia and optional gravity, then
/// one `[leg.<name>]` section per leg in q order with hip_offset and
/// per-link lists masses, com_offsets, inertias, lengths (hip link first).
RobotModel parseRobotModel(const std::string& text, const std::string& origin);
RobotModel loadRobotModel(const std::filesystem::path& path);

struct ScenarioConfig {
  std::string model_path;  // empty selects the built-in reference biped
  GaitParams gait;
  SimulationSettings simulation;
  NoiseConfig sensor_noise;
  SensorRates rates;
  Pose2 camera;
  OrientationSettings orientation;
  EstimatorSettings estimator;
  std::vector<EstimatorKind> estimators{EstimatorKind::mhe, EstimatorKind::mhe_nc,
                                        EstimatorKind::dkf, EstimatorKind::mbo};
  std::string output_dir = "out";

  double duration() const { return simulation.duration; }
  std::uint64_t seed() const { return sensor_noise.seed; }
  /// Throws ConfigError when a field is out of range.
  void validate() const;
  RobotModel robotModel() const;
};

/// Sections: scenario, gait, simulation, sensors, orientation, estimator,
/// noise, qp. Every section and key is optional; absent keys keep defaults.
/// A relative model path is resolved against `base_dir`.
ScenarioConfig parseScenarioConfig(const std::string& text, const std::string& origin,
                                   const std::filesystem::path& base_dir = {});
ScenarioConfig loadScenarioConfig(const std::filesystem::path& path);

std::vector<EstimatorKind> parseEstimatorList(const std::string& list);

}  // namespace grfest
