#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "grfest/dynamics/robot_model.hpp"
#include "grfest/mhe/mhe_estimator.hpp"
#include "grfest/sim/sensors.hpp"

namespace grfest {

/// Malformed or missing CSV input.
class LogFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes imu.csv, encoders.csv, effort.csv, contacts.csv, vo.csv and
/// truth.csv into `dir` (created if needed). Every float is written with 17
/// significant digits, so reading the files back reproduces the log exactly.
void writeSensorLog(const std::filesystem::path& dir, const SensorLog& log);

/// Inverse of writeSensorLog. Stream widths are checked against `model`.
SensorLog readSensorLog(const std::filesystem::path& dir, const RobotModel& model);

void writeTruth(const std::filesystem::path& file, const std::vector<SimState>& truth);
std::vector<SimState> readTruth(const std::filesystem::path& file, const RobotModel& model);

/// Estimate trace without timing, so the file is reproducible.
void writeEstimates(const std::filesystem::path& file, const std::vector<EstimateOut>& trace);
std::vector<EstimateOut> readEstimates(const std::filesystem::path& file, const RobotModel& model);

/// Per-tick solve times (t, solve_ms) kept apart from the estimate trace.
void writeTiming(const std::filesystem::path& file, const std::vector<EstimateOut>& trace);
/// Fills solve_time_ms of `trace` from a timing file with matching timestamps.
void readTiming(const std::filesystem::path& file, std::vector<EstimateOut>& trace);

/// printf("%.17g").
std::string formatDouble(double value);

}  // namespace grfest
