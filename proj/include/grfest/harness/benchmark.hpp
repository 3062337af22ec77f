#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "grfest/harness/config.hpp"
#include "grfest/harness/metrics.hpp"

namespace grfest {

/// Closed-loop simulation of the scenario and the noisy sensor log sampled from it.
SensorLog simulateScenario(const ScenarioConfig& config, const RobotModel& model);

struct EstimatorRun {
  EstimatorKind kind;
  std::vector<EstimateOut> trace;  // empty when the estimator faulted
  std::string fault;
};

/// Runs every selected estimator on the same log. The orientation filter is
/// initialized from the first truth sample. An exception inside an estimator
/// is recorded as its fault and does not stop the others.
std::vector<EstimatorRun> estimateAll(const ScenarioConfig& config, const RobotModel& model,
                                      const SensorLog& log);

MetricsReport evaluateRuns(const std::vector<EstimatorRun>& runs, const SensorLog& log);

struct BenchmarkResult {
  SensorLog log;
  std::vector<EstimatorRun> runs;
  MetricsReport report;
};

/// Simulates once, feeds the identical log to every selected estimator and
/// scores them. MBO reads the truth base velocity; the others do not.
BenchmarkResult runBenchmark(const ScenarioConfig& config);

/// Writes estimate_<name>.csv and timing_<name>.csv for every run that did not fault.
void writeRuns(const std::filesystem::path& dir, const std::vector<EstimatorRun>& runs);

/// Writes report.csv, timing.csv and summary.txt.
void writeReport(const std::filesystem::path& dir, const MetricsReport& report);

}  // namespace grfest
