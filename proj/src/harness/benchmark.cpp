#include "grfest/harness/benchmark.hpp"

#include <fstream>

#include "grfest/harness/log_io.hpp"

namespace grfest {

SensorLog simulateScenario(const ScenarioConfig& config, const RobotModel& model) {
  GaitController controller(model, config.gait);
  const GeneralizedState initial = defaultInitialState(model, config.gait, config.simulation.contact);
  const auto truth = simulateGait(model, std::move(controller), initial, config.simulation);
  return synthesizeSensors(truth, model, config.sensor_noise, config.rates, config.camera);
}

std::vector<EstimatorRun> estimateAll(const ScenarioConfig& config, const RobotModel& model,
                                      const SensorLog& log) {
  if (log.truth.empty()) throw ContractError("estimate: the log has no truth trace");
  const auto ticks = buildTickInputs(log, model, log.truth.front().state.pitch(), config.orientation);
  std::vector<EstimatorRun> runs;
  for (EstimatorKind kind : config.estimators) {
    EstimatorRun run{kind, {}, {}};
    try {
      run.trace = runEstimator(kind, model, log, ticks, config.estimator);
    } catch (const std::exception& e) {
      run.trace.clear();
      run.fault = e.what();
    }
    runs.push_back(std::move(run));
  }
  return runs;
}

MetricsReport evaluateRuns(const std::vector<EstimatorRun>& runs, const SensorLog& log) {
  MetricsReport report;
  for (const EstimatorRun& run : runs) {
    EstimatorMetrics m;
    m.name = toString(run.kind);
    if (run.fault.empty()) {
      try {
        m = computeMetrics(m.name, run.trace, log);
      } catch (const std::exception& e) {
        m.fault = e.what();
      }
    } else {
      m.fault = run.fault;
    }
    report.estimators.push_back(std::move(m));
  }
  return report;
}

BenchmarkResult runBenchmark(const ScenarioConfig& config) {
  config.validate();
  const RobotModel model = config.robotModel();
  BenchmarkResult result;
  result.log = simulateScenario(config, model);
  result.runs = estimateAll(config, model, result.log);
  result.report = evaluateRuns(result.runs, result.log);
  return result;
}

void writeRuns(const std::filesystem::path& dir, const std::vector<EstimatorRun>& runs) {
  std::filesystem::create_directories(dir);
  for (const EstimatorRun& run : runs) {
    if (!run.fault.empty()) continue;
    const std::string name = toString(run.kind);
    writeEstimates(dir / ("estimate_" + name + ".csv"), run.trace);
    writeTiming(dir / ("timing_" + name + ".csv"), run.trace);
  }
}

void writeReport(const std::filesystem::path& dir, const MetricsReport& report) {
  std::filesystem::create_directories(dir);
  report.writeCsv(dir / "report.csv");
  report.writeTimingCsv(dir / "timing.csv");
  std::ofstream(dir / "summary.txt") << report.summary();
}

}  // namespace grfest
