// Command line front end: simulate, estimate, evaluate, bench.
#include <CLI11.hpp>

#include <algorithm>
#include <iostream>

#include "grfest/harness/benchmark.hpp"
#include "grfest/harness/log_io.hpp"

namespace {

using namespace grfest;

constexpr int kConfigError = 2;
constexpr int kEstimatorFault = 3;

struct Options {
  std::string config;
  std::string out;
  std::string log_dir;
  std::string estimates_dir;
  std::string estimators;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool no_constraints = false;
  int window = 0;
};

ScenarioConfig loadConfig(const Options& o) {
  ScenarioConfig c = o.config.empty() ? ScenarioConfig{} : loadScenarioConfig(o.config);
  if (o.seed_set) c.sensor_noise.seed = o.seed;
  if (!o.out.empty()) c.output_dir = o.out;
  if (!o.estimators.empty()) c.estimators = parseEstimatorList(o.estimators);
  if (o.window > 0) c.estimator.window_size = o.window;
  if (o.no_constraints) {
    // Constrained MHE becomes its unconstrained variant; duplicates collapse.
    std::vector<EstimatorKind> kinds;
    for (EstimatorKind k : c.estimators) {
      if (k == EstimatorKind::mhe) k = EstimatorKind::mhe_nc;
      if (std::find(kinds.begin(), kinds.end(), k) == kinds.end()) kinds.push_back(k);
    }
    c.estimators = kinds;
  }
  c.validate();
  return c;
}

int reportStatus(const MetricsReport& report) {
  std::cout << report.summary();
  if (report.anyFault()) {
    std::cerr << "one or more estimators faulted\n";
    return kEstimatorFault;
  }
  return 0;
}

int runSimulate(const Options& o) {
  const ScenarioConfig c = loadConfig(o);
  const RobotModel model = c.robotModel();
  const SensorLog log = simulateScenario(c, model);
  writeSensorLog(c.output_dir, log);
  std::cout << "wrote " << log.size() << " samples to " << c.output_dir << "\n";
  return 0;
}

int runEstimate(const Options& o) {
  const ScenarioConfig c = loadConfig(o);
  const RobotModel model = c.robotModel();
  const SensorLog log = readSensorLog(o.log_dir.empty() ? c.output_dir : o.log_dir, model);
  const auto runs = estimateAll(c, model, log);
  writeRuns(c.output_dir, runs);
  int status = 0;
  for (const EstimatorRun& run : runs) {
    if (run.fault.empty()) {
      std::cout << toString(run.kind) << ": " << run.trace.size() << " ticks\n";
    } else {
      std::cerr << toString(run.kind) << ": FAULT " << run.fault << "\n";
      status = kEstimatorFault;
    }
  }
  return status;
}

int runEvaluate(const Options& o) {
  const ScenarioConfig c = loadConfig(o);
  const RobotModel model = c.robotModel();
  const std::filesystem::path log_dir = o.log_dir.empty() ? c.output_dir : o.log_dir;
  const std::filesystem::path est_dir = o.estimates_dir.empty() ? c.output_dir : o.estimates_dir;
  const SensorLog log = readSensorLog(log_dir, model);
  std::vector<EstimatorRun> runs;
  for (EstimatorKind kind : c.estimators) {
    const std::string name = toString(kind);
    EstimatorRun run{kind, readEstimates(est_dir / ("estimate_" + name + ".csv"), model), {}};
    const auto timing = est_dir / ("timing_" + name + ".csv");
    if (std::filesystem::exists(timing)) readTiming(timing, run.trace);
    runs.push_back(std::move(run));
  }
  const MetricsReport report = evaluateRuns(runs, log);
  writeReport(c.output_dir, report);
  return reportStatus(report);
}

int runBench(const Options& o) {
  const ScenarioConfig c = loadConfig(o);
  const BenchmarkResult result = runBenchmark(c);
  writeSensorLog(c.output_dir, result.log);
  writeRuns(c.output_dir, result.runs);
  writeReport(c.output_dir, result.report);
  return reportStatus(result.report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ground reaction force and base state estimation toolkit"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Scenario config file")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "Output directory (overrides the config)");
    sub->add_option("--estimators", o.estimators, "Comma-separated list of mhe, mhe_nc, dkf, mbo");
  };
  auto estimation = [&](CLI::App* sub) {
    sub->add_flag("--no-constraints", o.no_constraints, "Run MHE without contact complementarity");
    sub->add_option("--window", o.window, "MHE window size")->check(CLI::PositiveNumber);
  };
  auto seed = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Sensor noise seed")->each([&](const std::string&) {
      o.seed_set = true;
    });
  };

  CLI::App* simulate = app.add_subcommand("simulate", "Simulate a scenario and write its sensor log");
  common(simulate);
  seed(simulate);
  CLI::App* estimate = app.add_subcommand("estimate", "Run estimators on a recorded log");
  common(estimate);
  estimation(estimate);
  estimate->add_option("--log", o.log_dir, "Log directory (default: --out)");
  CLI::App* evaluate = app.add_subcommand("evaluate", "Score estimate traces against the truth");
  common(evaluate);
  evaluate->add_option("--log", o.log_dir, "Log directory with truth.csv (default: --out)");
  evaluate->add_option("--estimates", o.estimates_dir, "Directory of estimate_<name>.csv (default: --out)");
  CLI::App* bench = app.add_subcommand("bench", "Simulate, estimate and evaluate end to end");
  common(bench);
  seed(bench);
  estimation(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help requests exit with 0; every other parse failure is a usage error.
    return app.exit(e) == 0 ? 0 : kConfigError;
  }

  try {
    if (*simulate) return runSimulate(o);
    if (*estimate) return runEstimate(o);
    if (*evaluate) return runEvaluate(o);
    return runBench(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const LogFormatError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
