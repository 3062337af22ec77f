#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "grfest/mhe/mhe_estimator.hpp"
#include "grfest/sim/sensors.hpp"

namespace grfest {

enum class RmseField {
  velocity,    // base velocity, both axes
  velocity_x,
  velocity_z,
  grf,         // per-foot force over stance samples, both axes
  grf_x,       // tangential component
  grf_z,       // normal component
};

/// Root mean square of the Euclidean error of `field`. Each estimate sample is
/// joined to the nearest truth sample; pairs further apart than `max_skew`
/// are skipped. Force fields use only samples where the truth foot is in
/// contact, pooled over all feet unless `foot` is given.
/// Throws ContractError when no pair remains.
double computeRmse(const std::vector<EstimateOut>& estimate, const std::vector<SimState>& truth,
                   RmseField field, double max_skew, std::optional<FootId> foot = std::nullopt);

/// Normal-force floor below which an estimate counts as violating complementarity.
inline constexpr double kNormalForceTolerance = 1e-6;

struct EstimatorMetrics {
  std::string name;
  std::string fault;  // set when the estimator threw; the numbers below are then unset
  int ticks = 0;

  double rmse_v = 0.0, rmse_vx = 0.0, rmse_vz = 0.0;   // m/s
  double rmse_f = 0.0, rmse_fx = 0.0, rmse_fz = 0.0;   // N
  std::vector<double> rmse_f_foot;                     // N

  double solve_mean_ms = 0.0, solve_p99_ms = 0.0, solve_max_ms = 0.0;

  int failed_solves = 0;   // QP status other than solved
  int degraded_ticks = 0;
  // Reported forces with a nonzero swing-foot force or a normal force below
  // -kNormalForceTolerance, judged against the logged contact switches.
  int complementarity_violations = 0;
  // Solved MHE windows where any state breaks the same rule.
  int window_violations = 0;
  double max_kkt = 0.0;
};

struct MetricsReport {
  std::vector<EstimatorMetrics> estimators;

  bool anyFault() const;
  const EstimatorMetrics& at(const std::string& name) const;

  /// Long format `estimator,metric,value`. Timing is left out so the file is
  /// reproducible; a faulted estimator gets a single `fault` row.
  void writeCsv(const std::filesystem::path& file) const;
  /// `estimator,mean[ms],p99[ms],max[ms]`.
  void writeTimingCsv(const std::filesystem::path& file) const;
  std::string summary() const;
};

/// Metrics of one estimate trace against the truth and contact switches of `log`.
/// `max_skew` defaults to half the sensor period.
EstimatorMetrics computeMetrics(const std::string& name, const std::vector<EstimateOut>& trace,
                                const SensorLog& log, std::optional<double> max_skew = std::nullopt);

/// Nearest-rank percentile, p in (0, 100]. Throws ContractError on empty input.
double percentile(std::vector<double> values, double p);

}  // namespace grfest
