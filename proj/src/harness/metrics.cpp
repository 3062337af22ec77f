#include "grfest/harness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "grfest/contract_error.hpp"
#include "grfest/harness/log_io.hpp"
#include "grfest/harness/pipeline.hpp"

namespace grfest {

double computeRmse(const std::vector<EstimateOut>& estimate, const std::vector<SimState>& truth,
                   RmseField field, double max_skew, std::optional<FootId> foot) {
  if (truth.empty()) throw ContractError("rmse: empty truth trace");
  double sum = 0.0;
  long count = 0;
  for (const EstimateOut& e : estimate) {
    const SimState& s = nearestTruth(truth, e.t);
    if (std::abs(s.time - e.t) > max_skew) continue;
    switch (field) {
      case RmseField::velocity:
      case RmseField::velocity_x:
      case RmseField::velocity_z: {
        const Eigen::Vector2d d = e.state.v - s.state.baseVelocity();
        sum += field == RmseField::velocity ? d.squaredNorm()
               : field == RmseField::velocity_x ? d.x() * d.x() : d.y() * d.y();
        ++count;
        break;
      }
      case RmseField::grf:
      case RmseField::grf_x:
      case RmseField::grf_z:
        for (FootId i = 0; i < static_cast<int>(s.contact.size()); ++i) {
          if ((foot && *foot != i) || !s.contact[i]) continue;
          const Eigen::Vector2d d = e.state.f.at(i) - s.grf.at(i);
          sum += field == RmseField::grf ? d.squaredNorm()
                 : field == RmseField::grf_x ? d.x() * d.x() : d.y() * d.y();
          ++count;
        }
        break;
    }
  }
  if (count == 0) throw ContractError("rmse: estimate and truth traces do not overlap");
  return std::sqrt(sum / count);
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw ContractError("percentile of an empty sample");
  if (!(p > 0.0 && p <= 100.0)) throw ContractError("percentile must lie in (0, 100]");
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * values.size()));
  return values[std::max<std::size_t>(rank, 1) - 1];
}

EstimatorMetrics computeMetrics(const std::string& name, const std::vector<EstimateOut>& trace,
                                const SensorLog& log, std::optional<double> max_skew) {
  EstimatorMetrics m;
  m.name = name;
  m.ticks = static_cast<int>(trace.size());
  if (trace.empty()) throw ContractError("metrics: empty estimate trace");
  double skew = 0.0;
  if (max_skew) skew = *max_skew;
  else if (log.imu.size() >= 2) skew = 0.5 * (log.imu[1].t - log.imu[0].t);

  m.rmse_v = computeRmse(trace, log.truth, RmseField::velocity, skew);
  m.rmse_vx = computeRmse(trace, log.truth, RmseField::velocity_x, skew);
  m.rmse_vz = computeRmse(trace, log.truth, RmseField::velocity_z, skew);
  m.rmse_f = computeRmse(trace, log.truth, RmseField::grf, skew);
  m.rmse_fx = computeRmse(trace, log.truth, RmseField::grf_x, skew);
  m.rmse_fz = computeRmse(trace, log.truth, RmseField::grf_z, skew);
  const int feet = static_cast<int>(trace.front().state.f.size());
  for (FootId foot = 0; foot < feet; ++foot) {
    // A foot that never touches the ground has no stance samples to score.
    try {
      m.rmse_f_foot.push_back(computeRmse(trace, log.truth, RmseField::grf, skew, foot));
    } catch (const ContractError&) {
      m.rmse_f_foot.push_back(std::nan(""));
    }
  }

  std::vector<double> times;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const EstimateOut& e = trace[k];
    times.push_back(e.solve_time_ms);
    if (e.status != "solved" && e.status != "filter") ++m.failed_solves;
    if (e.degraded) ++m.degraded_ticks;
    m.max_kkt = std::max(m.max_kkt, e.kkt_residual);
    if (e.window_min_normal_force < -kNormalForceTolerance || e.window_max_swing_force != 0.0)
      ++m.window_violations;
    if (k < log.contacts.size() && log.contacts[k].t == e.t) {
      bool bad = false;
      for (FootId foot = 0; foot < feet; ++foot) {
        const Eigen::Vector2d& f = e.state.f[foot];
        if (f.y() < -kNormalForceTolerance) bad = true;
        if (!log.contacts[k].contact.at(foot) && !f.isZero(0.0)) bad = true;
      }
      if (bad) ++m.complementarity_violations;
    }
  }
  m.solve_mean_ms = std::accumulate(times.begin(), times.end(), 0.0) / times.size();
  m.solve_p99_ms = percentile(times, 99.0);
  m.solve_max_ms = *std::max_element(times.begin(), times.end());
  return m;
}

bool MetricsReport::anyFault() const {
  return std::any_of(estimators.begin(), estimators.end(),
                     [](const EstimatorMetrics& m) { return !m.fault.empty(); });
}

const EstimatorMetrics& MetricsReport::at(const std::string& name) const {
  for (const auto& m : estimators)
    if (m.name == name) return m;
  throw ContractError("report has no estimator '" + name + "'");
}

void MetricsReport::writeCsv(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ContractError("cannot write '" + file.string() + "'");
  out << "estimator,metric,value\n";
  auto row = [&](const std::string& name, const std::string& metric, const std::string& value) {
    out << name << ',' << metric << ',' << value << '\n';
  };
  for (const EstimatorMetrics& m : estimators) {
    if (!m.fault.empty()) {
      std::string msg = m.fault;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      row(m.name, "fault", msg);
      continue;
    }
    row(m.name, "ticks", std::to_string(m.ticks));
    row(m.name, "rmse_v[m/s]", formatDouble(m.rmse_v));
    row(m.name, "rmse_vx[m/s]", formatDouble(m.rmse_vx));
    row(m.name, "rmse_vz[m/s]", formatDouble(m.rmse_vz));
    row(m.name, "rmse_f[N]", formatDouble(m.rmse_f));
    row(m.name, "rmse_fx[N]", formatDouble(m.rmse_fx));
    row(m.name, "rmse_fz[N]", formatDouble(m.rmse_fz));
    for (std::size_t i = 0; i < m.rmse_f_foot.size(); ++i)
      row(m.name, "rmse_f" + std::to_string(i + 1) + "[N]", formatDouble(m.rmse_f_foot[i]));
    row(m.name, "failed_solves", std::to_string(m.failed_solves));
    row(m.name, "degraded_ticks", std::to_string(m.degraded_ticks));
    row(m.name, "complementarity_violations", std::to_string(m.complementarity_violations));
    row(m.name, "window_violations", std::to_string(m.window_violations));
    row(m.name, "max_kkt", formatDouble(m.max_kkt));
  }
  if (!out) throw ContractError("write failed for '" + file.string() + "'");
}

void MetricsReport::writeTimingCsv(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ContractError("cannot write '" + file.string() + "'");
  out << "estimator,mean[ms],p99[ms],max[ms]\n";
  for (const EstimatorMetrics& m : estimators) {
    if (!m.fault.empty()) continue;
    out << m.name << ',' << formatDouble(m.solve_mean_ms) << ',' << formatDouble(m.solve_p99_ms)
        << ',' << formatDouble(m.solve_max_ms) << '\n';
  }
}

std::string MetricsReport::summary() const {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-8s %10s %10s %10s %10s %10s %10s %6s\n", "estimator",
                "rmse_v", "rmse_f", "rmse_fx", "rmse_fz", "mean_ms", "p99_ms", "viol");
  out << line;
  for (const EstimatorMetrics& m : estimators) {
    if (!m.fault.empty()) {
      out << m.name << ": FAULT " << m.fault << '\n';
      continue;
    }
    std::snprintf(line, sizeof line, "%-8s %10.5f %10.3f %10.3f %10.3f %10.3f %10.3f %6d\n",
                  m.name.c_str(), m.rmse_v, m.rmse_f, m.rmse_fx, m.rmse_fz, m.solve_mean_ms,
                  m.solve_p99_ms, m.complementarity_violations);
    out << line;
  }
  return out.str();
}

}  // namespace grfest
