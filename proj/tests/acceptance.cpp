// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "grfest/dynamics/dynamics.hpp"
#include "grfest/harness/benchmark.hpp"
#include "grfest/harness/config.hpp"
#include "grfest/mhe/linear_window.hpp"
#include "qp_oracle.hpp"
#include "test_support.hpp"

namespace grfest {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

double seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Default 10 s walking benchmark, shared by several criteria.
const BenchmarkResult& defaultBench() {
  static const BenchmarkResult result = runBenchmark(ScenarioConfig{});
  return result;
}

const EstimatorRun& runOf(const BenchmarkResult& bench, EstimatorKind kind) {
  for (const EstimatorRun& run : bench.runs)
    if (run.kind == kind) return run;
  throw ContractError("benchmark has no " + toString(kind) + " run");
}

Outcome skewSymmetry() {
  const auto start = std::chrono::steady_clock::now();
  const RobotModel model = RobotModel::referenceBiped();
  std::mt19937 rng(2024);
  const double eps = 1e-6;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const GeneralizedState s = testing::randomState(model, rng);
    const Eigen::MatrixXd fd =
        (massMatrix(model, s.q + eps * s.qdot) - massMatrix(model, s.q - eps * s.qdot)) / (2 * eps);
    const DynamicsTerms t = computeDynamicsTerms(model, s);
    worst = std::max(worst, (fd - (t.C + t.C.transpose())).norm() / fd.norm());
  }
  const double elapsed = seconds(start);
  return {worst < 1e-5 && elapsed < 10.0,
          fmt("max relative error %.2e over 1000 states in %.2f s", worst, elapsed)};
}

Outcome qpCorrectness() {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> dim(2, 40);
  double worst_x = 0.0;
  int failures = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = dim(rng);
    const int me = std::min(n - 1, trial % 4);
    const int mi = std::min(10, 2 + trial % 9);
    const testing::RandomQp q = testing::randomQp(rng, n, me, mi);
    const testing::DenseSolution oracle =
        testing::activeSetOracle(q.H, q.c, q.Aeq, q.beq, q.Ain, q.bin);
    const QpSolution sol = solveQp(testing::makeProblem(q.H, q.c, q.Aeq, q.beq, q.Ain, q.bin));
    if (!oracle.found || sol.status != QpStatus::solved) {
      ++failures;
      continue;
    }
    worst_x = std::max(worst_x, (sol.x - oracle.x).lpNorm<Eigen::Infinity>());
  }
  const EstimatorMetrics& mhe = defaultBench().report.at("mhe");
  const bool pass = failures == 0 && worst_x <= 1e-6 && mhe.max_kkt <= 1e-6 && mhe.failed_solves == 0;
  return {pass, fmt("random QPs: %.0f unsolved, max |x - oracle| %.2e; benchmark windows: "
                    "max KKT residual %.2e, %.0f failed solves",
                    failures, worst_x, mhe.max_kkt, mhe.failed_solves)};
}

Outcome dkfEquivalence() {
  const BenchmarkResult& bench = defaultBench();
  const RobotModel model = RobotModel::referenceBiped();
  const ScenarioConfig config;
  const auto ticks = buildTickInputs(bench.log, model, bench.log.truth.front().state.pitch(),
                                     config.orientation);
  EstimatorSettings settings = config.estimator;
  settings.window_size = 1;
  const auto mhe = runEstimator(EstimatorKind::mhe_nc, model, bench.log, ticks, settings);
  const auto& dkf = runOf(bench, EstimatorKind::dkf).trace;
  double worst = 0.0;
  for (std::size_t k = 0; k < ticks.size(); ++k)
    worst = std::max(worst, (mhe[k].state.pack() - dkf[k].state.pack()).cwiseAbs().maxCoeff());
  return {worst < 1e-6 && mhe.size() == dkf.size(),
          fmt("max state difference %.2e over %.0f ticks (%.1f s)", worst,
              static_cast<double>(ticks.size()), ticks.back().t - ticks.front().t)};
}

Outcome kalmanEquivalence() {
  const int D = 4, m = 2, steps = 200;
  std::mt19937 rng(31);
  std::normal_distribution<double> n(0.0, 1.0);
  auto random = [&](int r, int c, double scale) {
    Eigen::MatrixXd M(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) M(i, j) = scale * n(rng);
    return M;
  };
  auto covariance = [&](int d, double scale) {
    const Eigen::MatrixXd L = random(d, d, 1.0);
    return Eigen::MatrixXd(scale * (L * L.transpose() / d + 0.2 * Eigen::MatrixXd::Identity(d, d)));
  };
  Eigen::VectorXd mean = random(D, 1, 1.0);
  Eigen::MatrixXd P = covariance(D, 1.0);
  QpSettings qp;
  qp.eps_abs = qp.eps_rel = 1e-10;
  MovingHorizon mhe(8, ArrivalCost::fromCovariance(mean, P), qp);
  Eigen::VectorXd x = mean;
  double worst = 0.0;
  LinearStage prev;
  for (int k = 0; k < steps; ++k) {
    LinearStage s;
    s.A = Eigen::MatrixXd::Identity(D, D) + random(D, D, 0.1);
    s.b = random(D, 1, 0.1);
    s.Q = covariance(D, 0.05);
    s.H = random(m, D, 1.0);
    s.R = covariance(m, 0.1);
    s.y = s.H * x + random(m, 1, 0.3);
    s.E.resize(0, D);
    s.e.resize(0);
    s.G.resize(0, D);
    s.h.resize(0);
    x = s.A * x + s.b + random(D, 1, 0.2);
    if (k > 0) {
      mean = prev.A * mean + prev.b;
      P = prev.A * P * prev.A.transpose() + prev.Q;
    }
    const Eigen::MatrixXd K = P * s.H.transpose() * (s.H * P * s.H.transpose() + s.R).inverse();
    mean += K * (s.y - s.H * mean);
    P = (Eigen::MatrixXd::Identity(D, D) - K * s.H) * P;
    mhe.push(s);
    if (mhe.solve().status != QpStatus::solved) return {false, fmt("window %.0f not solved", k)};
    worst = std::max(worst, (mhe.newest() - mean).cwiseAbs().maxCoeff());
    prev = s;
  }
  return {worst < 1e-6, fmt("window 8, 200 steps: max |mean - KF mean| %.2e", worst)};
}

Outcome complementarity() {
  const BenchmarkResult& bench = defaultBench();
  const auto& trace = runOf(bench, EstimatorKind::mhe).trace;
  int windows_bad = 0, swing_nonzero = 0, unsolved = 0;
  double min_fz = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const EstimateOut& e = trace[k];
    if (e.status != "solved") {
      ++unsolved;
      continue;
    }
    min_fz = std::min(min_fz, e.window_min_normal_force);
    if (e.window_min_normal_force < -1e-6 || e.window_max_swing_force != 0.0) ++windows_bad;
    for (std::size_t foot = 0; foot < e.state.f.size(); ++foot)
      if (!bench.log.contacts[k].contact[foot] && !e.state.f[foot].isZero(0.0)) ++swing_nonzero;
  }
  return {windows_bad == 0 && swing_nonzero == 0 && unsolved == 0,
          fmt("%.0f violating windows, %.0f nonzero swing estimates, %.0f unsolved, "
              "min window f_z %.2e N",
              windows_bad, swing_nonzero, unsolved, min_fz)};
}

Outcome orderings() {
  const RobotModel model = RobotModel::referenceBiped();
  ScenarioConfig config;
  double f_mhe = 0, f_nc = 0, f_dkf = 0, f_mbo = 0, v_mhe = 0, v_dkf = 0;
  const int seeds = 10;
  for (int seed = 1; seed <= seeds; ++seed) {
    config.sensor_noise.seed = static_cast<std::uint64_t>(seed);
    const BenchmarkResult bench = seed == 1 ? defaultBench() : runBenchmark(config);
    const MetricsReport& r = bench.report;
    if (r.anyFault()) return {false, fmt("estimator fault at seed %.0f", seed)};
    f_mhe += r.at("mhe").rmse_f / seeds;
    f_nc += r.at("mhe_nc").rmse_f / seeds;
    f_dkf += r.at("dkf").rmse_f / seeds;
    f_mbo += r.at("mbo").rmse_f / seeds;
    v_mhe += r.at("mhe").rmse_v / seeds;
    v_dkf += r.at("dkf").rmse_v / seeds;
  }
  const bool forces = f_mhe <= 0.95 * f_nc && f_mhe <= 0.95 * f_dkf && f_mhe <= 0.95 * f_mbo;
  const double v_ratio = std::max(v_mhe, v_dkf) / std::min(v_mhe, v_dkf);
  std::ostringstream s;
  s << "mean over 10 seeds: rmse_f mhe " << fmt("%.3f", f_mhe) << " N, mhe_nc "
    << fmt("%.3f", f_nc) << ", dkf " << fmt("%.3f", f_dkf) << ", mbo " << fmt("%.3f", f_mbo)
    << "; rmse_v mhe " << fmt("%.4f", v_mhe) << " m/s, dkf " << fmt("%.4f", v_dkf);
  return {forces && v_ratio <= 1.25, s.str()};
}

Outcome staticConsistency() {
  ScenarioConfig config = parseScenarioConfig(
      "[scenario]\nduration = 3.0\nestimators = mhe\n[gait]\nstep_length = 0\nswing_height = 0\n",
      "standing");
  const BenchmarkResult bench = runBenchmark(config);
  if (bench.report.anyFault()) return {false, "estimator fault"};
  const double weight = config.robotModel().totalMass() * config.robotModel().gravity();
  double worst = 0.0;
  for (const EstimateOut& e : bench.runs.front().trace) {
    if (e.t < 0.5) continue;
    double fz = 0.0;
    for (const auto& f : e.state.f) fz += f.y();
    worst = std::max(worst, std::abs(fz - weight) / weight);
  }
  return {worst <= 0.02, fmt("max |sum f_z - m g| / m g after 0.5 s: %.2f %%", 100.0 * worst)};
}

Outcome realTime() {
  const EstimatorMetrics& m = defaultBench().report.at("mhe");
  return {m.solve_mean_ms <= 5.0 && m.solve_p99_ms <= 10.0,
          fmt("mhe step mean %.3f ms, p99 %.3f ms, max %.3f ms", m.solve_mean_ms, m.solve_p99_ms,
              m.solve_max_ms)};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "grfest_acceptance";
  fs::remove_all(root);
  writeReport(root / "a", defaultBench().report);
  writeReport(root / "b", runBenchmark(ScenarioConfig{}).report);
  auto read = [](const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  };
  const std::string a = read(root / "a" / "report.csv"), b = read(root / "b" / "report.csv");
  return {!a.empty() && a == b, fmt("report.csv %.0f bytes, identical: %.0f",
                                    static_cast<double>(a.size()), a == b ? 1.0 : 0.0)};
}

}  // namespace
}  // namespace grfest

int main() {
  using grfest::Outcome;
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"skew symmetry of the Coriolis matrix", grfest::skewSymmetry},
      {"QP solver correctness", grfest::qpCorrectness},
      {"DKF equals unconstrained window-1 MHE", grfest::dkfEquivalence},
      {"Kalman equivalence of the arrival cost", grfest::kalmanEquivalence},
      {"contact complementarity", grfest::complementarity},
      {"estimator ordering", grfest::orderings},
      {"standing force consistency", grfest::staticConsistency},
      {"real-time budget", grfest::realTime},
      {"benchmark determinism", grfest::determinism},
  };
  int failed = 0, index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    failed += outcome.pass ? 0 : 1;
    std::printf("%s [%d] %s: %s\n", outcome.pass ? "PASS" : "FAIL", index, name,
                outcome.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", index - failed, index);
  return failed == 0 ? 0 : 1;
}
