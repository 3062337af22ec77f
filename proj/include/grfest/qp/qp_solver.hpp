#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <optional>
#include <string>

namespace grfest {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// min 1/2 x^T H x + c^T x  s.t.  A_eq x = b_eq,  A_in x <= b_in.
struct QpProblem {
  SparseMatrix H;  // full symmetric storage
  Eigen::VectorXd c;
  SparseMatrix A_eq;
  Eigen::VectorXd b_eq;
  SparseMatrix A_in;
  Eigen::VectorXd b_in;

  int numVariables() const { return static_cast<int>(c.size()); }

  /// Throws ContractError on inconsistent dimensions, asymmetric H, or H not PSD
  /// (Cholesky of H + eps I fails).
  void validate() const;
};

enum class QpStatus { solved, max_iter, infeasible };

const char* toString(QpStatus status);

struct QpSettings {
  double eps_abs = 1e-6;
  double eps_rel = 1e-6;
  int max_iter = 4000;
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;          // over-relaxation
  bool adaptive_rho = true;
  int scaling_iters = 10;
  int check_interval = 5;      // iterations between termination checks
  bool polish = true;
  int polish_interval = 25;    // iterations between active-set polish attempts
  double eps_infeasible = 1e-7;
  std::string dump_path;       // if set, the problem is written there before solving
};

/// Stationarity convention: H x + c + A_eq^T y_eq + A_in^T y_in = 0, y_in >= 0.
struct QpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd y_eq;
  Eigen::VectorXd y_in;
  QpStatus status = QpStatus::max_iter;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool polished = false;
};

struct QpWarmStart {
  Eigen::VectorXd x;
  Eigen::VectorXd y_eq;
  Eigen::VectorXd y_in;
};

/// Infinity-norm KKT residuals of a candidate primal-dual point on the original problem.
struct KktResiduals {
  double stationarity = 0.0;
  double equality = 0.0;
  double inequality = 0.0;       // max(0, A_in x - b_in)
  double dual_sign = 0.0;        // max(0, -y_in)
  double complementarity = 0.0;  // max |y_in_i (A_in x - b_in)_i|

  double max() const;
};

KktResiduals kktResiduals(const QpProblem& problem, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& y_eq, const Eigen::VectorXd& y_in);

/// ADMM operator splitting on l <= [A_eq; A_in] x <= u with Ruiz equilibration,
/// adaptive penalty, and active-set polishing. A polished point is accepted
/// only after its KKT conditions are verified on the original problem.
QpSolution solveQp(const QpProblem& problem, const QpSettings& settings = {},
                   const QpWarmStart* warm_start = nullptr);

/// Writes H, c, A_eq, b_eq, A_in, b_in as 1-based coordinate triplets.
void dumpProblem(const QpProblem& problem, const std::string& path);

}  // namespace grfest
