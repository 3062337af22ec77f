#pragma once

#include <Eigen/Dense>
#include <deque>
#include <optional>
#include <vector>

#include "grfest/qp/qp_solver.hpp"

namespace grfest {

/// Quadratic prior 1/2 (x - mean)^T information (x - mean) on the first state of a window.
struct ArrivalCost {
  Eigen::VectorXd mean;
  Eigen::MatrixXd information;
  bool regularized = false;  // the last elimination needed the eps I shift

  static ArrivalCost fromCovariance(const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance);
  int dim() const { return static_cast<int>(mean.size()); }
};

/// Relative measurement y = L_cur x_k + L_next x_{k+1} + noise between a stage and its successor.
struct RelativeMeasurement {
  Eigen::MatrixXd L_cur;
  Eigen::MatrixXd L_next;
  Eigen::VectorXd y;
  Eigen::MatrixXd R;
};

/// One time step of a linear time-varying model.
///   transition to the next stage:  x+ = A x + b + w,  w ~ N(0, Q)
///   measurements:                  y = H x + v,       v ~ N(0, R)
///   hard constraints:              E x = e,  G x <= h
struct LinearStage {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::MatrixXd Q;

  Eigen::MatrixXd H;
  Eigen::VectorXd y;
  Eigen::MatrixXd R;

  Eigen::MatrixXd E;
  Eigen::VectorXd e;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;

  std::optional<RelativeMeasurement> relative;

  int dim() const { return static_cast<int>(A.rows()); }
  int numEqualities() const { return static_cast<int>(e.size()); }
  int numInequalities() const { return static_cast<int>(h.size()); }
  /// Throws ContractError on inconsistent block sizes.
  void validate(int dim) const;
};

/// Stacked QP over the states of `stages` (the transition and relative
/// measurement of the last stage are not used). Variables are ordered by stage.
QpProblem buildWindowQp(const std::deque<LinearStage>& stages, const ArrivalCost& arrival);

/// Eliminates the first state of a window (its prior, measurements, equality
/// constraints, transition and relative measurement) through the Schur
/// complement of the equality-constrained KKT system. Inequalities are ignored.
/// A singular elimination block is shifted by eps I and flagged.
ArrivalCost marginalizeArrivalCost(const LinearStage& oldest, const ArrivalCost& prior,
                                   double eps = 1e-9);

/// Sliding-window estimator over generic LTV stages.
class MovingHorizon {
 public:
  MovingHorizon(int window_size, ArrivalCost initial, QpSettings settings = {});

  /// Appends a stage; when the window overflows the oldest stage is marginalized.
  void push(LinearStage stage);

  /// Stage `i` counted from the oldest state in the window.
  LinearStage& stage(int i) { return stages_.at(i); }
  int size() const { return static_cast<int>(stages_.size()); }
  int windowSize() const { return window_size_; }

  /// Solves the window QP warm-started from the previous solution.
  const QpSolution& solve();

  /// Newest state of the last solution.
  Eigen::VectorXd newest() const;

  const ArrivalCost& arrival() const { return arrival_; }
  const QpProblem& problem() const { return problem_; }
  const QpSolution& solution() const { return solution_; }
  bool arrivalRegularized() const { return arrival_.regularized; }

 private:
  int window_size_;
  ArrivalCost arrival_;
  QpSettings settings_;
  std::deque<LinearStage> stages_;
  QpProblem problem_;
  QpSolution solution_;
  // Stage layout of the last solution, used to shift it into a warm start.
  std::vector<int> last_eq_rows_, last_in_rows_;
  int dropped_since_solve_ = 0;
  bool have_solution_ = false;
};

}  // namespace grfest
