#include "grfest/mhe/linear_window.hpp"

#include <Eigen/Eigenvalues>

#include "grfest/contract_error.hpp"

namespace grfest {
namespace {

Eigen::MatrixXd symmetricInverse(const Eigen::MatrixXd& S) {
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) throw ContractError("covariance must be positive definite");
  return llt.solve(Eigen::MatrixXd::Identity(S.rows(), S.cols()));
}

// Accumulates 1/2 r^T W r with r = L z - y into (H, c) on the variable block at `offset`.
void addResidual(Eigen::MatrixXd& H, Eigen::VectorXd& c, int offset, const Eigen::MatrixXd& L,
                 const Eigen::VectorXd& y, const Eigen::MatrixXd& W) {
  const Eigen::MatrixXd LtW = L.transpose() * W;
  H.block(offset, offset, L.cols(), L.cols()).noalias() += LtW * L;
  c.segment(offset, L.cols()).noalias() -= LtW * y;
}

Eigen::MatrixXd transitionOperator(const LinearStage& s) {
  const int D = s.dim();
  Eigen::MatrixXd L(D, 2 * D);
  L << -s.A, Eigen::MatrixXd::Identity(D, D);
  return L;
}

Eigen::MatrixXd relativeOperator(const RelativeMeasurement& r) {
  Eigen::MatrixXd L(r.y.size(), r.L_cur.cols() + r.L_next.cols());
  L << r.L_cur, r.L_next;
  return L;
}

// Cost terms of a stage that couple it to its successor: transition and relative measurement.
void addTransition(Eigen::MatrixXd& H, Eigen::VectorXd& c, int offset, const LinearStage& s) {
  addResidual(H, c, offset, transitionOperator(s), s.b, symmetricInverse(s.Q));
  if (s.relative)
    addResidual(H, c, offset, relativeOperator(*s.relative), s.relative->y,
                symmetricInverse(s.relative->R));
}

void addMeasurements(Eigen::MatrixXd& H, Eigen::VectorXd& c, int offset, const LinearStage& s) {
  if (s.y.size()) addResidual(H, c, offset, s.H, s.y, symmetricInverse(s.R));
}

SparseMatrix blockDiagonalRows(const std::deque<LinearStage>& stages, bool equality, int dim) {
  int rows = 0;
  for (const auto& s : stages) rows += equality ? s.numEqualities() : s.numInequalities();
  std::vector<Eigen::Triplet<double>> trip;
  int row = 0;
  for (std::size_t k = 0; k < stages.size(); ++k) {
    const Eigen::MatrixXd& M = equality ? stages[k].E : stages[k].G;
    for (int i = 0; i < M.rows(); ++i)
      for (int j = 0; j < M.cols(); ++j)
        if (M(i, j) != 0.0) trip.emplace_back(row + i, static_cast<int>(k) * dim + j, M(i, j));
    row += M.rows();
  }
  SparseMatrix out(rows, static_cast<int>(stages.size()) * dim);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

Eigen::VectorXd stackedRhs(const std::deque<LinearStage>& stages, bool equality) {
  int rows = 0;
  for (const auto& s : stages) rows += equality ? s.numEqualities() : s.numInequalities();
  Eigen::VectorXd out(rows);
  int row = 0;
  for (const auto& s : stages) {
    const Eigen::VectorXd& v = equality ? s.e : s.h;
    out.segment(row, v.size()) = v;
    row += v.size();
  }
  return out;
}

}  // namespace

ArrivalCost ArrivalCost::fromCovariance(const Eigen::VectorXd& mean,
                                        const Eigen::MatrixXd& covariance) {
  if (covariance.rows() != mean.size() || covariance.cols() != mean.size())
    throw ContractError("arrival cost: covariance dimension mismatch");
  ArrivalCost a;
  a.mean = mean;
  a.information = symmetricInverse(covariance);
  a.information = 0.5 * (a.information + a.information.transpose());
  return a;
}

void LinearStage::validate(int D) const {
  auto check = [](bool ok, const char* what) {
    if (!ok) throw ContractError(std::string("linear stage: ") + what);
  };
  check(A.rows() == D && A.cols() == D && b.size() == D, "transition dimensions");
  check(Q.rows() == D && Q.cols() == D, "process covariance dimensions");
  check(H.rows() == y.size() && (y.size() == 0 || H.cols() == D), "measurement dimensions");
  check(R.rows() == y.size() && R.cols() == y.size(), "measurement covariance dimensions");
  check(E.rows() == e.size() && (e.size() == 0 || E.cols() == D), "equality dimensions");
  check(G.rows() == h.size() && (h.size() == 0 || G.cols() == D), "inequality dimensions");
  if (relative) {
    const auto& r = *relative;
    const auto m = r.y.size();
    check(r.L_cur.rows() == m && r.L_next.rows() == m && r.L_cur.cols() == D &&
              r.L_next.cols() == D && r.R.rows() == m && r.R.cols() == m,
          "relative measurement dimensions");
  }
}

QpProblem buildWindowQp(const std::deque<LinearStage>& stages, const ArrivalCost& arrival) {
  if (stages.empty()) throw ContractError("window: no stages");
  const int D = stages.front().dim();
  if (arrival.dim() != D || arrival.information.rows() != D)
    throw ContractError("window: arrival cost dimension mismatch");
  for (const auto& s : stages) s.validate(D);

  const int N = static_cast<int>(stages.size());
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(N * D, N * D);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(N * D);
  addResidual(H, c, 0, Eigen::MatrixXd::Identity(D, D), arrival.mean, arrival.information);
  for (int k = 0; k < N; ++k) {
    addMeasurements(H, c, k * D, stages[k]);
    if (k + 1 < N) addTransition(H, c, k * D, stages[k]);
  }

  QpProblem p;
  const Eigen::MatrixXd Hs = 0.5 * (H + H.transpose());
  p.H = Hs.sparseView();
  p.c = c;
  p.A_eq = blockDiagonalRows(stages, true, D);
  p.b_eq = stackedRhs(stages, true);
  p.A_in = blockDiagonalRows(stages, false, D);
  p.b_in = stackedRhs(stages, false);
  return p;
}

ArrivalCost marginalizeArrivalCost(const LinearStage& oldest, const ArrivalCost& prior,
                                   double eps) {
  const int D = oldest.dim();
  oldest.validate(D);
  if (prior.dim() != D) throw ContractError("marginalize: arrival cost dimension mismatch");

  Eigen::MatrixXd Hz = Eigen::MatrixXd::Zero(2 * D, 2 * D);
  Eigen::VectorXd cz = Eigen::VectorXd::Zero(2 * D);
  addResidual(Hz, cz, 0, Eigen::MatrixXd::Identity(D, D), prior.mean, prior.information);
  addMeasurements(Hz, cz, 0, oldest);
  addTransition(Hz, cz, 0, oldest);

  // KKT of the eliminated block: [H00 E^T; E 0] [x0; lambda] = d - B x1.
  const int ne = oldest.numEqualities();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(D + ne, D + ne);
  K.topLeftCorner(D, D) = Hz.topLeftCorner(D, D);
  if (ne) {
    K.bottomLeftCorner(ne, D) = oldest.E;
    K.topRightCorner(D, ne) = oldest.E.transpose();
  }
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(D + ne, D);
  B.topRows(D) = Hz.topRightCorner(D, D);
  Eigen::VectorXd d(D + ne);
  d.head(D) = -cz.head(D);
  if (ne) d.tail(ne) = oldest.e;

  ArrivalCost out;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
  if (!lu.isInvertible()) {
    K.topLeftCorner(D, D) += eps * Eigen::MatrixXd::Identity(D, D);
    if (ne) K.bottomRightCorner(ne, ne) -= eps * Eigen::MatrixXd::Identity(ne, ne);
    lu.compute(K);
    out.regularized = true;
  }
  const Eigen::MatrixXd KinvB = lu.solve(B);
  const Eigen::VectorXd Kinvd = lu.solve(d);
  Eigen::MatrixXd info = Hz.bottomRightCorner(D, D) - B.transpose() * KinvB;
  info = 0.5 * (info + info.transpose());
  const Eigen::VectorXd grad = cz.tail(D) + B.transpose() * Kinvd;

  // Minimizer of 1/2 x^T info x + grad^T x; pseudo-inverse if info is rank deficient.
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.rcond() > 1e-14) {
    out.mean = ldlt.solve(-grad);
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double tol = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(D);
    for (int i = 0; i < D; ++i)
      if (ev(i) > tol) inv(i) = 1.0 / ev(i);
    out.mean = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose() * (-grad);
  }
  out.information = info;
  return out;
}

MovingHorizon::MovingHorizon(int window_size, ArrivalCost initial, QpSettings settings)
    : window_size_(window_size), arrival_(std::move(initial)), settings_(std::move(settings)) {
  if (window_size_ < 1) throw ContractError("moving horizon: window size must be >= 1");
  if (arrival_.information.rows() != arrival_.dim() || arrival_.information.cols() != arrival_.dim())
    throw ContractError("moving horizon: arrival cost dimension mismatch");
}

void MovingHorizon::push(LinearStage stage) {
  stage.validate(arrival_.dim());
  stages_.push_back(std::move(stage));
}

const QpSolution& MovingHorizon::solve() {
  if (stages_.empty()) throw ContractError("moving horizon: no stages to solve");
  while (static_cast<int>(stages_.size()) > window_size_) {
    const bool regularized = arrival_.regularized;
    arrival_ = marginalizeArrivalCost(stages_.front(), arrival_);
    arrival_.regularized = arrival_.regularized || regularized;
    stages_.pop_front();
    ++dropped_since_solve_;
  }

  problem_ = buildWindowQp(stages_, arrival_);
  const int D = arrival_.dim();
  const int N = size();

  QpWarmStart warm;
  const QpWarmStart* warm_ptr = nullptr;
  if (have_solution_) {
    warm.x.resize(N * D);
    warm.y_eq = Eigen::VectorXd::Zero(problem_.b_eq.size());
    warm.y_in = Eigen::VectorXd::Zero(problem_.b_in.size());
    const int old_count = static_cast<int>(last_eq_rows_.size());
    int old_eq = 0, old_in = 0;
    for (int j = 0; j < std::min(dropped_since_solve_, old_count); ++j) {
      old_eq += last_eq_rows_[j];
      old_in += last_in_rows_[j];
    }
    int eq = 0, in = 0;
    for (int i = 0; i < N; ++i) {
      const int j = i + dropped_since_solve_;
      const LinearStage& s = stages_[i];
      if (j < old_count) {
        warm.x.segment(i * D, D) = solution_.x.segment(j * D, D);
        if (last_eq_rows_[j] == s.numEqualities())
          warm.y_eq.segment(eq, s.numEqualities()) = solution_.y_eq.segment(old_eq, s.numEqualities());
        if (last_in_rows_[j] == s.numInequalities())
          warm.y_in.segment(in, s.numInequalities()) =
              solution_.y_in.segment(old_in, s.numInequalities());
        old_eq += last_eq_rows_[j];
        old_in += last_in_rows_[j];
      } else if (i > 0) {
        const LinearStage& prev = stages_[i - 1];
        warm.x.segment(i * D, D) = prev.A * warm.x.segment((i - 1) * D, D) + prev.b;
      } else {
        warm.x.segment(0, D) = arrival_.mean;
      }
      eq += s.numEqualities();
      in += s.numInequalities();
    }
    warm_ptr = &warm;
  }

  solution_ = solveQp(problem_, settings_, warm_ptr);
  last_eq_rows_.clear();
  last_in_rows_.clear();
  for (const auto& s : stages_) {
    last_eq_rows_.push_back(s.numEqualities());
    last_in_rows_.push_back(s.numInequalities());
  }
  dropped_since_solve_ = 0;
  have_solution_ = solution_.status == QpStatus::solved;
  return solution_;
}

Eigen::VectorXd MovingHorizon::newest() const {
  const int D = arrival_.dim();
  if (solution_.x.size() < D) throw ContractError("moving horizon: no solution yet");
  return solution_.x.tail(D);
}

}  // namespace grfest
