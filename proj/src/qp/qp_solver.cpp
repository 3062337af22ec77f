#include "grfest/qp/qp_solver.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

#include "grfest/contract_error.hpp"

namespace grfest {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinScale = 1e-4;
constexpr double kMaxScale = 1e4;
constexpr double kEqualityRhoFactor = 1e3;
constexpr double kPolishDelta = 1e-10;
constexpr int kPolishRefine = 5;
constexpr int kPolishRetries = 4;

double infNorm(const Eigen::VectorXd& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

Eigen::VectorXd columnInfNorms(const SparseMatrix& M) {
  Eigen::VectorXd norms = Eigen::VectorXd::Zero(M.cols());
  for (int j = 0; j < M.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(M, j); it; ++it)
      norms(j) = std::max(norms(j), std::abs(it.value()));
  return norms;
}

Eigen::VectorXd rowInfNorms(const SparseMatrix& M) {
  Eigen::VectorXd norms = Eigen::VectorXd::Zero(M.rows());
  for (int j = 0; j < M.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(M, j); it; ++it)
      norms(it.row()) = std::max(norms(it.row()), std::abs(it.value()));
  return norms;
}

Eigen::VectorXd scaleFactors(const Eigen::VectorXd& norms) {
  Eigen::VectorXd s(norms.size());
  for (int i = 0; i < norms.size(); ++i) {
    const double v = norms(i) < kMinScale ? 1.0 : std::min(norms(i), kMaxScale);
    s(i) = 1.0 / std::sqrt(v);
  }
  return s;
}

void scaleInPlace(SparseMatrix& M, const Eigen::VectorXd& rows, const Eigen::VectorXd& cols) {
  for (int j = 0; j < M.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(M, j); it; ++it) it.valueRef() *= rows(it.row()) * cols(j);
}

// Problem in OSQP form l <= A x <= u after Ruiz equilibration:
//   P = c D H D,  q = c D c,  A = E [A_eq; A_in] D.
struct ScaledProblem {
  int n = 0;
  int m_eq = 0;
  int m = 0;
  SparseMatrix P, A, At;
  Eigen::VectorXd q, l, u;
  Eigen::VectorXd D, E;
  double cost = 1.0;
};

SparseMatrix stackRows(const SparseMatrix& top, const SparseMatrix& bottom, int cols) {
  SparseMatrix out(top.rows() + bottom.rows(), cols);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(top.nonZeros() + bottom.nonZeros());
  for (int j = 0; j < top.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(top, j); it; ++it)
      trip.emplace_back(it.row(), j, it.value());
  for (int j = 0; j < bottom.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(bottom, j); it; ++it)
      trip.emplace_back(top.rows() + it.row(), j, it.value());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

ScaledProblem scaleProblem(const QpProblem& p, int iterations) {
  ScaledProblem s;
  s.n = p.numVariables();
  s.m_eq = static_cast<int>(p.b_eq.size());
  s.m = s.m_eq + static_cast<int>(p.b_in.size());
  s.P = p.H;
  s.q = p.c;
  s.A = stackRows(p.A_eq, p.A_in, s.n);
  s.l.resize(s.m);
  s.u.resize(s.m);
  s.l << p.b_eq, Eigen::VectorXd::Constant(p.b_in.size(), -kInf);
  s.u << p.b_eq, p.b_in;
  s.D = Eigen::VectorXd::Ones(s.n);
  s.E = Eigen::VectorXd::Ones(s.m);

  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd col = columnInfNorms(s.P).cwiseMax(columnInfNorms(s.A));
    const Eigen::VectorXd dD = scaleFactors(col);
    const Eigen::VectorXd dE = scaleFactors(rowInfNorms(s.A));
    scaleInPlace(s.P, dD, dD);
    scaleInPlace(s.A, dE, dD);
    s.q = dD.cwiseProduct(s.q);
    s.D = s.D.cwiseProduct(dD);
    s.E = s.E.cwiseProduct(dE);

    const double mean_col = s.n ? columnInfNorms(s.P).mean() : 0.0;
    double norm = std::max(mean_col, infNorm(s.q));
    norm = norm < kMinScale ? 1.0 : std::min(norm, kMaxScale);
    s.P *= 1.0 / norm;
    s.q *= 1.0 / norm;
    s.cost /= norm;
  }
  for (int i = 0; i < s.m; ++i) {
    if (std::isfinite(s.l(i))) s.l(i) *= s.E(i);
    if (std::isfinite(s.u(i))) s.u(i) *= s.E(i);
  }
  s.At = s.A.transpose();
  return s;
}

struct Iterate {
  Eigen::VectorXd x, z, y;
};

struct Unscaled {
  Eigen::VectorXd x, y_eq, y_in;
};

Unscaled unscale(const ScaledProblem& s, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  Unscaled out;
  out.x = s.D.cwiseProduct(x);
  const Eigen::VectorXd yu = s.E.cwiseProduct(y) / s.cost;
  out.y_eq = yu.head(s.m_eq);
  out.y_in = yu.tail(s.m - s.m_eq);
  return out;
}

struct Tolerances {
  double primal = 0.0, dual = 0.0;
  double primal_tol = 0.0, dual_tol = 0.0;
};

Tolerances residuals(const ScaledProblem& s, const Iterate& it, const QpSettings& settings) {
  const Eigen::VectorXd Einv = s.E.cwiseInverse();
  const Eigen::VectorXd Dinv = s.D.cwiseInverse();
  const Eigen::VectorXd Ax = s.A * it.x;
  const Eigen::VectorXd Px = s.P * it.x;
  const Eigen::VectorXd Aty = s.At * it.y;
  Tolerances t;
  t.primal = infNorm(Einv.cwiseProduct(Ax - it.z));
  t.dual = infNorm(Dinv.cwiseProduct(Px + s.q + Aty)) / s.cost;
  t.primal_tol = settings.eps_abs + settings.eps_rel * std::max(infNorm(Einv.cwiseProduct(Ax)),
                                                                 infNorm(Einv.cwiseProduct(it.z)));
  t.dual_tol = settings.eps_abs +
               settings.eps_rel / s.cost *
                   std::max({infNorm(Dinv.cwiseProduct(Px)), infNorm(Dinv.cwiseProduct(Aty)),
                             infNorm(Dinv.cwiseProduct(s.q))});
  return t;
}

// Primal infeasibility certificate on the change of the dual iterate.
bool primalInfeasible(const ScaledProblem& s, Eigen::VectorXd dy, double eps) {
  for (int i = 0; i < s.m; ++i) {
    if (!std::isfinite(s.u(i))) dy(i) = std::min(dy(i), 0.0);
    if (!std::isfinite(s.l(i))) dy(i) = std::max(dy(i), 0.0);
  }
  const Eigen::VectorXd Edy = s.E.cwiseProduct(dy);
  const double norm = infNorm(Edy);
  if (norm < 1e-30) return false;
  const double stationarity = infNorm(s.D.cwiseInverse().cwiseProduct(s.At * dy));
  if (stationarity > eps * norm) return false;
  double support = 0.0;
  for (int i = 0; i < s.m; ++i) {
    if (dy(i) > 0.0) support += s.u(i) * dy(i);
    if (dy(i) < 0.0) support += s.l(i) * dy(i);
  }
  return support < -eps * norm;
}

class Admm {
 public:
  Admm(const ScaledProblem& s, const QpSettings& settings) : s_(s), settings_(settings) {
    rho_ = settings_.rho;
    I_.resize(s_.n, s_.n);
    I_.setIdentity();
    refactor(true);
  }

  bool ok() const { return ok_; }

  void setRho(double rho) {
    rho_ = std::clamp(rho, 1e-6, 1e6);
    refactor(false);
  }
  double rho() const { return rho_; }

  // One ADMM iteration; returns the change of the dual iterate.
  Eigen::VectorXd iterate(Iterate& it) const {
    const Eigen::VectorXd rhs =
        settings_.sigma * it.x - s_.q + s_.At * (rho_vec_.cwiseProduct(it.z) - it.y);
    const Eigen::VectorXd x_tilde = llt_.solve(rhs);
    const Eigen::VectorXd z_tilde = s_.A * x_tilde;
    const double a = settings_.alpha;
    it.x = a * x_tilde + (1.0 - a) * it.x;
    const Eigen::VectorXd z_hat = a * z_tilde + (1.0 - a) * it.z;
    const Eigen::VectorXd z_new =
        (z_hat + it.y.cwiseQuotient(rho_vec_)).cwiseMax(s_.l).cwiseMin(s_.u);
    const Eigen::VectorXd dy = rho_vec_.cwiseProduct(z_hat - z_new);
    it.y += dy;
    it.z = z_new;
    return dy;
  }

 private:
  void refactor(bool analyze) {
    rho_vec_.resize(s_.m);
    for (int i = 0; i < s_.m; ++i)
      rho_vec_(i) = i < s_.m_eq ? kEqualityRhoFactor * rho_ : rho_;
    const SparseMatrix RA = rho_vec_.asDiagonal() * s_.A;
    SparseMatrix K = s_.P + settings_.sigma * I_ + SparseMatrix(s_.At * RA);
    if (analyze) llt_.analyzePattern(K);
    llt_.factorize(K);
    ok_ = llt_.info() == Eigen::Success;
  }

  const ScaledProblem& s_;
  const QpSettings& settings_;
  double rho_ = 0.1;
  Eigen::VectorXd rho_vec_;
  SparseMatrix I_;
  Eigen::SimplicialLLT<SparseMatrix> llt_;
  bool ok_ = false;
};

bool kktAcceptable(const QpProblem& p, const Unscaled& sol, const QpSettings& settings) {
  const KktResiduals r = kktResiduals(p, sol.x, sol.y_eq, sol.y_in);
  const double stat_scale = std::max({infNorm(p.H * sol.x), infNorm(p.c),
                                      infNorm(p.A_eq.transpose() * sol.y_eq),
                                      infNorm(p.A_in.transpose() * sol.y_in)});
  const double feas_scale = std::max({infNorm(p.b_eq), infNorm(p.b_in),
                                      infNorm(p.A_eq * sol.x), infNorm(p.A_in * sol.x)});
  const double tol_stat = settings.eps_abs + settings.eps_rel * stat_scale;
  const double tol_feas = settings.eps_abs + settings.eps_rel * feas_scale;
  return sol.x.allFinite() && sol.y_eq.allFinite() && sol.y_in.allFinite() &&
         r.stationarity <= tol_stat && r.equality <= tol_feas && r.inequality <= tol_feas &&
         r.dual_sign <= settings.eps_abs && r.complementarity <= tol_feas;
}

// Solves the equality-constrained problem on the guessed active set (in the
// scaled space), verifies it on the original problem, and corrects the guess
// a few times (drop rows with negative multipliers, add violated rows).
std::optional<Unscaled> polish(const QpProblem& problem, const ScaledProblem& s,
                               std::vector<bool> active, const QpSettings& settings) {
  const int n = s.n;
  for (int attempt = 0; attempt <= kPolishRetries; ++attempt) {
    std::vector<int> rows;
    for (int i = 0; i < s.m; ++i)
      if (i < s.m_eq || active[i]) rows.push_back(i);
    const int k = static_cast<int>(rows.size());

    std::vector<Eigen::Triplet<double>> trip;
    std::vector<Eigen::Triplet<double>> trip_exact;
    for (int j = 0; j < n; ++j)
      for (SparseMatrix::InnerIterator it(s.P, j); it; ++it)
        trip_exact.emplace_back(it.row(), j, it.value());
    Eigen::VectorXi row_of(s.m);
    row_of.setConstant(-1);
    for (int r = 0; r < k; ++r) row_of(rows[r]) = r;
    for (int j = 0; j < n; ++j)
      for (SparseMatrix::InnerIterator it(s.A, j); it; ++it) {
        const int r = row_of(it.row());
        if (r < 0) continue;
        trip_exact.emplace_back(n + r, j, it.value());
        trip_exact.emplace_back(j, n + r, it.value());
      }
    trip = trip_exact;
    for (int j = 0; j < n; ++j) trip.emplace_back(j, j, kPolishDelta);
    for (int r = 0; r < k; ++r) trip.emplace_back(n + r, n + r, -kPolishDelta);

    SparseMatrix K(n + k, n + k), K0(n + k, n + k);
    K.setFromTriplets(trip.begin(), trip.end());
    K0.setFromTriplets(trip_exact.begin(), trip_exact.end());
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(K);
    if (ldlt.info() != Eigen::Success) return std::nullopt;

    Eigen::VectorXd rhs(n + k);
    rhs.head(n) = -s.q;
    for (int r = 0; r < k; ++r) rhs(n + r) = s.u(rows[r]);
    Eigen::VectorXd sol = ldlt.solve(rhs);
    for (int i = 0; i < kPolishRefine; ++i) sol += ldlt.solve(rhs - K0 * sol);
    if (!sol.allFinite()) return std::nullopt;

    Eigen::VectorXd y = Eigen::VectorXd::Zero(s.m);
    for (int r = 0; r < k; ++r) y(rows[r]) = sol(n + r);
    Unscaled cand = unscale(s, sol.head(n), y);
    if (kktAcceptable(problem, cand, settings)) return cand;

    // Correct the active-set guess on the original problem.
    bool changed = false;
    const Eigen::VectorXd slack =
        problem.b_in.size() ? Eigen::VectorXd(problem.A_in * cand.x - problem.b_in)
                            : Eigen::VectorXd();
    for (int i = 0; i < static_cast<int>(problem.b_in.size()); ++i) {
      const int row = s.m_eq + i;
      if (active[row] && cand.y_in(i) < -settings.eps_abs) {
        active[row] = false;
        changed = true;
      } else if (!active[row] && slack(i) > settings.eps_abs) {
        active[row] = true;
        changed = true;
      }
    }
    if (!changed) return std::nullopt;
  }
  return std::nullopt;
}

std::vector<bool> guessActive(const ScaledProblem& s, const Iterate& it) {
  std::vector<bool> active(s.m, false);
  for (int i = s.m_eq; i < s.m; ++i) active[i] = s.u(i) - it.z(i) < it.y(i);
  return active;
}

}  // namespace

const char* toString(QpStatus status) {
  switch (status) {
    case QpStatus::solved: return "solved";
    case QpStatus::max_iter: return "max_iter";
    case QpStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

double KktResiduals::max() const {
  return std::max({stationarity, equality, inequality, dual_sign, complementarity});
}

void QpProblem::validate() const {
  const int n = numVariables();
  if (H.rows() != n || H.cols() != n) throw ContractError("qp: H must be n x n");
  if (A_eq.cols() != n || A_eq.rows() != b_eq.size())
    throw ContractError("qp: equality constraint dimensions");
  if (A_in.cols() != n || A_in.rows() != b_in.size())
    throw ContractError("qp: inequality constraint dimensions");
  if (!c.allFinite() || !b_eq.allFinite() || !b_in.allFinite())
    throw ContractError("qp: vectors must be finite");
  const SparseMatrix asym = H - SparseMatrix(H.transpose());
  double scale = 0.0;
  for (int j = 0; j < H.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(H, j); it; ++it) {
      if (!std::isfinite(it.value())) throw ContractError("qp: H must be finite");
      scale = std::max(scale, std::abs(it.value()));
    }
  for (int j = 0; j < asym.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(asym, j); it; ++it)
      if (std::abs(it.value()) > 1e-12 * std::max(1.0, scale))
        throw ContractError("qp: H must be symmetric");
  if (n == 0) return;
  SparseMatrix shifted = H;
  SparseMatrix I(n, n);
  I.setIdentity();
  shifted += (1e-9 * std::max(1.0, scale)) * I;
  Eigen::SimplicialLLT<SparseMatrix> llt(shifted);
  if (llt.info() != Eigen::Success) throw ContractError("qp: H must be positive semidefinite");
}

KktResiduals kktResiduals(const QpProblem& p, const Eigen::VectorXd& x, const Eigen::VectorXd& y_eq,
                          const Eigen::VectorXd& y_in) {
  KktResiduals r;
  Eigen::VectorXd grad = p.H * x + p.c;
  if (y_eq.size()) grad += p.A_eq.transpose() * y_eq;
  if (y_in.size()) grad += p.A_in.transpose() * y_in;
  r.stationarity = infNorm(grad);
  if (p.b_eq.size()) r.equality = infNorm(p.A_eq * x - p.b_eq);
  if (p.b_in.size()) {
    const Eigen::VectorXd slack = p.A_in * x - p.b_in;
    r.inequality = std::max(0.0, slack.maxCoeff());
    r.dual_sign = std::max(0.0, -y_in.minCoeff());
    r.complementarity = infNorm(y_in.cwiseProduct(slack));
  }
  return r;
}

QpSolution solveQp(const QpProblem& problem, const QpSettings& settings,
                   const QpWarmStart* warm_start) {
  problem.validate();
  if (!(settings.eps_abs >= 0.0) || !(settings.eps_rel >= 0.0) || settings.max_iter < 0 ||
      !(settings.rho > 0.0) || !(settings.sigma > 0.0) || !(settings.alpha > 0.0 && settings.alpha < 2.0) ||
      settings.check_interval < 1 || settings.polish_interval < 1)
    throw ContractError("qp: invalid settings");
  if (!settings.dump_path.empty()) dumpProblem(problem, settings.dump_path);

  const ScaledProblem s = scaleProblem(problem, settings.scaling_iters);
  QpSolution out;
  auto finish = [&](const Unscaled& u, QpStatus status, int iter, bool polished) {
    out.x = u.x;
    out.y_eq = u.y_eq;
    out.y_in = u.y_in;
    out.status = status;
    out.iterations = iter;
    out.polished = polished;
    const KktResiduals r = kktResiduals(problem, u.x, u.y_eq, u.y_in);
    out.primal_residual = std::max(r.equality, r.inequality);
    out.dual_residual = r.stationarity;
    return out;
  };

  Iterate it;
  it.x = Eigen::VectorXd::Zero(s.n);
  it.y = Eigen::VectorXd::Zero(s.m);
  const bool warm = warm_start && warm_start->x.size() == s.n &&
                    warm_start->y_eq.size() == s.m_eq && warm_start->y_in.size() == s.m - s.m_eq;
  if (warm) {
    it.x = s.D.cwiseInverse().cwiseProduct(warm_start->x);
    Eigen::VectorXd y(s.m);
    y << warm_start->y_eq, warm_start->y_in;
    it.y = s.cost * s.E.cwiseInverse().cwiseProduct(y);
  }
  it.z = (s.A * it.x).cwiseMax(s.l).cwiseMin(s.u);

  if (settings.polish) {
    if (auto p = polish(problem, s, guessActive(s, it), settings))
      return finish(*p, QpStatus::solved, 0, true);
  }

  Admm admm(s, settings);
  if (!admm.ok()) throw std::runtime_error("qp: reduced system factorization failed");

  for (int k = 1; k <= settings.max_iter; ++k) {
    const Eigen::VectorXd dy = admm.iterate(it);
    const bool check = k % settings.check_interval == 0 || k == settings.max_iter;
    if (check) {
      const Tolerances t = residuals(s, it, settings);
      if (t.primal <= t.primal_tol && t.dual <= t.dual_tol) {
        if (settings.polish) {
          if (auto p = polish(problem, s, guessActive(s, it), settings))
            return finish(*p, QpStatus::solved, k, true);
        }
        return finish(unscale(s, it.x, it.y), QpStatus::solved, k, false);
      }
      if (primalInfeasible(s, dy, settings.eps_infeasible)) {
        Unscaled u = unscale(s, it.x, it.y);
        return finish(u, QpStatus::infeasible, k, false);
      }
      if (settings.adaptive_rho && k % settings.polish_interval == 0) {
        // Balance the relative primal and dual residuals in the scaled space.
        const Eigen::VectorXd Ax = s.A * it.x;
        const double prim_scale = std::max({infNorm(Ax), infNorm(it.z), 1e-12});
        const double dual_scale = std::max(
            {infNorm(s.P * it.x), infNorm(s.At * it.y), infNorm(s.q), 1e-12});
        const double prim = infNorm(Ax - it.z) / prim_scale;
        const double dual = infNorm(s.P * it.x + s.q + s.At * it.y) / dual_scale;
        const double ratio = std::sqrt(prim / std::max(dual, 1e-30));
        if (ratio > 5.0 || ratio < 0.2) {
          admm.setRho(admm.rho() * ratio);
          if (!admm.ok()) throw std::runtime_error("qp: reduced system factorization failed");
        }
      }
    }
    if (settings.polish && k % settings.polish_interval == 0) {
      if (auto p = polish(problem, s, guessActive(s, it), settings))
        return finish(*p, QpStatus::solved, k, true);
    }
  }
  return finish(unscale(s, it.x, it.y), QpStatus::max_iter, settings.max_iter, false);
}

void dumpProblem(const QpProblem& problem, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("qp: cannot open dump file " + path);
  os.precision(17);
  auto matrix = [&](const char* name, const SparseMatrix& M) {
    os << "%% " << name << ' ' << M.rows() << ' ' << M.cols() << ' ' << M.nonZeros() << '\n';
    for (int j = 0; j < M.outerSize(); ++j)
      for (SparseMatrix::InnerIterator it(M, j); it; ++it)
        os << it.row() + 1 << ' ' << j + 1 << ' ' << it.value() << '\n';
  };
  auto vector = [&](const char* name, const Eigen::VectorXd& v) {
    os << "%% " << name << ' ' << v.size() << '\n';
    for (int i = 0; i < v.size(); ++i) os << i + 1 << ' ' << v(i) << '\n';
  };
  matrix("H", problem.H);
  vector("c", problem.c);
  matrix("A_eq", problem.A_eq);
  vector("b_eq", problem.b_eq);
  matrix("A_in", problem.A_in);
  vector("b_in", problem.b_in);
}

}  // namespace grfest
