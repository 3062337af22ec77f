#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "grfest/qp/qp_solver.hpp"

namespace grfest::testing {

inline SparseMatrix sparse(const Eigen::MatrixXd& dense) { return dense.sparseView(); }

inline QpProblem makeProblem(const Eigen::MatrixXd& H, const Eigen::VectorXd& c,
                      const Eigen::MatrixXd& Aeq, const Eigen::VectorXd& beq,
                      const Eigen::MatrixXd& Ain, const Eigen::VectorXd& bin) {
  QpProblem p;
  p.H = sparse(H);
  p.c = c;
  p.A_eq = sparse(Aeq);
  p.b_eq = beq;
  p.A_in = sparse(Ain);
  p.b_in = bin;
  return p;
}

struct DenseSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd mu;
  bool found = false;
};

// Enumerates all inequality active sets and returns the KKT point that is
// primal and dual feasible (unique for strictly convex problems).
inline DenseSolution activeSetOracle(const Eigen::MatrixXd& H, const Eigen::VectorXd& c,
                              const Eigen::MatrixXd& Aeq, const Eigen::VectorXd& beq,
                              const Eigen::MatrixXd& Ain, const Eigen::VectorXd& bin) {
  const int n = H.rows(), me = Aeq.rows(), mi = Ain.rows();
  DenseSolution best;
  for (unsigned mask = 0; mask < (1u << mi); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < mi; ++i)
      if (mask & (1u << i)) act.push_back(i);
    const int k = me + static_cast<int>(act.size());
    if (k > n) continue;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd rhs(n + k);
    K.topLeftCorner(n, n) = H;
    rhs.head(n) = -c;
    for (int r = 0; r < k; ++r) {
      const Eigen::RowVectorXd row = r < me ? Eigen::RowVectorXd(Aeq.row(r))
                                            : Eigen::RowVectorXd(Ain.row(act[r - me]));
      K.block(n + r, 0, 1, n) = row;
      K.block(0, n + r, n, 1) = row.transpose();
      rhs(n + r) = r < me ? beq(r) : bin(act[r - me]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (lu.rank() < n + k) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd x = sol.head(n);
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(mi);
    for (std::size_t r = 0; r < act.size(); ++r) mu(act[r]) = sol(n + me + r);
    if (mi && (Ain * x - bin).maxCoeff() > 1e-9) continue;
    if (mi && mu.minCoeff() < -1e-9) continue;
    best.x = x;
    best.mu = mu;
    best.found = true;
    return best;
  }
  return best;
}

struct RandomQp {
  Eigen::MatrixXd H, Aeq, Ain;
  Eigen::VectorXd c, beq, bin;
};

inline RandomQp randomQp(std::mt19937_64& rng, int n, int me, int mi) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto mat = [&](int r, int c) {
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = g(rng);
    return m;
  };
  RandomQp q;
  const Eigen::MatrixXd L = mat(n, n);
  q.H = L * L.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
  q.c = mat(n, 1);
  q.Aeq = mat(me, n);
  q.Ain = mat(mi, n);
  // Feasible by construction around a random point.
  const Eigen::VectorXd x0 = mat(n, 1);
  q.beq = q.Aeq * x0;
  q.bin = q.Ain * x0 + Eigen::VectorXd(mat(mi, 1)).cwiseAbs() * 0.5;
  for (int i = 0; i < mi; ++i)
    if (u(rng) < 0.3) q.bin(i) = (q.Ain * x0)(i);
  return q;
}

}  // namespace grfest::testing
