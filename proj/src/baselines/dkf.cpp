#include "grfest/baselines/dkf.hpp"

#include <Eigen/Eigenvalues>
#include <chrono>

#include "grfest/contract_error.hpp"

namespace grfest {

Dkf::Dkf(RobotModel model, NoiseModel noise, double rate_hz, const EstimatorState& initial)
    : model_(std::move(model)),
      noise_(noise),
      layout_(model_),
      x_(initial.pack()),
      P_(noise.priorCovariance(layout_)),
      vo_(1.0 / rate_hz) {
  noise_.validate();
  if (!(rate_hz > 0.0)) throw ContractError("dkf: rate must be positive");
  if (x_.size() != layout_.dim()) throw ContractError("dkf: initial state dimension");
  options_.dt = 1.0 / rate_hz;
  options_.constraints = false;
}

EstimateOut Dkf::step(const TickInput& input) {
  const auto start = std::chrono::steady_clock::now();
  const int D = layout_.dim();
  if (tick_ == 0) vo_ = VoInterpolator(options_.dt, input.t);
  const long tick = tick_++;
  LinearStage stage = buildTickStage(model_, input, x_.segment<2>(StateLayout::velocity), noise_,
                                     options_);

  std::optional<RelativeMeasurement> vo;
  if (input.vo)
    for (const VoTickDisplacement& d : vo_.add(*input.vo))
      if (prev_stage_ && d.tick == tick - 1)
        vo = voMeasurement(layout_, prev_pitch_, d.displacement, noise_);

  // Augmented state z = [x_k; x_{k-1}] so the VO residual can couple both.
  Eigen::VectorXd z(2 * D);
  Eigen::MatrixXd Pz(2 * D, 2 * D);
  if (prev_stage_) {
    const Eigen::MatrixXd& A = prev_stage_->A;
    const Eigen::MatrixXd AP = A * P_;
    z << A * x_ + prev_stage_->b, x_;
    Pz << AP * A.transpose() + prev_stage_->Q, AP, AP.transpose(), P_;
  } else {
    z << x_, x_;
    Pz << P_, P_, P_, P_;
  }

  const int my = static_cast<int>(stage.y.size());
  const int mv = vo ? 2 : 0;
  Eigen::MatrixXd Hz = Eigen::MatrixXd::Zero(my + mv, 2 * D);
  Eigen::VectorXd y(my + mv);
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(my + mv, my + mv);
  Hz.topLeftCorner(my, D) = stage.H;
  y.head(my) = stage.y;
  R.topLeftCorner(my, my) = stage.R;
  if (vo) {
    Hz.block(my, 0, 2, D) = vo->L_next;
    Hz.block(my, D, 2, D) = vo->L_cur;
    y.tail(2) = vo->y;
    R.bottomRightCorner(2, 2) = vo->R;
  }

  if (my + mv > 0) {
    const Eigen::MatrixXd PHt = Pz * Hz.transpose();
    const Eigen::MatrixXd S = Hz * PHt + R;
    const Eigen::MatrixXd K = S.ldlt().solve(PHt.transpose()).transpose();
    z += K * (y - Hz * z);
    const Eigen::MatrixXd IKH = Eigen::MatrixXd::Identity(2 * D, 2 * D) - K * Hz;
    Pz = IKH * Pz * IKH.transpose() + K * R * K.transpose();
  }

  x_ = z.head(D);
  P_ = 0.5 * (Pz.topLeftCorner(D, D) + Pz.topLeftCorner(D, D).transpose());
  clamped_ = false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P_);
  if (es.eigenvalues().minCoeff() < 0.0) {
    const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(1e-12);
    P_ = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    clamped_ = true;
  }
  prev_stage_ = std::move(stage);
  prev_pitch_ = input.pitch;

  EstimateOut out;
  out.t = input.t;
  out.state = EstimatorState::unpack(layout_, x_);
  out.status = "filter";
  out.solve_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace grfest
