#include "grfest/mhe/mhe_estimator.hpp"

#include <algorithm>
#include <chrono>

#include "grfest/contract_error.hpp"

namespace grfest {

MheEstimator::MheEstimator(RobotModel model, NoiseModel noise, MheOptions options,
                           const EstimatorState& initial)
    : model_(std::move(model)),
      noise_(noise),
      options_(std::move(options)),
      layout_(model_),
      window_(options_.window_size,
              ArrivalCost::fromCovariance(initial.pack(), noise.priorCovariance(StateLayout(model_))),
              options_.qp),
      vo_(1.0 / options_.rate_hz) {
  noise_.validate();
  if (!(options_.rate_hz > 0.0)) throw ContractError("mhe: rate must be positive");
  if (initial.pack().size() != layout_.dim()) throw ContractError("mhe: initial state dimension");
  model_options_.dt = 1.0 / options_.rate_hz;
  model_options_.constraints = options_.constraints;
  model_options_.slippery = options_.slippery;
  last_ = initial.pack();
}

EstimateOut MheEstimator::step(const TickInput& input) {
  const auto start = std::chrono::steady_clock::now();
  if (!started_) {
    vo_ = VoInterpolator(model_options_.dt, input.t);
    started_ = true;
  }
  const long tick = next_tick_++;
  const Eigen::Vector2d v_hat = last_.segment<2>(StateLayout::velocity);
  window_.push(buildTickStage(model_, input, v_hat, noise_, model_options_));
  ticks_.push_back(tick);
  pitches_.push_back(input.pitch);
  contacts_.push_back(input.contact);

  if (input.vo) {
    for (const VoTickDisplacement& d : vo_.add(*input.vo)) {
      // Transition d.tick -> d.tick + 1 must lie inside the buffer.
      for (int i = 0; i + 1 < window_.size(); ++i) {
        if (ticks_[i] != d.tick) continue;
        window_.stage(i).relative = voMeasurement(layout_, pitches_[i], d.displacement, noise_);
      }
    }
  }

  const QpSolution& sol = window_.solve();
  const int drop = static_cast<int>(ticks_.size()) - window_.size();
  ticks_.erase(ticks_.begin(), ticks_.begin() + drop);
  pitches_.erase(pitches_.begin(), pitches_.begin() + drop);
  contacts_.erase(contacts_.begin(), contacts_.begin() + drop);

  EstimateOut out;
  out.t = input.t;
  out.status = toString(sol.status);
  out.iterations = sol.iterations;
  out.arrival_regularized = window_.arrivalRegularized();
  // Swing forces are pinned by equality rows that ADMM meets only to round-off;
  // the reported window takes them at their exact value.
  Eigen::VectorXd x = sol.x;
  const int dim = layout_.dim();
  if (options_.constraints && sol.status == QpStatus::solved) {
    for (int i = 0; i < window_.size(); ++i)
      for (FootId foot : model_.footIds())
        if (!contacts_[i].at(foot)) x.segment<2>(i * dim + layout_.force(foot)).setZero();
  }
  if (sol.status == QpStatus::solved) {
    last_ = x.tail(dim);
  } else {
    // Degraded mode: propagate the previous estimate through the previous transition.
    const LinearStage& prev = window_.stage(std::max(0, window_.size() - 2));
    if (window_.size() >= 2) last_ = prev.A * last_ + prev.b;
    out.degraded = true;
  }
  out.state = EstimatorState::unpack(layout_, last_);
  out.solve_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

  if (sol.status == QpStatus::solved) {
    out.kkt_residual = kktResiduals(window_.problem(), sol.x, sol.y_eq, sol.y_in).max();
    for (int i = 0; i < window_.size(); ++i) {
      for (FootId foot : model_.footIds()) {
        const Eigen::Vector2d f = x.segment<2>(i * dim + layout_.force(foot));
        out.window_min_normal_force = std::min(out.window_min_normal_force, f.y());
        if (!contacts_[i].at(foot))
          out.window_max_swing_force = std::max(out.window_max_swing_force, f.norm());
      }
    }
  }
  return out;
}

}  // namespace grfest
