#include "grfest/mhe/vo_interpolation.hpp"

#include <cmath>

#include "grfest/contract_error.hpp"

namespace grfest {

long alignToTick(double t, double t0, double period) {
  return static_cast<long>(std::ceil((t - t0) / period - 0.5));
}

VoInterpolator::VoInterpolator(double tick_period, double t0) : period_(tick_period), t0_(t0) {
  if (!(tick_period > 0.0)) throw ContractError("VO interpolation: tick period must be positive");
}

std::vector<VoTickDisplacement> VoInterpolator::add(const VoSample& sample) {
  const long i = alignToTick(sample.t_i, t0_, period_);
  const long j = alignToTick(sample.t_j, t0_, period_);
  if (j <= i) return {};
  if (!cur_ || cur_->tick != i) {
    prev_.reset();
    cur_ = Key{i, Pose2()};
  }
  const Key next{j, cur_->pose * sample.pose()};

  const Eigen::Vector2d& P0 = cur_->pose.translation;
  const Eigen::Vector2d& P1 = next.pose.translation;
  const double span = static_cast<double>(j - i);
  const Eigen::Vector2d v1 = (P1 - P0) / span;
  const Eigen::Vector2d v0 =
      prev_ ? Eigen::Vector2d((P1 - prev_->pose.translation) / static_cast<double>(j - prev_->tick))
            : v1;
  const Eigen::Vector2d c0 = P0;
  const Eigen::Vector2d c1 = P0 + v0 * span / 3.0;
  const Eigen::Vector2d c2 = P1 - v1 * span / 3.0;
  const Eigen::Vector2d c3 = P1;
  auto bezier = [&](double u) -> Eigen::Vector2d {
    const double w = 1.0 - u;
    return w * w * w * c0 + 3.0 * w * w * u * c1 + 3.0 * w * u * u * c2 + u * u * u * c3;
  };
  const double turn = wrapAngle(next.pose.angle - cur_->pose.angle);

  std::vector<VoTickDisplacement> out;
  for (long k = i; k < j; ++k) {
    const double u0 = static_cast<double>(k - i) / span;
    const double u1 = static_cast<double>(k + 1 - i) / span;
    const Eigen::Vector2d step = k + 1 == j ? Eigen::Vector2d(c3 - bezier(u0))
                                            : Eigen::Vector2d(bezier(u1) - bezier(u0));
    const double heading = cur_->pose.angle + u0 * turn;
    out.push_back({k, Pose2(Eigen::Vector2d::Zero(), heading).rotation().transpose() * step});
  }
  prev_ = cur_;
  cur_ = next;
  return out;
}

std::vector<VoTickDisplacement> interpolateVo(const std::vector<VoSample>& samples,
                                              double tick_period, double t0) {
  VoInterpolator interp(tick_period, t0);
  std::vector<VoTickDisplacement> out;
  for (const auto& s : samples) {
    auto part = interp.add(s);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

}  // namespace grfest
