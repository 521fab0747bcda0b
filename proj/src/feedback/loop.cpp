#include "ionfb/feedback/loop.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ionfb/common/units.hpp"

namespace ionfb::feedback {

void FeedbackConfig::validate() const {
  if (!(center > 0.0)) throw std::invalid_argument("feedback center must be > 0");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("feedback bandwidth must be > 0");
  if (!(gain >= 0.0 && std::isfinite(gain))) throw std::invalid_argument("feedback gain must be >= 0");
  if (!(clip > 0.0)) throw std::invalid_argument("feedback clip must be > 0");
  if (!(delay >= 0.0)) throw std::invalid_argument("feedback delay must be >= 0");
  if (!(std::abs(phase) <= kPi)) throw std::invalid_argument("feedback phase must be in [-pi, pi]");
  if (!std::isfinite(force_scale)) throw std::invalid_argument("feedback force scale must be finite");
  if (std::abs(norm(electrode_axis) - 1.0) > 1e-9)
    throw std::invalid_argument("electrode axis must be a unit vector");
}

Vec2 feedback_force(double processed, const FeedbackConfig& cfg) {
  const double clipped = std::clamp(processed, -cfg.clip, cfg.clip);
  return (cfg.force_scale * cfg.gain * clipped) * cfg.electrode_axis;
}

FeedbackLoop::FeedbackLoop(const FeedbackConfig& cfg, double sample_rate)
    : cfg_(cfg),
      bandpass_(cfg.center, cfg.bandwidth, sample_rate),
      shifter_(cfg.phase, cfg.center, sample_rate),
      delay_(static_cast<std::size_t>(std::lround(cfg.delay * sample_rate))),
      sample_rate_(sample_rate) {
  cfg_.validate();
}

Vec2 FeedbackLoop::step(double u) {
  const double filtered = shifter_.step(bandpass_.step(u));
  return feedback_force(delay_.push(filtered), cfg_);
}

void FeedbackLoop::reset() {
  bandpass_.reset();
  shifter_.reset();
  delay_.reset();
}

double FeedbackLoop::latency() const {
  // Each input sample integrates over the preceding interval and the output is
  // held over the next one: one interval on top of the delay line.
  return (static_cast<double>(delay_.length()) + 1.0) / sample_rate_;
}

DualLoop::DualLoop(const std::vector<FeedbackConfig>& cfgs, double sample_rate) {
  loops_.reserve(cfgs.size());
  for (const auto& c : cfgs) loops_.emplace_back(c, sample_rate);
}

std::vector<Vec2> DualLoop::contributions(double u) {
  std::vector<Vec2> out;
  out.reserve(loops_.size());
  for (auto& l : loops_) out.push_back(l.step(u));
  return out;
}

Vec2 DualLoop::step(double u) {
  Vec2 total{0.0, 0.0};
  for (auto& l : loops_) total = total + l.step(u);
  return total;
}

void DualLoop::reset() {
  for (auto& l : loops_) l.reset();
}

double unit_gain_force_scale(double mass, double omega, double gamma, double signal_per_metre,
                             double electrode_projection, double ratio) {
  const double coupling = std::abs(signal_per_metre * electrode_projection);
  if (!(coupling > 0.0))
    throw std::invalid_argument("feedback loop has no coupling to the target mode");
  return ratio * gamma * mass * omega / coupling;
}

double optimal_phase(double omega, double latency, double loop_sign) {
  double phase = -kPi / 2.0 + omega * latency + (loop_sign < 0.0 ? kPi : 0.0);
  phase = std::remainder(phase, kTwoPi);
  if (phase <= -kPi) phase += kTwoPi;
  return phase;
}

double added_damping(const FeedbackConfig& cfg, double mass, double omega,
                     double signal_per_metre, double electrode_projection) {
  return cfg.gain * cfg.force_scale * std::abs(signal_per_metre * electrode_projection) /
         (mass * omega);
}

}  // namespace ionfb::feedback
