#pragma once

#include <array>
#include <vector>

#include "ionfb/common/vec2.hpp"
#include "ionfb/feedback/filters.hpp"

namespace ionfb::feedback {

struct FeedbackConfig {
  double center = 0.0;        // rad/s
  double bandwidth = 0.0;     // rad/s
  double phase = 0.0;         // rad, at the center frequency
  double gain = 0.0;          // dimensionless
  double delay = 1e-6;        // s
  double force_scale = 0.0;   // N per unit normalized signal
  Vec2 electrode_axis{1.0, 0.0};
  double clip = 5.0;          // normalized units

  void validate() const;
};

/// kappa * g * clip(processed) * electrode_axis.
Vec2 feedback_force(double processed, const FeedbackConfig& cfg);

/// One feedback circuit: bandpass -> phase shifter -> loop delay -> clip and gain.
class FeedbackLoop {
 public:
  FeedbackLoop(const FeedbackConfig& cfg, double sample_rate);

  /// Consumes one normalized in-loop sample, returns the force applied over the
  /// next sample interval (lab frame, N).
  Vec2 step(double u);
  void reset();

  const FeedbackConfig& config() const { return cfg_; }
  /// Time from the centre of a detection bin to the centre of the interval
  /// over which the resulting force acts.
  double latency() const;

 private:
  FeedbackConfig cfg_;
  BandpassFilter bandpass_;
  PhaseShifter shifter_;
  DelayLine delay_;
  double sample_rate_;
};

/// Independent circuits fed by the same in-loop signal; their forces superpose.
class DualLoop {
 public:
  DualLoop() = default;
  DualLoop(const std::vector<FeedbackConfig>& cfgs, double sample_rate);

  /// Per-loop force contributions for one input sample.
  std::vector<Vec2> contributions(double u);
  Vec2 step(double u);
  void reset();
  std::size_t size() const { return loops_.size(); }

 private:
  std::vector<FeedbackLoop> loops_;
};

/// Force scale for which gain 1 adds a cold-damping rate `ratio * gamma` to a
/// mode of angular frequency omega, given the in-loop signal per metre of
/// mode displacement and the projection of the electrode axis on the mode.
double unit_gain_force_scale(double mass, double omega, double gamma, double signal_per_metre,
                             double electrode_projection, double ratio = 10.0);

/// Phase setting (wrapped to (-pi, pi]) that turns the loop into velocity
/// damping, for a loop of the given latency. `loop_sign` is the sign of
/// signal_per_metre * electrode_projection.
double optimal_phase(double omega, double latency, double loop_sign);

/// Cold-damping rate added by a loop at phase optimum (small-signal estimate).
double added_damping(const FeedbackConfig& cfg, double mass, double omega,
                     double signal_per_metre, double electrode_projection);

}  // namespace ionfb::feedback
