#pragma once

#include <vector>

#include "ionfb/common/vec2.hpp"

namespace ionfb::sim {

/// F(t) = amplitude * sin(omega_d t + phase) * axis.
class CoherentDrive {
 public:
  CoherentDrive() = default;
  CoherentDrive(double amplitude, double omega_d, double phase, Vec2 axis);

  double amplitude() const { return amplitude_; }
  double omega() const { return omega_; }
  double phase() const { return phase_; }
  const Vec2& axis() const { return axis_; }
  double period() const;

  double value(double t) const;
  Vec2 force(double t) const;

  /// Upward zero crossings (omega_d t + phase = 2 pi k) in [t0, t1).
  std::vector<double> zero_crossings(double t0, double t1) const;

 private:
  double amplitude_ = 0.0;
  double omega_ = 1.0;
  double phase_ = 0.0;
  Vec2 axis_{1.0, 0.0};
};

}  // namespace ionfb::sim
