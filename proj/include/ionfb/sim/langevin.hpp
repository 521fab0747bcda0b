#pragma once

#include <array>

#include "ionfb/common/rng.hpp"
#include "ionfb/sim/trap.hpp"

namespace ionfb::sim {

/// Integrates m x'' = -m w^2 x - m gamma x' + F + xi(t) per trap axis, with
/// <xi(t) xi(t')> = 2 m gamma k_B T delta(t - t').
///
/// Each step is a splitting: half force kick, exact harmonic rotation over dt,
/// half force kick, then the exact Ornstein-Uhlenbeck update of the velocity.
/// Both the rotation and the OU map leave the thermal Gaussian invariant, so the
/// stationary variances are exact for any dt; without noise and damping the
/// rotation conserves the mechanical energy to rounding.
class LangevinIntegrator {
 public:
  /// Throws std::invalid_argument if dt violates the resolution guard
  /// dt <= 1/(50 f_max), or if damping/temperature are negative.
  LangevinIntegrator(const TrapConfig& trap, const BathConfig& bath, double dt);

  /// Advances `state` by one step under a force held constant over the step
  /// (components along the trap axes, N). Throws AbortThresholdError.
  void step(IonState& state, const std::array<double, 2>& force, Engine& rng) const;

  double dt() const { return dt_; }
  const TrapConfig& trap() const { return trap_; }

 private:
  TrapConfig trap_;
  double dt_;
  std::array<double, 2> cos_{}, sin_{}, decay_{}, kick_sigma_{};
};

/// Single-step convenience wrapper around LangevinIntegrator.
IonState langevin_step(const IonState& state, const TrapConfig& trap, const BathConfig& bath,
                       const std::array<double, 2>& external_force, double dt, Engine& rng);

/// Default step: 100 steps per period of the fastest radial mode.
double default_time_step(const TrapConfig& trap, int steps_per_period = 100);

}  // namespace ionfb::sim
