#include "ionfb/sim/langevin.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "ionfb/common/errors.hpp"

namespace ionfb::sim {

LangevinIntegrator::LangevinIntegrator(const TrapConfig& trap, const BathConfig& bath, double dt)
    : trap_(trap), dt_(dt) {
  if (!(dt > 0.0) || dt > 1.0 / (50.0 * trap.max_frequency_hz()))
    throw std::invalid_argument("time step violates resolution guard dt <= 1/(50 f_trap)");
  if (!(bath.temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
  if (!(trap.mass > 0.0)) throw std::invalid_argument("mass must be > 0");
  for (int j = 0; j < 2; ++j) {
    if (!(trap.gamma[j] >= 0.0)) throw std::invalid_argument("damping must be >= 0");
    cos_[j] = std::cos(trap.omega[j] * dt);
    sin_[j] = std::sin(trap.omega[j] * dt);
    decay_[j] = std::exp(-trap.gamma[j] * dt);
    kick_sigma_[j] = std::sqrt(kBoltzmann * bath.temperature / trap.mass *
                               -std::expm1(-2.0 * trap.gamma[j] * dt));
  }
}

void LangevinIntegrator::step(IonState& s, const std::array<double, 2>& force,
                              Engine& rng) const {
  std::normal_distribution<double> gauss;
  const double half_kick = 0.5 * dt_ / trap_.mass;
  for (int j = 0; j < 2; ++j) {
    const double w = trap_.omega[j];
    double v = s.v[j] + half_kick * force[j];
    const double x = s.x[j];
    const double xn = x * cos_[j] + (v / w) * sin_[j];
    v = -w * x * sin_[j] + v * cos_[j];
    v += half_kick * force[j];
    v = v * decay_[j] + kick_sigma_[j] * gauss(rng);
    s.x[j] = xn;
    s.v[j] = v;
  }
  s.t += dt_;
  ++s.step;
  for (int j = 0; j < 2; ++j) {
    if (!(std::abs(s.x[j]) <= trap_.abort_threshold)) {
      throw AbortThresholdError(
          s.step, fmt::format("ion left the trap region (|x{}| > {:.3g} m) at step {}", j + 1,
                              trap_.abort_threshold, s.step));
    }
  }
}

IonState langevin_step(const IonState& state, const TrapConfig& trap, const BathConfig& bath,
                       const std::array<double, 2>& external_force, double dt, Engine& rng) {
  IonState next = state;
  LangevinIntegrator(trap, bath, dt).step(next, external_force, rng);
  return next;
}

double default_time_step(const TrapConfig& trap, int steps_per_period) {
  return 1.0 / (steps_per_period * trap.max_frequency_hz());
}

}  // namespace ionfb::sim
