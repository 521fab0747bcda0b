#include "ionfb/sim/trap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ionfb::sim {

double TrapConfig::max_frequency_hz() const {
  return rad_to_hz(std::max(omega[0], omega[1]));
}

std::array<double, 2> TrapConfig::to_trap_frame(const Vec2& lab) const {
  return {dot(lab, axis(0)), dot(lab, axis(1))};
}

void TrapConfig::validate() const {
  for (int j = 0; j < 2; ++j) {
    const std::string idx = std::to_string(j + 1);
    if (!(std::isfinite(omega[j]) && omega[j] > 0.0))
      throw std::invalid_argument("omega" + idx + " must be > 0");
    if (!(std::isfinite(gamma[j]) && gamma[j] > 0.0))
      throw std::invalid_argument("gamma" + idx + " must be > 0");
    if (gamma[j] >= max_damping_ratio * omega[j])
      throw std::invalid_argument("gamma" + idx + " must be underdamped (gamma/omega < " +
                                  std::to_string(max_damping_ratio) + ")");
    if (!std::isfinite(axis_angles[j]))
      throw std::invalid_argument("axis angle " + idx + " must be finite");
  }
  if (!(std::isfinite(mass) && mass > 0.0)) throw std::invalid_argument("mass must be > 0");
  if (!(abort_threshold > 0.0)) throw std::invalid_argument("abort threshold must be > 0");
  const double separation = std::remainder(axis_angles[1] - axis_angles[0], kPi);
  if (std::abs(std::abs(separation) - kPi / 2) > orthogonality_tolerance)
    throw std::invalid_argument("trap axes must be orthogonal");
}

void BathConfig::validate() const {
  if (!(std::isfinite(temperature) && temperature > 0.0))
    throw std::invalid_argument("bath temperature must be > 0");
  if (!(std::isfinite(saturation) && saturation >= 0.0))
    throw std::invalid_argument("saturation must be >= 0");
  if (!(std::isfinite(linewidth) && linewidth > 0.0))
    throw std::invalid_argument("linewidth must be > 0");
}

BathConfig doppler_bath(double saturation, double t0, double linewidth) {
  if (!(std::isfinite(saturation) && saturation >= 0.0))
    throw std::invalid_argument("doppler_bath: saturation must be finite and >= 0");
  if (!(std::isfinite(t0) && t0 > 0.0))
    throw std::invalid_argument("doppler_bath: T0 must be finite and > 0");
  BathConfig bath;
  bath.saturation = saturation;
  bath.temperature = t0 * (1.0 + saturation);
  bath.linewidth = linewidth;
  bath.validate();
  return bath;
}

}  // namespace ionfb::sim
