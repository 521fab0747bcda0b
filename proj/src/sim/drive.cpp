#include "ionfb/sim/drive.hpp"

#include <cmath>
#include <stdexcept>

#include "ionfb/common/units.hpp"

namespace ionfb::sim {

CoherentDrive::CoherentDrive(double amplitude, double omega_d, double phase, Vec2 axis)
    : amplitude_(amplitude), omega_(omega_d), phase_(phase), axis_(axis) {
  if (!(std::isfinite(omega_d) && omega_d > 0.0))
    throw std::invalid_argument("drive frequency must be > 0");
  if (!std::isfinite(amplitude) || !std::isfinite(phase))
    throw std::invalid_argument("drive amplitude and phase must be finite");
  const double n = norm(axis);
  if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("drive axis must be nonzero");
  axis_ = (1.0 / n) * axis;
}

double CoherentDrive::period() const { return kTwoPi / omega_; }

double CoherentDrive::value(double t) const {
  return amplitude_ * std::sin(omega_ * t + phase_);
}

Vec2 CoherentDrive::force(double t) const { return value(t) * axis_; }

std::vector<double> CoherentDrive::zero_crossings(double t0, double t1) const {
  std::vector<double> out;
  if (!(t1 > t0)) return out;
  // omega t_k + phase = 2 pi k
  const double k0 = std::ceil((omega_ * t0 + phase_) / kTwoPi);
  for (double k = k0;; k += 1.0) {
    const double t = (kTwoPi * k - phase_) / omega_;
    if (t >= t1) break;
    if (t >= t0) out.push_back(t);
  }
  return out;
}

}  // namespace ionfb::sim
