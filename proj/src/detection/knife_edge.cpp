#include "ionfb/detection/knife_edge.hpp"

#include <cmath>
#include <stdexcept>

namespace ionfb::detection {

void OpticalConfig::validate() const {
  if (!(magnification > 0.0)) throw std::invalid_argument("magnification must be > 0");
  if (!(spot_sigma > 0.0)) throw std::invalid_argument("spot sigma must be > 0");
  if (!(collection_efficiency > 0.0 && collection_efficiency <= 1.0))
    throw std::invalid_argument("collection efficiency must be in (0, 1]");
  if (!(rate_370_max > 0.0)) throw std::invalid_argument("370 nm rate must be > 0");
  if (!(rate_297_max > 0.0)) throw std::invalid_argument("297 nm rate must be > 0");
  if (!(saturation >= 0.0 && std::isfinite(saturation)))
    throw std::invalid_argument("saturation must be >= 0");
  if (!std::isfinite(knife_angle)) throw std::invalid_argument("knife angle must be finite");
}

double OpticalConfig::rate_370() const { return scattering_rate(saturation, rate_370_max); }

double OpticalConfig::normalized_slope() const {
  return 2.0 * magnification / (spot_sigma * std::sqrt(kTwoPi));
}

double scattering_rate(double saturation, double r_max) {
  if (!(saturation >= 0.0)) throw std::invalid_argument("scattering_rate: s must be >= 0");
  if (std::isinf(saturation)) return r_max;
  return r_max * saturation / (1.0 + saturation);
}

std::array<double, 2> knife_projection(const std::array<double, 2>& axis_angles,
                                       double knife_angle) {
  const double normal = knife_angle + kPi / 2.0;
  return {std::cos(axis_angles[0] - normal), std::cos(axis_angles[1] - normal)};
}

double project_onto_knife_normal(const std::array<double, 2>& x,
                                 const std::array<double, 2>& axis_angles, double knife_angle) {
  const auto p = knife_projection(axis_angles, knife_angle);
  return x[0] * p[0] + x[1] * p[1];
}

double knife_transmission(double displacement, double magnification, double spot_sigma) {
  return 0.5 * (1.0 + std::erf(magnification * displacement / (spot_sigma * std::numbers::sqrt2)));
}

double knife_transmission_linear(double displacement, double magnification, double spot_sigma) {
  // erf(z) ~ 2 z / sqrt(pi)
  return 0.5 * (1.0 + 2.0 / std::sqrt(kPi) * magnification * displacement /
                          (spot_sigma * std::numbers::sqrt2));
}

}  // namespace ionfb::detection
