#pragma once

#include <array>

#include "ionfb/common/units.hpp"

namespace ionfb::detection {

/// Detection optics. Default spot size is set so that the normalized count-rate
/// slope 2 M / (sigma sqrt(2 pi)) equals 4.46 per micrometre at M = 100.
struct OpticalConfig {
  double magnification = 100.0;
  double spot_sigma = 100.0 * 2.0 / (4.46e6 * 2.5066282746310002);  // m, knife-edge plane
  double knife_angle = 0.0;              // rad, knife-edge line vs. lab x-axis
  double collection_efficiency = 0.07;
  double rate_370_max = 0.07 * hz_to_rad(19.6e6) / 2.0;  // counts/s for s -> infinity
  double rate_297_max = 19.04e3;                         // counts/s
  double saturation = 1.0;

  void validate() const;

  /// Total detected 369.5 nm rate at the configured saturation.
  double rate_370() const;
  /// Slope of the count rate normalized to its balanced value, per metre of
  /// displacement along the knife-edge normal.
  double normalized_slope() const;
  /// Angle of the knife-edge normal (knife line + pi/2).
  double normal_angle() const { return knife_angle + kPi / 2.0; }
};

/// r_max s / (1 + s).
double scattering_rate(double saturation, double r_max);

/// Signed displacement along the knife-edge normal for trap-axis coordinates x.
double project_onto_knife_normal(const std::array<double, 2>& x,
                                 const std::array<double, 2>& axis_angles, double knife_angle);

/// Projection coefficients cos(alpha_j - knife_angle - pi/2).
std::array<double, 2> knife_projection(const std::array<double, 2>& axis_angles,
                                       double knife_angle);

/// Fraction of the spot transmitted past the knife edge:
/// (1 + erf(M d / (sigma sqrt 2))) / 2. The reflected fraction is 1 minus this.
double knife_transmission(double displacement, double magnification, double spot_sigma);

/// First-order (linearized) transmission, valid for |M d / sigma| << 1.
double knife_transmission_linear(double displacement, double magnification, double spot_sigma);

/// Knife-line angle that puts the knife normal along `normal_angle`.
inline double knife_angle_for_normal(double normal_angle) { return normal_angle - kPi / 2.0; }

}  // namespace ionfb::detection
