#pragma once

#include <array>

#include "ionfb/imaging/image.hpp"

namespace ionfb::imaging {

/// Elliptical Gaussian spot. The angle is that of the major axis measured
/// counter-clockwise from the image x-axis, in (-pi/2, pi/2]. For a driven ion
/// the widths are effective Gaussian widths of the blurred arcsine profile.
struct GaussianFit2D {
  double amplitude = 0.0;   // ADU per pixel at the centre
  double x0 = 0.0, y0 = 0.0;  // m
  double major_width = 0.0;   // m
  double minor_width = 0.0;   // m
  double angle = 0.0;         // rad
  double background = 0.0;    // ADU per pixel
  double angle_uncertainty = 0.0;
  double major_uncertainty = 0.0;
  double minor_uncertainty = 0.0;
  double residual_norm = 0.0;
  bool angle_reliable = false;

  /// Integrated spot counts.
  double flux(double pixel_size) const;
};

/// Noise-free rendering of the model at pixel centres.
IonImage render_gaussian_2d(const GaussianFit2D& g, const ImagingConfig& cfg);

/// Least-squares fit of background + amplitude * exp(-q/2), with q the
/// quadratic form of the inverse covariance, weighted by Poisson variance.
/// Throws NumericalError on non-convergence. A near-circular spot is returned
/// with angle_reliable = false.
GaussianFit2D fit_gaussian_2d(const IonImage& image);

struct AxisAngles {
  std::array<double, 2> alpha{};        // rad
  std::array<double, 2> uncertainty{};  // rad
  double orthogonality_defect = 0.0;    // rad, |pi/2 - |alpha2 - alpha1||
};

/// Trap-axis angles from the fits of images driven along each axis. Throws
/// std::invalid_argument if a fit is unreliable or the two axes are closer
/// than 45 degrees (orthogonality defect).
AxisAngles axis_angles(const GaussianFit2D& fit_drive1, const GaussianFit2D& fit_drive2);

}  // namespace ionfb::imaging
