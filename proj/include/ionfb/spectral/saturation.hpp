#pragma once

#include <span>

namespace ionfb::spectral {

struct SaturationFit {
  double t0 = 0.0;        // K, temperature at s -> 0
  double rate_max = 0.0;  // counts/s
  double t0_uncertainty = 0.0;
  double rate_max_uncertainty = 0.0;
  double residual_norm = 0.0;
};

/// T(R) = T0 (1 + R / (R_max - R)).
double saturation_temperature(double rate, double t0, double rate_max);

/// Least-squares fit of T(R). Without uncertainties, relative weights 1/T are
/// used. Throws NumericalError when R_max cannot be placed above the data
/// (pole violation).
SaturationFit fit_saturation_curve(std::span<const double> rates,
                                   std::span<const double> temperatures,
                                   std::span<const double> uncertainties = {});

}  // namespace ionfb::spectral
