#pragma once

#include <span>
#include <vector>

#include "ionfb/spectral/spectrum.hpp"

namespace ionfb::spectral {

struct SlopeResult {
  double slope = 0.0;        // per metre along the reference direction
  double uncertainty = 0.0;
  double raw_slope = 0.0;    // per metre along the scan direction
  double linear_halfwidth = 0.0;  // m, region used for the fit
  std::size_t points_used = 0;
};

/// Slope at the edge of counts (normalized to the focus value) against
/// position: least squares of a line plus cubic term over half an erf width
/// either side of the edge, so the curvature does not pull the slope down. The
/// result is divided by `projection`, the cosine between the scan direction and
/// the reference direction. Throws NumericalError when no linear region is
/// found or the slope is consistent with zero.
SlopeResult measure_slope(std::span<const double> positions,
                          std::span<const double> normalized_counts, double projection = 1.0);

struct CorrelationResult {
  double amplitude = 0.0;    // modulation of the rate normalized to its mean
  double uncertainty = 0.0;
  double phase = 0.0;        // rate ~ 1 + A sin(2 pi phi + phase)
  std::size_t events = 0;
  bool significant = false;  // amplitude above 3 sigma
  std::vector<double> histogram;  // normalized to mean 1
};

/// Folds event times onto the drive period using the drive's upward zero
/// crossings, histograms them in n_bins phase bins and fits a sinusoid. The
/// amplitude is corrected for the bin-averaging loss. Both inputs must be
/// sorted. Throws NumericalError with fewer than 1e4 folded events.
CorrelationResult correlate_drive(std::span<const double> event_times,
                                  std::span<const double> zero_crossings, std::size_t n_bins = 32);

inline constexpr std::size_t kMinCorrelationEvents = 10000;

/// Both calibration measurements combined.
struct CalibrationResult {
  double slope = 0.0;           // normalized rate per metre along the trap axis
  double slope_uncertainty = 0.0;
  double a_corr = 0.0;
  double a_corr_uncertainty = 0.0;
  double a_displ = 0.0;         // m
  double a_displ_uncertainty = 0.0;
  double peak_height = 0.0;     // raw units
  double scale = 0.0;           // m^2/Hz per raw unit
  double scale_uncertainty = 0.0;

  /// A_displ = A_corr / |slope|.
  static double displacement(double a_corr, double slope);
};

/// S = S_raw * (A_displ^2 / 2) / (peak_height * rbw). The tone of amplitude
/// A_displ carries variance A_displ^2 / 2, so the result integrates to the
/// displacement variance. Throws NumericalError when the peak does not rise
/// above `background`.
Spectrum calibrate_spectrum(const Spectrum& raw, double peak_height, double a_displ,
                            double background = 0.0);

}  // namespace ionfb::spectral
