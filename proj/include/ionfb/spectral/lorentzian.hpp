#pragma once

#include <array>
#include <utility>
#include <vector>

#include "ionfb/spectral/spectrum.hpp"

namespace ionfb::spectral {

/// Parameters of the motional spectral density
/// S(w) = (4 k_B T / m) gamma / ((w^2 - w_j^2)^2 + gamma^2 w^2) + offset.
struct LorentzianFit {
  double temperature = 0.0;  // K
  double omega = 0.0;        // rad/s
  double gamma = 0.0;        // rad/s
  double offset = 0.0;       // m^2/Hz
  std::array<double, 4> uncertainty{};  // same order
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// One-sided density per Hz at frequency f (Hz).
double motion_psd(double f, const LorentzianFit& p, double mass);

/// Integral of the line (without offset) over positive frequencies; equals
/// k_B T / (m w_j^2).
double motion_psd_area(const LorentzianFit& p, double mass);

struct FitWindow {
  double f_min = 0.0;
  double f_max = 0.0;
  std::vector<std::pair<double, double>> exclusions;  // Hz intervals left out

  bool contains(double f) const;
};

/// Window around the strongest peak within +-search_halfwidth of f_expected,
/// centred between its half-maximum points: +-halfwidth_linewidths FWHM, clamped to [min_half, max_half] Hz, truncated at
/// the midpoint toward `f_neighbour` when given (> 0).
FitWindow make_fit_window(const Spectrum& s, double f_expected, double search_halfwidth,
                          double f_neighbour = 0.0, double halfwidth_linewidths = 8.0,
                          double min_half = 2e3, double max_half = 40e3);

/// Starting values: w_j from the argmax of the smoothed peak, gamma from its
/// FWHM, T from the peak area, offset from the lower quartile of the window.
LorentzianFit initial_guess(const Spectrum& s, const FitWindow& w, double mass);

/// Weighted nonlinear least squares of the motional model within the window.
/// Weights follow the model (iteratively reweighted), which matches the
/// chi-square statistics of averaged periodograms. Throws NumericalError on
/// non-convergence or a fit pinned at T = 0 or gamma = 0.
LorentzianFit fit_motion_psd(const Spectrum& s, const FitWindow& w, double mass,
                             const LorentzianFit& init);
LorentzianFit fit_motion_psd(const Spectrum& s, const FitWindow& w, double mass);

/// Joint fit of several lines sharing one offset, for peaks that overlap. Each
/// returned fit carries the common offset. With `fix_offset` the offset stays
/// at init.front().offset and only the line parameters are fitted.
std::vector<LorentzianFit> fit_motion_psd_lines(const Spectrum& s, const FitWindow& w, double mass,
                                                const std::vector<LorentzianFit>& init,
                                                bool fix_offset = false);

/// Mean density over [f_lo, f_hi] with its standard error (bins within one
/// ENBW are treated as correlated). Used for the flat detection floor.
struct Floor {
  double level = 0.0;
  double uncertainty = 0.0;
};
Floor estimate_floor(const Spectrum& s, double f_lo, double f_hi);

}  // namespace ionfb::spectral
