#pragma once

#include <cstddef>
#include <span>

#include "ionfb/detection/photon_counting.hpp"
#include "ionfb/spectral/spectrum.hpp"

namespace ionfb::spectral {

enum class Window { kHann, kRectangular };

struct WelchOptions {
  std::size_t segment_length = 1 << 17;
  double overlap = 0.5;
  Window window = Window::kHann;
};

/// Welch estimate with per-segment mean removal. Throws std::invalid_argument
/// when the series is shorter than one segment.
Spectrum welch_psd(std::span<const double> samples, double sample_rate, const WelchOptions& opt);

/// Spectrum of the trace's normalized signal (counts / mean - 1).
Spectrum welch_psd(const detection::PhotocurrentTrace& trace, const WelchOptions& opt);

/// Power-of-two segment length whose Hann resolution bandwidth is closest to `rbw` (log scale).
std::size_t segment_length_for_rbw(double sample_rate, double rbw, Window window = Window::kHann);

/// A narrow spectral line: background-subtracted power summed over +-half_width
/// bins around the nearest bin to `freq`, and the equivalent peak height
/// power / rbw, which does not depend on where the tone falls between bins.
struct TonePower {
  double frequency = 0.0;
  double power = 0.0;        // raw units (variance)
  double peak_height = 0.0;  // power / rbw
  double background = 0.0;   // local density per Hz
};

TonePower tone_power(const Spectrum& s, double freq, std::size_t half_width = 4,
                     std::size_t background_bins = 24);

}  // namespace ionfb::spectral
