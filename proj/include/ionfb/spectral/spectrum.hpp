#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ionfb::spectral {

/// One-sided power spectral density on a uniform frequency grid. Integrating
/// `values` over frequency (Hz) gives the signal variance. Raw spectra are in
/// normalized-signal^2/Hz; calibrated spectra in m^2/Hz.
struct Spectrum {
  std::vector<double> freqs;   // Hz, strictly increasing
  std::vector<double> values;  // per Hz, >= 0
  double rbw = 0.0;            // Hz, equivalent noise bandwidth of the estimate
  bool calibrated = false;
  double scale = 1.0;          // m^2/Hz per raw unit (1 for raw spectra)

  std::size_t size() const { return freqs.size(); }
  double bin_spacing() const { return freqs.size() > 1 ? freqs[1] - freqs[0] : 0.0; }
  /// Equivalent noise bandwidth in bins.
  double enbw_bins() const { return rbw / bin_spacing(); }
  /// Index of the bin nearest to frequency f.
  std::size_t nearest_bin(double f) const;
  /// Sum of values * bin spacing over [f_lo, f_hi].
  double integrate(double f_lo, double f_hi) const;

  void validate() const;
};

/// CSV with a '#' header carrying rbw_hz, calibrated, scale; columns freq_hz,psd_value.
void write_spectrum_csv(std::ostream& os, const Spectrum& s);
void write_spectrum_csv(const std::string& path, const Spectrum& s);
Spectrum read_spectrum_csv(std::istream& is);

}  // namespace ionfb::spectral
