#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace ionfb::feedback {

/// Second-order resonant bandpass (bilinear-transformed RBJ form): unit gain and
/// zero phase at the center frequency, -3 dB full width `bandwidth`.
/// A non-finite input faults the filter; it then throws until reset().
class BandpassFilter {
 public:
  /// center and bandwidth in rad/s, sample_rate in Hz. Requires bandwidth < center/2.
  BandpassFilter(double center, double bandwidth, double sample_rate);

  double step(double u);
  void reset();
  bool faulted() const { return faulted_; }

  std::complex<double> response(double omega) const;

 private:
  double b0_ = 0.0, b2_ = 0.0, a1_ = 0.0, a2_ = 0.0;
  double s1_ = 0.0, s2_ = 0.0;  // transposed direct form II
  double sample_rate_;
  bool faulted_ = false;
};

/// Fixed integer-sample delay. Zero length passes samples through.
class DelayLine {
 public:
  explicit DelayLine(std::size_t length = 0);
  double push(double u);
  void reset();
  std::size_t length() const { return buffer_.size(); }

 private:
  std::vector<double> buffer_;
  std::size_t head_ = 0;
};

/// First-order all-pass H(z) = (a + z^-1)/(1 + a z^-1) after an integer delay,
/// tuned so that a sinusoid at `center` leaves advanced by `phase`
/// (equivalently, lagged by (-phase) mod 2 pi). |phase| <= pi.
class PhaseShifter {
 public:
  PhaseShifter(double phase, double center, double sample_rate);

  double step(double u);
  void reset();
  bool faulted() const { return faulted_; }

  std::complex<double> response(double omega) const;
  std::size_t delay_samples() const { return delay_.length(); }
  double allpass_coefficient() const { return a_; }

 private:
  DelayLine delay_;
  double a_ = 0.0;
  bool passthrough_ = false;
  double x1_ = 0.0, y1_ = 0.0;
  double sample_rate_;
  bool faulted_ = false;
};

}  // namespace ionfb::feedback
