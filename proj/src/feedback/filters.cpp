#include "ionfb/feedback/filters.hpp"

#include <cmath>
#include <stdexcept>

#include "ionfb/common/errors.hpp"
#include "ionfb/common/units.hpp"

namespace ionfb::feedback {

namespace {

void fault(bool& flag) {
  flag = true;
  throw NumericalError("feedback filter received a non-finite sample");
}

}  // namespace

BandpassFilter::BandpassFilter(double center, double bandwidth, double sample_rate)
    : sample_rate_(sample_rate) {
  if (!(center > 0.0) || !(bandwidth > 0.0) || !(sample_rate > 0.0))
    throw std::invalid_argument("bandpass: center, bandwidth and sample rate must be > 0");
  if (!(bandwidth < center / 2.0))
    throw std::invalid_argument("bandpass: bandwidth must be below center/2");
  if (!(center < kPi * sample_rate))
    throw std::invalid_argument("bandpass: center above Nyquist");
  const double w0 = center / sample_rate;
  const double q = center / bandwidth;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  b0_ = alpha / a0;
  b2_ = -alpha / a0;
  a1_ = -2.0 * std::cos(w0) / a0;
  a2_ = (1.0 - alpha) / a0;
}

double BandpassFilter::step(double u) {
  if (faulted_ || !std::isfinite(u)) fault(faulted_);
  const double y = b0_ * u + s1_;
  s1_ = -a1_ * y + s2_;
  s2_ = b2_ * u - a2_ * y;
  return y;
}

void BandpassFilter::reset() {
  s1_ = s2_ = 0.0;
  faulted_ = false;
}

std::complex<double> BandpassFilter::response(double omega) const {
  const std::complex<double> z1 = std::polar(1.0, -omega / sample_rate_);
  const std::complex<double> z2 = z1 * z1;
  return (b0_ + b2_ * z2) / (1.0 + a1_ * z1 + a2_ * z2);
}

DelayLine::DelayLine(std::size_t length) : buffer_(length, 0.0) {}

double DelayLine::push(double u) {
  if (buffer_.empty()) return u;
  const double out = buffer_[head_];
  buffer_[head_] = u;
  head_ = (head_ + 1 == buffer_.size()) ? 0 : head_ + 1;
  return out;
}

void DelayLine::reset() {
  std::fill(buffer_.begin(), buffer_.end(), 0.0);
  head_ = 0;
}

PhaseShifter::PhaseShifter(double phase, double center, double sample_rate)
    : sample_rate_(sample_rate) {
  if (!(std::abs(phase) <= kPi)) throw std::invalid_argument("phase shifter: |phase| must be <= pi");
  if (!(center > 0.0) || !(center < kPi * sample_rate))
    throw std::invalid_argument("phase shifter: center must lie in (0, Nyquist)");
  const double w0 = center / sample_rate;
  double lag = std::fmod(-phase, kTwoPi);
  if (lag < 0.0) lag += kTwoPi;
  std::size_t k = 0;
  if (lag > kPi / 2.0) k = static_cast<std::size_t>(std::lround((lag - kPi / 2.0) / w0));
  const double residual = lag - static_cast<double>(k) * w0;
  delay_ = DelayLine(k);
  if (residual < 1e-12) {
    passthrough_ = true;
  } else {
    // arg H(w0) = -residual  <=>  a = sin((w0 - L)/2) / sin((w0 + L)/2)
    a_ = std::sin((w0 - residual) / 2.0) / std::sin((w0 + residual) / 2.0);
  }
}

double PhaseShifter::step(double u) {
  if (faulted_ || !std::isfinite(u)) fault(faulted_);
  const double x = delay_.push(u);
  if (passthrough_) return x;
  const double y = a_ * x + x1_ - a_ * y1_;
  x1_ = x;
  y1_ = y;
  return y;
}

void PhaseShifter::reset() {
  delay_.reset();
  x1_ = y1_ = 0.0;
  faulted_ = false;
}

std::complex<double> PhaseShifter::response(double omega) const {
  const double w = omega / sample_rate_;
  const std::complex<double> z1 = std::polar(1.0, -w);
  std::complex<double> h = std::polar(1.0, -w * static_cast<double>(delay_.length()));
  if (!passthrough_) h *= (a_ + z1) / (1.0 + a_ * z1);
  return h;
}

}  // namespace ionfb::feedback
