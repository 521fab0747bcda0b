#include "ionfb/spectral/welch.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

#include "ionfb/common/units.hpp"

namespace ionfb::spectral {

namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

std::vector<double> make_window(std::size_t n, Window w) {
  std::vector<double> out(n, 1.0);
  if (w == Window::kHann)
    for (std::size_t i = 0; i < n; ++i)
      out[i] = 0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(n)));
  return out;
}

double enbw_bins(Window w) { return w == Window::kHann ? 1.5 : 1.0; }

}  // namespace

Spectrum welch_psd(std::span<const double> x, double fs, const WelchOptions& opt) {
  const std::size_t n = opt.segment_length;
  if (n < 8) throw std::invalid_argument("welch_psd: segment length too small");
  if (!(fs > 0.0)) throw std::invalid_argument("welch_psd: sample rate must be > 0");
  if (!(opt.overlap >= 0.0 && opt.overlap < 1.0))
    throw std::invalid_argument("welch_psd: overlap must be in [0, 1)");
  if (x.size() < n) throw std::invalid_argument("welch_psd: trace shorter than one segment");

  const std::size_t hop =
      std::max<std::size_t>(1, n - static_cast<std::size_t>(std::llround(opt.overlap * n)));
  const auto window = make_window(n, opt.window);
  double w2 = 0.0;
  for (double v : window) w2 += v * v;

  std::unique_ptr<double, FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
  std::unique_ptr<fftw_complex, FftwFree> out(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1))));
  std::unique_ptr<fftw_plan_s, PlanDeleter> plan;
  {
    std::lock_guard lock(planner_mutex());
    plan.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));
  }

  const std::size_t bins = n / 2 + 1;
  std::vector<double> acc(bins, 0.0);
  std::size_t segments = 0;
  for (std::size_t start = 0; start + n <= x.size(); start += hop) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += x[start + i];
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) in.get()[i] = (x[start + i] - mean) * window[i];
    fftw_execute(plan.get());
    for (std::size_t k = 0; k < bins; ++k) {
      const double re = out.get()[k][0], im = out.get()[k][1];
      acc[k] += re * re + im * im;
    }
    ++segments;
  }

  Spectrum s;
  s.freqs.resize(bins);
  s.values.resize(bins);
  const double norm = 1.0 / (fs * w2 * static_cast<double>(segments));
  for (std::size_t k = 0; k < bins; ++k) {
    s.freqs[k] = static_cast<double>(k) * fs / static_cast<double>(n);
    const bool edge = (k == 0) || (n % 2 == 0 && k == n / 2);
    s.values[k] = acc[k] * norm * (edge ? 1.0 : 2.0);
  }
  double sum_w = 0.0;
  for (double v : window) sum_w += v;
  s.rbw = fs * w2 / (sum_w * sum_w);
  return s;
}

Spectrum welch_psd(const detection::PhotocurrentTrace& trace, const WelchOptions& opt) {
  const auto u = detection::normalized_signal(trace);
  return welch_psd(u, trace.sample_rate, opt);
}

std::size_t segment_length_for_rbw(double fs, double rbw, Window window) {
  if (!(fs > 0.0 && rbw > 0.0)) throw std::invalid_argument("segment_length_for_rbw: bad input");
  const double ideal = enbw_bins(window) * fs / rbw;
  const double p = std::round(std::log2(ideal));
  return static_cast<std::size_t>(1) << static_cast<int>(std::max(3.0, p));
}

TonePower tone_power(const Spectrum& s, double freq, std::size_t half_width,
                     std::size_t background_bins) {
  const std::size_t k0 = s.nearest_bin(freq);
  const std::size_t n = s.size();
  if (k0 < half_width + background_bins + 1 || k0 + half_width + background_bins + 1 >= n)
    throw std::invalid_argument("tone_power: tone too close to the spectrum edge");
  std::vector<double> side;
  for (std::size_t i = 1; i <= background_bins; ++i) {
    side.push_back(s.values[k0 - half_width - i]);
    side.push_back(s.values[k0 + half_width + i]);
  }
  std::nth_element(side.begin(), side.begin() + side.size() / 2, side.end());
  const double bg = side[side.size() / 2];
  double p = 0.0;
  for (std::size_t k = k0 - half_width; k <= k0 + half_width; ++k) p += s.values[k] - bg;
  p *= s.bin_spacing();
  return {s.freqs[k0], p, p / s.rbw, bg};
}

}  // namespace ionfb::spectral
