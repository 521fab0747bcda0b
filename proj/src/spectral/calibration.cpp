#include "ionfb/spectral/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>

#include <Eigen/Dense>

#include "ionfb/common/errors.hpp"
#include "ionfb/common/units.hpp"

namespace ionfb::spectral {

namespace {

struct LineFit {
  double intercept = 0.0, slope = 0.0, slope_sigma = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  if (!(sxx > 0.0)) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    rss += r * r;
  }
  f.slope_sigma = x.size() > 2 ? std::sqrt(rss / (n - 2.0) / sxx) : 0.0;
  return f;
}

// y = a + b x + c x^3 about x = 0; b is the tangent slope at the edge, free of
// the leading erf curvature that biases a straight-line fit low.
LineFit fit_line_cubic(const std::vector<double>& x, const std::vector<double>& y, double scale) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = x[static_cast<std::size_t>(i)] / scale;
    a(i, 0) = 1.0;
    a(i, 1) = u;
    a(i, 2) = u * u * u;
    b[i] = y[static_cast<std::size_t>(i)];
  }
  const Eigen::MatrixXd ata = a.transpose() * a;
  const Eigen::VectorXd p = ata.ldlt().solve(a.transpose() * b);
  LineFit f;
  f.intercept = p[0];
  f.slope = p[1] / scale;
  const double rss = (a * p - b).squaredNorm();
  if (n > 3) f.slope_sigma = std::sqrt(rss / static_cast<double>(n - 3) * ata.inverse()(1, 1)) / scale;
  return f;
}

// Position where the sorted scan first crosses `level` (linear interpolation).
std::optional<double> crossing(const std::vector<double>& d, const std::vector<double>& n,
                               double level) {
  for (std::size_t i = 1; i < d.size(); ++i) {
    const double a = n[i - 1] - level, b = n[i] - level;
    if (a == 0.0) return d[i - 1];
    if ((a < 0.0) != (b < 0.0)) return d[i - 1] + (d[i] - d[i - 1]) * a / (a - b);
  }
  return std::nullopt;
}

}  // namespace

SlopeResult measure_slope(std::span<const double> positions,
                          std::span<const double> normalized_counts, double projection) {
  if (positions.size() != normalized_counts.size())
    throw std::invalid_argument("measure_slope: size mismatch");
  if (positions.size() < 3) throw std::invalid_argument("measure_slope: need at least 3 points");
  if (!(std::abs(projection) > 1e-6))
    throw std::invalid_argument("measure_slope: projection must be nonzero");

  std::vector<std::size_t> order(positions.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return positions[a] < positions[b]; });
  std::vector<double> d, n;
  for (auto i : order) {
    d.push_back(positions[i]);
    n.push_back(normalized_counts[i]);
  }

  // The normalized response is 2 Phi(x / s) (or 2 - 2 Phi). Over |x| <= s/2
  // a line plus cubic follows it to ~1e-4, so the fitted slope is the tangent.
  constexpr double kFitFraction = 0.5;
  constexpr double kQuartileZ = 0.6744897501960817;
  std::optional<double> width;
  const auto lo = crossing(d, n, 0.5), hi = crossing(d, n, 1.5);
  if (lo && hi) width = std::abs(*hi - *lo) / (2.0 * kQuartileZ);

  auto select = [&](double halfwidth) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < d.size(); ++i)
      if (std::abs(d[i]) <= halfwidth) {
        xs.push_back(d[i]);
        ys.push_back(n[i]);
      }
    return std::pair{xs, ys};
  };

  LineFit fit;
  double halfwidth = 0.0;
  std::size_t used = 0;
  if (!width) {
    fit = fit_line(d, n);
    used = d.size();
    halfwidth = std::max(std::abs(d.front()), std::abs(d.back()));
    if (std::abs(fit.slope) > 3.0 * fit.slope_sigma && fit.slope != 0.0)
      width = 2.0 / (std::abs(fit.slope) * std::sqrt(kTwoPi));
  }
  if (width) {
    for (int pass = 0; pass < 3; ++pass) {
      halfwidth = kFitFraction * *width;
      auto [xs, ys] = select(halfwidth);
      if (xs.size() < 5)
        throw NumericalError("measure_slope: no linear region found (fewer than 5 points)");
      fit = fit_line_cubic(xs, ys, halfwidth);
      used = xs.size();
      if (fit.slope == 0.0) break;
      width = 2.0 / (std::abs(fit.slope) * std::sqrt(kTwoPi));
    }
  }
  if (!(std::abs(fit.slope) > 3.0 * fit.slope_sigma))
    throw NumericalError("measure_slope: slope consistent with zero");

  SlopeResult r;
  r.raw_slope = fit.slope;
  r.slope = fit.slope / projection;
  r.uncertainty = fit.slope_sigma / std::abs(projection);
  r.linear_halfwidth = halfwidth;
  r.points_used = used;
  return r;
}

CorrelationResult correlate_drive(std::span<const double> events,
                                  std::span<const double> zc, std::size_t n_bins) {
  if (n_bins < 4) throw std::invalid_argument("correlate_drive: need at least 4 bins");
  if (zc.size() < 2) throw NumericalError("correlate_drive: need at least two zero crossings");

  CorrelationResult r;
  std::vector<double> hist(n_bins, 0.0);
  std::size_t k = 0;
  for (double t : events) {
    if (t < zc.front()) continue;
    while (k + 1 < zc.size() && zc[k + 1] <= t) ++k;
    if (k + 1 >= zc.size()) break;
    const double phase = (t - zc[k]) / (zc[k + 1] - zc[k]);
    const auto bin = std::min(n_bins - 1, static_cast<std::size_t>(phase * n_bins));
    hist[bin] += 1.0;
    ++r.events;
  }
  if (r.events < kMinCorrelationEvents)
    throw NumericalError("correlate_drive: insufficient events (" + std::to_string(r.events) + ")");

  const double mean = static_cast<double>(r.events) / static_cast<double>(n_bins);
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < n_bins; ++i) {
    hist[i] /= mean;
    const double theta = kTwoPi * (static_cast<double>(i) + 0.5) / static_cast<double>(n_bins);
    a += hist[i] * std::cos(theta);
    b += hist[i] * std::sin(theta);
  }
  a *= 2.0 / static_cast<double>(n_bins);
  b *= 2.0 / static_cast<double>(n_bins);
  const double x = kPi / static_cast<double>(n_bins);
  const double sinc = std::sin(x) / x;
  r.amplitude = std::hypot(a, b) / sinc;
  r.phase = std::atan2(a, b);
  r.uncertainty = std::sqrt(2.0 / static_cast<double>(r.events)) / sinc;
  r.significant = r.amplitude > 3.0 * r.uncertainty;
  r.histogram = std::move(hist);
  return r;
}

double CalibrationResult::displacement(double a_corr, double slope) {
  if (slope == 0.0) throw std::invalid_argument("calibration slope must be nonzero");
  return a_corr / std::abs(slope);
}

Spectrum calibrate_spectrum(const Spectrum& raw, double peak_height, double a_displ,
                            double background) {
  if (raw.calibrated) throw std::invalid_argument("calibrate_spectrum: spectrum already calibrated");
  if (!(raw.rbw > 0.0)) throw std::invalid_argument("calibrate_spectrum: rbw must be > 0");
  if (!(peak_height > background) || !(peak_height > 0.0))
    throw NumericalError("calibrate_spectrum: calibration peak does not exceed the background");
  Spectrum out = raw;
  const double scale = 0.5 * a_displ * a_displ / (peak_height * raw.rbw);
  for (double& v : out.values) v *= scale;
  out.calibrated = true;
  out.scale = scale;
  return out;
}

}  // namespace ionfb::spectral
