#include "ionfb/spectral/lorentzian.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ionfb/common/errors.hpp"
#include "ionfb/common/units.hpp"
#include "ionfb/numeric/levenberg_marquardt.hpp"

namespace ionfb::spectral {

namespace {

struct Line {
  double value, d_temperature, d_omega, d_gamma;
};

Line evaluate(double f, double t, double w0, double g, double mass) {
  const double w = kTwoPi * f;
  const double a = 4.0 * kBoltzmann * t / mass;
  const double detune = w * w - w0 * w0;
  const double den = detune * detune + g * g * w * w;
  const double value = a * g / den;
  return {value, value / t, a * g * 4.0 * w0 * detune / (den * den),
          a * (den - 2.0 * g * g * w * w) / (den * den)};
}

std::vector<std::size_t> window_bins(const Spectrum& s, const FitWindow& w) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < s.size(); ++k)
    if (s.freqs[k] > 0.0 && w.contains(s.freqs[k])) out.push_back(k);
  return out;
}

std::vector<double> smooth(const std::vector<double>& v, std::size_t half) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(v.size() - 1, i + half);
    double acc = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) acc += v[k];
    out[i] = acc / static_cast<double>(hi - lo + 1);
  }
  return out;
}

double quantile(std::vector<double> v, double q) {
  const auto idx = static_cast<std::size_t>(q * static_cast<double>(v.size() - 1));
  std::nth_element(v.begin(), v.begin() + idx, v.end());
  return v[idx];
}

}  // namespace

double motion_psd(double f, const LorentzianFit& p, double mass) {
  return evaluate(f, p.temperature, p.omega, p.gamma, mass).value + p.offset;
}

double motion_psd_area(const LorentzianFit& p, double mass) {
  return kBoltzmann * p.temperature / (mass * p.omega * p.omega);
}

bool FitWindow::contains(double f) const {
  if (f < f_min || f > f_max) return false;
  for (const auto& [lo, hi] : exclusions)
    if (f >= lo && f <= hi) return false;
  return true;
}

FitWindow make_fit_window(const Spectrum& s, double f_expected, double search_halfwidth,
                          double f_neighbour, double halfwidth_linewidths, double min_half,
                          double max_half) {
  FitWindow search{f_expected - search_halfwidth, f_expected + search_halfwidth, {}};
  if (f_neighbour > 0.0) {
    const double mid = 0.5 * (f_expected + f_neighbour);
    if (f_neighbour > f_expected) search.f_max = std::min(search.f_max, mid);
    else search.f_min = std::max(search.f_min, mid);
  }
  const auto bins = window_bins(s, search);
  if (bins.size() < 8) throw NumericalError("fit window: search region holds too few bins");
  std::vector<double> vals;
  for (auto k : bins) vals.push_back(s.values[k]);
  const auto sm = smooth(vals, 3);
  const auto peak = static_cast<std::size_t>(std::max_element(sm.begin(), sm.end()) - sm.begin());
  const double floor = quantile(vals, 0.25);
  const double half = floor + 0.5 * (sm[peak] - floor);
  std::size_t lo = peak, hi = peak;
  while (lo > 0 && sm[lo] > half) --lo;
  while (hi + 1 < sm.size() && sm[hi] > half) ++hi;
  const double fwhm = std::max(s.freqs[bins[hi]] - s.freqs[bins[lo]], s.bin_spacing());
  // Centre on the half-maximum midpoint: the argmax for a Lorentzian, but
  // stable for flat-topped or split lines at high feedback gain.
  const double f0 = 0.5 * (s.freqs[bins[hi]] + s.freqs[bins[lo]]);
  const double halfwidth = std::clamp(halfwidth_linewidths * fwhm, min_half, max_half);

  FitWindow w{f0 - halfwidth, f0 + halfwidth, {}};
  if (f_neighbour > 0.0) {
    const double mid = 0.5 * (f0 + f_neighbour);
    if (f_neighbour > f0) w.f_max = std::min(w.f_max, mid);
    else w.f_min = std::max(w.f_min, mid);
  }
  return w;
}

LorentzianFit initial_guess(const Spectrum& s, const FitWindow& w, double mass) {
  const auto bins = window_bins(s, w);
  if (bins.size() < 8) throw NumericalError("initial_guess: window holds too few bins");
  std::vector<double> vals;
  for (auto k : bins) vals.push_back(s.values[k]);
  const auto sm = smooth(vals, 2);
  const auto peak = static_cast<std::size_t>(std::max_element(sm.begin(), sm.end()) - sm.begin());

  LorentzianFit g;
  g.offset = quantile(vals, 0.25);
  const double height = sm[peak] - g.offset;
  if (!(height > 0.0)) throw NumericalError("initial_guess: no peak above the background");
  const double half = g.offset + 0.5 * height;
  std::size_t lo = peak, hi = peak;
  while (lo > 0 && sm[lo] > half) --lo;
  while (hi + 1 < sm.size() && sm[hi] > half) ++hi;
  const double fwhm = std::max(s.freqs[bins[hi]] - s.freqs[bins[lo]], s.bin_spacing());
  g.omega = kTwoPi * s.freqs[bins[peak]];
  g.gamma = kTwoPi * fwhm;

  double area = 0.0;
  for (double v : vals) area += v - g.offset;
  area *= s.bin_spacing();
  // The peak height fixes T as well; fall back to it when the area is unusable.
  const double from_peak = height * mass * g.gamma * g.omega * g.omega / (4.0 * kBoltzmann);
  g.temperature = area > 0.0 ? area * mass * g.omega * g.omega / kBoltzmann : from_peak;
  return g;
}

std::vector<LorentzianFit> fit_motion_psd_lines(const Spectrum& s, const FitWindow& w, double mass,
                                                const std::vector<LorentzianFit>& init,
                                                bool fix_offset) {
  if (!(mass > 0.0)) throw std::invalid_argument("fit_motion_psd: mass must be > 0");
  if (init.empty()) throw std::invalid_argument("fit_motion_psd: no lines to fit");
  for (const auto& l : init)
    if (!(l.temperature > 0.0 && l.gamma > 0.0 && l.omega > 0.0))
      throw std::invalid_argument("fit_motion_psd: initial guess must have T, omega, gamma > 0");
  const auto bins = window_bins(s, w);
  const std::size_t lines = init.size();
  const long np = static_cast<long>(3 * lines + (fix_offset ? 0 : 1));
  if (bins.size() < 8 * lines) throw NumericalError("fit_motion_psd: window holds too few bins");

  // Parameters are rescaled to O(1): T = Ts q0, w0 = ws + gs q1, gamma = gs q2
  // per line, then offset = os q unless it is held fixed.
  double peak = 0.0;
  for (auto k : bins) peak = std::max(peak, s.values[k]);
  const double os = std::max(std::abs(init.front().offset), 1e-6 * peak);
  std::vector<double> weight(bins.size(), 1.0);

  Eigen::VectorXd q(np);
  for (std::size_t l = 0; l < lines; ++l) q.segment<3>(static_cast<long>(3 * l)) << 1.0, 0.0, 1.0;
  if (!fix_offset) q[np - 1] = init.front().offset / os;

  auto unpack = [&](const Eigen::VectorXd& p) {
    std::vector<LorentzianFit> out(lines);
    for (std::size_t l = 0; l < lines; ++l) {
      const long o = static_cast<long>(3 * l);
      out[l].temperature = init[l].temperature * p[o];
      out[l].omega = init[l].omega + init[l].gamma * p[o + 1];
      out[l].gamma = init[l].gamma * p[o + 2];
      out[l].offset = fix_offset ? init.front().offset : os * p[np - 1];
    }
    return out;
  };
  auto model = [&](double f, const std::vector<LorentzianFit>& fits) {
    double m = fits.front().offset;
    for (const auto& l : fits) m += evaluate(f, l.temperature, l.omega, l.gamma, mass).value;
    return m;
  };

  numeric::ResidualFn fn = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r,
                               Eigen::MatrixXd* jac) {
    for (std::size_t l = 0; l < lines; ++l) {
      const long o = static_cast<long>(3 * l);
      if (!(p[o] > 0.0 && p[o + 2] > 0.0) || !(init[l].omega + init[l].gamma * p[o + 1] > 0.0))
        return false;
    }
    const auto fits = unpack(p);
    r.resize(static_cast<long>(bins.size()));
    if (jac) jac->resize(static_cast<long>(bins.size()), np);
    for (std::size_t i = 0; i < bins.size(); ++i) {
      const auto k = bins[i];
      const long row = static_cast<long>(i);
      const double inv = 1.0 / weight[i];
      double value = fits.front().offset;
      for (std::size_t l = 0; l < lines; ++l) {
        const Line e = evaluate(s.freqs[k], fits[l].temperature, fits[l].omega, fits[l].gamma, mass);
        value += e.value;
        if (jac) {
          const long o = static_cast<long>(3 * l);
          (*jac)(row, o) = e.d_temperature * init[l].temperature * inv;
          (*jac)(row, o + 1) = e.d_omega * init[l].gamma * inv;
          (*jac)(row, o + 2) = e.d_gamma * init[l].gamma * inv;
        }
      }
      r[row] = (value - s.values[k]) * inv;
      if (jac && !fix_offset) (*jac)(row, np - 1) = os * inv;
    }
    return true;
  };

  numeric::LmResult res;
  for (int outer = 0; outer < 6; ++outer) {
    const auto current = unpack(q);
    for (std::size_t i = 0; i < bins.size(); ++i)
      weight[i] = std::max(model(s.freqs[bins[i]], current), 1e-12 * peak);
    const Eigen::VectorXd previous = q;
    res = numeric::levenberg_marquardt(fn, q);
    q = res.params;
    if ((q - previous).norm() <= 1e-12 * (1.0 + q.norm())) break;
  }
  if (!res.converged) throw NumericalError("fit_motion_psd: least squares did not converge");

  auto out = unpack(q);
  // Neighbouring bins of a windowed estimate are correlated over ~ENBW bins.
  const Eigen::MatrixXd cov = numeric::covariance(res) * std::max(1.0, s.enbw_bins());
  auto sd = [&](long i) { return std::sqrt(std::max(0.0, cov(i, i))); };
  for (std::size_t l = 0; l < lines; ++l) {
    const long o = static_cast<long>(3 * l);
    auto& f = out[l];
    if (f.temperature <= 1e-9 * init[l].temperature || f.gamma <= 1e-9 * init[l].gamma)
      throw NumericalError("fit_motion_psd: fit pinned at the parameter bound");
    f.converged = true;
    f.iterations = res.iterations;
    f.residual_norm = std::sqrt(res.cost);
    f.uncertainty = {init[l].temperature * sd(o), init[l].gamma * sd(o + 1),
                     init[l].gamma * sd(o + 2), fix_offset ? 0.0 : os * sd(np - 1)};
  }
  return out;
}

Floor estimate_floor(const Spectrum& s, double f_lo, double f_hi) {
  s.validate();
  if (!(f_hi > f_lo)) throw std::invalid_argument("estimate_floor: empty band");
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < s.size(); ++k)
    if (s.freqs[k] >= f_lo && s.freqs[k] <= f_hi) {
      sum += s.values[k];
      sq += s.values[k] * s.values[k];
      ++n;
    }
  if (n < 16) throw NumericalError("estimate_floor: band holds too few bins");
  const double mean = sum / static_cast<double>(n);
  const double var = std::max(0.0, sq / static_cast<double>(n) - mean * mean);
  const double independent = std::max(1.0, static_cast<double>(n) / std::max(1.0, s.enbw_bins()));
  return {mean, std::sqrt(var / independent)};
}

LorentzianFit fit_motion_psd(const Spectrum& s, const FitWindow& w, double mass,
                             const LorentzianFit& init) {
  return fit_motion_psd_lines(s, w, mass, {init}).front();
}

LorentzianFit fit_motion_psd(const Spectrum& s, const FitWindow& w, double mass) {
  return fit_motion_psd(s, w, mass, initial_guess(s, w, mass));
}

}  // namespace ionfb::spectral
