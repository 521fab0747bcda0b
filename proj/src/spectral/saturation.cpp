#include "ionfb/spectral/saturation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ionfb/common/errors.hpp"
#include "ionfb/numeric/levenberg_marquardt.hpp"

namespace ionfb::spectral {

double saturation_temperature(double rate, double t0, double rate_max) {
  return t0 * (1.0 + rate / (rate_max - rate));
}

SaturationFit fit_saturation_curve(std::span<const double> rates,
                                   std::span<const double> temperatures,
                                   std::span<const double> uncertainties) {
  const std::size_t n = rates.size();
  if (n != temperatures.size()) throw std::invalid_argument("fit_saturation_curve: size mismatch");
  if (!uncertainties.empty() && uncertainties.size() != n)
    throw std::invalid_argument("fit_saturation_curve: uncertainty size mismatch");
  if (n < 4) throw std::invalid_argument("fit_saturation_curve: need at least 4 points");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(rates[i] >= 0.0)) throw std::invalid_argument("fit_saturation_curve: rates must be >= 0");
    if (!(temperatures[i] > 0.0))
      throw std::invalid_argument("fit_saturation_curve: temperatures must be > 0");
  }
  const double r_top = *std::max_element(rates.begin(), rates.end());
  constexpr double kPoleGuard = 1e-3;
  const double r_floor = r_top * (1.0 + kPoleGuard);

  std::vector<double> sigma(n);
  for (std::size_t i = 0; i < n; ++i)
    sigma[i] = uncertainties.empty() ? temperatures[i] : uncertainties[i];

  // 1/T is linear in R: 1/T = 1/T0 - R / (T0 R_max). Weighted so that each
  // point counts as in the direct fit (sigma_{1/T} = sigma_T / T^2).
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = temperatures[i];
    const double w = std::pow(t * t / sigma[i], 2);
    const double y = 1.0 / t;
    sw += w;
    sx += w * rates[i];
    sy += w * y;
    sxx += w * rates[i] * rates[i];
    sxy += w * rates[i] * y;
  }
  const double slope = (sw * sxy - sx * sy) / (sw * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / sw;
  // The linearised pole already lies inside the data: no R_max above all rates fits.
  if (slope < 0.0 && intercept > 0.0 && -intercept / slope <= r_top)
    throw NumericalError("fit_saturation_curve: pole violation (rates at or above fitted R_max)");
  double t0_init = intercept > 0.0 ? 1.0 / intercept : *std::min_element(temperatures.begin(), temperatures.end());
  double rmax_init = (slope < 0.0 && intercept > 0.0) ? -intercept / slope : 2.0 * r_top;
  rmax_init = std::max(rmax_init, r_top * 1.05);

  numeric::ResidualFn fn = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    const double t0 = t0_init * p[0], rmax = rmax_init * p[1];
    if (!(t0 > 0.0) || !(rmax > r_floor)) return false;
    r.resize(static_cast<long>(n));
    if (jac) jac->resize(static_cast<long>(n), 2);
    for (std::size_t i = 0; i < n; ++i) {
      const double den = rmax - rates[i];
      const double model = t0 * rmax / den;
      const long row = static_cast<long>(i);
      r[row] = (model - temperatures[i]) / sigma[i];
      if (jac) {
        (*jac)(row, 0) = rmax / den * t0_init / sigma[i];
        (*jac)(row, 1) = -t0 * rates[i] / (den * den) * rmax_init / sigma[i];
      }
    }
    return true;
  };

  Eigen::VectorXd p0(2);
  p0 << 1.0, 1.0;
  const auto res = numeric::levenberg_marquardt(fn, p0);
  if (!res.converged) throw NumericalError("fit_saturation_curve: least squares did not converge");

  SaturationFit out;
  out.t0 = t0_init * res.params[0];
  out.rate_max = rmax_init * res.params[1];
  if (out.rate_max <= r_floor * (1.0 + 1e-6))
    throw NumericalError("fit_saturation_curve: pole violation (rates at or above fitted R_max)");
  Eigen::MatrixXd cov = numeric::covariance(res);
  // With absolute uncertainties, chi-square scaling is not applied.
  if (!uncertainties.empty()) cov = res.jtj.inverse();
  out.t0_uncertainty = t0_init * std::sqrt(std::max(0.0, cov(0, 0)));
  out.rate_max_uncertainty = rmax_init * std::sqrt(std::max(0.0, cov(1, 1)));
  out.residual_norm = std::sqrt(res.cost);
  return out;
}

}  // namespace ionfb::spectral
