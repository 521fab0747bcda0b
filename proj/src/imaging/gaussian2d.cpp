#include "ionfb/imaging/gaussian2d.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ionfb/common/errors.hpp"
#include "ionfb/common/units.hpp"
#include "ionfb/numeric/levenberg_marquardt.hpp"

namespace ionfb::imaging {

namespace {

// Above this angle uncertainty, or below this relative anisotropy, the
// major-axis direction is not meaningful.
constexpr double kMaxAngleUncertainty = 2.0 * kPi / 180.0;
constexpr double kMinAnisotropy = 1e-3;

// Internal parameters: amplitude, x0, y0 (pixels), precision matrix [[a, b], [b, c]]
// in 1/pixel^2, background.
struct Shape {
  double major, minor, angle;
};

Shape shape_from_precision(double a, double b, double c) {
  const double tr = a + c;
  const double disc = std::sqrt(std::max(0.0, 0.25 * (a - c) * (a - c) + b * b));
  const double lam_small = 0.5 * tr - disc, lam_big = 0.5 * tr + disc;
  // The major axis of the covariance is the eigenvector of the smallest precision eigenvalue.
  double angle = 0.5 * std::atan2(-2.0 * b, c - a);
  if (angle <= -kPi / 2.0) angle += kPi;
  if (angle > kPi / 2.0) angle -= kPi;
  return {1.0 / std::sqrt(lam_small), 1.0 / std::sqrt(lam_big), angle};
}

double wrap_half_turn(double a) {
  a = std::remainder(a, kPi);
  if (a <= -kPi / 2.0) a += kPi;
  return a;
}

}  // namespace

double GaussianFit2D::flux(double pixel_size) const {
  return amplitude * kTwoPi * major_width * minor_width / (pixel_size * pixel_size);
}

IonImage render_gaussian_2d(const GaussianFit2D& g, const ImagingConfig& cfg) {
  IonImage img = blank_image(cfg);
  const double ca = std::cos(g.angle), sa = std::sin(g.angle);
  for (std::size_t r = 0; r < img.rows; ++r)
    for (std::size_t c = 0; c < img.cols; ++c) {
      const double dx = img.x(c) - g.x0, dy = img.y(r) - g.y0;
      const double u = (dx * ca + dy * sa) / g.major_width;
      const double v = (-dx * sa + dy * ca) / g.minor_width;
      img.at(r, c) = g.background + g.amplitude * std::exp(-0.5 * (u * u + v * v));
    }
  return img;
}

GaussianFit2D fit_gaussian_2d(const IonImage& image) {
  image.validate();
  const std::size_t n = image.pixels.size();
  std::vector<double> px(n), py(n);
  for (std::size_t r = 0; r < image.rows; ++r)
    for (std::size_t c = 0; c < image.cols; ++c) {
      px[r * image.cols + c] = image.x(c) / image.pixel_size;
      py[r * image.cols + c] = image.y(r) / image.pixel_size;
    }

  // Moments of the excess over the border median seed the fit.
  std::vector<double> border;
  for (std::size_t r = 0; r < image.rows; ++r)
    for (std::size_t c = 0; c < image.cols; ++c)
      if (r == 0 || c == 0 || r + 1 == image.rows || c + 1 == image.cols)
        border.push_back(image.at(r, c));
  std::nth_element(border.begin(), border.begin() + border.size() / 2, border.end());
  const double bg0 = border[border.size() / 2];
  double w = 0, mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::max(0.0, image.pixels[i] - bg0);
    w += e;
    mx += e * px[i];
    my += e * py[i];
  }
  if (!(w > 0.0)) throw NumericalError("fit_gaussian_2d: no spot above the background");
  mx /= w;
  my /= w;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::max(0.0, image.pixels[i] - bg0);
    sxx += e * (px[i] - mx) * (px[i] - mx);
    sxy += e * (px[i] - mx) * (py[i] - my);
    syy += e * (py[i] - my) * (py[i] - my);
  }
  sxx = sxx / w + 0.25;
  syy = syy / w + 0.25;
  sxy /= w;
  const double det0 = sxx * syy - sxy * sxy;
  const double peak = *std::max_element(image.pixels.begin(), image.pixels.end());

  Eigen::VectorXd p(7);
  p << std::max(peak - bg0, 1e-9), mx, my, syy / det0, -sxy / det0, sxx / det0, bg0;
  std::vector<double> sigma(n, 1.0);

  numeric::ResidualFn fn = [&](const Eigen::VectorXd& q, Eigen::VectorXd& res,
                               Eigen::MatrixXd* jac) {
    const double a = q[3], b = q[4], c = q[5];
    if (!(a > 0.0 && c > 0.0 && a * c - b * b > 0.0)) return false;
    res.resize(static_cast<long>(n));
    if (jac) jac->resize(static_cast<long>(n), 7);
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = px[i] - q[1], dy = py[i] - q[2];
      const double e = std::exp(-0.5 * (a * dx * dx + 2.0 * b * dx * dy + c * dy * dy));
      const double g = q[0] * e;
      const long row = static_cast<long>(i);
      res[row] = (g + q[6] - image.pixels[i]) / sigma[i];
      if (jac) {
        const double s = 1.0 / sigma[i];
        (*jac)(row, 0) = e * s;
        (*jac)(row, 1) = g * (a * dx + b * dy) * s;
        (*jac)(row, 2) = g * (b * dx + c * dy) * s;
        (*jac)(row, 3) = -0.5 * g * dx * dx * s;
        (*jac)(row, 4) = -g * dx * dy * s;
        (*jac)(row, 5) = -0.5 * g * dy * dy * s;
        (*jac)(row, 6) = s;
      }
    }
    return true;
  };

  numeric::LmResult res;
  for (int pass = 0; pass < 3; ++pass) {
    // Poisson weights from the current model; unit weights on the first pass.
    if (pass > 0) {
      for (std::size_t i = 0; i < n; ++i) {
        const double dx = px[i] - p[1], dy = py[i] - p[2];
        const double m =
            p[6] + p[0] * std::exp(-0.5 * (p[3] * dx * dx + 2.0 * p[4] * dx * dy + p[5] * dy * dy));
        sigma[i] = std::sqrt(std::max(m, 1.0));
      }
    }
    res = numeric::levenberg_marquardt(fn, p);
    p = res.params;
  }
  if (!res.converged) throw NumericalError("fit_gaussian_2d: least squares did not converge");
  if (!(p[0] > 0.0)) throw NumericalError("fit_gaussian_2d: fitted amplitude is not positive");

  const Shape sh = shape_from_precision(p[3], p[4], p[5]);
  const Eigen::MatrixXd cov = numeric::covariance(res);

  // Angle = atan2(-2b, c - a)/2; propagate the (a, b, c) covariance.
  const double u = p[5] - p[3], v = -2.0 * p[4], r2 = u * u + v * v;
  Eigen::Vector3d grad_angle(0.5 * v / r2, -u / r2, -0.5 * v / r2);
  // Widths: numerical gradient of the eigen-widths.
  auto widths = [&](double a, double b, double c) {
    const Shape s = shape_from_precision(a, b, c);
    return Eigen::Vector2d(s.major, s.minor);
  };
  Eigen::Matrix<double, 2, 3> grad_w;
  for (int k = 0; k < 3; ++k) {
    Eigen::Vector3d lo(p[3], p[4], p[5]), hi = lo;
    const double h = 1e-6 * std::max(std::abs(lo[k]), std::abs(p[3]));
    lo[k] -= h;
    hi[k] += h;
    grad_w.col(k) = (widths(hi[0], hi[1], hi[2]) - widths(lo[0], lo[1], lo[2])) / (2.0 * h);
  }
  const Eigen::Matrix3d cov_abc = cov.block<3, 3>(3, 3);
  const Eigen::Matrix2d cov_w = grad_w * cov_abc * grad_w.transpose();

  GaussianFit2D out;
  out.amplitude = p[0];
  out.x0 = p[1] * image.pixel_size;
  out.y0 = p[2] * image.pixel_size;
  out.major_width = sh.major * image.pixel_size;
  out.minor_width = sh.minor * image.pixel_size;
  out.angle = sh.angle;
  out.background = p[6];
  out.angle_uncertainty = r2 > 0.0 ? std::sqrt(std::max(0.0, grad_angle.dot(cov_abc * grad_angle)))
                                   : kPi / 2.0;
  out.major_uncertainty = std::sqrt(std::max(0.0, cov_w(0, 0))) * image.pixel_size;
  out.minor_uncertainty = std::sqrt(std::max(0.0, cov_w(1, 1))) * image.pixel_size;
  out.residual_norm = std::sqrt(res.cost);
  const double anisotropy = (sh.major - sh.minor) / sh.major;
  out.angle_reliable = anisotropy > kMinAnisotropy && out.angle_uncertainty < kMaxAngleUncertainty;
  return out;
}

AxisAngles axis_angles(const GaussianFit2D& fit_drive1, const GaussianFit2D& fit_drive2) {
  if (!fit_drive1.angle_reliable || !fit_drive2.angle_reliable)
    throw std::invalid_argument("axis_angles: degenerate (near-circular) spot, angle unreliable");
  AxisAngles out;
  out.alpha = {fit_drive1.angle, fit_drive2.angle};
  out.uncertainty = {fit_drive1.angle_uncertainty, fit_drive2.angle_uncertainty};
  const double between = std::abs(wrap_half_turn(out.alpha[1] - out.alpha[0]));
  out.orthogonality_defect = std::abs(kPi / 2.0 - between);
  if (out.orthogonality_defect > kPi / 4.0)
    throw std::invalid_argument("axis_angles: orthogonality defect above 45 deg, axes not distinct");
  return out;
}

}  // namespace ionfb::imaging
