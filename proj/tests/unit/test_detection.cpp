#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <limits>
#include <vector>

#include "ionfb/common/rng.hpp"
#include "ionfb/common/units.hpp"
#include "ionfb/detection/knife_edge.hpp"
#include "ionfb/detection/photon_counting.hpp"
#include "ionfb/sim/trap.hpp"
#include "ionfb/spectral/welch.hpp"

using namespace ionfb;
using namespace ionfb::detection;

TEST_CASE("saturated scattering rate") {
  CHECK(scattering_rate(0.0, 19.04e3) == 0.0);
  CHECK(scattering_rate(1.0, 19.04e3) == doctest::Approx(9.52e3));
  CHECK(scattering_rate(1e12, 19.04e3) == doctest::Approx(19.04e3).epsilon(1e-9));
}

TEST_CASE("knife-edge projections") {
  const sim::TrapConfig trap;  // orthogonal axes, axis 2 at 60.24 deg
  // Orientation A: normal along axis 2.
  auto p = knife_projection(trap.axis_angles, knife_angle_for_normal(trap.axis_angles[1]));
  CHECK(p[1] == doctest::Approx(1.0));
  CHECK(std::abs(p[0]) < 1e-12);

  // Measured-style angles, 0.89 deg from orthogonal: residual projection of axis 1 is cos(89.11 deg).
  const std::array<double, 2> skewed{deg_to_rad(-28.87), deg_to_rad(60.24)};
  p = knife_projection(skewed, knife_angle_for_normal(skewed[1]));
  CHECK(p[1] == doctest::Approx(1.0));
  CHECK(p[0] == doctest::Approx(std::cos(deg_to_rad(89.11))).epsilon(1e-9));
  CHECK(std::abs(p[0]) <= 0.02);

  // Orientation B: normal on the bisector.
  const double bisector = 0.5 * (trap.axis_angles[0] + trap.axis_angles[1]);
  p = knife_projection(trap.axis_angles, knife_angle_for_normal(bisector));
  CHECK(p[0] == doctest::Approx(std::sqrt(0.5)));
  CHECK(p[1] == doctest::Approx(std::sqrt(0.5)));

  const std::array<double, 2> x{3e-9, -2e-9};
  CHECK(project_onto_knife_normal(x, trap.axis_angles, knife_angle_for_normal(bisector)) ==
        doctest::Approx(std::sqrt(0.5) * 1e-9));
}

TEST_CASE("knife-edge transmission") {
  const OpticalConfig o;
  const double m = o.magnification, s = o.spot_sigma;
  CHECK(knife_transmission(0.0, m, s) == 0.5);
  CHECK(knife_transmission(1e-3, m, s) == doctest::Approx(1.0));
  CHECK(knife_transmission(-1e-3, m, s) == doctest::Approx(0.0));

  const double h = 1e-12;
  const double slope = (knife_transmission(h, m, s) - knife_transmission(-h, m, s)) / (2 * h);
  CHECK(slope == doctest::Approx(m / (s * std::sqrt(2.0 * kPi))).epsilon(1e-6));
  // The normalized rate is twice the transmitted fraction.
  CHECK(2.0 * slope == doctest::Approx(4.46e6).epsilon(1e-6));
  CHECK(o.normalized_slope() == doctest::Approx(4.46e6).epsilon(1e-9));

  double prev = -1.0;
  for (int i = -400; i <= 400; ++i) {
    const double d = i * 1e-9;
    const double t = knife_transmission(d, m, s);
    CHECK(t + knife_transmission(-d, m, s) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(t > prev);
    prev = t;
    if (std::abs(m * d / s) < 0.2) {
      const double lin = knife_transmission_linear(d, m, s);
      CHECK(std::abs(lin - t) / t < 3e-3);
    }
  }
}

TEST_CASE("Poisson photon counts") {
  Engine rng = make_engine(11, Stream::kSynthetic);
  const std::vector<double> zero(1000, 0.0);
  for (auto n : sample_photon_counts(zero, 1e-6, rng)) CHECK(n == 0u);

  const std::size_t n = 10'000'000;
  const std::vector<double> rate(n, 1e5);
  const auto counts = sample_photon_counts(rate, 1e-6, rng);
  double sum = 0.0;
  for (auto c : counts) sum += c;
  const double mean = sum / static_cast<double>(n);
  CHECK(std::abs(mean - 0.1) < 3.0 * std::sqrt(0.1 / static_cast<double>(n)));

  // Flat shot-noise floor of the normalized signal: 2 / (lambda fs), lambda counts per bin.
  PhotocurrentTrace tr;
  tr.sample_rate = 1e6;
  tr.samples = counts;
  spectral::WelchOptions opt;
  opt.segment_length = 1 << 14;
  const auto psd = spectral::welch_psd(tr, opt);
  const double expected = 2.0 / (mean * tr.sample_rate);
  double acc = 0.0;
  std::size_t bins = 0;
  for (std::size_t k = 5; k < psd.size(); ++k) acc += psd.values[k], ++bins;
  CHECK(acc / static_cast<double>(bins) == doctest::Approx(expected).epsilon(0.10));
  // Also flat: low and high halves agree.
  const auto lo = psd.integrate(1e3, 2.5e5) / 2.49e5, hi = psd.integrate(2.5e5, 4.99e5) / 2.49e5;
  CHECK(lo == doctest::Approx(hi).epsilon(0.05));
}

TEST_CASE("trace helpers") {
  PhotocurrentTrace tr;
  tr.sample_rate = 100.0;
  tr.samples = {1, 3, 2, 2, 0, 4};
  CHECK(tr.mean_counts() == doctest::Approx(2.0));
  const auto u = normalized_signal(tr);
  CHECK(u[0] == doctest::Approx(-0.5));
  CHECK(u[5] == doctest::Approx(1.0));
  const auto d = decimate(tr, 2);
  CHECK(d.samples == std::vector<std::uint32_t>{4, 4, 4});
  CHECK(d.sample_rate == doctest::Approx(50.0));
  CHECK_THROWS_AS(check_nyquist(tr, 60.0), std::invalid_argument);
  CHECK_NOTHROW(check_nyquist(tr, 40.0));
}

TEST_CASE("optical configuration validation") {
  OpticalConfig o;
  CHECK_NOTHROW(o.validate());
  o.collection_efficiency = 1.5;
  CHECK_THROWS_AS(o.validate(), std::invalid_argument);
  OpticalConfig r;
  r.rate_370_max = 0.0;
  CHECK_THROWS_AS(r.validate(), std::invalid_argument);
}
