#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <random>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ionfb/common/errors.hpp"
#include "ionfb/common/rng.hpp"
#include "ionfb/common/units.hpp"
#include "ionfb/detection/knife_edge.hpp"
#include "ionfb/sim/drive.hpp"
#include "ionfb/spectral/calibration.hpp"
#include "ionfb/spectral/lorentzian.hpp"
#include "ionfb/spectral/saturation.hpp"
#include "ionfb/spectral/welch.hpp"

using namespace ionfb;
using namespace ionfb::spectral;

namespace {

const double kMass = kYb174Mass;

Spectrum model_spectrum(const LorentzianFit& p, double f_lo, double f_hi, double df) {
  Spectrum s;
  for (double f = f_lo; f <= f_hi; f += df) {
    s.freqs.push_back(f);
    s.values.push_back(motion_psd(f, p, kMass));
  }
  s.rbw = 1.5 * df;
  s.calibrated = true;
  return s;
}

LorentzianFit default_line() {
  LorentzianFit p;
  p.temperature = 1.95e-3;
  p.omega = hz_to_rad(455e3);
  p.gamma = hz_to_rad(500.0);
  p.offset = 2e-21;
  return p;
}

}  // namespace

TEST_CASE("Welch: Parseval and tone power") {
  const double fs = 1e6;
  Engine rng = make_engine(2, Stream::kSynthetic);
  std::normal_distribution<double> g(0.0, 0.3);
  const double a = 0.05, f_tone = 123.4e3;
  std::vector<double> x(1 << 20);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = g(rng) + a * std::sin(kTwoPi * f_tone * i / fs);
  WelchOptions opt;
  opt.segment_length = 1 << 14;
  const auto s = welch_psd(x, fs, opt);
  double var = 0.0;
  for (double v : x) var += v * v;
  var /= static_cast<double>(x.size());
  CHECK(s.integrate(0.0, fs / 2) == doctest::Approx(var).epsilon(0.02));
  CHECK(s.rbw == doctest::Approx(1.5 * fs / opt.segment_length).epsilon(1e-9));

  const auto tone = tone_power(s, f_tone);
  CHECK(tone.power == doctest::Approx(a * a / 2).epsilon(0.02));
  CHECK(tone.peak_height * s.rbw == doctest::Approx(tone.power).epsilon(1e-12));
  CHECK(tone.background == doctest::Approx(2 * 0.09 / fs).epsilon(0.1));

  std::vector<double> shrt(100, 0.0);
  CHECK_THROWS_AS(welch_psd(shrt, fs, opt), std::invalid_argument);
}

TEST_CASE("segment length for a target resolution bandwidth") {
  const double fs = 5.6875e6;
  const auto n = segment_length_for_rbw(fs, 50.0);
  CHECK(n == 131072u);
  CHECK(1.5 * fs / n == doctest::Approx(65.09).epsilon(1e-3));
}

TEST_CASE("spectrum CSV round trip") {
  auto s = model_spectrum(default_line(), 450e3, 460e3, 100.0);
  s.scale = 3.5e-14;
  std::stringstream ss;
  write_spectrum_csv(ss, s);
  const auto back = read_spectrum_csv(ss);
  CHECK(back.size() == s.size());
  CHECK(back.rbw == doctest::Approx(s.rbw));
  CHECK(back.calibrated);
  CHECK(back.scale == doctest::Approx(s.scale));
  CHECK(back.values[17] == doctest::Approx(s.values[17]).epsilon(1e-9));
}

TEST_CASE("measure_slope") {
  const detection::OpticalConfig o;
  auto scan = [&](double cosine) {
    std::vector<double> pos, val;
    for (double p = -0.3e-6; p <= 0.3e-6 + 1e-15; p += 5e-9) {
      pos.push_back(p);
      val.push_back(2.0 * detection::knife_transmission(p * cosine, o.magnification, o.spot_sigma));
    }
    return std::pair{pos, val};
  };
  SUBCASE("default geometry gives 4.46 per micrometre") {
    const auto [pos, val] = scan(1.0);
    const auto r = measure_slope(pos, val);
    CHECK(r.slope * 1e-6 == doctest::Approx(4.46).epsilon(0.03));
    CHECK(r.points_used >= 3);
  }
  SUBCASE("with Poisson noise on the counts") {
    Engine rng = make_engine(4, Stream::kScan);
    auto [pos, val] = scan(1.0);
    for (double& v : val) {
      std::poisson_distribution<int> pd(v * 2e4);
      v = pd(rng) / 2e4;
    }
    const auto r = measure_slope(pos, val);
    CHECK(r.slope * 1e-6 == doctest::Approx(4.46).epsilon(0.03));
    CHECK(std::abs(r.slope * 1e-6 - 4.46) < 3.0 * r.uncertainty * 1e-6 + 0.02);
  }
  SUBCASE("scan at 45 degrees") {
    const auto [pos, val] = scan(std::sqrt(0.5));
    const auto perp = measure_slope(scan(1.0).first, scan(1.0).second);
    const auto raw = measure_slope(pos, val);
    CHECK(raw.slope == doctest::Approx(perp.slope * std::sqrt(0.5)).epsilon(1e-3));
    const auto corrected = measure_slope(pos, val, std::sqrt(0.5));
    CHECK(corrected.slope == doctest::Approx(perp.slope).epsilon(1e-3));
    CHECK(corrected.raw_slope == doctest::Approx(raw.slope).epsilon(1e-12));
  }
  SUBCASE("flat counts") {
    std::vector<double> pos, val;
    for (int i = -20; i <= 20; ++i) pos.push_back(i * 5e-9), val.push_back(1.0);
    CHECK_THROWS_WITH_AS(measure_slope(pos, val), doctest::Contains("consistent with zero"),
                         NumericalError);
  }
}

TEST_CASE("correlate_drive") {
  const double wd = hz_to_rad(458e3), r0 = 1e6, duration = 0.1;
  const sim::CoherentDrive drive(1.0, wd, 0.0, {1.0, 0.0});
  const auto zc = drive.zero_crossings(0.0, duration);
  auto events = [&](double depth, std::uint64_t seed) {
    // Thinning of a homogeneous process at the peak rate.
    Engine rng = make_engine(seed, Stream::kSynthetic);
    std::exponential_distribution<double> gap(r0 * (1 + depth));
    std::uniform_real_distribution<double> u;
    std::vector<double> t;
    for (double x = gap(rng); x < duration; x += gap(rng))
      if (u(rng) * (1 + depth) < 1 + depth * std::sin(wd * x)) t.push_back(x);
    return t;
  };
  SUBCASE("unmodulated events") {
    const auto r = correlate_drive(events(0.0, 1), zc);
    CHECK(r.amplitude < 3.0 * r.uncertainty);
    CHECK_FALSE(r.significant);
    CHECK(r.events > 90000);
  }
  SUBCASE("10 percent modulation") {
    const auto r = correlate_drive(events(0.1, 2), zc);
    CHECK(r.amplitude == doctest::Approx(0.10).epsilon(0.05));
    CHECK(r.significant);
    CHECK(std::abs(std::remainder(r.phase, kTwoPi)) < 0.1);
    double mean = 0.0;
    for (double h : r.histogram) mean += h;
    CHECK(mean / static_cast<double>(r.histogram.size()) == doctest::Approx(1.0));
  }
  SUBCASE("too few events") {
    std::vector<double> few{1e-6, 2e-6, 3e-6};
    CHECK_THROWS_AS(correlate_drive(few, zc), NumericalError);
  }
}

TEST_CASE("calibrate_spectrum") {
  Spectrum raw;
  raw.freqs = {1.0, 2.0, 3.0};
  raw.values = {1.0, 4.0, 2.0};
  raw.rbw = 1.5;
  const auto zero = calibrate_spectrum(raw, 10.0, 0.0);
  for (double v : zero.values) CHECK(v == 0.0);
  CHECK(zero.calibrated);

  const auto a = calibrate_spectrum(raw, 10.0, 30e-9);
  const auto b = calibrate_spectrum(raw, 10.0, 60e-9);
  const auto c = calibrate_spectrum(raw, 20.0, 30e-9);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    CHECK(b.values[i] == doctest::Approx(4.0 * a.values[i]).epsilon(1e-12));
    CHECK(c.values[i] == doctest::Approx(0.5 * a.values[i]).epsilon(1e-12));
    CHECK(a.values[i] == doctest::Approx(raw.values[i] * 0.5 * 9e-16 / (10.0 * 1.5)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(calibrate_spectrum(raw, 1.0, 30e-9, 2.0), NumericalError);
  CHECK_THROWS_AS(calibrate_spectrum(a, 10.0, 30e-9), std::invalid_argument);
  CHECK(CalibrationResult::displacement(0.15, -4.0e6) == doctest::Approx(0.15 / 4.0e6));
}

TEST_CASE("calibration scale maps a tone to its displacement variance") {
  // A tone of amplitude d (m) seen through slope k reads k*d in raw units;
  // its calibrated power must be d^2/2.
  const double fs = 1e6, k = 4.46e6, d = 40e-9;
  std::vector<double> x(1 << 18);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = k * d * std::sin(kTwoPi * 100e3 * i / fs);
  WelchOptions opt;
  opt.segment_length = 1 << 12;
  const auto raw = welch_psd(x, fs, opt);
  const auto tone = tone_power(raw, 100e3);
  const auto cal = calibrate_spectrum(raw, tone.peak_height, d);
  CHECK(cal.integrate(90e3, 110e3) == doctest::Approx(d * d / 2).epsilon(0.01));
  CHECK(cal.scale == doctest::Approx(1.0 / (k * k)).epsilon(0.01));
}

TEST_CASE("Lorentzian fit of its own model") {
  const auto truth = default_line();
  const auto s = model_spectrum(truth, 440e3, 470e3, 25.0);
  const auto w = make_fit_window(s, 455e3, 10e3);
  const auto init = initial_guess(s, w, kMass);
  CHECK(init.omega == doctest::Approx(truth.omega).epsilon(1e-4));
  CHECK(init.gamma == doctest::Approx(truth.gamma).epsilon(0.2));
  const auto fit = fit_motion_psd(s, w, kMass, init);
  CHECK(fit.converged);
  CHECK(fit.temperature == doctest::Approx(truth.temperature).epsilon(1e-6));
  CHECK(fit.omega == doctest::Approx(truth.omega).epsilon(1e-6));
  CHECK(fit.gamma == doctest::Approx(truth.gamma).epsilon(1e-6));
  CHECK(fit.offset == doctest::Approx(truth.offset).epsilon(1e-6));
  for (double u : fit.uncertainty) CHECK(u >= 0.0);

  // Fitted area, integrated numerically, against k_B T / (m w^2).
  LorentzianFit line = fit;
  line.offset = 0.0;
  using boost::math::quadrature::gauss_kronrod;
  auto f = [&](double hz) { return motion_psd(hz, line, kMass); };
  const double f0 = rad_to_hz(fit.omega);
  double area = 0.0;
  const double edges[] = {0.0, f0 - 5e4, f0 - 2e3, f0, f0 + 2e3, f0 + 5e4, 3 * f0};
  for (std::size_t i = 0; i + 1 < std::size(edges); ++i)
    area += gauss_kronrod<double, 61>::integrate(f, edges[i], edges[i + 1], 15, 1e-12);
  area += gauss_kronrod<double, 61>::integrate(f, 3 * f0, std::numeric_limits<double>::infinity(), 15,
                                               1e-12);
  CHECK(area / (kBoltzmann / (kMass * fit.omega * fit.omega)) ==
        doctest::Approx(fit.temperature).epsilon(0.01));
}

TEST_CASE("Lorentzian fit with the offset held at a known floor") {
  auto truth = default_line();
  truth.temperature = 0.4e-3;
  truth.gamma = hz_to_rad(6e3);
  auto s = model_spectrum(truth, 300e3, 800e3, 50.0);
  const auto floor = estimate_floor(s, 1.25 * 455e3, 1.75 * 455e3);
  // The line's own wings sit well below 1% of the floor there.
  CHECK(floor.level == doctest::Approx(truth.offset).epsilon(0.01));
  const auto w = make_fit_window(s, 455e3, 10e3);
  auto init = initial_guess(s, w, kMass);
  init.offset = truth.offset;
  const auto fit = fit_motion_psd_lines(s, w, kMass, {init}, true).front();
  CHECK(fit.offset == truth.offset);
  CHECK(fit.uncertainty[3] == 0.0);
  CHECK(fit.temperature == doctest::Approx(truth.temperature).epsilon(1e-6));
  CHECK(fit.gamma == doctest::Approx(truth.gamma).epsilon(1e-6));
}

TEST_CASE("joint fit of two overlapping lines") {
  auto a = default_line();
  a.omega = hz_to_rad(450e3);
  auto b = default_line();
  b.temperature = 0.8e-3;
  Spectrum s = model_spectrum(a, 440e3, 465e3, 25.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    LorentzianFit bl = b;
    bl.offset = 0.0;
    s.values[i] += motion_psd(s.freqs[i], bl, kMass);
  }
  std::vector<LorentzianFit> init;
  for (double f : {450e3, 455e3}) {
    const auto w = make_fit_window(s, f, 2.4e3, f == 450e3 ? 455e3 : 450e3);
    init.push_back(initial_guess(s, w, kMass));
  }
  const FitWindow all{442e3, 463e3, {}};
  const auto fits = fit_motion_psd_lines(s, all, kMass, init);
  REQUIRE(fits.size() == 2);
  CHECK(fits[0].temperature == doctest::Approx(a.temperature).epsilon(1e-5));
  CHECK(fits[1].temperature == doctest::Approx(b.temperature).epsilon(1e-5));
  CHECK(fits[0].offset == doctest::Approx(a.offset).epsilon(1e-5));
}

TEST_CASE("fit window excludes the calibration tone") {
  const auto truth = default_line();
  const auto s = model_spectrum(truth, 440e3, 470e3, 25.0);
  const auto w = make_fit_window(s, 455e3, 10e3, 0.0, 8.0, 2e3, 40e3);
  // 8 FWHM of a 1 kHz line; the FWHM is read off the sampled spectrum, so
  // only to within a few bins of 25 Hz.
  CHECK(w.f_max - w.f_min == doctest::Approx(8e3).epsilon(0.15));
  FitWindow ex = w;
  ex.exclusions.push_back({457.5e3, 458.5e3});
  CHECK_FALSE(ex.contains(458e3));
  CHECK(ex.contains(455e3));
}

TEST_CASE("saturation law") {
  const double t0 = 0.99e-3, rmax = 19.04e3;
  CHECK(saturation_temperature(0.0, t0, rmax) == doctest::Approx(t0));
  CHECK(saturation_temperature(rmax / 2, t0, rmax) == doctest::Approx(1.98e-3));

  SUBCASE("recovery from noisy synthetic data") {
    int inside = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      Engine rng = make_engine(seed, Stream::kSynthetic);
      std::normal_distribution<double> noise(0.0, 0.05);
      std::vector<double> r, t, e;
      for (double s : {0.0, 0.25, 0.5, 1.0, 2.0, 3.0}) {
        const double rate = rmax * s / (1 + s);
        const double tt = saturation_temperature(rate, t0, rmax);
        r.push_back(rate);
        t.push_back(tt * (1 + noise(rng)));
        e.push_back(0.05 * tt);
      }
      const auto fit = fit_saturation_curve(r, t, e);
      if (std::abs(fit.t0 - t0) <= 2 * fit.t0_uncertainty &&
          std::abs(fit.rate_max - rmax) <= 2 * fit.rate_max_uncertainty)
        ++inside;
    }
    // Joint 2-sigma coverage is ~0.9 per draw.
    CHECK(inside >= 15);
  }
  SUBCASE("errors") {
    const std::vector<double> r{0, 1, 2}, t{1, 2, 3};
    CHECK_THROWS_AS(fit_saturation_curve(r, t), std::invalid_argument);
    // Data that diverges at 10e3 but is cold again at 12e3: no R_max above
    // all rates describes it.
    const std::vector<double> r2{0.0, 5e3, 9e3, 9.9e3, 12e3};
    std::vector<double> t2;
    for (double x : {0.0, 5e3, 9e3, 9.9e3}) t2.push_back(saturation_temperature(x, t0, 10e3));
    t2.push_back(3.0 * t0);
    CHECK_THROWS_AS(fit_saturation_curve(r2, t2), NumericalError);
  }
}
