// End-to-end checks on short closed-loop runs.

#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "ionfb/common/errors.hpp"
#include "ionfb/common/units.hpp"
#include "ionfb/experiments/closed_loop.hpp"
#include "ionfb/experiments/pipeline.hpp"
#include "ionfb/sim/thermometer.hpp"

using namespace ionfb;
using namespace ionfb::experiments;

namespace {

RunConfig short_config() {
  RunConfig c;
  c.duration = 0.5;
  c.calibration.duration = 0.25;
  return c;
}

SimulationRecord run(const RunConfig& cfg, double duration, std::uint64_t seed = 1) {
  const auto e = make_experiment(cfg);
  SimulationRequest req;
  req.duration = duration;
  req.settle = cfg.settle_time();
  req.seed = seed;
  return simulate_closed_loop(e.setup, req);
}

double t_eq(const SimulationRecord& r, int axis, double mass) {
  return sim::equipartition_temperature(r.velocities[axis], mass).temperature;
}

}  // namespace

TEST_CASE("no feedback: Doppler temperature, calibration and spectral area") {
  const auto cfg = short_config();
  ThermometryOptions opt;
  opt.keep_records = true;
  const auto r = run_thermometry(cfg, opt);
  REQUIRE(r.modes.size() == 1);
  const auto& m = r.modes[0];
  REQUIRE(m.spectral);
  CHECK(m.axis == 1);
  // T_D = T0 (1 + s) = 1.95 mK.
  CHECK(m.temperature == doctest::Approx(1.95e-3).epsilon(0.10));
  CHECK(std::abs(m.temperature - m.equipartition.temperature) <
        3.0 * std::hypot(m.uncertainty, m.equipartition.standard_error) + 0.05 * m.temperature);
  // The correlation recovers the drive amplitude set on the open-loop response.
  CHECK(m.drive_displacement == doctest::Approx(cfg.calibration.drive_displacement).epsilon(0.05));
  // Slope from the scan under measurement conditions: the thermal motion blurs
  // the spot to sqrt(sigma^2 + M^2 <x^2>), lowering the static 4.46 /um.
  const double w = cfg.trap.omega[1];
  const double var = kBoltzmann * m.equipartition.temperature / (cfg.trap.mass * w * w);
  const double sig = cfg.optics.spot_sigma, mag = cfg.optics.magnification;
  const double blurred = 4.46e6 * sig / std::sqrt(sig * sig + mag * mag * var);
  CHECK(std::abs(r.slope.slope) == doctest::Approx(blurred).epsilon(0.03));
  // The calibrated line holds k T / (m w^2).
  const double f = rad_to_hz(w);
  const double floor_level = m.fit.offset;
  const auto& s = r.calibrated[0];
  const double area = s.integrate(f - 8e3, f + 8e3) - floor_level * 16e3;
  CHECK(area == doctest::Approx(var).epsilon(0.10));
}

TEST_CASE("no feedback: in-loop and out-of-loop detectors agree") {
  const auto cfg = short_config();
  ThermometryOptions in, out;
  in.channel = detection::Channel::kTransmitted;
  const auto a = run_thermometry(cfg, in).modes.at(0), b = run_thermometry(cfg, out).modes.at(0);
  CHECK(std::abs(a.temperature - b.temperature) < 3.0 * std::hypot(a.uncertainty, b.uncertainty));
}

TEST_CASE("s = 0: no photons, equipartition fallback at T0") {
  auto cfg = short_config();
  cfg.set_saturation(0.0);
  const auto r = run_thermometry(cfg);
  REQUIRE(r.modes.size() == 1);
  CHECK_FALSE(r.modes[0].spectral);
  CHECK(r.modes[0].temperature == doctest::Approx(cfg.t0).epsilon(0.10));
}

TEST_CASE("a zero-gain loop reproduces the open-loop trajectory bit for bit") {
  RunConfig cfg;
  cfg.loops[1].gain = 0.0;
  auto e = make_experiment(cfg);
  SimulationRequest req;
  req.duration = 0.01;
  req.seed = 4;
  req.displacement_stride = 16;
  const auto with_loop = simulate_closed_loop(e.setup, req);
  e.setup.loops.clear();
  const auto without = simulate_closed_loop(e.setup, req);
  CHECK(with_loop.velocities[1] == without.velocities[1]);
  CHECK(with_loop.displacement == without.displacement);
  CHECK(with_loop.out_loop.samples == without.out_loop.samples);
}

TEST_CASE("same seed, same run; different seeds differ") {
  RunConfig cfg;
  cfg.loops[1].gain = 1.0;
  const auto a = run(cfg, 0.01, 7), b = run(cfg, 0.01, 7), c = run(cfg, 0.01, 8);
  CHECK(a.velocities[1] == b.velocities[1]);
  CHECK(a.in_loop.samples == b.in_loop.samples);
  CHECK(a.velocities[1] != c.velocities[1]);
}

TEST_CASE("feedback phase: optimum cools, flipped by pi heats") {
  RunConfig cfg;
  const double m = cfg.trap.mass;
  const double t_off = t_eq(run(cfg, 0.3), 1, m);
  cfg.loops[1].gain = 0.05;
  const double t_cool = t_eq(run(cfg, 0.3), 1, m);
  cfg.loops[1].phase_offset = kPi;
  const double t_heat = t_eq(run(cfg, 0.3), 1, m);
  // Added damping +-0.5 gamma: T scales by gamma / (gamma +- G).
  CHECK(t_cool == doctest::Approx(t_off / 1.5).epsilon(0.15));
  CHECK(t_heat == doctest::Approx(t_off / 0.5).epsilon(0.15));
}

TEST_CASE("orientation B: both modes cooled, loops independent") {
  RunConfig cfg;
  cfg.orientation = Orientation::kB;
  const double m = cfg.trap.mass;
  const auto off = run(cfg, 0.3);
  cfg.loops[0].gain = 1.0;
  const auto one = run(cfg, 0.3);
  // Loop 1 is tuned to mode 1 and pushes along axis 1: mode 2 is untouched.
  CHECK(t_eq(one, 1, m) == doctest::Approx(t_eq(off, 1, m)).epsilon(0.20));
  CHECK(t_eq(one, 0, m) < 0.5 * t_eq(off, 0, m));
  cfg.loops[1].gain = 1.0;
  const auto both = run(cfg, 0.3);
  CHECK(t_eq(both, 0, m) < 0.5 * t_eq(off, 0, m));
  CHECK(t_eq(both, 1, m) < 0.5 * t_eq(off, 1, m));
}

TEST_CASE("high gain stays bounded") {
  RunConfig cfg;
  cfg.loops[1].gain = 4.0;
  SimulationRecord r;
  CHECK_NOTHROW(r = run(cfg, 0.1));
  CHECK(t_eq(r, 1, cfg.trap.mass) < 2.0 * cfg.t0 * (1 + cfg.saturation()));
}

TEST_CASE("axis finding from driven images") {
  RunConfig cfg;
  const auto r = run_axis_finding(cfg);
  CHECK_FALSE(r.fits[0].angle_reliable);
  CHECK(std::abs(rad_to_deg(r.angles.alpha[0]) + 28.87) < 0.5);
  CHECK(std::abs(rad_to_deg(r.angles.alpha[1]) - 60.24) < 0.5);
  auto doubled = cfg;
  doubled.axes.drive_amplitude *= 2.0;
  const auto d = run_axis_finding(doubled);
  CHECK(d.fits[1].major_width > 1.5 * r.fits[1].major_width);
  CHECK(d.fits[1].minor_width == doctest::Approx(r.fits[1].minor_width).epsilon(0.05));
}
