// Acceptance checks. Usage: acceptance <1..7 | all>. One PASS/FAIL line per
// criterion; exit status 0 only if every requested criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include "ionfb/common/errors.hpp"
#include "ionfb/common/rng.hpp"
#include "ionfb/common/units.hpp"
#include "ionfb/detection/knife_edge.hpp"
#include "ionfb/experiments/closed_loop.hpp"
#include "ionfb/experiments/pipeline.hpp"
#include "ionfb/sim/thermometer.hpp"
#include "ionfb/spectral/calibration.hpp"
#include "ionfb/spectral/lorentzian.hpp"
#include "ionfb/spectral/saturation.hpp"
#include "ionfb/spectral/welch.hpp"

using namespace ionfb;
using namespace ionfb::experiments;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

std::string mk(double kelvin) { return fmt::format("{:.4g} mK", kelvin * 1e3); }

// Calibrated spectrum integrated over +-half around the line, floor removed.
double line_area(const spectral::Spectrum& s, double f, double half, double floor_level) {
  return s.integrate(f - half, f + half) - floor_level * 2.0 * half;
}

// 1. Doppler baseline through the full pipeline.
Outcome doppler_baseline() {
  const auto t0 = Clock::now();
  const RunConfig cfg;
  const auto r = run_thermometry(cfg);
  const double t = r.modes.at(0).temperature, dt = seconds_since(t0);
  const double target = cfg.t0 * (1.0 + cfg.saturation());
  const bool ok = r.modes[0].spectral && rel(t, target) <= 0.10 && dt <= 120.0;
  return {ok, fmt::format("T = {} +- {} (target {} +-10%), equipartition {}, {:.0f} s (<= 120 s)", mk(t),
                          mk(r.modes[0].uncertainty), mk(target), mk(r.modes[0].equipartition.temperature),
                          dt)};
}

// 2. Spectral vs velocity thermometry over random (T via s, w, gamma), no feedback.
Outcome equipartition_agreement() {
  const auto t0 = Clock::now();
  Engine rng = make_engine(2, Stream::kSynthetic);
  std::uniform_real_distribution<double> sat(0.25, 3.0), freq(350e3, 550e3), width(300.0, 1000.0);
  int good = 0;
  double worst = 0.0;
  std::string worst_case;
  for (int i = 0; i < 20; ++i) {
    RunConfig cfg;
    cfg.set_saturation(sat(rng));
    const double f = freq(rng), g = width(rng);
    cfg.trap.omega = {hz_to_rad(f - 5e3), hz_to_rad(f)};
    cfg.trap.gamma = {hz_to_rad(g), hz_to_rad(g)};
    cfg.seed = 100 + static_cast<std::uint64_t>(i);
    const auto m = run_thermometry(cfg).modes.at(0);
    const double d = rel(m.temperature, m.equipartition.temperature);
    if (m.spectral && d <= 0.10) ++good;
    if (d > worst) {
      worst = d;
      worst_case = fmt::format("s = {:.2f}, f = {:.1f} kHz, gamma/2pi = {:.0f} Hz: {} vs {}", cfg.saturation(),
                               f * 1e-3, g, mk(m.temperature), mk(m.equipartition.temperature));
    }
  }
  const double dt = seconds_since(t0);
  return {good == 20 && dt <= 600.0,
          fmt::format("{}/20 within 10%; worst {:.1f}% ({}); {:.0f} s (<= 600 s)", good, 100 * worst, worst_case, dt)};
}

// 3. Gain sweep shape, sub-Doppler-limit minimum and phase robustness (orientation A).
Outcome gain_sweep() {
  const auto t0 = Clock::now();
  RunConfig cfg;
  const auto rows = run_gain_sweep(cfg, cfg.sweep.gains).for_axis(1);
  const double sweep_time = seconds_since(t0);
  std::size_t imin = 0;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].temperature < rows[imin].temperature) imin = i;
  const double t_zero = rows.front().temperature, t_min = rows[imin].temperature;
  const bool interior = imin > 0 && imin + 1 < rows.size();
  const double limit = kHbar * cfg.linewidth / (2.0 * kBoltzmann);

  double worst = 0.0;
  std::string phases;
  for (double deg : {-10.0, 10.0}) {
    RunConfig c = cfg;
    c.loops[1].gain = rows[imin].x;
    c.loops[1].phase_offset = deg_to_rad(deg);
    ThermometryOptions opt;
    opt.point = 1000 + (deg > 0 ? 1 : 0);
    const double t = run_thermometry(c, opt).modes.at(0).temperature;
    worst = std::max(worst, rel(t, t_min));
    phases += fmt::format(" {:+.0f} deg: {};", deg, mk(t));
  }
  std::string curve;
  for (const auto& r : rows) curve += fmt::format(" {:g}:{:.3g}", r.x, r.temperature * 1e3);
  const bool ok = interior && t_min <= 0.5 * t_zero && t_min < limit && worst < 0.15 && sweep_time <= 900.0;
  return {ok, fmt::format("T(g)/mK{}; min {} at g = {:g} ({}), T_min/T(0) = {:.2f} (<= 0.5), limit {};{} "
                          "max change {:.1f}% (< 15%); sweep {:.0f} s (<= 900 s)",
                          curve, mk(t_min), rows[imin].x, interior ? "interior" : "at an end", t_min / t_zero,
                          mk(limit), phases, 100 * worst, sweep_time)};
}

// 4. Saturation law on synthetic data; feedback minima below the no-feedback series.
Outcome saturation_law() {
  const auto t0 = Clock::now();
  const double t_true = 0.99e-3, r_true = 19.04e3;
  Engine rng = make_engine(4, Stream::kSynthetic);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<double> r, t, e;
  for (double s : {0.0, 0.25, 0.5, 1.0, 2.0, 3.0, 5.0}) {
    const double rate = r_true * s / (1.0 + s);
    const double tt = spectral::saturation_temperature(rate, t_true, r_true);
    r.push_back(rate);
    t.push_back(tt * (1.0 + noise(rng)));
    e.push_back(0.05 * tt);
  }
  const auto fit = spectral::fit_saturation_curve(r, t, e);
  const bool fit_ok = std::abs(fit.t0 - t_true) <= 2 * fit.t0_uncertainty &&
                      std::abs(fit.rate_max - r_true) <= 2 * fit.rate_max_uncertainty;

  // Feedback needs photons, so s = 0 is left out of the simulated series.
  const RunConfig cfg;
  const auto sweep = run_saturation_sweep(cfg, {0.25, 0.5, 1.0, 2.0, 3.0});
  bool below = true, widening = true;
  double prev_gap = -1.0;
  std::string rows;
  for (const auto& row : sweep.rows) {
    const double gap = row.t_nofb - row.t_min;
    below = below && row.t_min < row.t_nofb;
    widening = widening && gap > prev_gap;
    prev_gap = gap;
    rows += fmt::format(" s={:g}: {:.3g}/{:.3g} mK;", row.saturation, row.t_nofb * 1e3, row.t_min * 1e3);
  }
  const double dt = seconds_since(t0);
  return {fit_ok && below && widening && dt <= 600.0,
          fmt::format("fit T0 = {:.4g} +- {:.2g} mK (0.99), R_max = {:.4g} +- {:.2g} /ms (19.04); "
                      "T_nofb/T_min{} minima below: {}, gap widening: {}; {:.0f} s (<= 600 s)",
                      fit.t0 * 1e3, fit.t0_uncertainty * 1e3, fit.rate_max * 1e-3, fit.rate_max_uncertainty * 1e-3,
                      rows, below ? "yes" : "no", widening ? "yes" : "no", dt)};
}

// 5. Calibration roundtrip: static slope, drive amplitude, calibrated area.
Outcome calibration_roundtrip() {
  const auto t0 = Clock::now();
  const RunConfig cfg;
  const auto e = make_experiment(cfg);
  Engine rng = make_engine(5, Stream::kScan);
  const std::vector<double> still(4096, 0.0);
  const auto scan = scan_knife_edge(still, e.setup.optics, detection::Channel::kTransmitted, cfg.calibration, rng);
  const double slope = std::abs(spectral::measure_slope(scan.positions, scan.normalized).slope);

  const auto r = run_thermometry(cfg);
  const auto& m = r.modes.at(0);
  const double w = cfg.trap.omega[1];
  const double expected = kBoltzmann * m.equipartition.temperature / (cfg.trap.mass * w * w);
  const double area = line_area(r.calibrated.at(0), rad_to_hz(w), 20e3, m.fit.offset);
  const double dt = seconds_since(t0);
  const double drive = cfg.calibration.drive_displacement;
  const bool ok = rel(slope, 4.46e6) <= 0.03 && rel(m.drive_displacement, drive) <= 0.05 &&
                  rel(area, expected) <= 0.10 && dt <= 300.0;
  return {ok, fmt::format("slope {:.4g} /um (4.46 +-3%), drive {:.4g} nm ({:.4g} +-5%), area {:.4g} vs "
                          "k T_eq/(m w^2) {:.4g} nm^2 ({:+.1f}%, +-10%); {:.0f} s (<= 300 s)",
                          slope * 1e-6, m.drive_displacement * 1e9, drive * 1e9, area * 1e18, expected * 1e18,
                          100 * (area / expected - 1), dt)};
}

// 6. Axis angles from synthetic driven images at 1e5 photons.
Outcome axis_finding() {
  const auto t0 = Clock::now();
  const RunConfig cfg;
  const auto r = run_axis_finding(cfg);
  const double a1 = rad_to_deg(r.angles.alpha[0]), a2 = rad_to_deg(r.angles.alpha[1]);
  const double dt = seconds_since(t0);
  const bool ok = std::abs(a1 + 28.87) <= 0.5 && std::abs(a2 - 60.24) <= 0.5 && dt <= 60.0 &&
                  cfg.axes.imaging.photons == 1e5;
  return {ok, fmt::format("alpha1 = {:.3f} deg (-28.87 +-0.5), alpha2 = {:.3f} deg (60.24 +-0.5), "
                          "defect {:.3f} deg; {:.1f} s (<= 60 s)",
                          a1, a2, rad_to_deg(r.angles.orthogonality_defect), dt)};
}

// 7. Analytic invariants.
Outcome invariants() {
  const auto t0 = Clock::now();
  const detection::OpticalConfig o;
  // erf response: symmetric about the edge and strictly increasing.
  double asym = 0.0;
  bool monotone = true;
  double prev = -1.0;
  for (int i = -2000; i <= 2000; ++i) {
    const double d = i * 0.5e-9;
    const double tr = detection::knife_transmission(d, o.magnification, o.spot_sigma);
    asym = std::max(asym, std::abs(tr + detection::knife_transmission(-d, o.magnification, o.spot_sigma) - 1.0));
    monotone = monotone && tr > prev;
    prev = tr;
  }
  const bool erf_ok = asym <= 2.0 * std::numeric_limits<double>::epsilon() && monotone;

  // Parseval for white noise.
  Engine rng = make_engine(7, Stream::kSynthetic);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<double> x(1 << 21);
  double var = 0.0;
  for (auto& v : x) v = 0.3 * n01(rng), var += v * v;
  var /= static_cast<double>(x.size());
  spectral::WelchOptions wo;
  wo.segment_length = 1 << 14;
  const auto psd = spectral::welch_psd(x, 1e6, wo);
  const double parseval = rel(psd.integrate(0.0, 0.5e6), var);

  // Line area of the motional density.
  spectral::LorentzianFit p;
  p.temperature = 1.95e-3;
  p.omega = hz_to_rad(455e3);
  p.gamma = hz_to_rad(500.0);
  const double mass = sim::TrapConfig{}.mass;
  const auto f = [&](double hz) { return spectral::motion_psd(hz, p, mass); };
  using boost::math::quadrature::gauss_kronrod;
  const double f0 = 455e3;
  const double area = gauss_kronrod<double, 61>::integrate(f, 0.0, f0, 15, 1e-12) +
                      gauss_kronrod<double, 61>::integrate(f, f0, std::numeric_limits<double>::infinity(), 15, 1e-12);
  const double area_err = rel(area, kBoltzmann * p.temperature / (mass * p.omega * p.omega));

  // Zero-gain loop and seed determinism.
  RunConfig cfg;
  auto e = make_experiment(cfg);
  SimulationRequest req;
  req.duration = 0.02;
  req.seed = 9;
  req.displacement_stride = 8;
  const auto with_loop = simulate_closed_loop(e.setup, req);
  const auto repeat = simulate_closed_loop(e.setup, req);
  e.setup.loops.clear();
  const auto without = simulate_closed_loop(e.setup, req);
  const bool identity = with_loop.velocities == without.velocities &&
                        with_loop.displacement == without.displacement &&
                        with_loop.out_loop.samples == without.out_loop.samples &&
                        with_loop.in_loop.samples == without.in_loop.samples;
  const bool determinism = with_loop.velocities == repeat.velocities &&
                           with_loop.in_loop.samples == repeat.in_loop.samples &&
                           with_loop.out_loop.samples == repeat.out_loop.samples;
  const double dt = seconds_since(t0);
  const bool ok = erf_ok && parseval <= 0.02 && area_err <= 0.01 && identity && determinism && dt <= 120.0;
  return {ok, fmt::format("erf max |T(d)+T(-d)-1| = {:.1e}, monotone {}; Parseval {:.2f}% (<= 2%); "
                          "line area {:.2e} (<= 1%); zero-gain identity {}; seed determinism {}; {:.1f} s (<= 120 s)",
                          asym, monotone ? "yes" : "no", 100 * parseval, area_err,
                          identity ? "bit-exact" : "DIFFERS", determinism ? "bit-exact" : "DIFFERS", dt)};
}

const char* kNames[] = {"",
                        "Doppler baseline",
                        "equipartition agreement",
                        "gain sweep",
                        "saturation law",
                        "calibration roundtrip",
                        "axis finding",
                        "analytic invariants"};

const std::function<Outcome()> kChecks[] = {nullptr,
                                            doppler_baseline,
                                            equipartition_agreement,
                                            gain_sweep,
                                            saturation_law,
                                            calibration_roundtrip,
                                            axis_finding,
                                            invariants};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  const std::string arg = argc > 1 ? argv[1] : "all";
  if (arg == "all") {
    for (int i = 1; i <= 7; ++i) which.push_back(i);
  } else {
    const int k = std::atoi(arg.c_str());
    if (k < 1 || k > 7) {
      std::fprintf(stderr, "usage: acceptance <1..7 | all>\n");
      return 2;
    }
    which.push_back(k);
  }
  bool all = true;
  for (int k : which) {
    Outcome o;
    try {
      o = kChecks[k]();
    } catch (const std::exception& ex) {
      o = {false, fmt::format("exception: {}", ex.what())};
    }
    fmt::print("{} criterion {} ({}): {}\n", o.pass ? "PASS" : "FAIL", k, kNames[k], o.detail);
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
