#include "ionfb/experiments/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "ionfb/common/errors.hpp"
#include "ionfb/experiments/parallel.hpp"
#include "ionfb/sim/drive.hpp"
#include "ionfb/spectral/welch.hpp"

namespace ionfb::experiments {

namespace {

double wrap_phase(double phase) {
  phase = std::remainder(phase, kTwoPi);
  if (phase <= -kPi) phase += kTwoPi;
  return phase;
}

struct NoiseModel {
  double a = 0.0;  // gamma k_B T_D
  double b = 0.0;  // m w^2 S_imp / 4
};

NoiseModel noise_model(const RunConfig& cfg, int axis) {
  const Experiment e = make_experiment(cfg);
  const double rate_in = 0.5 * e.setup.optics.rate_370();
  NoiseModel n;
  n.a = cfg.trap.gamma[axis] * kBoltzmann * e.setup.bath.temperature;
  if (!(rate_in > 0.0)) return n;
  const double coupling = e.unit_slope * e.projection[axis];
  if (!(std::abs(coupling) > 0.0)) return n;
  const double s_imp = (2.0 / rate_in) / (coupling * coupling);
  n.b = cfg.trap.mass * cfg.trap.omega[axis] * cfg.trap.omega[axis] * s_imp / 4.0;
  return n;
}

const detection::PhotocurrentTrace& channel_trace(const SimulationRecord& r, detection::Channel c) {
  return c == detection::Channel::kReflected ? r.out_loop : r.in_loop;
}

std::string run_context(const RunConfig& cfg, const ThermometryOptions& opt) {
  return fmt::format("thermometry run (seed {}, point {}, s = {:g}, orientation {}, gains {:g}/{:g})",
                     cfg.seed, opt.point, cfg.saturation(), orientation_name(cfg.orientation),
                     cfg.loops[0].gain, cfg.loops[1].gain);
}

ThermometryResult thermometry(const RunConfig& cfg, const ThermometryOptions& opt) {
  const Experiment e = make_experiment(cfg);
  const double mass = cfg.trap.mass;
  const double fs = e.setup.sample_rate();
  ThermometryResult out;

  SimulationRequest mreq;
  mreq.duration = cfg.duration;
  mreq.settle = cfg.settle_time();
  mreq.seed = cfg.seed;
  mreq.run = 2 * opt.point;
  mreq.velocity_stride = cfg.velocity_stride;
  mreq.displacement_stride = cfg.displacement_stride;
  SimulationRecord meas = simulate_closed_loop(e.setup, mreq);

  std::vector<ModeThermometry> modes;
  for (int j : e.modes) {
    ModeThermometry m;
    m.axis = j;
    m.equipartition = sim::equipartition_temperature(meas.velocities[j], mass);
    modes.push_back(m);
  }

  if (!(e.setup.optics.rate_370() > 0.0)) {
    // No detected photons: nothing to calibrate or fit.
    for (auto& m : modes) {
      m.spectral = false;
      m.temperature = m.equipartition.temperature;
      m.uncertainty = m.equipartition.standard_error;
    }
    out.modes = std::move(modes);
    if (opt.keep_records) out.measurement = std::move(meas);
    return out;
  }

  // Calibration run: tones just above each analysed mode, loops open.
  SimulationSetup open = e.setup;
  for (auto& l : open.loops) l.gain = 0.0;
  SimulationRequest dreq;
  dreq.duration = cfg.calibration.duration;
  dreq.settle = cfg.settle_time();
  dreq.seed = cfg.seed;
  dreq.run = 2 * opt.point + 1;
  dreq.velocity_stride = 0;
  dreq.displacement_stride = cfg.displacement_stride;
  dreq.record_events = true;
  dreq.event_channel = opt.channel;
  for (auto& m : modes) {
    const int j = m.axis;
    const double w = cfg.trap.omega[j], g = cfg.trap.gamma[j];
    m.drive_frequency = rad_to_hz(w) + std::max(cfg.calibration.drive_offset, 6.0 * rad_to_hz(g));
    const double wd = hz_to_rad(m.drive_frequency);
    const double force = mass * cfg.calibration.drive_displacement *
                         std::hypot(w * w - wd * wd, g * wd);
    dreq.drives.emplace_back(force, wd, 0.0, cfg.trap.axis(j));
  }
  SimulationRecord drive = simulate_closed_loop(open, dreq);

  spectral::WelchOptions wopt;
  wopt.segment_length = spectral::segment_length_for_rbw(fs, cfg.spectral.rbw);
  out.raw = spectral::welch_psd(channel_trace(meas, opt.channel), wopt);
  out.drive_raw = spectral::welch_psd(channel_trace(drive, opt.channel), wopt);

  Engine scan_rng = make_engine(cfg.seed, Stream::kScan, opt.point);
  out.scan = scan_knife_edge(meas.displacement, e.setup.optics, opt.channel, cfg.calibration, scan_rng);
  out.slope = spectral::measure_slope(out.scan.positions, out.scan.normalized);
  const KnifeScan drive_scan =
      scan_knife_edge(drive.displacement, e.setup.optics, opt.channel, cfg.calibration, scan_rng);
  const spectral::SlopeResult drive_slope =
      spectral::measure_slope(drive_scan.positions, drive_scan.normalized);

  for (std::size_t k = 0; k < modes.size(); ++k) {
    auto& m = modes[k];
    const double p = e.projection[m.axis];
    const auto tone = spectral::tone_power(out.drive_raw, m.drive_frequency);
    const auto crossings = dreq.drives[k].zero_crossings(drive.t_start, drive.t_end);
    m.correlation = spectral::correlate_drive(drive.events, crossings, cfg.calibration.correlation_bins);
    if (!m.correlation.significant)
      throw NumericalError(fmt::format("calibration tone on axis {} not resolved (A_corr = {:.3g} +- {:.3g})",
                                       m.axis + 1, m.correlation.amplitude, m.correlation.uncertainty));
    auto& c = m.calibration;
    c.slope = out.slope.slope * p;
    c.slope_uncertainty = out.slope.uncertainty * std::abs(p);
    c.a_corr = m.correlation.amplitude;
    c.a_corr_uncertainty = m.correlation.uncertainty;
    c.a_displ = spectral::CalibrationResult::displacement(c.a_corr, c.slope);
    const double rel = std::hypot(c.a_corr_uncertainty / c.a_corr, c.slope_uncertainty / c.slope);
    c.a_displ_uncertainty = c.a_displ * rel;
    c.peak_height = tone.peak_height;
    out.calibrated.push_back(spectral::calibrate_spectrum(out.raw, tone.peak_height, c.a_displ));
    c.scale = out.calibrated.back().scale;
    c.scale_uncertainty = 2.0 * rel * c.scale;
    m.drive_displacement = c.a_corr / std::abs(drive_slope.slope * p);
  }

  // Fit. Overlapping modes (orientation B) are fitted jointly in the first
  // mode's calibration; the other line's temperature is rescaled afterwards.
  const auto& sp = cfg.spectral;
  const spectral::Spectrum& base = out.calibrated.front();
  std::vector<spectral::LorentzianFit> init;
  double lo = 0.0, hi = 0.0;
  for (std::size_t k = 0; k < modes.size(); ++k) {
    const double f = rad_to_hz(cfg.trap.omega[modes[k].axis]);
    const double neighbour =
        modes.size() > 1 ? rad_to_hz(cfg.trap.omega[modes[(k + 1) % modes.size()].axis]) : 0.0;
    const auto w = spectral::make_fit_window(base, f, sp.search_halfwidth, neighbour,
                                             sp.window_linewidths, sp.window_min, sp.window_max);
    init.push_back(spectral::initial_guess(base, w, mass));
    const double fwhm = rad_to_hz(init.back().gamma);
    const double half = std::clamp(sp.window_linewidths * fwhm, sp.window_min, sp.window_max);
    const double fc = rad_to_hz(init.back().omega);
    lo = k == 0 ? fc - half : std::min(lo, fc - half);
    hi = k == 0 ? fc + half : std::max(hi, fc + half);
    if (modes.size() == 1) lo = w.f_min, hi = w.f_max;
  }
  const spectral::FitWindow window{std::max(lo, base.bin_spacing()), hi, {}};
  // Under feedback the line is not exactly Lorentzian far from the centre (the
  // loop filter stops acting there); a free offset absorbs that mismatch. By
  // default the offset is pinned to the flat detection floor between the
  // fundamental and the second harmonic instead.
  spectral::Floor floor;
  if (!sp.fit_offset) {
    const double f_top = cfg.trap.max_frequency_hz();
    const double f_lo = sp.floor_min > 0.0 ? sp.floor_min : 1.25 * f_top;
    const double f_hi = sp.floor_max > 0.0 ? sp.floor_max : 1.75 * f_top;
    floor = spectral::estimate_floor(base, f_lo, f_hi);
    for (auto& l : init) l.offset = floor.level;
  }
  auto fits = spectral::fit_motion_psd_lines(base, window, mass, init, !sp.fit_offset);

  for (std::size_t k = 0; k < modes.size(); ++k) {
    auto& m = modes[k];
    auto& f = fits[k];
    const double ratio = out.calibrated[k].scale / base.scale;
    f.temperature *= ratio;
    f.uncertainty[0] *= ratio;
    if (!sp.fit_offset) {
      // A floor error d shifts the fitted area by about d times the window width.
      const double w2 = cfg.trap.omega[m.axis] * cfg.trap.omega[m.axis];
      const double from_floor = mass * w2 * floor.uncertainty * (window.f_max - window.f_min) / kBoltzmann;
      f.uncertainty[0] = std::hypot(f.uncertainty[0], ratio * from_floor);
      f.uncertainty[3] = floor.uncertainty;
    }
    const double expected = cfg.trap.omega[m.axis];
    if (std::abs(f.omega - expected) > hz_to_rad(sp.search_halfwidth))
      throw NumericalError(fmt::format("fitted line for axis {} at {:.6g} Hz, expected {:.6g} Hz",
                                       m.axis + 1, rad_to_hz(f.omega), rad_to_hz(expected)));
    m.fit = f;
    m.temperature = f.temperature;
    const double rel_cal = m.calibration.scale_uncertainty / m.calibration.scale;
    m.uncertainty = f.temperature * std::hypot(f.uncertainty[0] / f.temperature, rel_cal);
  }

  out.modes = std::move(modes);
  if (opt.keep_records) {
    out.measurement = std::move(meas);
    out.drive = std::move(drive);
  }
  return out;
}

}  // namespace

Experiment make_experiment(const RunConfig& cfg) {
  Experiment e;
  auto& s = e.setup;
  s.trap = cfg.trap;
  s.bath = sim::doppler_bath(cfg.saturation(), cfg.t0, cfg.linewidth);
  s.optics = cfg.optics;
  const auto& a = cfg.trap.axis_angles;
  const double normal = cfg.orientation == Orientation::kA ? a[1] : 0.5 * (a[0] + a[1]);
  s.optics.knife_angle = detection::knife_angle_for_normal(normal);
  s.dt = cfg.dt();
  s.bin_steps = cfg.bin_steps;
  e.projection = detection::knife_projection(a, s.optics.knife_angle);
  e.unit_slope = s.optics.normalized_slope();
  e.modes = cfg.orientation == Orientation::kA ? std::vector<int>{1} : std::vector<int>{0, 1};

  const double fs = s.sample_rate();
  for (int j : e.modes) {
    const auto& l = cfg.loops[j];
    feedback::FeedbackConfig c;
    c.center = l.center > 0.0 ? l.center : cfg.trap.omega[j];
    c.bandwidth = cfg.bandwidth;
    c.gain = l.gain;
    c.delay = cfg.delay;
    c.clip = cfg.clip;
    c.electrode_axis = cfg.trap.axis(j);
    const double coupling = e.unit_slope * e.projection[j];
    c.force_scale = feedback::unit_gain_force_scale(cfg.trap.mass, cfg.trap.omega[j],
                                                    cfg.trap.gamma[j], coupling, 1.0);
    const double latency = feedback::FeedbackLoop(c, fs).latency();
    c.phase = l.phase ? *l.phase
                      : feedback::optimal_phase(cfg.trap.omega[j], latency, coupling < 0.0 ? -1.0 : 1.0);
    c.phase = wrap_phase(c.phase + l.phase_offset);
    s.loops.push_back(c);
  }
  return e;
}

double predicted_temperature(const RunConfig& cfg, int axis, double gain) {
  const NoiseModel n = noise_model(cfg, axis);
  const double g0 = cfg.trap.gamma[axis];
  const double added = 10.0 * gain * g0;
  return (n.a + n.b * added * added) / (g0 + added) / kBoltzmann;
}

double predicted_optimal_gain(const RunConfig& cfg, int axis) {
  const NoiseModel n = noise_model(cfg, axis);
  if (!(n.b > 0.0)) return 0.0;
  const double g0 = cfg.trap.gamma[axis];
  const double added = -g0 + std::sqrt(g0 * g0 + n.a / n.b);
  return added / (10.0 * g0);
}

KnifeScan scan_knife_edge(std::span<const double> displacement,
                          const detection::OpticalConfig& optics, detection::Channel channel,
                          const CalibrationSettings& settings, Engine& rng) {
  if (displacement.empty()) throw std::invalid_argument("scan_knife_edge: no displacement samples");
  const double counts = optics.rate_370() * settings.scan_dwell;
  if (!(counts > 0.0)) throw NumericalError("knife-edge scan: no detected photons");
  const double scale = optics.magnification / (optics.spot_sigma * std::numbers::sqrt2);
  const auto half = static_cast<long>(std::llround(settings.scan_halfwidth / settings.scan_step));
  KnifeScan scan;
  for (long i = -half; i <= half; ++i) {
    const double offset = static_cast<double>(i) * settings.scan_step;
    double transmitted = 0.0;
    for (double d : displacement) transmitted += 0.5 * (1.0 + std::erf(scale * (d + offset)));
    transmitted /= static_cast<double>(displacement.size());
    const double share = channel == detection::Channel::kTransmitted ? transmitted : 1.0 - transmitted;
    std::poisson_distribution<long> mine(std::max(counts * share, 1e-300));
    std::poisson_distribution<long> other(std::max(counts * (1.0 - share), 1e-300));
    const double a = static_cast<double>(mine(rng)), b = static_cast<double>(other(rng));
    scan.positions.push_back(offset);
    scan.normalized.push_back(a + b > 0.0 ? 2.0 * a / (a + b) : 1.0);
  }
  return scan;
}

ThermometryResult run_thermometry(const RunConfig& cfg, const ThermometryOptions& opt) {
  cfg.validate();
  try {
    return thermometry(cfg, opt);
  } catch (const AbortThresholdError& err) {
    throw AbortThresholdError(err.step(), run_context(cfg, opt) + ": " + err.what());
  } catch (const NumericalError& err) {
    throw NumericalError(run_context(cfg, opt) + ": " + err.what());
  } catch (const std::invalid_argument& err) {
    throw std::invalid_argument(run_context(cfg, opt) + ": " + err.what());
  }
}

std::vector<SweepRow> SweepResult::for_axis(int axis) const {
  std::vector<SweepRow> out;
  for (const auto& r : rows)
    if (r.axis == axis) out.push_back(r);
  return out;
}

SweepResult run_gain_sweep(const RunConfig& cfg, const std::vector<double>& gains) {
  if (gains.empty()) throw std::invalid_argument("gain sweep needs at least one gain");
  std::vector<ThermometryResult> results(gains.size());
  parallel_for(gains.size(), cfg.sweep.threads, [&](std::size_t i) {
    RunConfig c = cfg;
    for (auto& l : c.loops) l.gain = gains[i];
    ThermometryOptions opt;
    opt.point = i;
    results[i] = run_thermometry(c, opt);
  });
  SweepResult sweep;
  for (std::size_t i = 0; i < gains.size(); ++i)
    for (const auto& m : results[i].modes)
      sweep.rows.push_back({gains[i], m.axis, m.temperature, m.uncertainty, m.fit.omega, m.fit.gamma,
                            m.equipartition.temperature});
  return sweep;
}

SaturationSweep run_saturation_sweep(const RunConfig& cfg, const std::vector<double>& saturations) {
  if (saturations.size() < 4) throw std::invalid_argument("saturation sweep needs at least 4 points");
  const Experiment e = make_experiment(cfg);
  struct Task {
    std::size_t point;
    double saturation;
    double gain;
  };
  std::vector<Task> tasks;
  std::vector<std::vector<std::size_t>> feedback_tasks(saturations.size());
  std::vector<std::size_t> open_tasks(saturations.size());
  for (std::size_t i = 0; i < saturations.size(); ++i) {
    RunConfig c = cfg;
    c.set_saturation(saturations[i]);
    open_tasks[i] = tasks.size();
    tasks.push_back({100 * i, saturations[i], 0.0});
    // The predicted optimum is the same for all analysed modes up to projection; use the first.
    const double g_opt = predicted_optimal_gain(c, e.modes.front());
    if (g_opt <= 0.0) continue;
    for (std::size_t k = 0; k < cfg.sweep.min_gain_factors.size(); ++k) {
      feedback_tasks[i].push_back(tasks.size());
      tasks.push_back({100 * i + 1 + k, saturations[i], g_opt * cfg.sweep.min_gain_factors[k]});
    }
  }
  std::vector<ThermometryResult> results(tasks.size());
  parallel_for(tasks.size(), cfg.sweep.threads, [&](std::size_t t) {
    RunConfig c = cfg;
    c.set_saturation(tasks[t].saturation);
    for (auto& l : c.loops) l.gain = tasks[t].gain;
    ThermometryOptions opt;
    opt.point = tasks[t].point;
    results[t] = run_thermometry(c, opt);
  });

  SaturationSweep sweep;
  for (std::size_t i = 0; i < saturations.size(); ++i) {
    const auto& open_result = results[open_tasks[i]];
    for (std::size_t k = 0; k < open_result.modes.size(); ++k) {
      SaturationRow row;
      row.saturation = saturations[i];
      row.rate_297 = detection::scattering_rate(saturations[i], cfg.optics.rate_297_max);
      row.axis = open_result.modes[k].axis;
      row.t_nofb = open_result.modes[k].temperature;
      row.t_nofb_err = open_result.modes[k].uncertainty;
      row.t_min = row.t_nofb;
      row.t_min_err = row.t_nofb_err;
      for (std::size_t t : feedback_tasks[i]) {
        const auto& m = results[t].modes[k];
        if (m.temperature < row.t_min) {
          row.t_min = m.temperature;
          row.t_min_err = m.uncertainty;
          row.best_gain = tasks[t].gain;
        }
      }
      sweep.rows.push_back(row);
    }
  }
  std::vector<double> rates, temps, errs;
  for (const auto& r : sweep.rows)
    if (r.axis == e.modes.front()) {
      rates.push_back(r.rate_297);
      temps.push_back(r.t_nofb);
      errs.push_back(r.t_nofb_err);
    }
  sweep.fit = spectral::fit_saturation_curve(rates, temps, errs);
  return sweep;
}

AxisFindingResult run_axis_finding(const RunConfig& cfg) {
  const auto& a = cfg.axes;
  a.imaging.validate();
  AxisFindingResult out;
  const std::array<double, 3> amplitude{0.0, a.drive_amplitude, a.drive_amplitude};
  const std::array<double, 3> angle{0.0, a.drive_angles[0], a.drive_angles[1]};
  for (std::size_t k = 0; k < 3; ++k) {
    Engine rng = make_engine(cfg.seed, Stream::kImaging, k);
    out.images[k] = imaging::synthesize_driven_image(a.imaging.psf_sigma, amplitude[k], angle[k],
                                                     a.imaging.photons, rng, a.imaging);
    out.fits[k] = imaging::fit_gaussian_2d(out.images[k]);
  }
  out.angles = imaging::axis_angles(out.fits[1], out.fits[2]);
  return out;
}

}  // namespace ionfb::experiments
