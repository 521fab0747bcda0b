// Command-line driver: simulate | calibrate | thermometry | sweep-gain |
// sweep-saturation | fit-axes. Exit codes: 0 ok, 2 configuration error,
// 3 numerical failure, 1 anything else (I/O).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ionfb/common/errors.hpp"
#include "ionfb/common/units.hpp"
#include "ionfb/experiments/config.hpp"
#include "ionfb/experiments/output.hpp"
#include "ionfb/experiments/pipeline.hpp"
#include "ionfb/imaging/image.hpp"
#include "ionfb/spectral/welch.hpp"

namespace fs = std::filesystem;
using namespace ionfb;
using namespace ionfb::experiments;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> orientation;
};

RunConfig resolve(const Options& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.out) cfg.output_dir = *o.out;
  if (o.orientation) {
    try {
      cfg.orientation = parse_orientation(*o.orientation);
    } catch (const std::invalid_argument&) {
      throw ConfigError("--orientation: must be A or B");
    }
  }
  cfg.validate();
  fs::create_directories(cfg.output_dir);
  std::ofstream used(cfg.output_dir / "config_used.txt");
  write_config(used, cfg);
  return cfg;
}

void print_modes(const ThermometryResult& r) {
  for (const auto& m : r.modes)
    fmt::print("axis {}: T = {:.4g} +- {:.2g} mK ({}), equipartition {:.4g} +- {:.2g} mK\n", m.axis + 1,
               m.temperature * 1e3, m.uncertainty * 1e3, m.spectral ? "spectral" : "no photons",
               m.equipartition.temperature * 1e3, m.equipartition.standard_error * 1e3);
}

void write_spectra(const RunConfig& cfg, const ThermometryResult& r) {
  if (r.calibrated.empty()) return;
  spectral::write_spectrum_csv(cfg.output_dir / "spectrum.csv", r.calibrated.back());
  if (r.calibrated.size() > 1)
    for (std::size_t k = 0; k < r.calibrated.size(); ++k)
      spectral::write_spectrum_csv(cfg.output_dir / fmt::format("spectrum_axis{}.csv", r.modes[k].axis + 1),
                                   r.calibrated[k]);
  spectral::write_spectrum_csv(cfg.output_dir / "raw_spectrum.csv", r.raw);
}

int cmd_simulate(const RunConfig& cfg) {
  const Experiment e = make_experiment(cfg);
  SimulationRequest req;
  req.duration = cfg.duration;
  req.settle = cfg.settle_time();
  req.seed = cfg.seed;
  req.velocity_stride = cfg.velocity_stride;
  req.timeseries_stride = cfg.timeseries_stride;
  const auto rec = simulate_closed_loop(e.setup, req);
  write_timeseries_csv(cfg.output_dir / "timeseries.csv", rec.timeseries);
  write_photocurrent_csv(cfg.output_dir / "photocurrent.csv", rec);
  if (e.setup.optics.rate_370() > 0.0) {
    spectral::WelchOptions w;
    w.segment_length = spectral::segment_length_for_rbw(e.setup.sample_rate(), cfg.spectral.rbw);
    spectral::write_spectrum_csv(cfg.output_dir / "spectrum.csv",
                                 spectral::welch_psd(rec.out_loop, w));
  }
  for (int j = 0; j < 2; ++j) {
    const auto t = sim::equipartition_temperature(rec.velocities[j], cfg.trap.mass);
    fmt::print("axis {}: equipartition T = {:.4g} +- {:.2g} mK\n", j + 1, t.temperature * 1e3,
               t.standard_error * 1e3);
  }
  return 0;
}

int cmd_calibrate(const RunConfig& cfg) {
  const auto r = run_thermometry(cfg);
  write_calibration_csv(cfg.output_dir / "calibration.csv", r);
  if (!r.scan.positions.empty()) {
    std::ofstream os(cfg.output_dir / "knife_scan.csv");
    os << "position_m,normalized_counts\n";
    for (std::size_t i = 0; i < r.scan.positions.size(); ++i)
      os << fmt::format("{:.6g},{:.8g}\n", r.scan.positions[i], r.scan.normalized[i]);
    spectral::write_spectrum_csv(cfg.output_dir / "drive_spectrum.csv", r.drive_raw);
  }
  for (const auto& m : r.modes)
    if (m.spectral)
      fmt::print("axis {}: slope {:.4g} /um, A_corr {:.4g}, A_displ {:.4g} nm, scale {:.4g} m^2/Hz\n",
                 m.axis + 1, m.calibration.slope * 1e-6, m.calibration.a_corr,
                 m.calibration.a_displ * 1e9, m.calibration.scale);
  return 0;
}

int cmd_thermometry(const RunConfig& cfg) {
  const auto r = run_thermometry(cfg);
  write_spectra(cfg, r);
  write_fit_report(cfg.output_dir / "fit.txt", r);
  write_calibration_csv(cfg.output_dir / "calibration.csv", r);
  print_modes(r);
  return 0;
}

int cmd_sweep_gain(const RunConfig& cfg) {
  const auto sweep = run_gain_sweep(cfg, cfg.sweep.gains);
  const Experiment e = make_experiment(cfg);
  write_gain_sweep_csv(cfg.output_dir / "gain_sweep.csv", sweep.for_axis(e.modes.back()));
  if (e.modes.size() > 1)
    for (int j : e.modes)
      write_gain_sweep_csv(cfg.output_dir / fmt::format("gain_sweep_axis{}.csv", j + 1), sweep.for_axis(j));
  for (const auto& r : sweep.rows)
    fmt::print("g = {:<5g} axis {}: T = {:.4g} +- {:.2g} mK\n", r.x, r.axis + 1, r.temperature * 1e3,
               r.uncertainty * 1e3);
  return 0;
}

int cmd_sweep_saturation(const RunConfig& cfg) {
  const auto sweep = run_saturation_sweep(cfg, cfg.sweep.saturations);
  const Experiment e = make_experiment(cfg);
  std::vector<SaturationRow> first;
  for (const auto& r : sweep.rows)
    if (r.axis == e.modes.front()) first.push_back(r);
  write_saturation_csv(cfg.output_dir / "saturation_sweep.csv", first);
  if (e.modes.size() > 1)
    for (int j : e.modes) {
      std::vector<SaturationRow> rows;
      for (const auto& r : sweep.rows)
        if (r.axis == j) rows.push_back(r);
      write_saturation_csv(cfg.output_dir / fmt::format("saturation_sweep_axis{}.csv", j + 1), rows);
    }
  write_saturation_fit(cfg.output_dir / "saturation_fit.txt", sweep.fit);
  for (const auto& r : sweep.rows)
    fmt::print("s = {:<5g} axis {}: T_nofb = {:.4g} mK, T_min = {:.4g} mK (g = {:.3g})\n", r.saturation,
               r.axis + 1, r.t_nofb * 1e3, r.t_min * 1e3, r.best_gain);
  fmt::print("fit: T0 = {:.4g} +- {:.2g} mK, R_max = {:.4g} +- {:.2g} /ms\n", sweep.fit.t0 * 1e3,
             sweep.fit.t0_uncertainty * 1e3, sweep.fit.rate_max * 1e-3, sweep.fit.rate_max_uncertainty * 1e-3);
  return 0;
}

int cmd_fit_axes(const RunConfig& cfg) {
  const auto r = run_axis_finding(cfg);
  const char* names[3] = {"image_undriven.csv", "image_drive1.csv", "image_drive2.csv"};
  for (std::size_t k = 0; k < 3; ++k) imaging::write_image_csv(cfg.output_dir / names[k], r.images[k]);
  write_axes_csv(cfg.output_dir / "axes.csv", r);
  write_image_fits(cfg.output_dir / "image_fits.txt", r);
  fmt::print("alpha1 = {:.3f} +- {:.3f} deg, alpha2 = {:.3f} +- {:.3f} deg, orthogonality defect {:.3f} deg\n",
             rad_to_deg(r.angles.alpha[0]), rad_to_deg(r.angles.uncertainty[0]),
             rad_to_deg(r.angles.alpha[1]), rad_to_deg(r.angles.uncertainty[1]),
             rad_to_deg(r.angles.orthogonality_defect));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knife-edge feedback cooling and thermometry of a trapped ion"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "run configuration file (key = value)");
  app.add_option("--seed", o.seed, "random seed");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--orientation", o.orientation, "knife-edge orientation A or B");

  int (*command)(const RunConfig&) = nullptr;
  auto add = [&](const char* name, const char* help, int (*fn)(const RunConfig&)) {
    app.add_subcommand(name, help)->callback([&command, fn] { command = fn; });
  };
  add("simulate", "closed-loop run; writes timeseries, photocurrent and raw spectrum", cmd_simulate);
  add("calibrate", "knife-edge slope scan and drive correlation", cmd_calibrate);
  add("thermometry", "calibrated spectrum and Lorentzian temperature fit", cmd_thermometry);
  add("sweep-gain", "temperature versus feedback gain", cmd_sweep_gain);
  add("sweep-saturation", "temperature versus saturation, with the saturation-law fit", cmd_sweep_saturation);
  add("fit-axes", "trap-axis angles from driven-ion images", cmd_fit_axes);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    return command(resolve(o));
  } catch (const ConfigError& e) {
    fmt::print(stderr, "configuration error: {}\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    fmt::print(stderr, "invalid input: {}\n", e.what());
    return 2;
  } catch (const NumericalError& e) {
    fmt::print(stderr, "numerical failure: {}\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
}
