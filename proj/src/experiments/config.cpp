#include "ionfb/experiments/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <fmt/ranges.h>

#include "ionfb/common/errors.hpp"
#include "ionfb/sim/langevin.hpp"
#include "ionfb/spectral/welch.hpp"

namespace ionfb::experiments {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last || !std::isfinite(out))
    throw ConfigError(fmt::format("{}: '{}' is not a finite number", key, value));
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError(fmt::format("{}: '{}' is not a non-negative integer", key, value));
  return out;
}

std::vector<double> to_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

std::string list_text(const std::vector<double>& v) { return fmt::format("{:g}", fmt::join(v, ",")); }

struct Key {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Ref>
Key scaled(Ref ref, double unit) {
  return {[ref, unit](RunConfig& c, const std::string& k, const std::string& v) {
            ref(c) = to_double(k, v) * unit;
          },
          [ref, unit](const RunConfig& c) {
            return fmt::format("{:.10g}", ref(c) / unit);
          }};
}

template <typename Ref>
Key integer(Ref ref) {
  return {[ref](RunConfig& c, const std::string& k, const std::string& v) {
            ref(c) = static_cast<std::remove_cvref_t<decltype(ref(c))>>(to_uint(k, v));
          },
          [ref](const RunConfig& c) { return fmt::format("{}", ref(c)); }};
}

template <typename Ref>
Key list(Ref ref) {
  return {[ref](RunConfig& c, const std::string& k, const std::string& v) { ref(c) = to_list(k, v); },
          [ref](const RunConfig& c) { return list_text(ref(c)); }};
}

constexpr double kHz = kTwoPi;  // Hz -> rad/s
constexpr double kDeg = kPi / 180.0;
constexpr double kUm = 1e-6;
constexpr double kNm = 1e-9;
constexpr double kMk = 1e-3;
constexpr double kUs = 1e-6;

const std::map<std::string, Key>& keys() {
  static const std::map<std::string, Key> table = [] {
    std::map<std::string, Key> k;
    for (int j = 0; j < 2; ++j) {
      const std::string n = std::to_string(j + 1);
      k["trap.omega" + n + "_hz"] = scaled([j](auto& c) -> auto& { return c.trap.omega[j]; }, kHz);
      k["trap.gamma" + n + "_hz"] = scaled([j](auto& c) -> auto& { return c.trap.gamma[j]; }, kHz);
      k["trap.axis" + n + "_deg"] =
          scaled([j](auto& c) -> auto& { return c.trap.axis_angles[j]; }, kDeg);
      k["feedback" + n + ".center_hz"] =
          scaled([j](auto& c) -> auto& { return c.loops[j].center; }, kHz);
      k["feedback" + n + ".gain"] = scaled([j](auto& c) -> auto& { return c.loops[j].gain; }, 1.0);
      k["feedback" + n + ".phase_offset_deg"] =
          scaled([j](auto& c) -> auto& { return c.loops[j].phase_offset; }, kDeg);
      k["feedback" + n + ".phase_deg"] = {
          [j](RunConfig& c, const std::string& key, const std::string& v) {
            if (v == "auto") c.loops[j].phase.reset();
            else c.loops[j].phase = to_double(key, v) * kDeg;
          },
          [j](const RunConfig& c) {
            return c.loops[j].phase ? fmt::format("{:.10g}", *c.loops[j].phase / kDeg)
                                    : std::string("auto");
          }};
      k["imaging.drive" + n + "_deg"] =
          scaled([j](auto& c) -> auto& { return c.axes.drive_angles[j]; }, kDeg);
    }
    k["trap.mass_amu"] = scaled([](auto& c) -> auto& { return c.trap.mass; }, kAtomicMass);
    k["trap.abort_um"] = scaled([](auto& c) -> auto& { return c.trap.abort_threshold; }, kUm);

    k["bath.t0_mk"] = scaled([](auto& c) -> auto& { return c.t0; }, kMk);
    k["bath.saturation"] = scaled([](auto& c) -> auto& { return c.optics.saturation; }, 1.0);
    k["bath.linewidth_mhz"] = scaled([](auto& c) -> auto& { return c.linewidth; }, kHz * 1e6);

    k["optics.magnification"] = scaled([](auto& c) -> auto& { return c.optics.magnification; }, 1.0);
    k["optics.spot_sigma_um"] = scaled([](auto& c) -> auto& { return c.optics.spot_sigma; }, kUm);
    k["optics.efficiency"] =
        scaled([](auto& c) -> auto& { return c.optics.collection_efficiency; }, 1.0);
    k["optics.rate_297_max_per_ms"] =
        scaled([](auto& c) -> auto& { return c.optics.rate_297_max; }, 1e3);
    k["optics.rate_370_max_per_s"] = {
        [](RunConfig& c, const std::string& key, const std::string& v) {
          c.optics.rate_370_max = to_double(key, v);
          c.rate_370_explicit = true;
        },
        [](const RunConfig& c) { return fmt::format("{:.10g}", c.optics.rate_370_max); }};

    k["feedback.bandwidth_hz"] = scaled([](auto& c) -> auto& { return c.bandwidth; }, kHz);
    k["feedback.delay_us"] = scaled([](auto& c) -> auto& { return c.delay; }, kUs);
    k["feedback.clip"] = scaled([](auto& c) -> auto& { return c.clip; }, 1.0);

    k["sim.steps_per_period"] = integer([](auto& c) -> auto& { return c.steps_per_period; });
    k["sim.bin_steps"] = integer([](auto& c) -> auto& { return c.bin_steps; });
    k["sim.velocity_stride"] = integer([](auto& c) -> auto& { return c.velocity_stride; });
    k["sim.displacement_stride"] =
        integer([](auto& c) -> auto& { return c.displacement_stride; });
    k["sim.settle_s"] = {
        [](RunConfig& c, const std::string& key, const std::string& v) {
          if (v == "auto") c.settle.reset();
          else c.settle = to_double(key, v);
        },
        [](const RunConfig& c) {
          return c.settle ? fmt::format("{:.10g}", *c.settle) : std::string("auto");
        }};

    k["spectral.rbw_hz"] = scaled([](auto& c) -> auto& { return c.spectral.rbw; }, 1.0);
    k["spectral.search_halfwidth_hz"] =
        scaled([](auto& c) -> auto& { return c.spectral.search_halfwidth; }, 1.0);
    k["spectral.window_linewidths"] =
        scaled([](auto& c) -> auto& { return c.spectral.window_linewidths; }, 1.0);
    k["spectral.window_min_hz"] = scaled([](auto& c) -> auto& { return c.spectral.window_min; }, 1.0);
    k["spectral.window_max_hz"] = scaled([](auto& c) -> auto& { return c.spectral.window_max; }, 1.0);
    k["spectral.offset"] = {
        [](RunConfig& c, const std::string& key, const std::string& v) {
          if (v == "floor") c.spectral.fit_offset = false;
          else if (v == "fit") c.spectral.fit_offset = true;
          else throw ConfigError(fmt::format("{}: '{}' must be floor or fit", key, v));
        },
        [](const RunConfig& c) { return std::string(c.spectral.fit_offset ? "fit" : "floor"); }};
    k["spectral.floor_min_hz"] = scaled([](auto& c) -> auto& { return c.spectral.floor_min; }, 1.0);
    k["spectral.floor_max_hz"] = scaled([](auto& c) -> auto& { return c.spectral.floor_max; }, 1.0);

    k["calibration.duration_s"] = scaled([](auto& c) -> auto& { return c.calibration.duration; }, 1.0);
    k["calibration.drive_offset_hz"] =
        scaled([](auto& c) -> auto& { return c.calibration.drive_offset; }, 1.0);
    k["calibration.drive_displacement_nm"] =
        scaled([](auto& c) -> auto& { return c.calibration.drive_displacement; }, kNm);
    k["calibration.scan_halfwidth_um"] =
        scaled([](auto& c) -> auto& { return c.calibration.scan_halfwidth; }, kUm);
    k["calibration.scan_step_nm"] = scaled([](auto& c) -> auto& { return c.calibration.scan_step; }, kNm);
    k["calibration.scan_dwell_s"] = scaled([](auto& c) -> auto& { return c.calibration.scan_dwell; }, 1.0);
    k["calibration.correlation_bins"] =
        integer([](auto& c) -> auto& { return c.calibration.correlation_bins; });

    k["sweep.gains"] = list([](auto& c) -> auto& { return c.sweep.gains; });
    k["sweep.saturations"] = list([](auto& c) -> auto& { return c.sweep.saturations; });
    k["sweep.min_gain_factors"] =
        list([](auto& c) -> auto& { return c.sweep.min_gain_factors; });
    k["sweep.threads"] = integer([](auto& c) -> auto& { return c.sweep.threads; });

    k["imaging.rows"] = integer([](auto& c) -> auto& { return c.axes.imaging.rows; });
    k["imaging.cols"] = integer([](auto& c) -> auto& { return c.axes.imaging.cols; });
    k["imaging.pixel_um"] = scaled([](auto& c) -> auto& { return c.axes.imaging.pixel_size; }, kUm);
    k["imaging.psf_sigma_um"] = scaled([](auto& c) -> auto& { return c.axes.imaging.psf_sigma; }, kUm);
    k["imaging.photons"] = scaled([](auto& c) -> auto& { return c.axes.imaging.photons; }, 1.0);
    k["imaging.background"] = scaled([](auto& c) -> auto& { return c.axes.imaging.background; }, 1.0);
    k["imaging.drive_amplitude_um"] =
        scaled([](auto& c) -> auto& { return c.axes.drive_amplitude; }, kUm);

    k["run.seed"] = integer([](auto& c) -> auto& { return c.seed; });
    k["run.duration_s"] = scaled([](auto& c) -> auto& { return c.duration; }, 1.0);
    k["run.orientation"] = {
        [](RunConfig& c, const std::string& key, const std::string& v) {
          try {
            c.orientation = parse_orientation(v);
          } catch (const std::invalid_argument&) {
            throw ConfigError(key + ": orientation must be A or B");
          }
        },
        [](const RunConfig& c) { return std::string(orientation_name(c.orientation)); }};
    k["run.output_dir"] = {
        [](RunConfig& c, const std::string&, const std::string& v) { c.output_dir = v; },
        [](const RunConfig& c) { return c.output_dir.string(); }};
    k["output.timeseries_stride"] = integer([](auto& c) -> auto& { return c.timeseries_stride; });
    return k;
  }();
  return table;
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key + ": " + what);
}

}  // namespace

Orientation parse_orientation(const std::string& s) {
  if (s == "A" || s == "a") return Orientation::kA;
  if (s == "B" || s == "b") return Orientation::kB;
  throw std::invalid_argument("orientation must be A or B");
}

const char* orientation_name(Orientation o) { return o == Orientation::kA ? "A" : "B"; }

double RunConfig::dt() const { return sim::default_time_step(trap, steps_per_period); }

double RunConfig::settle_time() const {
  return settle ? *settle : 10.0 / std::min(trap.gamma[0], trap.gamma[1]);
}

void RunConfig::set_saturation(double s) { optics.saturation = s; }

void RunConfig::validate() const {
  for (int j = 0; j < 2; ++j) {
    const std::string n = std::to_string(j + 1);
    require(trap.omega[j] > 0.0, "trap.omega" + n + "_hz", "must be > 0");
    require(trap.gamma[j] > 0.0, "trap.gamma" + n + "_hz", "must be > 0");
    require(trap.gamma[j] < trap.max_damping_ratio * trap.omega[j], "trap.gamma" + n + "_hz",
            "must be below 1e-2 of the trap frequency (underdamped)");
    require(loops[j].center >= 0.0, "feedback" + n + ".center_hz", "must be >= 0 (0 = mode frequency)");
    require(loops[j].gain >= 0.0, "feedback" + n + ".gain", "must be >= 0");
    require(!loops[j].phase || std::abs(*loops[j].phase) <= kPi, "feedback" + n + ".phase_deg",
            "must lie in [-180, 180]");
    const double center = loops[j].center > 0.0 ? loops[j].center : trap.omega[j];
    require(bandwidth < center / 2.0, "feedback.bandwidth_hz", "must be below half the loop center");
  }
  const double separation = std::remainder(trap.axis_angles[1] - trap.axis_angles[0], kPi);
  require(std::abs(std::abs(separation) - kPi / 2.0) <= trap.orthogonality_tolerance,
          "trap.axis1_deg", "trap axes must be orthogonal (within 1e-6 rad of trap.axis2_deg - 90)");
  require(trap.mass > 0.0, "trap.mass_amu", "must be > 0");
  require(trap.abort_threshold > 0.0, "trap.abort_um", "must be > 0");
  require(t0 > 0.0, "bath.t0_mk", "must be > 0");
  require(optics.saturation >= 0.0, "bath.saturation", "must be >= 0");
  require(linewidth > 0.0, "bath.linewidth_mhz", "must be > 0");
  require(optics.magnification > 0.0, "optics.magnification", "must be > 0");
  require(optics.spot_sigma > 0.0, "optics.spot_sigma_um", "must be > 0");
  require(optics.collection_efficiency > 0.0 && optics.collection_efficiency <= 1.0,
          "optics.efficiency", "must lie in (0, 1]");
  require(optics.rate_370_max > 0.0, "optics.rate_370_max_per_s", "must be > 0");
  require(optics.rate_297_max > 0.0, "optics.rate_297_max_per_ms", "must be > 0");
  require(bandwidth > 0.0, "feedback.bandwidth_hz", "must be > 0");
  require(delay >= 0.0, "feedback.delay_us", "must be >= 0");
  require(clip > 0.0, "feedback.clip", "must be > 0");

  require(steps_per_period >= 50, "sim.steps_per_period", "must be >= 50 (resolution guard)");
  require(bin_steps >= 1, "sim.bin_steps", "must be >= 1");
  const double fs = 1.0 / (dt() * static_cast<double>(bin_steps));
  require(fs >= 10.0 * trap.max_frequency_hz(), "sim.bin_steps",
          "detector rate must be at least 10x the highest trap frequency");
  require(velocity_stride >= 1, "sim.velocity_stride", "must be >= 1");
  require(displacement_stride >= 1, "sim.displacement_stride", "must be >= 1");
  require(!settle || *settle >= 0.0, "sim.settle_s", "must be >= 0");

  require(spectral.rbw > 0.0, "spectral.rbw_hz", "must be > 0");
  require(spectral.search_halfwidth > 0.0, "spectral.search_halfwidth_hz", "must be > 0");
  require(spectral.window_linewidths > 0.0, "spectral.window_linewidths", "must be > 0");
  require(spectral.window_min > 0.0, "spectral.window_min_hz", "must be > 0");
  require(spectral.window_max >= spectral.window_min, "spectral.window_max_hz",
          "must be >= spectral.window_min_hz");
  require(spectral.floor_min >= 0.0, "spectral.floor_min_hz", "must be >= 0");
  require(spectral.floor_max == 0.0 || spectral.floor_max > spectral.floor_min, "spectral.floor_max_hz",
          "must exceed spectral.floor_min_hz");
  require(spectral.floor_max < 0.5 * fs, "spectral.floor_max_hz", "must lie below the Nyquist frequency");
  const double segment = static_cast<double>(spectral::segment_length_for_rbw(fs, spectral.rbw)) / fs;
  const double gamma_min = std::min(trap.gamma[0], trap.gamma[1]);
  require(duration >= 100.0 / gamma_min, "run.duration_s",
          fmt::format("must be >= 100/gamma = {:.4g} s", 100.0 / gamma_min));
  require(duration >= 2.0 * segment, "run.duration_s",
          fmt::format("must cover two spectral segments ({:.4g} s)", 2.0 * segment));
  require(calibration.duration >= 2.0 * segment, "calibration.duration_s",
          fmt::format("must cover two spectral segments ({:.4g} s)", 2.0 * segment));
  require(calibration.drive_offset > 0.0, "calibration.drive_offset_hz", "must be > 0");
  require(calibration.drive_displacement > 0.0, "calibration.drive_displacement_nm", "must be > 0");
  require(calibration.scan_halfwidth > 0.0, "calibration.scan_halfwidth_um", "must be > 0");
  require(calibration.scan_step > 0.0 && calibration.scan_step < calibration.scan_halfwidth,
          "calibration.scan_step_nm", "must be > 0 and below the scan half-width");
  require(calibration.scan_dwell > 0.0, "calibration.scan_dwell_s", "must be > 0");
  require(calibration.correlation_bins >= 4, "calibration.correlation_bins", "must be >= 4");

  for (double g : sweep.gains) require(g >= 0.0, "sweep.gains", "gains must be >= 0");
  for (double s : sweep.saturations) require(s >= 0.0, "sweep.saturations", "must be >= 0");
  for (double f : sweep.min_gain_factors) require(f > 0.0, "sweep.min_gain_factors", "must be > 0");

  require(axes.imaging.rows >= 8, "imaging.rows", "must be >= 8");
  require(axes.imaging.cols >= 8, "imaging.cols", "must be >= 8");
  require(axes.imaging.pixel_size > 0.0, "imaging.pixel_um", "must be > 0");
  require(axes.imaging.psf_sigma > 0.0, "imaging.psf_sigma_um", "must be > 0");
  require(axes.imaging.photons > 0.0, "imaging.photons", "must be > 0");
  require(axes.imaging.background >= 0.0, "imaging.background", "must be >= 0");
  require(axes.drive_amplitude >= 0.0, "imaging.drive_amplitude_um", "must be >= 0");

  require(timeseries_stride >= 1, "output.timeseries_stride", "must be >= 1");
  require(duration > 0.0, "run.duration_s", "must be > 0");
}

RunConfig parse_config(std::istream& is) {
  RunConfig cfg;
  bool axis1_set = false, axis2_set = false;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(fmt::format("line {}: expected 'key = value'", lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = keys().find(key);
    if (it == keys().end()) throw ConfigError(key + ": unknown configuration key");
    if (value.empty()) throw ConfigError(key + ": missing value");
    it->second.set(cfg, key, value);
    axis1_set |= key == "trap.axis1_deg";
    axis2_set |= key == "trap.axis2_deg";
  }
  // A lone axis-2 angle fixes axis 1 as its orthogonal partner, and vice versa.
  if (axis2_set && !axis1_set) cfg.trap.axis_angles[0] = cfg.trap.axis_angles[1] - kPi / 2.0;
  if (axis1_set && !axis2_set) cfg.trap.axis_angles[1] = cfg.trap.axis_angles[0] + kPi / 2.0;
  if (!cfg.rate_370_explicit)
    cfg.optics.rate_370_max = cfg.optics.collection_efficiency * cfg.linewidth / 2.0;
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  return parse_config(is);
}

void write_config(std::ostream& os, const RunConfig& cfg) {
  for (const auto& [name, key] : keys()) fmt::print(os, "{} = {}\n", name, key.get(cfg));
}

}  // namespace ionfb::experiments
