#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ionfb/detection/knife_edge.hpp"
#include "ionfb/imaging/image.hpp"
#include "ionfb/sim/trap.hpp"

namespace ionfb::experiments {

/// A: knife-edge normal along trap axis 2, one loop on mode 2.
/// B: normal on the bisector of the two axes, one loop per mode.
enum class Orientation { kA, kB };

Orientation parse_orientation(const std::string& s);
const char* orientation_name(Orientation o);

struct LoopSettings {
  double center = 0.0;          // rad/s; 0 selects the mode frequency
  double gain = 0.0;
  std::optional<double> phase;  // rad; unset selects the velocity-damping optimum
  double phase_offset = 0.0;    // rad, added to the optimum
};

struct SpectralSettings {
  double rbw = 50.0;                  // Hz, target resolution bandwidth
  double search_halfwidth = 10e3;     // Hz, peak search around the mode frequency
  double window_linewidths = 8.0;     // fit window half-width in FWHM
  double window_min = 2e3;            // Hz
  double window_max = 40e3;           // Hz
  bool fit_offset = false;            // false: offset held at the detection floor
  double floor_min = 0.0;             // Hz; 0 selects 1.25 x the highest mode frequency
  double floor_max = 0.0;             // Hz; 0 selects 1.75 x the highest mode frequency
};

struct CalibrationSettings {
  double duration = 0.5;          // s, driven run
  double drive_offset = 3e3;      // Hz above the mode frequency (at least 6 linewidths)
  double drive_displacement = 40e-9;  // m, target open-loop response amplitude
  double scan_halfwidth = 0.3e-6;     // m
  double scan_step = 5e-9;            // m
  double scan_dwell = 0.1;            // s of counting per scan point
  std::size_t correlation_bins = 32;
};

struct SweepSettings {
  std::vector<double> gains{0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0};
  std::vector<double> saturations{0.0, 0.25, 0.5, 1.0, 2.0, 3.0};
  std::vector<double> min_gain_factors{0.6, 1.0, 1.6};
  unsigned threads = 0;  // 0: hardware concurrency
};

struct AxisFindingSettings {
  imaging::ImagingConfig imaging;
  double drive_amplitude = 1.8e-6;  // m
  std::array<double, 2> drive_angles{deg_to_rad(-28.87), deg_to_rad(60.24)};
};

struct RunConfig {
  sim::TrapConfig trap;
  double t0 = 0.975e-3;                  // K, Doppler temperature for s -> 0
  double linewidth = hz_to_rad(19.6e6);  // rad/s
  detection::OpticalConfig optics;       // saturation lives here
  bool rate_370_explicit = false;

  double bandwidth = hz_to_rad(20e3);  // rad/s
  double delay = 1e-6;                 // s
  double clip = 5.0;
  std::array<LoopSettings, 2> loops;

  int steps_per_period = 100;
  std::size_t bin_steps = 8;           // simulation steps per detector bin
  std::optional<double> settle;        // s; default 10 / min gamma
  std::size_t velocity_stride = 25;
  std::size_t displacement_stride = 256;

  SpectralSettings spectral;
  CalibrationSettings calibration;
  SweepSettings sweep;
  AxisFindingSettings axes;

  std::uint64_t seed = 1;
  double duration = 1.0;  // s, measurement run
  Orientation orientation = Orientation::kA;
  std::filesystem::path output_dir = "out";
  std::size_t timeseries_stride = 100;

  double dt() const;
  double settle_time() const;
  double saturation() const { return optics.saturation; }
  void set_saturation(double s);

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

/// Flat "section.key = value" lines; '#' starts a comment. Values use Hz, um,
/// nm, mK and degrees; see the README for the table. Unknown keys and malformed
/// values raise ConfigError naming the key.
RunConfig parse_config(std::istream& is);
RunConfig load_config(const std::filesystem::path& path);

/// Every recognised key with its current value in interface units.
void write_config(std::ostream& os, const RunConfig& cfg);

}  // namespace ionfb::experiments
