#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ionfb/experiments/closed_loop.hpp"
#include "ionfb/experiments/config.hpp"
#include "ionfb/imaging/gaussian2d.hpp"
#include "ionfb/sim/thermometer.hpp"
#include "ionfb/spectral/calibration.hpp"
#include "ionfb/spectral/lorentzian.hpp"
#include "ionfb/spectral/saturation.hpp"

namespace ionfb::experiments {

/// Geometry and electronics derived from a run configuration.
struct Experiment {
  SimulationSetup setup;
  std::vector<int> modes;            // trap axes analysed and, with gain, cooled
  std::array<double, 2> projection;  // knife-normal projection of each trap axis
  double unit_slope = 0.0;           // normalized signal per metre along the normal, static ion
};

Experiment make_experiment(const RunConfig& cfg);

/// Small-signal cold-damping model with shot-noise-limited in-loop detection:
/// T(g) = (gamma T_D + m w^2 G^2 S_imp / (4 k_B)) / (gamma + G), G = 10 g gamma.
double predicted_temperature(const RunConfig& cfg, int axis, double gain);
/// Gain minimising predicted_temperature (0 without photons).
double predicted_optimal_gain(const RunConfig& cfg, int axis);

/// Knife-edge scan: the image is offset along the knife normal over a grid and
/// the channel's share of the counts over `dwell` is recorded, normalized so
/// that balance reads 1 and a fully unblocked spot reads 2. The ion's own
/// motion is taken from `displacement` (samples along the normal).
struct KnifeScan {
  std::vector<double> positions;   // m
  std::vector<double> normalized;  // 2 * channel / (both channels)
};
KnifeScan scan_knife_edge(std::span<const double> displacement,
                          const detection::OpticalConfig& optics, detection::Channel channel,
                          const CalibrationSettings& settings, Engine& rng);

struct ModeThermometry {
  int axis = 0;
  double temperature = 0.0;  // K, reported value
  double uncertainty = 0.0;  // K
  bool spectral = true;      // false: no photons, equipartition fallback
  spectral::LorentzianFit fit;
  spectral::CalibrationResult calibration;
  spectral::CorrelationResult correlation;
  double drive_frequency = 0.0;      // Hz
  double drive_displacement = 0.0;   // m, A_corr over the slope seen during the driven run
  sim::TemperatureEstimate equipartition;
};

struct ThermometryOptions {
  detection::Channel channel = detection::Channel::kReflected;  // out-of-loop detector
  std::uint64_t point = 0;     // selects the noise streams
  bool keep_records = false;
};

struct ThermometryResult {
  std::vector<ModeThermometry> modes;
  spectral::Spectrum raw;         // measurement run, normalized signal
  spectral::Spectrum drive_raw;   // calibration run
  std::vector<spectral::Spectrum> calibrated;  // per entry of `modes`
  spectral::SlopeResult slope;    // along the knife normal, measurement conditions
  KnifeScan scan;
  std::optional<SimulationRecord> measurement, drive;
};

/// Calibration (driven run with the loops open, correlation of out-of-loop
/// detections with the drive; knife-edge scan under measurement conditions),
/// then a measurement run with the configured loops, and a Lorentzian fit of
/// the calibrated spectrum per mode. Modules errors are rethrown with the run
/// context prepended.
ThermometryResult run_thermometry(const RunConfig& cfg, const ThermometryOptions& opt = {});

struct SweepRow {
  double x = 0.0;  // gain
  int axis = 0;
  double temperature = 0.0, uncertainty = 0.0;
  double omega = 0.0, gamma = 0.0;  // fitted, rad/s
  double equipartition = 0.0;       // K
};

struct SweepResult {
  std::vector<SweepRow> rows;  // input order, then axis
  std::vector<SweepRow> for_axis(int axis) const;
};

/// One closed-loop thermometry run per gain. Orientation A drives the mode-2
/// loop only; orientation B sets both loops to the same gain.
SweepResult run_gain_sweep(const RunConfig& cfg, const std::vector<double>& gains);

struct SaturationRow {
  double saturation = 0.0;
  double rate_297 = 0.0;  // counts/s
  int axis = 0;
  double t_nofb = 0.0, t_nofb_err = 0.0;
  double t_min = 0.0, t_min_err = 0.0;
  double best_gain = 0.0;
};

struct SaturationSweep {
  std::vector<SaturationRow> rows;
  spectral::SaturationFit fit;  // no-feedback series of the first analysed mode
};

/// For each saturation: no-feedback temperature and the lowest temperature
/// over gains predicted_optimal_gain * sweep.min_gain_factors; then the
/// saturation law fitted to the no-feedback series.
SaturationSweep run_saturation_sweep(const RunConfig& cfg, const std::vector<double>& saturations);

struct AxisFindingResult {
  std::array<imaging::IonImage, 3> images;  // undriven, driven along axis 1, axis 2
  std::array<imaging::GaussianFit2D, 3> fits;
  imaging::AxisAngles angles;
};

AxisFindingResult run_axis_finding(const RunConfig& cfg);

}  // namespace ionfb::experiments
