#pragma once

#include <filesystem>

#include "ionfb/experiments/pipeline.hpp"

namespace ionfb::experiments {

/// t_s, x1_m, x2_m, v1_mps, v2_mps
void write_timeseries_csv(const std::filesystem::path& path, const std::vector<TimeseriesRow>& rows);
/// t_s, counts_inloop, counts_outloop (bin start times)
void write_photocurrent_csv(const std::filesystem::path& path, const SimulationRecord& rec);
/// Key-value report of the Lorentzian fit(s) and equipartition cross-check.
void write_fit_report(const std::filesystem::path& path, const ThermometryResult& r);
/// One row per analysed axis: slope, A_corr, A_displ, peak height, scale.
void write_calibration_csv(const std::filesystem::path& path, const ThermometryResult& r);
/// gain, T_K, T_err_K for one axis.
void write_gain_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);
/// rate_297_per_ms, T_nofb_K, T_err_K, T_min_K, T_min_err_K for one axis.
void write_saturation_csv(const std::filesystem::path& path, const std::vector<SaturationRow>& rows);
/// Saturation-law fit parameters.
void write_saturation_fit(const std::filesystem::path& path, const spectral::SaturationFit& fit);
/// axis, alpha_deg, alpha_err_deg, orthogonality_defect_deg
void write_axes_csv(const std::filesystem::path& path, const AxisFindingResult& r);
/// Key-value report of the three image fits; the undriven image has no angle.
void write_image_fits(const std::filesystem::path& path, const AxisFindingResult& r);

}  // namespace ionfb::experiments
