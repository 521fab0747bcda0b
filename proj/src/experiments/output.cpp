#include "ionfb/experiments/output.hpp"

#include <fstream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/os.h>

#include "ionfb/common/units.hpp"

namespace ionfb::experiments {

namespace {

fmt::ostream open(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  return fmt::output_file(path.string());
}

}  // namespace

void write_timeseries_csv(const std::filesystem::path& path, const std::vector<TimeseriesRow>& rows) {
  auto out = open(path);
  out.print("t_s,x1_m,x2_m,v1_mps,v2_mps\n");
  for (const auto& r : rows)
    out.print("{:.12g},{:.10g},{:.10g},{:.10g},{:.10g}\n", r.t, r.x[0], r.x[1], r.v[0], r.v[1]);
}

void write_photocurrent_csv(const std::filesystem::path& path, const SimulationRecord& rec) {
  auto out = open(path);
  out.print("t_s,counts_inloop,counts_outloop\n");
  const double dt = 1.0 / rec.in_loop.sample_rate;
  for (std::size_t i = 0; i < rec.in_loop.samples.size(); ++i)
    out.print("{:.12g},{},{}\n", rec.t_start + static_cast<double>(i) * dt, rec.in_loop.samples[i],
              rec.out_loop.samples[i]);
}

void write_fit_report(const std::filesystem::path& path, const ThermometryResult& r) {
  auto out = open(path);
  for (const auto& m : r.modes) {
    const std::string p = fmt::format("axis{}.", m.axis + 1);
    out.print("{}method = {}\n", p, m.spectral ? "lorentzian" : "equipartition (no photons)");
    out.print("{}T_K = {:.6g}\n{}T_err_K = {:.3g}\n", p, m.temperature, p, m.uncertainty);
    if (m.spectral) {
      const auto& f = m.fit;
      out.print("{}omega_hz = {:.8g}\n{}omega_err_hz = {:.3g}\n", p, rad_to_hz(f.omega), p,
                rad_to_hz(f.uncertainty[1]));
      out.print("{}gamma_hz = {:.6g}\n{}gamma_err_hz = {:.3g}\n", p, rad_to_hz(f.gamma), p,
                rad_to_hz(f.uncertainty[2]));
      out.print("{}offset_m2_per_hz = {:.6g}\n{}offset_err_m2_per_hz = {:.3g}\n", p, f.offset, p,
                f.uncertainty[3]);
      out.print("{}residual_norm = {:.6g}\n{}iterations = {}\n", p, f.residual_norm, p, f.iterations);
    }
    out.print("{}T_equipartition_K = {:.6g}\n{}T_equipartition_err_K = {:.3g}\n", p,
              m.equipartition.temperature, p, m.equipartition.standard_error);
  }
  if (!r.raw.freqs.empty()) out.print("rbw_hz = {:.6g}\n", r.raw.rbw);
}

void write_calibration_csv(const std::filesystem::path& path, const ThermometryResult& r) {
  auto out = open(path);
  out.print(
      "axis,slope_per_um,slope_err_per_um,a_corr,a_corr_err,a_displ_nm,a_displ_err_nm,"
      "drive_hz,peak_height,scale_m2_per_unit,scale_err\n");
  for (const auto& m : r.modes) {
    if (!m.spectral) continue;
    const auto& c = m.calibration;
    out.print("{},{:.6g},{:.3g},{:.6g},{:.3g},{:.6g},{:.3g},{:.8g},{:.6g},{:.6g},{:.3g}\n", m.axis + 1,
              c.slope * 1e-6, c.slope_uncertainty * 1e-6, c.a_corr, c.a_corr_uncertainty,
              c.a_displ * 1e9, c.a_displ_uncertainty * 1e9, m.drive_frequency, c.peak_height, c.scale,
              c.scale_uncertainty);
  }
}

void write_gain_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  auto out = open(path);
  out.print("gain,T_K,T_err_K\n");
  for (const auto& r : rows) out.print("{:.6g},{:.6g},{:.3g}\n", r.x, r.temperature, r.uncertainty);
}

void write_saturation_csv(const std::filesystem::path& path, const std::vector<SaturationRow>& rows) {
  auto out = open(path);
  out.print("rate_297_per_ms,T_nofb_K,T_err_K,T_min_K,T_min_err_K\n");
  for (const auto& r : rows)
    out.print("{:.6g},{:.6g},{:.3g},{:.6g},{:.3g}\n", r.rate_297 * 1e-3, r.t_nofb, r.t_nofb_err,
              r.t_min, r.t_min_err);
}

void write_saturation_fit(const std::filesystem::path& path, const spectral::SaturationFit& fit) {
  auto out = open(path);
  out.print("T0_K = {:.6g}\nT0_err_K = {:.3g}\n", fit.t0, fit.t0_uncertainty);
  out.print("rate_max_per_ms = {:.6g}\nrate_max_err_per_ms = {:.3g}\n", fit.rate_max * 1e-3,
            fit.rate_max_uncertainty * 1e-3);
  out.print("residual_norm = {:.6g}\n", fit.residual_norm);
}

void write_axes_csv(const std::filesystem::path& path, const AxisFindingResult& r) {
  auto out = open(path);
  out.print("axis,alpha_deg,alpha_err_deg,orthogonality_defect_deg\n");
  for (std::size_t j = 0; j < 2; ++j)
    out.print("{},{:.4f},{:.4f},{:.4f}\n", j + 1, rad_to_deg(r.angles.alpha[j]),
              rad_to_deg(r.angles.uncertainty[j]), rad_to_deg(r.angles.orthogonality_defect));
}

void write_image_fits(const std::filesystem::path& path, const AxisFindingResult& r) {
  auto out = open(path);
  const char* names[3] = {"undriven", "drive1", "drive2"};
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& f = r.fits[k];
    const std::string p = std::string(names[k]) + ".";
    out.print("{}angle_reliable = {}\n", p, f.angle_reliable ? "yes" : "no");
    if (f.angle_reliable)
      out.print("{}angle_deg = {:.4f}\n{}angle_err_deg = {:.4f}\n", p, rad_to_deg(f.angle), p,
                rad_to_deg(f.angle_uncertainty));
    out.print("{}major_width_um = {:.5g}\n{}minor_width_um = {:.5g}\n", p, f.major_width * 1e6, p,
              f.minor_width * 1e6);
    out.print("{}center_um = {:.4g}, {:.4g}\n", p, f.x0 * 1e6, f.y0 * 1e6);
    out.print("{}amplitude_adu = {:.6g}\n{}background_adu = {:.4g}\n", p, f.amplitude, p, f.background);
  }
}

}  // namespace ionfb::experiments
