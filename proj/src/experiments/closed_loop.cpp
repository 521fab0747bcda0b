#include "ionfb/experiments/closed_loop.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ionfb/common/rng.hpp"
#include "ionfb/sim/langevin.hpp"

namespace ionfb::experiments {

SimulationRecord simulate_closed_loop(const SimulationSetup& setup, const SimulationRequest& req) {
  setup.trap.validate();
  setup.bath.validate();
  setup.optics.validate();
  if (setup.bin_steps == 0) throw std::invalid_argument("bin_steps must be >= 1");
  if (!(req.duration > 0.0)) throw std::invalid_argument("duration must be > 0");
  if (!(req.settle >= 0.0)) throw std::invalid_argument("settle time must be >= 0");

  const sim::LangevinIntegrator integrator(setup.trap, setup.bath, setup.dt);
  const double fs = setup.sample_rate();
  const double dt = setup.dt;
  const std::size_t bin = setup.bin_steps;
  feedback::DualLoop loops(setup.loops, fs);

  Engine dyn = make_engine(req.seed, Stream::kDynamics, req.run);
  Engine in_rng = make_engine(req.seed, Stream::kInLoop, req.run);
  Engine out_rng = make_engine(req.seed, Stream::kOutLoop, req.run);
  Engine event_rng = make_engine(req.seed, Stream::kEvents, req.run);
  Engine init_rng = make_engine(req.seed, Stream::kInitial, req.run);

  sim::IonState state;
  {
    std::normal_distribution<double> gauss;
    const double v_rms = std::sqrt(kBoltzmann * setup.bath.temperature / setup.trap.mass);
    for (int j = 0; j < 2; ++j) {
      state.x[j] = v_rms / setup.trap.omega[j] * gauss(init_rng);
      state.v[j] = v_rms * gauss(init_rng);
    }
  }

  const auto proj = detection::knife_projection(setup.trap.axis_angles, setup.optics.knife_angle);
  const double erf_scale =
      setup.optics.magnification / (setup.optics.spot_sigma * std::numbers::sqrt2);
  const double rate = setup.optics.rate_370();
  const double bin_mean = 0.5 * rate * dt * static_cast<double>(bin);  // per channel at balance

  const auto settle_bins = static_cast<std::uint64_t>(std::ceil(req.settle * fs - 1e-9));
  const auto record_bins = static_cast<std::uint64_t>(std::llround(req.duration * fs));
  if (record_bins == 0) throw std::invalid_argument("duration shorter than one detector bin");

  SimulationRecord rec;
  rec.in_loop.sample_rate = rec.out_loop.sample_rate = fs;
  rec.in_loop.channel = detection::Channel::kTransmitted;
  rec.out_loop.channel = detection::Channel::kReflected;
  rec.in_loop.samples.reserve(record_bins);
  rec.out_loop.samples.reserve(record_bins);
  const std::uint64_t record_steps = record_bins * bin;
  if (req.velocity_stride > 0)
    for (auto& v : rec.velocities) v.reserve(record_steps / req.velocity_stride + 1);
  if (req.displacement_stride > 0) rec.displacement.reserve(record_steps / req.displacement_stride + 1);

  detection::PhotonCounter counter;
  std::uniform_real_distribution<double> uniform;
  std::vector<double> channel_weight(bin);
  std::array<double, 2> force{0.0, 0.0};  // trap frame, feedback part
  std::uint64_t recorded = 0;             // steps since recording started

  for (std::uint64_t b = 0; b < settle_bins + record_bins; ++b) {
    const bool recording = b >= settle_bins;
    if (recording && b == settle_bins) rec.t_start = state.t;
    const double bin_start = state.t;
    double transmitted = 0.0;
    for (std::size_t s = 0; s < bin; ++s) {
      const double d = proj[0] * state.x[0] + proj[1] * state.x[1];
      const double frac = 0.5 * (1.0 + std::erf(erf_scale * d));
      transmitted += frac;
      if (recording) {
        if (req.record_events)
          channel_weight[s] = req.event_channel == detection::Channel::kTransmitted ? frac : 1.0 - frac;
        if (req.velocity_stride > 0 && recorded % req.velocity_stride == 0) {
          rec.velocities[0].push_back(state.v[0]);
          rec.velocities[1].push_back(state.v[1]);
        }
        if (req.displacement_stride > 0 && recorded % req.displacement_stride == 0)
          rec.displacement.push_back(d);
        if (req.timeseries_stride > 0 && recorded % req.timeseries_stride == 0)
          rec.timeseries.push_back({state.t, state.x, state.v});
        ++recorded;
      }
      std::array<double, 2> f = force;
      if (!req.drives.empty()) {
        Vec2 lab{0.0, 0.0};
        for (const auto& drive : req.drives) lab = lab + drive.force(state.t + 0.5 * dt);
        const auto along = setup.trap.to_trap_frame(lab);
        f[0] += along[0];
        f[1] += along[1];
      }
      integrator.step(state, f, dyn);
    }

    // Both detectors are drawn every bin, whether or not a loop listens.
    const double scale = rate * dt;
    const std::uint32_t n_in = counter.draw(scale * transmitted, in_rng);
    const std::uint32_t n_out = counter.draw(scale * (static_cast<double>(bin) - transmitted), out_rng);
    if (recording) {
      rec.in_loop.samples.push_back(n_in);
      rec.out_loop.samples.push_back(n_out);
      const std::uint32_t n_ev = req.event_channel == detection::Channel::kTransmitted ? n_in : n_out;
      if (req.record_events && n_ev > 0) {
        // Place each detection within the bin in proportion to the per-step rate.
        double total = 0.0;
        for (double& w : channel_weight) w = (total += w);
        const std::size_t first = rec.events.size();
        for (std::uint32_t e = 0; e < n_ev; ++e) {
          const double pick = uniform(event_rng) * total;
          const auto i = static_cast<std::size_t>(
              std::upper_bound(channel_weight.begin(), channel_weight.end(), pick) -
              channel_weight.begin());
          const double step = static_cast<double>(std::min(i, bin - 1));
          rec.events.push_back(bin_start + (step + uniform(event_rng)) * dt);
        }
        std::sort(rec.events.begin() + static_cast<std::ptrdiff_t>(first), rec.events.end());
      }
    }

    if (loops.size() > 0) {
      const double u = bin_mean > 0.0 ? n_in / bin_mean - 1.0 : 0.0;
      force = setup.trap.to_trap_frame(loops.step(u));
    }
  }
  rec.t_end = state.t;
  rec.final_state = state;
  return rec;
}

}  // namespace ionfb::experiments
