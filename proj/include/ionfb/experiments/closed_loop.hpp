#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ionfb/detection/knife_edge.hpp"
#include "ionfb/detection/photon_counting.hpp"
#include "ionfb/feedback/loop.hpp"
#include "ionfb/sim/drive.hpp"
#include "ionfb/sim/trap.hpp"

namespace ionfb::experiments {

/// Everything that defines the physical system and the electronics.
struct SimulationSetup {
  sim::TrapConfig trap;
  sim::BathConfig bath;
  detection::OpticalConfig optics;
  std::vector<feedback::FeedbackConfig> loops;
  double dt = 0.0;             // s, integrator step
  std::size_t bin_steps = 8;   // integrator steps per detector bin

  double sample_rate() const { return 1.0 / (dt * static_cast<double>(bin_steps)); }
};

/// What to run and what to keep.
struct SimulationRequest {
  double duration = 1.0;  // s, recorded
  double settle = 0.0;    // s, run before recording starts
  std::vector<sim::CoherentDrive> drives;  // lab-frame force axes
  std::uint64_t seed = 1;
  std::uint64_t run = 0;  // selects independent noise streams for the same seed
  std::size_t velocity_stride = 25;       // steps; 0 disables
  std::size_t displacement_stride = 0;    // steps; 0 disables
  std::size_t timeseries_stride = 0;      // steps; 0 disables
  bool record_events = false;
  detection::Channel event_channel = detection::Channel::kReflected;
};

struct TimeseriesRow {
  double t;
  std::array<double, 2> x, v;
};

struct SimulationRecord {
  detection::PhotocurrentTrace in_loop;   // transmitted
  detection::PhotocurrentTrace out_loop;  // reflected
  std::array<std::vector<double>, 2> velocities;  // m/s along each trap axis
  std::vector<double> displacement;       // m along the knife-edge normal
  std::vector<double> events;             // detection times on event_channel, s
  std::vector<TimeseriesRow> timeseries;
  double t_start = 0.0;  // s, start of the recorded interval
  double t_end = 0.0;
  sim::IonState final_state;
};

/// Ion dynamics, knife-edge detection with Poisson shot noise on both detectors,
/// and the feedback loops, advanced together. Counts are accumulated over
/// bins of `bin_steps` integrator steps; the loops consume one in-loop bin and
/// their force is held over the next bin. The ion starts from a thermal state
/// of the bath. The noise streams for dynamics, each detector and the initial
/// state are independent, so a loop with zero gain reproduces the open-loop
/// trajectory exactly.
SimulationRecord simulate_closed_loop(const SimulationSetup& setup, const SimulationRequest& req);

}  // namespace ionfb::experiments
