#pragma once

#include <cstddef>
#include <span>

namespace ionfb::sim {

struct TemperatureEstimate {
  double temperature = 0.0;  // K
  double standard_error = 0.0;  // K
};

/// Equipartition thermometer T = m <v^2> / k_B for one axis. The standard error
/// comes from batch means so that correlated samples are handled. Requires
/// at least 1e4 samples.
TemperatureEstimate equipartition_temperature(std::span<const double> velocities, double mass,
                                              std::size_t batches = 50);

inline constexpr std::size_t kMinThermometerSamples = 10000;

}  // namespace ionfb::sim
