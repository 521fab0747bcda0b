#include "ionfb/sim/thermometer.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ionfb/common/units.hpp"

namespace ionfb::sim {

TemperatureEstimate equipartition_temperature(std::span<const double> velocities, double mass,
                                              std::size_t batches) {
  if (velocities.size() < kMinThermometerSamples)
    throw std::invalid_argument("equipartition_temperature: need at least 1e4 samples");
  if (!(mass > 0.0)) throw std::invalid_argument("equipartition_temperature: mass must be > 0");
  if (batches < 2) batches = 2;

  const std::size_t per_batch = velocities.size() / batches;
  std::vector<double> batch_means(batches, 0.0);
  double total = 0.0;
  for (std::size_t b = 0; b < batches; ++b) {
    double acc = 0.0;
    for (std::size_t i = b * per_batch; i < (b + 1) * per_batch; ++i)
      acc += velocities[i] * velocities[i];
    batch_means[b] = acc / static_cast<double>(per_batch);
  }
  for (double v : velocities) total += v * v;
  const double mean_v2 = total / static_cast<double>(velocities.size());

  double bm = 0.0;
  for (double m : batch_means) bm += m;
  bm /= static_cast<double>(batches);
  double var = 0.0;
  for (double m : batch_means) var += (m - bm) * (m - bm);
  var /= static_cast<double>(batches - 1);

  const double scale = mass / kBoltzmann;
  return {scale * mean_v2, scale * std::sqrt(var / static_cast<double>(batches))};
}

}  // namespace ionfb::sim
