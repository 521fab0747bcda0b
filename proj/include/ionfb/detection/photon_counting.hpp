#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ionfb/common/rng.hpp"

namespace ionfb::detection {

enum class Channel { kTransmitted, kReflected };

const char* channel_name(Channel c);

/// Uniformly binned detected counts for one detector.
struct PhotocurrentTrace {
  double sample_rate = 0.0;  // Hz
  std::vector<std::uint32_t> samples;
  Channel channel = Channel::kTransmitted;

  double duration() const { return samples.size() / sample_rate; }
  double mean_counts() const;
};

/// Independent Poisson draws with mean rate[i] * dt.
std::vector<std::uint32_t> sample_photon_counts(std::span<const double> rate, double dt,
                                                Engine& rng);

/// Single-bin Poisson sampler reused across a simulation.
class PhotonCounter {
 public:
  std::uint32_t draw(double mean, Engine& rng) {
    if (!(mean > 0.0)) return 0;
    dist_.param(std::poisson_distribution<std::uint32_t>::param_type(mean));
    return dist_(rng);
  }

 private:
  std::poisson_distribution<std::uint32_t> dist_;
};

/// Sums groups of `factor` consecutive bins.
PhotocurrentTrace decimate(const PhotocurrentTrace& trace, std::size_t factor);

/// Counts divided by their mean, minus one.
std::vector<double> normalized_signal(const PhotocurrentTrace& trace);

/// Throws std::invalid_argument unless sample_rate > 2 * max_signal_hz.
void check_nyquist(const PhotocurrentTrace& trace, double max_signal_hz);

}  // namespace ionfb::detection
