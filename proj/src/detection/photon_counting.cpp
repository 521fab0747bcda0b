#include "ionfb/detection/photon_counting.hpp"

#include <numeric>
#include <stdexcept>

namespace ionfb::detection {

const char* channel_name(Channel c) {
  return c == Channel::kTransmitted ? "transmitted" : "reflected";
}

double PhotocurrentTrace::mean_counts() const {
  if (samples.empty()) return 0.0;
  const double sum = std::accumulate(samples.begin(), samples.end(), 0.0);
  return sum / static_cast<double>(samples.size());
}

std::vector<std::uint32_t> sample_photon_counts(std::span<const double> rate, double dt,
                                                Engine& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("sample_photon_counts: dt must be > 0");
  std::vector<std::uint32_t> out(rate.size());
  PhotonCounter counter;
  for (std::size_t i = 0; i < rate.size(); ++i) {
    if (!(rate[i] >= 0.0)) throw std::invalid_argument("sample_photon_counts: rate must be >= 0");
    out[i] = counter.draw(rate[i] * dt, rng);
  }
  return out;
}

PhotocurrentTrace decimate(const PhotocurrentTrace& trace, std::size_t factor) {
  if (factor == 0) throw std::invalid_argument("decimate: factor must be >= 1");
  PhotocurrentTrace out;
  out.channel = trace.channel;
  out.sample_rate = trace.sample_rate / static_cast<double>(factor);
  const std::size_t n = trace.samples.size() / factor;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t acc = 0;
    for (std::size_t k = 0; k < factor; ++k) acc += trace.samples[i * factor + k];
    out.samples[i] = acc;
  }
  return out;
}

std::vector<double> normalized_signal(const PhotocurrentTrace& trace) {
  const double mean = trace.mean_counts();
  std::vector<double> out(trace.samples.size(), 0.0);
  if (!(mean > 0.0)) return out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = trace.samples[i] / mean - 1.0;
  return out;
}

void check_nyquist(const PhotocurrentTrace& trace, double max_signal_hz) {
  if (!(trace.sample_rate > 2.0 * max_signal_hz))
    throw std::invalid_argument("trace sample rate below Nyquist for the trap frequency");
}

}  // namespace ionfb::detection
