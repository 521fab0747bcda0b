#pragma once

#include <cstdint>
#include <random>

namespace ionfb {

/// Named sub-streams so that, e.g., switching the feedback loop on does not
/// shift the dynamics noise sequence.
enum class Stream : std::uint32_t {
  kDynamics = 1,
  kInLoop = 2,
  kOutLoop = 3,
  kScan = 4,
  kImaging = 5,
  kSynthetic = 6,
  kEvents = 7,
  kInitial = 8,
};

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed, Stream stream, std::uint64_t point = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(point),
                    static_cast<std::uint32_t>(point >> 32)};
  return Engine(seq);
}

}  // namespace ionfb
