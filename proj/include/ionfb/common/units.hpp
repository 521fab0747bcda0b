#pragma once

#include <numbers>

namespace ionfb {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr double kBoltzmann = 1.380649e-23;   // J/K
inline constexpr double kHbar = 1.054571817e-34;     // J s
inline constexpr double kAtomicMass = 1.66053906660e-27;  // kg

inline constexpr double kYb174Mass = 173.938862 * kAtomicMass;

constexpr double hz_to_rad(double f) { return kTwoPi * f; }
constexpr double rad_to_hz(double w) { return w / kTwoPi; }
constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Doppler-limit temperature hbar*Gamma/(2 k_B) for a transition linewidth Gamma [rad/s].
constexpr double doppler_limit(double linewidth) {
  return kHbar * linewidth / (2.0 * kBoltzmann);
}

}  // namespace ionfb
