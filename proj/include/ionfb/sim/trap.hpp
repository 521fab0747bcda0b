#pragma once

#include <array>
#include <cstdint>

#include "ionfb/common/units.hpp"
#include "ionfb/common/vec2.hpp"

namespace ionfb::sim {

/// Radial trap: two independent harmonic modes along axes at axis_angles
/// (measured from the laboratory x-axis).
struct TrapConfig {
  std::array<double, 2> omega{hz_to_rad(450e3), hz_to_rad(455e3)};  // rad/s
  std::array<double, 2> gamma{hz_to_rad(500.0), hz_to_rad(500.0)};  // rad/s
  double mass = kYb174Mass;                                          // kg
  // Physical trap axes are orthogonal; axis 2 follows the camera-measured 60.24 deg.
  std::array<double, 2> axis_angles{deg_to_rad(60.24 - 90.0), deg_to_rad(60.24)};
  double abort_threshold = 10e-6;     // m
  double max_damping_ratio = 1e-2;    // gamma/omega
  double orthogonality_tolerance = 1e-6;  // rad

  double max_frequency_hz() const;
  /// Unit vector of trap axis j in the laboratory frame.
  Vec2 axis(int j) const { return unit_vector(axis_angles[j]); }
  /// Components of a lab-frame vector along the two trap axes.
  std::array<double, 2> to_trap_frame(const Vec2& lab) const;

  /// Throws std::invalid_argument naming the violated field.
  void validate() const;
};

struct IonState {
  double t = 0.0;
  std::array<double, 2> x{};  // m, along trap axes
  std::array<double, 2> v{};  // m/s
  std::uint64_t step = 0;
};

struct BathConfig {
  double temperature = 1.95e-3;           // K
  double saturation = 1.0;                // dimensionless
  double linewidth = hz_to_rad(19.6e6);   // rad/s

  void validate() const;
};

/// Doppler bath at saturation s given the s->0 temperature T0: T_D = T0 (1 + s).
BathConfig doppler_bath(double saturation, double t0, double linewidth = hz_to_rad(19.6e6));

}  // namespace ionfb::sim
