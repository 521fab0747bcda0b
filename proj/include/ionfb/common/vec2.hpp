#pragma once

#include <array>
#include <cmath>

namespace ionfb {

using Vec2 = std::array<double, 2>;

inline Vec2 unit_vector(double angle) { return {std::cos(angle), std::sin(angle)}; }

inline double dot(const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; }

inline double norm(const Vec2& a) { return std::hypot(a[0], a[1]); }

inline Vec2 operator+(const Vec2& a, const Vec2& b) { return {a[0] + b[0], a[1] + b[1]}; }

inline Vec2 operator*(double s, const Vec2& a) { return {s * a[0], s * a[1]}; }

}  // namespace ionfb
