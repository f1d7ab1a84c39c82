#pragma once

#include <cmath>

namespace tihdp {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    Vec2 operator-() const { return {-x, -y}; }
    bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }
};

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm_sq(const Vec2& a) { return dot(a, a); }
inline double norm(const Vec2& a) { return std::sqrt(norm_sq(a)); }

// Unit vector; returns zero vector for zero input.
inline Vec2 unit(const Vec2& a) {
    double n = norm(a);
    if (n == 0.0) return {0.0, 0.0};
    return a / n;
}

// Counterclockwise rotation.
inline Vec2 rotate(const Vec2& v, double angle) {
    double c = std::cos(angle), s = std::sin(angle);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

inline Vec2 perp(const Vec2& v) { return {-v.y, v.x}; }

inline Vec2 heading_dir(double heading) { return {std::cos(heading), std::sin(heading)}; }

// Normalize an angle into [-pi, pi).
inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * M_PI;
    a -= two_pi * std::floor((a + M_PI) / two_pi);
    if (a >= M_PI) a -= two_pi;  // guards floor rounding at the boundary
    return a;
}

}  // namespace tihdp
