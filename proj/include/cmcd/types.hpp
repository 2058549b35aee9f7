#pragma once

#include <cmath>
#include <vector>

namespace cmcd {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double norm() const { return std::sqrt(x * x + y * y); }
    double norm2() const { return x * x + y * y; }
    // 90 degree counter-clockwise rotation.
    Vec2 perp() const { return {-y, x}; }
};

// One timestamped sensor observation (n synthetic FBG channels).
struct SensorFrame {
    double timestamp = 0.0;  // seconds
    std::vector<double> values;
};

// Simulator-side contact oracle, independent of the vision labels.
struct ContactTruth {
    double timestamp = 0.0;       // seconds
    bool in_contact = false;      // true iff max_penetration > 0
    double max_penetration = 0.0; // mm, backbone centerline depth into any obstacle
};

}  // namespace cmcd
