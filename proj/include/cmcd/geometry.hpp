#pragma once

// Signed distances (negative inside) and their gradients for the obstacle
// shapes. Ellipse distance uses the robust bisection of Eberly's
// point-to-ellipse method, so it is exact Euclidean distance, not the
// scaled-implicit approximation.

#include <algorithm>
#include <cmath>

#include "cmcd/types.hpp"

namespace cmcd::geom {

namespace detail {

inline double robust_length(double a, double b) { return std::hypot(a, b); }

// Root of F(s) = (r0 z0 / (s + r0))^2 + (z1 / (s + 1))^2 - 1 on (-1, inf).
inline double ellipse_root(double r0, double z0, double z1, double g) {
    const double n0 = r0 * z0;
    double s0 = z1 - 1.0;
    double s1 = g < 0.0 ? 0.0 : robust_length(n0, z1) - 1.0;
    double s = 0.0;
    for (int i = 0; i < 120; ++i) {
        s = 0.5 * (s0 + s1);
        if (s == s0 || s == s1) break;
        const double ratio0 = n0 / (s + r0);
        const double ratio1 = z1 / (s + 1.0);
        g = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
        if (g > 0.0) s0 = s;
        else if (g < 0.0) s1 = s;
        else break;
    }
    return s;
}

// Distance from first-quadrant point (y0, y1) to the ellipse with semi-axes
// e0 >= e1 > 0; writes the closest boundary point. Returns unsigned distance.
inline double point_ellipse_quadrant(double e0, double e1, double y0, double y1,
                                     double& x0, double& x1) {
    if (y1 > 0.0) {
        if (y0 > 0.0) {
            const double z0 = y0 / e0;
            const double z1 = y1 / e1;
            const double g = z0 * z0 + z1 * z1 - 1.0;
            if (g != 0.0) {
                const double r0 = (e0 / e1) * (e0 / e1);
                const double sbar = ellipse_root(r0, z0, z1, g);
                x0 = r0 * y0 / (sbar + r0);
                x1 = y1 / (sbar + 1.0);
                return robust_length(x0 - y0, x1 - y1);
            }
            x0 = y0;
            x1 = y1;
            return 0.0;
        }
        x0 = 0.0;
        x1 = e1;
        return std::abs(y1 - e1);
    }
    const double denom0 = e0 * e0 - e1 * e1;
    const double numer0 = e0 * y0;
    if (denom0 > 0.0 && numer0 < denom0) {
        const double xde0 = numer0 / denom0;
        x0 = e0 * xde0;
        x1 = e1 * std::sqrt(std::max(0.0, 1.0 - xde0 * xde0));
        return robust_length(x0 - y0, x1);
    }
    x0 = e0;
    x1 = 0.0;
    return std::abs(y0 - e0);
}

}  // namespace detail

struct SignedDistance {
    double value = 0.0;  // negative inside the shape
    Vec2 gradient;       // unit direction of increasing distance (a.e.)
};

// p is relative to the ellipse center; a, b are the semi-axes.
inline SignedDistance ellipse_sdf(Vec2 p, double a, double b) {
    // Fold into the canonical frame: axes sorted descending, first quadrant.
    const bool swapped = a < b;
    double e0 = a, e1 = b, y0 = std::abs(p.x), y1 = std::abs(p.y);
    if (swapped) {
        std::swap(e0, e1);
        std::swap(y0, y1);
    }
    double cx = 0.0, cy = 0.0;
    const double dist = detail::point_ellipse_quadrant(e0, e1, y0, y1, cx, cy);

    const double implicit = (p.x / a) * (p.x / a) + (p.y / b) * (p.y / b);
    const bool inside = implicit < 1.0;

    SignedDistance out;
    out.value = inside ? -dist : dist;
    if (dist > 1e-12) {
        double dx = y0 - cx, dy = y1 - cy;      // toward query, canonical frame
        if (inside) { dx = -dx; dy = -dy; }     // inside: distance grows toward boundary
        if (swapped) std::swap(dx, dy);
        if (p.x < 0.0) dx = -dx;
        if (p.y < 0.0) dy = -dy;
        const double n = detail::robust_length(dx, dy);
        out.gradient = {dx / n, dy / n};
    } else {
        // On (or numerically at) the boundary: use the implicit-surface normal.
        Vec2 g{2.0 * p.x / (a * a), 2.0 * p.y / (b * b)};
        const double n = g.norm();
        out.gradient = n > 0.0 ? Vec2{g.x / n, g.y / n} : Vec2{1.0, 0.0};
    }
    return out;
}

// Axis-aligned box with half-extents (a, b); p relative to the center.
inline SignedDistance box_sdf(Vec2 p, double a, double b) {
    const double dx = std::abs(p.x) - a;
    const double dy = std::abs(p.y) - b;
    SignedDistance out;
    if (dx > 0.0 || dy > 0.0) {
        const Vec2 outside{std::max(dx, 0.0), std::max(dy, 0.0)};
        const double d = outside.norm();
        out.value = d;
        Vec2 g{outside.x / d, outside.y / d};
        if (p.x < 0.0) g.x = -g.x;
        if (p.y < 0.0) g.y = -g.y;
        out.gradient = g;
    } else {
        // Inside: nearest face wins.
        out.value = std::max(dx, dy);
        if (dx > dy) out.gradient = {p.x >= 0.0 ? 1.0 : -1.0, 0.0};
        else out.gradient = {0.0, p.y >= 0.0 ? 1.0 : -1.0};
    }
    return out;
}

// Squared distance from point p to segment [s0, s1].
inline double point_segment_dist2(Vec2 p, Vec2 s0, Vec2 s1) {
    const Vec2 d = s1 - s0;
    const double len2 = d.norm2();
    double t = len2 > 0.0 ? (p - s0).dot(d) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const Vec2 c = s0 + d * t;
    return (p - c).norm2();
}

}  // namespace cmcd::geom
