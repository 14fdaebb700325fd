// Planar geometry kernels shared by the world model, the plant and the planner.
//
// All kernels are templated on the scalar type and operate on fixed-size Eigen
// vectors. Angles are radians, counter-clockwise from +x.
#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace sprayrover {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
using Vec2d = Vec2<double>;

/// Wraps an angle into (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar angle) {
  constexpr Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  Scalar a = std::remainder(angle, two_pi);
  if (a <= -std::numbers::pi_v<Scalar>) a += two_pi;
  return a;
}

template <typename Scalar>
Vec2<Scalar> unit_vector(Scalar angle) {
  return Vec2<Scalar>(std::cos(angle), std::sin(angle));
}

template <typename Scalar>
Scalar cross2(const Vec2<Scalar>& a, const Vec2<Scalar>& b) {
  return a.x() * b.y() - a.y() * b.x();
}

/// Axis-aligned rectangle.
template <typename Scalar>
struct Box2 {
  Vec2<Scalar> lo;
  Vec2<Scalar> hi;

  bool contains(const Vec2<Scalar>& p, Scalar margin = Scalar(0)) const {
    return p.x() >= lo.x() + margin && p.x() <= hi.x() - margin &&
           p.y() >= lo.y() + margin && p.y() <= hi.y() - margin;
  }
  Scalar area() const { return (hi - lo).prod(); }
};
using Box2d = Box2<double>;

/// Distance along a unit-direction ray to the first intersection with a
/// circle. Zero when the origin is inside.
template <typename Scalar>
std::optional<Scalar> ray_circle(const Vec2<Scalar>& origin, const Vec2<Scalar>& dir,
                                 const Vec2<Scalar>& center, Scalar radius) {
  const Vec2<Scalar> m = origin - center;
  const Scalar c = m.squaredNorm() - radius * radius;
  if (c <= Scalar(0)) return Scalar(0);
  const Scalar b = m.dot(dir);
  if (b > Scalar(0)) return std::nullopt;
  const Scalar disc = b * b - c;
  if (disc < Scalar(0)) return std::nullopt;
  return -b - std::sqrt(disc);
}

/// Distance along a unit-direction ray to segment [a, b].
template <typename Scalar>
std::optional<Scalar> ray_segment(const Vec2<Scalar>& origin, const Vec2<Scalar>& dir,
                                  const Vec2<Scalar>& a, const Vec2<Scalar>& b) {
  const Vec2<Scalar> e = b - a;
  const Scalar denom = cross2<Scalar>(dir, e);
  if (std::abs(denom) < Scalar(1e-12)) return std::nullopt;
  const Vec2<Scalar> w = a - origin;
  const Scalar t = cross2<Scalar>(w, e) / denom;
  const Scalar u = cross2<Scalar>(w, dir) / denom;
  if (t < Scalar(0) || u < Scalar(0) || u > Scalar(1)) return std::nullopt;
  return t;
}

/// Counter-clockwise convex polygon containment (boundary counts as inside
/// when `eps` is zero; a positive `eps` requires strict interior depth).
template <typename Scalar>
bool point_in_convex(const Vec2<Scalar>& p, std::span<const Vec2<Scalar>> poly,
                     Scalar eps = Scalar(0)) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2<Scalar>& a = poly[i];
    const Vec2<Scalar>& b = poly[(i + 1) % n];
    const Vec2<Scalar> e = b - a;
    if (cross2<Scalar>(e, p - a) < eps * e.norm()) return false;
  }
  return true;
}

template <typename Scalar>
std::optional<Scalar> ray_convex_polygon(const Vec2<Scalar>& origin, const Vec2<Scalar>& dir,
                                         std::span<const Vec2<Scalar>> poly) {
  if (point_in_convex<Scalar>(origin, poly)) return Scalar(0);
  std::optional<Scalar> best;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    auto t = ray_segment<Scalar>(origin, dir, poly[i], poly[(i + 1) % poly.size()]);
    if (t && (!best || *t < *best)) best = t;
  }
  return best;
}

/// Distance from an interior point to the rectangle boundary along a ray.
template <typename Scalar>
Scalar ray_box_exit(const Vec2<Scalar>& origin, const Vec2<Scalar>& dir, const Box2<Scalar>& box) {
  Scalar t = std::numeric_limits<Scalar>::infinity();
  for (int k = 0; k < 2; ++k) {
    if (dir[k] > Scalar(0)) t = std::min(t, (box.hi[k] - origin[k]) / dir[k]);
    if (dir[k] < Scalar(0)) t = std::min(t, (box.lo[k] - origin[k]) / dir[k]);
  }
  return std::max(t, Scalar(0));
}

template <typename Scalar>
Scalar distance_to_segment(const Vec2<Scalar>& p, const Vec2<Scalar>& a, const Vec2<Scalar>& b) {
  const Vec2<Scalar> e = b - a;
  const Scalar len2 = e.squaredNorm();
  if (len2 <= Scalar(0)) return (p - a).norm();
  const Scalar s = std::clamp((p - a).dot(e) / len2, Scalar(0), Scalar(1));
  return (p - (a + s * e)).norm();
}

/// Signed distance to a counter-clockwise convex polygon (negative inside).
template <typename Scalar>
Scalar signed_distance_convex(const Vec2<Scalar>& p, std::span<const Vec2<Scalar>> poly) {
  Scalar d = std::numeric_limits<Scalar>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i)
    d = std::min(d, distance_to_segment<Scalar>(p, poly[i], poly[(i + 1) % poly.size()]));
  return point_in_convex<Scalar>(p, poly) ? -d : d;
}

/// Andrew's monotone chain; returns a counter-clockwise hull without
/// collinear points.
template <typename Scalar>
std::vector<Vec2<Scalar>> convex_hull(std::vector<Vec2<Scalar>> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2<Scalar>& a, const Vec2<Scalar>& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec2<Scalar>> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross2<Scalar>(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= Scalar(0)) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross2<Scalar>(hull[k - 1] - hull[k - 2], pts[i - 1] - hull[k - 2]) <= Scalar(0)) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

/// Strictly convex with non-collinear vertices, either winding.
template <typename Scalar>
bool is_strictly_convex(std::span<const Vec2<Scalar>> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  int sign = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Scalar c = cross2<Scalar>(poly[(i + 1) % n] - poly[i], poly[(i + 2) % n] - poly[(i + 1) % n]);
    if (std::abs(c) < Scalar(1e-12)) return false;
    const int s = c > 0 ? 1 : -1;
    if (sign == 0) sign = s;
    else if (s != sign) return false;
  }
  return true;
}

template <typename Scalar>
Scalar polygon_signed_area(std::span<const Vec2<Scalar>> poly) {
  Scalar a = Scalar(0);
  for (std::size_t i = 0; i < poly.size(); ++i) a += cross2<Scalar>(poly[i], poly[(i + 1) % poly.size()]);
  return a / Scalar(2);
}

/// True when the open segment (a, b) passes through the interior of a
/// counter-clockwise convex polygon deeper than `eps`. Segments that only
/// graze the boundary or run along an edge are not blocked.
template <typename Scalar>
bool segment_enters_convex(const Vec2<Scalar>& a, const Vec2<Scalar>& b,
                           std::span<const Vec2<Scalar>> poly, Scalar eps) {
  // Cyrus-Beck clipping against the polygon shrunk by eps.
  Scalar t_enter = Scalar(0);
  Scalar t_exit = Scalar(1);
  const Vec2<Scalar> d = b - a;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2<Scalar>& p0 = poly[i];
    const Vec2<Scalar> e = poly[(i + 1) % poly.size()] - p0;
    const Scalar len = e.norm();
    // Inside means cross(e, x - p0) / len >= eps.
    const Scalar num = cross2<Scalar>(e, a - p0) / len - eps;
    const Scalar den = cross2<Scalar>(e, d) / len;
    if (std::abs(den) < Scalar(1e-15)) {
      if (num < Scalar(0)) return false;
      continue;
    }
    const Scalar t = -num / den;
    if (den > Scalar(0)) t_enter = std::max(t_enter, t);
    else t_exit = std::min(t_exit, t);
    if (t_enter >= t_exit) return false;
  }
  return t_exit - t_enter > Scalar(1e-12);
}

/// Length of a polyline.
template <typename Scalar>
Scalar polyline_length(std::span<const Vec2<Scalar>> pts) {
  Scalar len = Scalar(0);
  for (std::size_t i = 1; i < pts.size(); ++i) len += (pts[i] - pts[i - 1]).norm();
  return len;
}

}  // namespace sprayrover
