// Shortest collision-free paths on the visibility graph of inflated obstacles.
#pragma once

#include "sprayrover/environment.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace sprayrover {

class PlanningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Number of sides used to approximate rounded clearance regions.
inline constexpr int kInflationSides = 16;

/// Obstacles grown by `clearance` and approximated by circumscribed convex
/// polygons (counter-clockwise), so straight edges never cut the true region.
std::vector<std::vector<Vec2d>> inflate_obstacles(const WorldMap& world, double clearance);

/// Shortest polyline from `from` to `to` that stays out of every inflated
/// obstacle. Inflated regions that already contain `from` are ignored for
/// the first leg so a rover nudged inside its clearance can still leave.
/// Throws PlanningError when `to` is enclosed or lies inside a clearance zone.
std::vector<Vec2d> plan_path(const WorldMap& world, const Vec2d& from, const Vec2d& to, double clearance);

}  // namespace sprayrover
