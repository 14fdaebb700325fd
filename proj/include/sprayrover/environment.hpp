// World model: arena bounds, obstacles, breeding sites and checkpoint nodes.
#pragma once

#include "sprayrover/geometry.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace sprayrover {

using SiteId = std::uint32_t;
using NodeId = std::uint32_t;

struct CircleObstacle {
  Vec2d center;
  double radius = 0.0;
};

/// Vertices are stored counter-clockwise after validation.
struct PolygonObstacle {
  std::vector<Vec2d> vertices;
};

using Obstacle = std::variant<CircleObstacle, PolygonObstacle>;

struct BreedingSite {
  SiteId id = 0;
  Vec2d center;
  double radius = 0.0;
  std::uint32_t pre_population = 1;
  bool active = true;
};

struct CheckpointNode {
  NodeId id = 0;
  Vec2d center;
  double acceptance_radius = 0.0;
};

struct Pose {
  Vec2d position = Vec2d::Zero();
  double heading = 0.0;
  bool operator==(const Pose&) const = default;
};

/// Raised when a world or scenario breaks one of its invariants.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct WorldMap {
  Box2d bounds{Vec2d::Zero(), Vec2d::Zero()};
  std::vector<Obstacle> obstacles;
  std::vector<BreedingSite> sites;
  std::vector<CheckpointNode> nodes;
  Vec2d home = Vec2d::Zero();

  const BreedingSite* find_site(SiteId id) const;
  BreedingSite* find_site(SiteId id);
  const CheckpointNode* find_node(NodeId id) const;

  /// Throws ValidationError naming the first violated invariant. Normalizes
  /// polygon winding to counter-clockwise.
  void validate();
};

/// Signed clearance from a point to an obstacle boundary (negative inside).
double obstacle_clearance(const Obstacle& obstacle, const Vec2d& p);

/// Distance to the nearest obstacle or arena wall along `bearing`, clamped to
/// `max_range`.
double ray_distance(const WorldMap& map, const Vec2d& origin, double bearing, double max_range);

struct VisibleSite {
  SiteId id = 0;
  Vec2d center;
  double radius = 0.0;
  double bearing = 0.0;   // relative to the camera boresight
  double distance = 0.0;
};

/// Active sites whose centers fall inside the camera cone, nearest first.
std::vector<VisibleSite> sites_in_fov(const WorldMap& map, const Pose& pose, double fov, double range);

}  // namespace sprayrover
