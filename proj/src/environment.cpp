#include "sprayrover/environment.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace sprayrover {

namespace {

template <typename T, typename Id>
T* find_by_id(std::vector<T>& items, Id id) {
  auto it = std::find_if(items.begin(), items.end(), [id](const T& x) { return x.id == id; });
  return it == items.end() ? nullptr : &*it;
}

[[noreturn]] void fail(const std::string& what) { throw ValidationError(what); }

}  // namespace

const BreedingSite* WorldMap::find_site(SiteId id) const {
  return const_cast<WorldMap*>(this)->find_site(id);
}

BreedingSite* WorldMap::find_site(SiteId id) { return find_by_id(sites, id); }

const CheckpointNode* WorldMap::find_node(NodeId id) const {
  return find_by_id(const_cast<WorldMap*>(this)->nodes, id);
}

void WorldMap::validate() {
  if (!(bounds.lo.x() < bounds.hi.x() && bounds.lo.y() < bounds.hi.y()))
    fail("bounds must have xmin < xmax and ymin < ymax");
  if (!bounds.contains(home)) fail("home lies outside bounds");

  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    std::ostringstream name;
    name << "obstacle #" << (i + 1);
    if (auto* c = std::get_if<CircleObstacle>(&obstacles[i])) {
      if (!(c->radius > 0.0)) fail(name.str() + ": radius must be > 0");
      if (!bounds.contains(c->center)) fail(name.str() + " lies outside bounds");
    } else {
      auto& poly = std::get<PolygonObstacle>(obstacles[i]);
      if (poly.vertices.size() < 3) fail(name.str() + ": polygon needs at least 3 vertices");
      if (!is_strictly_convex<double>(poly.vertices))
        fail(name.str() + ": polygon must be convex with non-collinear vertices");
      for (const auto& v : poly.vertices)
        if (!bounds.contains(v)) fail(name.str() + " lies outside bounds");
      if (polygon_signed_area<double>(poly.vertices) < 0.0)
        std::reverse(poly.vertices.begin(), poly.vertices.end());
    }
  }

  std::set<SiteId> site_ids;
  for (const auto& s : sites) {
    const std::string name = "site " + std::to_string(s.id);
    if (!site_ids.insert(s.id).second) fail(name + ": duplicate site id");
    if (!(s.radius > 0.0)) fail(name + ": radius must be > 0");
    if (s.pre_population < 1) fail(name + ": pre_population must be >= 1");
    if (!bounds.contains(s.center)) fail(name + " lies outside bounds");
  }

  std::set<NodeId> node_ids;
  for (const auto& n : nodes) {
    const std::string name = "node " + std::to_string(n.id);
    if (!node_ids.insert(n.id).second) fail(name + ": duplicate node id");
    if (!(n.acceptance_radius > 0.0)) fail(name + ": acceptance radius must be > 0");
    if (!bounds.contains(n.center)) fail(name + " lies outside bounds");
  }
}

double obstacle_clearance(const Obstacle& obstacle, const Vec2d& p) {
  if (const auto* c = std::get_if<CircleObstacle>(&obstacle)) return (p - c->center).norm() - c->radius;
  return signed_distance_convex<double>(p, std::get<PolygonObstacle>(obstacle).vertices);
}

double ray_distance(const WorldMap& map, const Vec2d& origin, double bearing, double max_range) {
  const Vec2d dir = unit_vector(bearing);
  double best = std::min(max_range, ray_box_exit(origin, dir, map.bounds));
  for (const auto& obstacle : map.obstacles) {
    std::optional<double> t;
    if (const auto* c = std::get_if<CircleObstacle>(&obstacle))
      t = ray_circle(origin, dir, c->center, c->radius);
    else
      t = ray_convex_polygon<double>(origin, dir, std::get<PolygonObstacle>(obstacle).vertices);
    if (t) best = std::min(best, *t);
  }
  return best;
}

std::vector<VisibleSite> sites_in_fov(const WorldMap& map, const Pose& pose, double fov, double range) {
  std::vector<VisibleSite> out;
  const double half = fov / 2.0;
  for (const auto& s : map.sites) {
    if (!s.active) continue;
    const Vec2d rel = s.center - pose.position;
    const double dist = rel.norm();
    if (dist > range || dist <= 0.0) continue;
    const double bearing = wrap_angle(std::atan2(rel.y(), rel.x()) - pose.heading);
    if (std::abs(bearing) > half) continue;
    out.push_back({s.id, s.center, s.radius, bearing, dist});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const VisibleSite& a, const VisibleSite& b) { return a.distance < b.distance; });
  return out;
}

}  // namespace sprayrover
