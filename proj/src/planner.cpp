#include "sprayrover/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace sprayrover {

namespace {

constexpr double kEdgeEps = 1e-7;

bool blocked(const Vec2d& a, const Vec2d& b, const std::vector<std::vector<Vec2d>>& polys,
             const std::vector<bool>& skip) {
  for (std::size_t i = 0; i < polys.size(); ++i) {
    if (skip[i]) continue;
    if (segment_enters_convex<double>(a, b, polys[i], kEdgeEps)) return true;
  }
  return false;
}

}  // namespace

std::vector<std::vector<Vec2d>> inflate_obstacles(const WorldMap& world, double clearance) {
  const double step = 2.0 * std::numbers::pi / kInflationSides;
  std::vector<std::vector<Vec2d>> out;
  out.reserve(world.obstacles.size());
  for (const auto& obstacle : world.obstacles) {
    std::vector<Vec2d> core;
    double grow = clearance;
    if (const auto* c = std::get_if<CircleObstacle>(&obstacle)) {
      core.push_back(c->center);
      grow += c->radius;
    } else {
      core = std::get<PolygonObstacle>(obstacle).vertices;
    }
    const double circumscribed = grow / std::cos(step / 2.0);
    std::vector<Vec2d> pts;
    pts.reserve(core.size() * kInflationSides);
    for (const auto& v : core)
      for (int k = 0; k < kInflationSides; ++k) pts.push_back(v + circumscribed * unit_vector(step * k));
    out.push_back(convex_hull(std::move(pts)));
  }
  return out;
}

std::vector<Vec2d> plan_path(const WorldMap& world, const Vec2d& from, const Vec2d& to, double clearance) {
  const auto polys = inflate_obstacles(world, clearance);
  const std::vector<bool> none(polys.size(), false);

  for (const auto& poly : polys)
    if (point_in_convex<double>(to, poly, kEdgeEps)) throw PlanningError("goal lies inside obstacle clearance");

  std::vector<bool> around_start(polys.size(), false);
  for (std::size_t i = 0; i < polys.size(); ++i) around_start[i] = point_in_convex<double>(from, polys[i], kEdgeEps);

  // Graph vertices: start, goal, then every inflated corner in free space.
  std::vector<Vec2d> verts{from, to};
  for (const auto& poly : polys) {
    for (const auto& v : poly) {
      if (!world.bounds.contains(v)) continue;
      bool free = true;
      for (const auto& other : polys)
        if (point_in_convex<double>(v, other, kEdgeEps)) {
          free = false;
          break;
        }
      if (free) verts.push_back(v);
    }
  }

  const std::size_t n = verts.size();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> prev(n, n);
  std::vector<bool> done(n, false);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  dist[0] = 0.0;
  open.push({0.0, 0});
  while (!open.empty()) {
    const auto [d, u] = open.top();
    open.pop();
    if (done[u]) continue;
    done[u] = true;
    if (u == 1) break;
    for (std::size_t v = 1; v < n; ++v) {
      if (done[v]) continue;
      const double nd = d + (verts[v] - verts[u]).norm();
      if (nd >= dist[v]) continue;
      if (blocked(verts[u], verts[v], polys, u == 0 ? around_start : none)) continue;
      dist[v] = nd;
      prev[v] = u;
      open.push({nd, v});
    }
  }
  if (!done[1]) throw PlanningError("goal is unreachable");

  std::vector<Vec2d> path;
  for (std::size_t v = 1; v != n; v = prev[v]) path.push_back(verts[v]);
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace sprayrover
