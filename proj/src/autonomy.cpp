#include "sprayrover/autonomy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sprayrover {

std::string_view to_string(FsmState s) {
  switch (s) {
    case FsmState::Idle: return "IDLE";
    case FsmState::Navigate: return "NAVIGATE";
    case FsmState::Inspect: return "INSPECT";
    case FsmState::Treat: return "TREAT";
    case FsmState::Rtl: return "RTL";
    case FsmState::Done: return "DONE";
    case FsmState::Fault: return "FAULT";
  }
  return "?";
}

void Mission::validate(const WorldMap& world) const {
  for (NodeId id : waypoints)
    if (!world.find_node(id)) throw ValidationError("waypoint references unknown node " + std::to_string(id));
  if (!(home_radius_m > 0.0)) throw ValidationError("mission home_radius must be > 0");
  if (!(detect_confidence_threshold >= 0.0 && detect_confidence_threshold <= 1.0))
    throw ValidationError("mission confidence threshold must be in [0,1]");
  if (!(guidance.cruise_speed > 0.0)) throw ValidationError("mission cruise_speed must be > 0");
  if (!(guidance.lookahead_m > 0.0)) throw ValidationError("mission lookahead must be > 0");
  if (!(guidance.clearance_m >= 0.0)) throw ValidationError("mission clearance must be >= 0");
  if (guidance.debounce_ticks < 1) throw ValidationError("mission debounce must be >= 1");
}

namespace {

void set_fsm(MissionStatus& st, FsmState next, std::vector<Event>& ev) {
  if (st.fsm_state == next) return;
  st.fsm_state = next;
  ev.push_back({EventKind::FsmChanged, static_cast<std::int64_t>(next), 0.0});
}

void start_leg(MissionStatus& st, std::vector<Vec2d> path, const GuidanceParams& g, double clock) {
  const double length = polyline_length<double>(path);
  st.path = std::move(path);
  st.path_progress_m = 0.0;
  st.leg_start_s = clock;
  st.leg_budget_s = g.leg_timeout_factor * length / g.cruise_speed + g.leg_timeout_slack_s;
}

Vec2d point_at(const std::vector<Vec2d>& path, double s) {
  for (std::size_t i = 1; i < path.size(); ++i) {
    const double len = (path[i] - path[i - 1]).norm();
    if (s <= len) return len > 0.0 ? Vec2d(path[i - 1] + (s / len) * (path[i] - path[i - 1])) : path[i];
    s -= len;
  }
  return path.back();
}

// Moves the progress marker to the closest path point ahead of it, looking
// at most `window` metres forward.
double advance_progress(const std::vector<Vec2d>& path, double progress, const Vec2d& pos, double window) {
  double best_s = progress;
  double best_d = (point_at(path, progress) - pos).norm();
  double acc = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const Vec2d a = path[i - 1];
    const Vec2d e = path[i] - a;
    const double len = e.norm();
    if (acc + len >= progress && acc <= progress + window && len > 0.0) {
      double s = acc + std::clamp((pos - a).dot(e) / (len * len), 0.0, 1.0) * len;
      s = std::clamp(s, progress, progress + window);
      const double d = (point_at(path, s) - pos).norm();
      if (d < best_d) {
        best_d = d;
        best_s = s;
      }
    }
    acc += len;
  }
  return best_s;
}

ControlCommand steer_to(const Vec2d& pos, double heading, const Vec2d& target, double speed, double turn_rate) {
  const Vec2d rel = target - pos;
  const double dist = rel.norm();
  if (dist < 1e-9) return {};
  const double alpha = wrap_angle(std::atan2(rel.y(), rel.x()) - heading);
  if (std::abs(alpha) > std::numbers::pi / 3.0) return {0.0, std::copysign(turn_rate, alpha), false};
  const double omega = std::clamp(2.0 * speed * std::sin(alpha) / dist, -turn_rate, turn_rate);
  return {speed, omega, false};
}

const Detection* strongest_for(std::span<const Detection> dets, SiteId site, double threshold) {
  const Detection* best = nullptr;
  for (const auto& d : dets) {
    if (d.class_id != ObjectClass::BreedingSite || d.confidence < threshold || d.site_id != site) continue;
    if (!best || d.confidence > best->confidence) best = &d;
  }
  return best;
}

// Ground-plane range from the vertical image position of the box center.
Vec2d locate(const Detection& det, const DetectorProfile& camera, const Vec2d& pos, double heading) {
  const double bearing = offset_to_bearing(center_offset(det, camera.width), camera);
  const double below = std::max(1.0, (det.box.y_min + det.box.y_max) / 2.0 - camera.height / 2.0);
  const double range = camera.focal_px * camera.camera_height_m / below;
  return pos + range * unit_vector(heading + bearing);
}

bool contains(const std::vector<SiteId>& v, SiteId id) { return std::find(v.begin(), v.end(), id) != v.end(); }

}  // namespace

void begin_return(const WorldMap& world, const Mission& mission, MissionStatus& st, const Vec2d& position,
                  double clock_s, std::vector<Event>& events) {
  (void)world;
  try {
    start_leg(st, plan_path(world, position, mission.home, mission.guidance.clearance_m), mission.guidance, clock_s);
    set_fsm(st, FsmState::Rtl, events);
  } catch (const PlanningError&) {
    events.push_back({EventKind::Fault, static_cast<std::int64_t>(FaultReason::HomeUnreachable), 0.0});
    st.end_clock_s = clock_s;
    set_fsm(st, FsmState::Fault, events);
  }
}

void replan(const WorldMap& world, const Mission& mission, MissionStatus& st, const Vec2d& position, double clock_s,
            std::vector<Event>& events) {
  if (st.terminal()) return;
  st.inspect_site.reset();
  st.treat_site.reset();
  if (st.fsm_state == FsmState::Rtl) {
    begin_return(world, mission, st, position, clock_s, events);
    return;
  }
  while (st.current_waypoint_index < mission.waypoints.size()) {
    const NodeId id = mission.waypoints[st.current_waypoint_index];
    const CheckpointNode* node = world.find_node(id);
    try {
      if (!node) throw PlanningError("unknown node");
      start_leg(st, plan_path(world, position, node->center, mission.guidance.clearance_m), mission.guidance,
                clock_s);
      set_fsm(st, FsmState::Navigate, events);
      return;
    } catch (const PlanningError&) {
      events.push_back({EventKind::NodeSkipped, id, 0.0});
      st.nodes_skipped.push_back(id);
      ++st.current_waypoint_index;
    }
  }
  begin_return(world, mission, st, position, clock_s, events);
}

TickOutput navigate_tick(const WorldMap& world, const Mission& mission, const MissionStatus& status,
                         const TickInput& in) {
  const RoverMode mode = in.state.mode;
  if (mode != RoverMode::Auto && mode != RoverMode::Rtl)
    throw std::invalid_argument("navigate_tick requires AUTO or RTL mode");

  TickOutput out{{}, status, {}};
  MissionStatus& st = out.status;
  auto& ev = out.events;
  const GuidanceParams& g = mission.guidance;
  const double clock = in.state.clock_s;
  const Vec2d pos = in.gps_fix;
  const double heading = in.state.pose.heading;
  const double threshold = mission.detect_confidence_threshold;

  if (st.terminal()) return out;

  if (st.fsm_state == FsmState::Idle) {
    st.start_clock_s = clock;
    ev.push_back({EventKind::MissionStarted, 0, 0.0});
    st.current_waypoint_index = 0;
    replan(world, mission, st, pos, clock, ev);
  }

  for (const auto& d : in.detections) {
    if (d.class_id != ObjectClass::BreedingSite || d.confidence < threshold) continue;
    ev.push_back({EventKind::SiteDetected, d.site_id ? std::int64_t(*d.site_id) : -1, d.confidence});
    if (d.site_id) st.sites_detected.insert(*d.site_id);
  }

  // Transitions.
  switch (st.fsm_state) {
    case FsmState::Navigate: {
      const NodeId id = mission.waypoints[st.current_waypoint_index];
      const CheckpointNode* node = world.find_node(id);
      if (node && (pos - node->center).norm() <= node->acceptance_radius) {
        st.nodes_reached.push_back(id);
        ev.push_back({EventKind::NodeReached, id, clock});
        ++st.current_waypoint_index;
        replan(world, mission, st, pos, clock, ev);
      } else if (clock - st.leg_start_s > st.leg_budget_s) {
        st.nodes_skipped.push_back(id);
        ev.push_back({EventKind::NodeSkipped, id, clock});
        ++st.current_waypoint_index;
        replan(world, mission, st, pos, clock, ev);
      } else if (mission.treat_on_detect) {
        for (const auto& d : in.detections) {
          if (d.class_id != ObjectClass::BreedingSite || d.confidence < threshold || !d.site_id) continue;
          if (contains(st.sites_treated, *d.site_id) || st.ignored_sites.count(*d.site_id)) continue;
          st.inspect_site = d.site_id;
          st.inspect_hits = 0;
          st.inspect_start_s = clock;
          set_fsm(st, FsmState::Inspect, ev);
          break;
        }
      }
      break;
    }
    case FsmState::Inspect:
    case FsmState::Treat:
    case FsmState::Rtl:
    default:
      break;
  }

  if (st.fsm_state == FsmState::Inspect) {
    const SiteId site = *st.inspect_site;
    const Detection* hit = strongest_for(in.detections, site, threshold);
    st.inspect_hits = hit ? st.inspect_hits + 1 : 0;
    if (hit && st.inspect_hits >= g.debounce_ticks) {
      st.treat_site = site;
      st.treat_estimate = locate(*hit, in.camera, pos, heading);
      st.treat_start_s = clock;
      st.spray_attempts = 0;
      st.inspect_site.reset();
      set_fsm(st, FsmState::Treat, ev);
    } else if (clock - st.inspect_start_s > g.inspect_timeout_s) {
      if (++st.inspections[site] >= g.max_inspections_per_site) st.ignored_sites.insert(site);
      set_fsm(st, FsmState::Navigate, ev);
      replan(world, mission, st, pos, clock, ev);
    } else {
      const double bearing = hit ? offset_to_bearing(center_offset(*hit, in.camera.width), in.camera) : 0.0;
      out.command = {0.0, std::clamp(1.5 * bearing, -g.turn_rate, g.turn_rate), false};
      return out;
    }
  }

  if (st.fsm_state == FsmState::Treat) {
    const SiteId site = *st.treat_site;
    if (contains(st.sites_treated, site)) {
      set_fsm(st, FsmState::Navigate, ev);
      replan(world, mission, st, pos, clock, ev);
    } else if (st.spray_attempts >= g.max_spray_attempts || clock - st.treat_start_s > g.treat_timeout_s) {
      st.ignored_sites.insert(site);
      set_fsm(st, FsmState::Navigate, ev);
      replan(world, mission, st, pos, clock, ev);
    } else {
      if (const Detection* hit = strongest_for(in.detections, site, threshold))
        st.treat_estimate = locate(*hit, in.camera, pos, heading);
      const double d = (st.treat_estimate - pos).norm();
      if (d <= g.approach_fraction * in.params.spray_range_m) {
        out.command = {0.0, 0.0, true};
        return out;
      }
      out.command = steer_to(pos, heading, st.treat_estimate, std::min(g.cruise_speed, std::max(0.05, 0.5 * d)),
                             g.turn_rate);
      if (auto avoid = avoidance_override(in.ranges, g); avoid && out.command.linear > 0.0) out.command = *avoid;
      return out;
    }
  }

  // The fix is noisy; shrink the radius so the true pose is inside it too.
  const double done_radius =
      std::max(mission.home_radius_m - 4.0 * in.params.gps_sigma_m, 0.5 * mission.home_radius_m);
  if (st.fsm_state == FsmState::Rtl && (pos - mission.home).norm() <= done_radius) {
    st.end_clock_s = clock;
    ev.push_back({EventKind::Done, 0, clock});
    set_fsm(st, FsmState::Done, ev);
  }

  if (st.fsm_state == FsmState::Navigate || st.fsm_state == FsmState::Rtl) {
    st.path_progress_m = advance_progress(st.path, st.path_progress_m, pos, 2.0 * g.lookahead_m + 1.0);
    const Vec2d target = point_at(st.path, st.path_progress_m + g.lookahead_m);
    out.command = steer_to(pos, heading, target, g.cruise_speed, g.turn_rate);
    if (auto avoid = avoidance_override(in.ranges, g); avoid && out.command.linear > 0.0) out.command = *avoid;
  }
  return out;
}

void apply_spray_result(MissionStatus& status, std::span<const SiteId> treated, bool rejected) {
  ++status.spray_attempts;
  if (rejected) status.spray_attempts = std::numeric_limits<int>::max() / 2;
  for (SiteId id : treated)
    if (!contains(status.sites_treated, id)) status.sites_treated.push_back(id);
}

std::vector<Vec2d> plan_route(const WorldMap& world, const Mission& mission, const Vec2d& from) {
  std::vector<Vec2d> route{from};
  Vec2d cursor = from;
  for (NodeId id : mission.waypoints) {
    const CheckpointNode* node = world.find_node(id);
    if (!node) throw PlanningError("node " + std::to_string(id) + " does not exist");
    std::vector<Vec2d> leg;
    try {
      leg = plan_path(world, cursor, node->center, mission.guidance.clearance_m);
    } catch (const PlanningError& e) {
      throw PlanningError("node " + std::to_string(id) + " is unreachable: " + e.what());
    }
    route.insert(route.end(), leg.begin() + 1, leg.end());
    cursor = node->center;
  }
  return route;
}

std::optional<ControlCommand> avoidance_override(std::span<const RangeReading> ranges, const GuidanceParams& g) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  bool blocked = false;
  double left = inf, right = inf;
  for (const auto& r : ranges) {
    if (std::abs(r.bearing) <= g.forward_cone && r.distance < g.avoid_threshold_m) blocked = true;
    if (r.bearing > 0.0) left = std::min(left, r.distance);
    if (r.bearing < 0.0) right = std::min(right, r.distance);
  }
  if (!blocked) return std::nullopt;
  return ControlCommand{0.0, left >= right ? g.turn_rate : -g.turn_rate, false};
}

ControlCommand arbitrate(const ControlCommand& auto_cmd, const std::optional<ControlCommand>& manual, RoverMode mode,
                         const RoverParams& params) {
  if (mode == RoverMode::Manual) return manual ? clamp_command(*manual, params) : ControlCommand{};
  return auto_cmd;
}

}  // namespace sprayrover
