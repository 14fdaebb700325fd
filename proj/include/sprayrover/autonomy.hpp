// Mission state machine: waypoint sequencing with pure-pursuit tracking,
// reactive ultrasonic avoidance, detection-triggered treatment, return to
// home and manual-override arbitration.
//
// navigate_tick is a pure function of its inputs; the simulation loop owns
// sequencing and feeds spray outcomes back through apply_spray_result.
#pragma once

#include "sprayrover/detection.hpp"
#include "sprayrover/events.hpp"
#include "sprayrover/planner.hpp"
#include "sprayrover/rover.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <vector>

namespace sprayrover {

enum class FsmState : std::uint8_t { Idle = 0, Navigate = 1, Inspect = 2, Treat = 3, Rtl = 4, Done = 5, Fault = 6 };

std::string_view to_string(FsmState s);

struct GuidanceParams {
  double cruise_speed = 0.25;        // m/s
  double turn_rate = 0.8;            // rad/s used by the controllers
  double lookahead_m = 0.5;
  double clearance_m = 0.6;          // obstacle inflation for planning
  double avoid_threshold_m = 0.5;
  double forward_cone = 0.53;        // |bearing| treated as a forward-looking ranger
  int debounce_ticks = 3;            // consecutive detections before treating
  double inspect_timeout_s = 5.0;
  double treat_timeout_s = 30.0;
  int max_spray_attempts = 3;
  int max_inspections_per_site = 3;
  double approach_fraction = 0.6;    // spray once within this share of spray range
  double leg_timeout_factor = 2.0;   // leg budget = factor * length / cruise + slack
  double leg_timeout_slack_s = 20.0;
};

struct Mission {
  std::vector<NodeId> waypoints;
  Vec2d home = Vec2d::Zero();
  double home_radius_m = 0.5;
  bool treat_on_detect = true;
  double detect_confidence_threshold = 0.5;
  bool autostart = true;             // begin in AUTO; otherwise wait for a mode command
  GuidanceParams guidance;

  /// Throws ValidationError when a waypoint does not resolve in `world`.
  void validate(const WorldMap& world) const;
};

struct MissionStatus {
  FsmState fsm_state = FsmState::Idle;
  std::size_t current_waypoint_index = 0;
  std::vector<NodeId> nodes_reached;      // in visit order
  std::vector<NodeId> nodes_skipped;
  std::vector<SiteId> sites_treated;      // in treatment order
  std::set<SiteId> sites_detected;
  std::optional<double> start_clock_s;
  std::optional<double> end_clock_s;

  // Guidance memory.
  std::vector<Vec2d> path;
  double path_progress_m = 0.0;
  double leg_start_s = 0.0;
  double leg_budget_s = 0.0;

  std::optional<SiteId> inspect_site;
  int inspect_hits = 0;
  double inspect_start_s = 0.0;
  std::map<SiteId, int> inspections;
  std::set<SiteId> ignored_sites;

  std::optional<SiteId> treat_site;
  Vec2d treat_estimate = Vec2d::Zero();
  double treat_start_s = 0.0;
  int spray_attempts = 0;

  bool terminal() const { return fsm_state == FsmState::Done || fsm_state == FsmState::Fault; }
};

struct TickInput {
  const RoverState& state;
  const RoverParams& params;
  const DetectorProfile& camera;
  Vec2d gps_fix;
  std::span<const RangeReading> ranges;
  std::span<const Detection> detections;
};

struct TickOutput {
  ControlCommand command;
  MissionStatus status;
  std::vector<Event> events;
};

/// One autonomy decision. Requires the rover to be in AUTO or RTL.
TickOutput navigate_tick(const WorldMap& world, const Mission& mission, const MissionStatus& status,
                         const TickInput& in);

/// Records the outcome of a spray the last command requested.
void apply_spray_result(MissionStatus& status, std::span<const SiteId> treated, bool rejected);

/// Re-plans the active leg from `position` (after manual driving or a
/// mission upload). Appends NodeSkipped/Fault events as needed.
void replan(const WorldMap& world, const Mission& mission, MissionStatus& status, const Vec2d& position,
            double clock_s, std::vector<Event>& events);

/// Forces the mission into return-to-home.
void begin_return(const WorldMap& world, const Mission& mission, MissionStatus& status,
                  const Vec2d& position, double clock_s, std::vector<Event>& events);

/// Waypoints visited in order through the world, avoiding obstacles.
/// Throws PlanningError naming the first unreachable node.
std::vector<Vec2d> plan_route(const WorldMap& world, const Mission& mission, const Vec2d& from);

/// The turn-away command when a forward ranger reads below the threshold.
std::optional<ControlCommand> avoidance_override(std::span<const RangeReading> ranges,
                                                 const GuidanceParams& guidance);

/// Manual input wins verbatim (clamped) in MANUAL mode; silence in MANUAL
/// means stop. Any other mode passes the autonomy command through.
ControlCommand arbitrate(const ControlCommand& auto_cmd, const std::optional<ControlCommand>& manual,
                         RoverMode mode, const RoverParams& params);

}  // namespace sprayrover
