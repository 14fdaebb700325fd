#include "sprayrover/rover.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sprayrover {

std::string_view to_string(RoverMode mode) {
  switch (mode) {
    case RoverMode::Idle: return "IDLE";
    case RoverMode::Auto: return "AUTO";
    case RoverMode::Manual: return "MANUAL";
    case RoverMode::Rtl: return "RTL";
    case RoverMode::Done: return "DONE";
    case RoverMode::Fault: return "FAULT";
  }
  return "?";
}

void RoverParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ValidationError(std::string("rover ") + name + " must be > 0");
  };
  positive(max_speed, "max_speed");
  positive(max_turn_rate, "max_turn_rate");
  positive(wheelbase, "wheelbase");
  positive(battery_capacity_mAh, "battery");
  positive(drive_draw_mA, "drive_draw");
  positive(idle_draw_mA, "idle_draw");
  positive(spray_draw_mA, "spray_draw");
  positive(spray_duration_s, "spray_duration");
  positive(reservoir_capacity_ml, "reservoir");
  positive(spray_dose_ml, "spray_dose");
  positive(spray_range_m, "spray_range");
  positive(ultrasonic_max_range_m, "ultrasonic_range");
  if (!(gps_sigma_m >= 0.0)) throw ValidationError("rover gps_sigma must be >= 0");
  if (ultrasonic_bearings.empty()) throw ValidationError("rover ultrasonic_bearings must be non-empty");
}

RoverState initial_state(const WorldMap& world, const RoverParams& params) {
  RoverState s;
  s.pose.position = world.home;
  s.battery_mAh = params.battery_capacity_mAh;
  s.reservoir_ml = params.reservoir_capacity_ml;
  return s;
}

ControlCommand clamp_command(const ControlCommand& cmd, const RoverParams& params) {
  ControlCommand out = cmd;
  out.linear = std::clamp(cmd.linear, -params.max_speed, params.max_speed);
  out.angular = std::clamp(cmd.angular, -params.max_turn_rate, params.max_turn_rate);
  return out;
}

namespace {

bool collides(const WorldMap& world, const Vec2d& p, double body_radius) {
  if (!world.bounds.contains(p, body_radius)) return true;
  return std::any_of(world.obstacles.begin(), world.obstacles.end(),
                     [&](const Obstacle& o) { return obstacle_clearance(o, p) < body_radius; });
}

}  // namespace

RoverState step(const RoverState& state, const WorldMap& world, const RoverParams& params,
                const ControlCommand& raw_cmd, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be > 0");
  if (state.mode == RoverMode::Done || state.mode == RoverMode::Fault)
    throw std::invalid_argument("step: rover is halted");

  const ControlCommand cmd = clamp_command(raw_cmd, params);
  RoverState next = state;
  next.clock_s = state.clock_s + dt;

  const Vec2d candidate =
      state.pose.position + cmd.linear * dt * unit_vector(state.pose.heading);
  next.proximity_alert = cmd.linear != 0.0 && collides(world, candidate, params.body_radius());
  if (!next.proximity_alert) next.pose.position = candidate;
  next.pose.heading = wrap_angle(state.pose.heading + cmd.angular * dt);
  next.linear_velocity = next.proximity_alert ? 0.0 : cmd.linear;
  next.angular_velocity = cmd.angular;

  const bool moving = cmd.linear != 0.0 || cmd.angular != 0.0;
  const double draw = moving ? params.drive_draw_mA : params.idle_draw_mA;
  next.battery_mAh = std::max(0.0, state.battery_mAh - draw * dt / 3600.0);
  if (next.battery_mAh <= 0.0) next.mode = RoverMode::Fault;
  return next;
}

Vec2d gps_read(const RoverState& state, double sigma, Rng& rng) {
  if (sigma <= 0.0) return state.pose.position;
  std::normal_distribution<double> noise(0.0, sigma);
  const double dx = noise(rng);
  const double dy = noise(rng);
  return state.pose.position + Vec2d(dx, dy);
}

std::vector<RangeReading> ultrasonic_scan(const RoverState& state, const WorldMap& world,
                                          const RoverParams& params) {
  std::vector<RangeReading> out;
  out.reserve(params.ultrasonic_bearings.size());
  for (double b : params.ultrasonic_bearings)
    out.push_back({b, ray_distance(world, state.pose.position, state.pose.heading + b,
                                   params.ultrasonic_max_range_m)});
  return out;
}

SprayOutcome spray(const RoverState& state, WorldMap& world, const RoverParams& params) {
  SprayOutcome out{state, {}, false};
  if (state.reservoir_ml < params.spray_dose_ml) {
    out.rejected = true;
    return out;
  }
  out.state.reservoir_ml = std::max(0.0, state.reservoir_ml - params.spray_dose_ml);
  out.state.battery_mAh =
      std::max(0.0, state.battery_mAh - params.spray_draw_mA * params.spray_duration_s / 3600.0);
  if (out.state.battery_mAh <= 0.0) out.state.mode = RoverMode::Fault;
  for (auto& site : world.sites) {
    if (site.active && (site.center - state.pose.position).norm() <= params.spray_range_m) {
      site.active = false;
      out.treated.push_back(site.id);
    }
  }
  return out;
}

}  // namespace sprayrover
