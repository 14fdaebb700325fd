// Rover plant: unicycle kinematics, battery and reservoir bookkeeping, GPS,
// ultrasonic ranging and spray actuation.
#pragma once

#include "sprayrover/environment.hpp"
#include "sprayrover/rng.hpp"

#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

namespace sprayrover {

enum class RoverMode : std::uint8_t { Idle = 0, Auto = 1, Manual = 2, Rtl = 3, Done = 4, Fault = 5 };

std::string_view to_string(RoverMode mode);

struct RoverParams {
  double max_speed = 0.6;          // m/s
  double max_turn_rate = 1.0;      // rad/s
  double wheelbase = 0.3;          // m; body radius is half of this
  double battery_capacity_mAh = 3000.0;
  double drive_draw_mA = 1800.0;
  double idle_draw_mA = 300.0;
  double spray_draw_mA = 1200.0;   // drawn for spray_duration_s per actuation
  double spray_duration_s = 1.0;
  double reservoir_capacity_ml = 500.0;
  double spray_dose_ml = 10.0;
  double spray_range_m = 0.5;
  double gps_sigma_m = 0.05;
  double ultrasonic_max_range_m = 3.0;
  std::vector<double> ultrasonic_bearings{-std::numbers::pi / 6.0, 0.0, std::numbers::pi / 6.0};

  double body_radius() const { return wheelbase / 2.0; }

  /// Throws ValidationError when a parameter is out of range.
  void validate() const;
};

struct RoverState {
  Pose pose;
  double linear_velocity = 0.0;
  double angular_velocity = 0.0;
  double battery_mAh = 0.0;
  double reservoir_ml = 0.0;
  RoverMode mode = RoverMode::Idle;
  double clock_s = 0.0;
  bool proximity_alert = false;   // translation was blocked on the last step
  bool operator==(const RoverState&) const = default;
};

/// Full battery and reservoir at the world's home position, heading +x.
RoverState initial_state(const WorldMap& world, const RoverParams& params);

struct ControlCommand {
  double linear = 0.0;
  double angular = 0.0;
  bool spray_trigger = false;

  bool operator==(const ControlCommand&) const = default;
};

ControlCommand clamp_command(const ControlCommand& cmd, const RoverParams& params);

/// Advances the plant by `dt`. Translation that would collide with an
/// obstacle or wall is cancelled for the tick; rotation still applies. An
/// exhausted battery moves the rover to FAULT.
RoverState step(const RoverState& state, const WorldMap& world, const RoverParams& params,
                const ControlCommand& cmd, double dt);

Vec2d gps_read(const RoverState& state, double sigma, Rng& rng);

struct RangeReading {
  double bearing = 0.0;   // relative to heading
  double distance = 0.0;
};

std::vector<RangeReading> ultrasonic_scan(const RoverState& state, const WorldMap& world,
                                          const RoverParams& params);

struct SprayOutcome {
  RoverState state;
  std::vector<SiteId> treated;
  bool rejected = false;   // reservoir could not supply a dose
};

/// Dispenses one dose. Every active site within spray range of the rover is
/// deactivated; the dose is consumed whether or not anything was in range.
SprayOutcome spray(const RoverState& state, WorldMap& world, const RoverParams& params);

}  // namespace sprayrover
