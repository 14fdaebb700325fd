// Mission events shared by autonomy, the scheduler, telemetry and the trace.
#pragma once

#include <cstdint>
#include <string_view>

namespace sprayrover {

enum class EventKind : std::uint8_t {
  MissionStarted = 1,
  FsmChanged = 2,       // id = new FsmState
  ModeChanged = 3,      // id = new RoverMode
  NodeReached = 4,      // id = node
  NodeSkipped = 5,      // id = node (unreachable or timed out)
  SiteDetected = 6,     // id = site or -1, value = confidence
  SprayFired = 7,       // value = reservoir after the dose
  SiteTreated = 8,      // id = site
  SprayRejected = 9,
  ManualIgnored = 10,
  MissionUploaded = 11, // id = waypoint count
  CommandRejected = 12, // id = command seq
  Fault = 13,           // id = FaultReason
  Done = 14,
  Collision = 15,
};

enum class FaultReason : std::int64_t { Battery = 1, Timeout = 2, HomeUnreachable = 3 };

struct Event {
  EventKind kind = EventKind::MissionStarted;
  std::int64_t id = 0;
  double value = 0.0;

  bool operator==(const Event&) const = default;
};

std::string_view to_string(EventKind kind);

}  // namespace sprayrover
