// Rover-side command intake: duplicate suppression, last-sequence-wins
// ordering, mission-upload validation and the manual dead-man window.
#pragma once

#include "sprayrover/environment.hpp"
#include "sprayrover/rover.hpp"
#include "sprayrover/telemetry.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

namespace sprayrover {

/// What the loop should act on this tick.
struct PendingCommands {
  std::optional<RoverMode> mode;
  std::optional<std::vector<NodeId>> mission;
  std::optional<ControlCommand> manual;   // only while fresh
  bool manual_arrived = false;            // a new manual frame since the last take()
  std::vector<std::uint32_t> rejected;    // seqs of refused commands
};

struct SessionCounters {
  std::uint64_t accepted = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t stale = 0;
  std::uint64_t ignored = 0;   // non-command messages from the ground
};

class CommandSession {
 public:
  struct Validators {
    std::function<bool(const std::vector<NodeId>&)> mission;
    std::function<bool(RoverMode)> mode;
  };

  explicit CommandSession(double manual_timeout_s = 1.0) : manual_timeout_s_(manual_timeout_s) {}

  /// Consumes one decoded frame; returns the ACK to send, if any.
  /// MISSION_UPLOAD and COMMAND_MODE are acknowledged (re-acknowledged on
  /// duplicates); COMMAND_MANUAL is not. A validator returning false turns
  /// the command into a REJECTED ack.
  std::optional<msg::Ack> ingest(const Decoded& frame, double clock_s, const Validators& validate = {});

  PendingCommands take(double clock_s);

  const SessionCounters& counters() const { return counters_; }

 private:
  double manual_timeout_s_;
  std::set<std::uint32_t> seen_;
  std::optional<std::uint32_t> last_manual_seq_, last_mode_seq_, last_mission_seq_;
  std::optional<ControlCommand> manual_;
  double manual_clock_s_ = 0.0;
  bool manual_arrived_ = false;
  std::optional<RoverMode> pending_mode_;
  std::optional<std::vector<NodeId>> pending_mission_;
  std::vector<std::uint32_t> rejected_;
  std::map<std::uint32_t, AckStatus> acked_;
  SessionCounters counters_;
};

}  // namespace sprayrover
