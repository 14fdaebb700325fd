// Fixed-step simulation conductor. Each tick runs
//
//   commands -> sensors -> detection -> autonomy -> arbitration -> spray
//   -> plant step -> telemetry -> trace record
//
// All randomness comes from streams forked off the run seed, so a
// (scenario, seed, command script) triple fixes every output byte.
#pragma once

#include "sprayrover/autonomy.hpp"
#include "sprayrover/report.hpp"
#include "sprayrover/rng.hpp"
#include "sprayrover/scenario.hpp"
#include "sprayrover/session.hpp"
#include "sprayrover/telemetry.hpp"
#include "sprayrover/trace.hpp"

#include <array>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace sprayrover {

/// A command the ground sends at a given simulated time.
struct ScheduledCommand {
  double at_s = 0.0;
  Message message;
};

/// JSON lines, one mirror message per line plus an "at" field in seconds.
/// Blank lines and lines starting with '#' are skipped.
std::vector<ScheduledCommand> parse_command_script(std::string_view text);
std::vector<ScheduledCommand> load_command_script(const std::filesystem::path& path);

struct RunConfig {
  Scenario scenario;
  std::optional<std::uint64_t> seed;   // overrides the scenario seed
  double dt_s = 0.1;
  double max_sim_time_s = 3600.0;
  double realtime_factor = 0.0;        // 0 = as fast as possible
  std::vector<ScheduledCommand> commands;

  /// Throws ValidationError on non-positive dt or max time.
  void validate() const;
};

/// Everything the ground station may look at, published once per tick.
struct Snapshot {
  RoverState state;
  FsmState fsm_state = FsmState::Idle;
  std::uint32_t waypoint_index = 0;
  Vec2d gps_fix = Vec2d::Zero();
  std::vector<SiteId> sites_treated;
  std::vector<NodeId> nodes_reached;
};

/// Rover-side datagram transport.
class Link {
 public:
  virtual ~Link() = default;
  /// Datagrams that arrived since the last call.
  virtual std::vector<std::vector<std::uint8_t>> receive(double clock_s) = 0;
  virtual void send(std::vector<std::uint8_t> datagram, double clock_s) = 0;
  virtual void publish(const Snapshot&) {}
};

/// In-process link with seeded loss and reordering, for tests and the
/// acceptance suite. The ground side is driven through gcs_send/gcs_receive.
class SimulatedLink : public Link {
 public:
  SimulatedLink(std::uint64_t seed, double loss, int max_delay_ticks, double dt_s);

  std::vector<std::vector<std::uint8_t>> receive(double clock_s) override;
  void send(std::vector<std::uint8_t> datagram, double clock_s) override;

  void gcs_send(std::vector<std::uint8_t> datagram, double clock_s);
  std::vector<std::vector<std::uint8_t>> gcs_receive(double clock_s);

  std::uint64_t dropped() const { return dropped_; }

 private:
  struct InFlight {
    double deliver_at;
    std::uint64_t order;
    std::vector<std::uint8_t> bytes;
  };
  void enqueue(std::vector<InFlight>& q, std::vector<std::uint8_t> bytes, double clock_s);
  std::vector<std::vector<std::uint8_t>> drain(std::vector<InFlight>& q, double clock_s);

  Rng rng_;
  double loss_;
  int max_delay_;
  double dt_;
  std::uint64_t order_ = 0;
  std::uint64_t dropped_ = 0;
  std::vector<InFlight> uplink_, downlink_;
};

struct LinkStats {
  std::uint64_t frames_in = 0;
  std::uint64_t frames_out = 0;
  std::array<std::uint64_t, 6> decode_errors{};   // indexed by DecodeError
};

class Simulation {
 public:
  /// `link` may be null (no ground station) and must outlive the simulation.
  explicit Simulation(RunConfig config, Link* link = nullptr);

  bool finished() const;
  void tick();
  /// Ticks until finished, pacing against the wall clock when realtime > 0.
  void run_to_end();

  const RoverState& state() const { return state_; }
  const MissionStatus& status() const { return status_; }
  const Mission& mission() const { return mission_; }
  const WorldMap& world() const { return world_; }
  const TraceLog& trace() const { return trace_; }
  const LinkStats& link_stats() const { return stats_; }
  const SessionCounters& session_counters() const { return session_.counters(); }

  /// Throws std::logic_error while the mission is still running.
  MissionReport report() const;

 private:
  void ingest(std::span<const std::uint8_t> datagram, std::vector<Event>& events);
  void apply_commands(const PendingCommands& pending, std::vector<Event>& events);
  void fault(FaultReason reason, std::vector<Event>& events);
  void publish(const FrameSample& frame, const std::vector<Event>& events);
  void transmit(const Message& m);

  RunConfig config_;
  Scenario initial_;
  WorldMap world_;
  Mission mission_;
  RoverState state_;
  MissionStatus status_;
  Rng gps_rng_, detector_rng_;
  Link* link_;
  CommandSession session_;
  Encoder rover_encoder_;
  Encoder script_encoder_;
  std::size_t next_script_ = 0;
  std::uint64_t tick_index_ = 0;
  double tick_clock_ = 0.0;
  Vec2d last_gps_ = Vec2d::Zero();
  TraceLog trace_;
  LinkStats stats_;
};

struct RunResult {
  MissionReport report;
  TraceLog trace;
};

RunResult run(const RunConfig& config, Link* link = nullptr);

/// Recomputes the report from a trace alone. Throws TraceError on a corrupt
/// trace and std::logic_error when the trace does not end the mission.
MissionReport replay(const TraceLog& trace);

}  // namespace sprayrover
