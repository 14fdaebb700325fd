#include "sprayrover/scheduler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

namespace sprayrover {

// ---------------------------------------------------------------------------
// Command scripts

std::vector<ScheduledCommand> parse_command_script(std::string_view text) {
  std::vector<ScheduledCommand> out;
  std::size_t lineno = 0;
  while (!text.empty()) {
    ++lineno;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || line[first] == '#') continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ScheduledCommand c;
      c.at_s = j.at("at").get<double>();
      c.message = from_json(j).message;
      out.push_back(std::move(c));
    } catch (const std::exception& e) {
      throw std::invalid_argument("command script line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.at_s < b.at_s; });
  return out;
}

std::vector<ScheduledCommand> load_command_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("command script not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_command_script(ss.str());
}

void RunConfig::validate() const {
  if (!(dt_s > 0.0)) throw ValidationError("dt must be > 0");
  if (!(max_sim_time_s > 0.0)) throw ValidationError("max sim time must be > 0");
  if (!(realtime_factor >= 0.0)) throw ValidationError("realtime factor must be >= 0");
}

// ---------------------------------------------------------------------------
// SimulatedLink

SimulatedLink::SimulatedLink(std::uint64_t seed, double loss, int max_delay_ticks, double dt_s)
    : rng_(fork_stream(seed, streams::kLink)), loss_(loss), max_delay_(max_delay_ticks), dt_(dt_s) {}

void SimulatedLink::enqueue(std::vector<InFlight>& q, std::vector<std::uint8_t> bytes, double clock_s) {
  if (std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < loss_) {
    ++dropped_;
    return;
  }
  const int delay = std::uniform_int_distribution<int>(0, max_delay_)(rng_);
  q.push_back({clock_s + delay * dt_, order_++, std::move(bytes)});
}

std::vector<std::vector<std::uint8_t>> SimulatedLink::drain(std::vector<InFlight>& q, double clock_s) {
  std::vector<InFlight> due;
  std::vector<InFlight> keep;
  for (auto& f : q) (f.deliver_at <= clock_s + 1e-9 ? due : keep).push_back(std::move(f));
  q = std::move(keep);
  std::sort(due.begin(), due.end(), [](const InFlight& a, const InFlight& b) {
    return a.deliver_at != b.deliver_at ? a.deliver_at < b.deliver_at : a.order < b.order;
  });
  std::vector<std::vector<std::uint8_t>> out;
  for (auto& f : due) out.push_back(std::move(f.bytes));
  return out;
}

std::vector<std::vector<std::uint8_t>> SimulatedLink::receive(double clock_s) { return drain(uplink_, clock_s); }
void SimulatedLink::send(std::vector<std::uint8_t> d, double clock_s) { enqueue(downlink_, std::move(d), clock_s); }
void SimulatedLink::gcs_send(std::vector<std::uint8_t> d, double clock_s) { enqueue(uplink_, std::move(d), clock_s); }
std::vector<std::vector<std::uint8_t>> SimulatedLink::gcs_receive(double clock_s) {
  return drain(downlink_, clock_s);
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

std::uint32_t to_ms(double s) { return static_cast<std::uint32_t>(std::llround(std::max(0.0, s) * 1000.0)); }

bool halted(RoverMode m) { return m == RoverMode::Done || m == RoverMode::Fault; }

}  // namespace

Simulation::Simulation(RunConfig config, Link* link)
    : config_(std::move(config)), link_(link), session_(1.0) {
  config_.validate();
  if (config_.seed) config_.scenario.seed = *config_.seed;
  initial_ = config_.scenario;
  world_ = initial_.world;
  mission_ = initial_.mission;
  state_ = initial_state(world_, initial_.rover);
  state_.mode = mission_.autostart ? RoverMode::Auto : RoverMode::Idle;
  gps_rng_ = fork_stream(initial_.seed, streams::kGps);
  detector_rng_ = fork_stream(initial_.seed, streams::kDetector);
  last_gps_ = state_.pose.position;

  trace_.seed = initial_.seed;
  trace_.dt_s = config_.dt_s;
  trace_.scenario_text = serialize_scenario(initial_);
}

bool Simulation::finished() const { return status_.terminal() || halted(state_.mode); }

void Simulation::transmit(const Message& m) {
  if (!link_) return;
  link_->send(rover_encoder_(m), state_.clock_s);
  ++stats_.frames_out;
}

void Simulation::ingest(std::span<const std::uint8_t> datagram, std::vector<Event>& events) {
  (void)events;
  const auto result = decode(datagram);
  if (!result.ok()) {
    ++stats_.decode_errors[static_cast<std::size_t>(result.error)];
    return;
  }
  ++stats_.frames_in;
  CommandSession::Validators v;
  v.mission = [this](const std::vector<NodeId>& ids) {
    if (finished()) return false;
    return std::all_of(ids.begin(), ids.end(), [this](NodeId id) { return world_.find_node(id) != nullptr; });
  };
  v.mode = [this](RoverMode target) {
    if (finished()) return false;
    return target == RoverMode::Auto || target == RoverMode::Manual || target == RoverMode::Rtl;
  };
  if (auto ack = session_.ingest(*result.frame, state_.clock_s, v)) transmit(*ack);
}

void Simulation::apply_commands(const PendingCommands& pending, std::vector<Event>& events) {
  const double clock = state_.clock_s;
  for (std::uint32_t seq : pending.rejected) events.push_back({EventKind::CommandRejected, seq, 0.0});

  if (pending.mission) {
    mission_.waypoints = *pending.mission;
    status_.nodes_reached.clear();
    status_.nodes_skipped.clear();
    status_.current_waypoint_index = 0;
    events.push_back({EventKind::MissionUploaded, static_cast<std::int64_t>(mission_.waypoints.size()), 0.0});
    if (status_.fsm_state != FsmState::Idle) {
      if (status_.fsm_state == FsmState::Rtl) {
        status_.fsm_state = FsmState::Navigate;
        events.push_back({EventKind::FsmChanged, static_cast<std::int64_t>(FsmState::Navigate), 0.0});
        if (state_.mode == RoverMode::Rtl) state_.mode = RoverMode::Auto;
      }
      replan(world_, mission_, status_, last_gps_, clock, events);
    }
  }

  if (pending.mode && !finished()) {
    const RoverMode target = *pending.mode;
    if (target == RoverMode::Manual) {
      state_.mode = RoverMode::Manual;
    } else if (target == RoverMode::Auto) {
      if (state_.mode == RoverMode::Idle || state_.mode == RoverMode::Manual) {
        const bool resume = status_.fsm_state != FsmState::Idle;
        state_.mode = status_.fsm_state == FsmState::Rtl ? RoverMode::Rtl : RoverMode::Auto;
        if (resume) replan(world_, mission_, status_, last_gps_, clock, events);
      }
    } else if (target == RoverMode::Rtl) {
      if (status_.fsm_state == FsmState::Idle) {
        status_.start_clock_s = clock;
        events.push_back({EventKind::MissionStarted, 0, 0.0});
      }
      state_.mode = RoverMode::Rtl;
      begin_return(world_, mission_, status_, last_gps_, clock, events);
    }
  }

  if (pending.manual_arrived && state_.mode != RoverMode::Manual)
    events.push_back({EventKind::ManualIgnored, 0, 0.0});
}

void Simulation::fault(FaultReason reason, std::vector<Event>& events) {
  if (status_.terminal()) return;
  events.push_back({EventKind::Fault, static_cast<std::int64_t>(reason), 0.0});
  status_.end_clock_s = tick_clock_;
  status_.fsm_state = FsmState::Fault;
  events.push_back({EventKind::FsmChanged, static_cast<std::int64_t>(FsmState::Fault), 0.0});
  state_.mode = RoverMode::Fault;
}

void Simulation::publish(const FrameSample& frame, const std::vector<Event>& events) {
  if (link_) {
    const std::uint32_t now_ms = to_ms(state_.clock_s);
    for (const auto& d : frame.detections) {
      if (d.confidence < mission_.detect_confidence_threshold) continue;
      transmit(msg::DetectionEvent{d.class_id, float(d.confidence), float(d.box.x_min), float(d.box.y_min),
                                   float(d.box.x_max), float(d.box.y_max),
                                   d.site_id ? static_cast<std::int32_t>(*d.site_id) : -1});
    }
    msg::SprayEvent spray_event;
    bool sprayed = false;
    for (const auto& e : events) {
      if (e.kind == EventKind::SprayFired) {
        sprayed = true;
        spray_event.reservoir_ml = float(e.value);
      } else if (e.kind == EventKind::SiteTreated) {
        spray_event.site_ids.push_back(static_cast<std::uint32_t>(e.id));
      } else if (e.kind == EventKind::NodeReached) {
        transmit(msg::NodeReached{static_cast<std::uint32_t>(e.id), now_ms});
      }
    }
    if (sprayed) transmit(spray_event);

    const auto heartbeat_every = std::max<std::uint64_t>(1, std::llround(1.0 / config_.dt_s));
    const bool last = finished();
    if (tick_index_ % 5 == 0 || last) {
      msg::Telemetry t;
      t.clock_ms = now_ms;
      t.x = float(state_.pose.position.x());
      t.y = float(state_.pose.position.y());
      t.heading = float(state_.pose.heading);
      t.battery_mAh = float(state_.battery_mAh);
      t.reservoir_ml = float(state_.reservoir_ml);
      t.fsm_state = status_.fsm_state;
      t.mode = state_.mode;
      t.gps_x = float(last_gps_.x());
      t.gps_y = float(last_gps_.y());
      transmit(t);
    }
    if (tick_index_ % heartbeat_every == 0 || last) transmit(msg::Heartbeat{state_.mode, now_ms});

    link_->publish(Snapshot{state_, status_.fsm_state, static_cast<std::uint32_t>(status_.current_waypoint_index),
                            last_gps_, status_.sites_treated, status_.nodes_reached});
  }
}

void Simulation::tick() {
  if (finished()) return;
  const double clock = state_.clock_s;
  tick_clock_ = clock;
  const RoverMode mode_before = state_.mode;
  const bool alert_before = state_.proximity_alert;
  std::vector<Event> events;

  // Sensors.
  last_gps_ = gps_read(state_, initial_.rover.gps_sigma_m, gps_rng_);
  const auto ranges = ultrasonic_scan(state_, world_, initial_.rover);

  // Ground commands: the scripted ones first, then whatever the link carried.
  while (next_script_ < config_.commands.size() && config_.commands[next_script_].at_s <= clock + 1e-9)
    ingest(script_encoder_(config_.commands[next_script_++].message), events);
  if (link_)
    for (const auto& d : link_->receive(clock)) ingest(d, events);
  const PendingCommands pending = session_.take(clock);
  apply_commands(pending, events);
  if (status_.fsm_state == FsmState::Fault) state_.mode = RoverMode::Fault;

  // Detection.
  const auto visible =
      sites_in_fov(world_, state_.pose, initial_.detector.fov, initial_.detector.range_m);
  const FrameSample frame = synthesize_frame(visible, initial_.detector, detector_rng_);

  // Autonomy.
  ControlCommand auto_cmd;
  if (!finished() && (state_.mode == RoverMode::Auto || state_.mode == RoverMode::Rtl)) {
    TickInput in{state_, initial_.rover, initial_.detector, last_gps_, ranges, frame.detections};
    TickOutput out = navigate_tick(world_, mission_, status_, in);
    status_ = std::move(out.status);
    events.insert(events.end(), out.events.begin(), out.events.end());
    auto_cmd = out.command;
    switch (status_.fsm_state) {
      case FsmState::Rtl: state_.mode = RoverMode::Rtl; break;
      case FsmState::Done: state_.mode = RoverMode::Done; break;
      case FsmState::Fault: state_.mode = RoverMode::Fault; break;
      default: state_.mode = RoverMode::Auto; break;
    }
  }

  const ControlCommand cmd = arbitrate(auto_cmd, pending.manual, state_.mode, initial_.rover);

  // Actuation.
  if (cmd.spray_trigger && !finished()) {
    SprayOutcome so = spray(state_, world_, initial_.rover);
    state_ = so.state;
    if (so.rejected) {
      events.push_back({EventKind::SprayRejected, 0, state_.reservoir_ml});
    } else {
      events.push_back({EventKind::SprayFired, 0, state_.reservoir_ml});
      for (SiteId id : so.treated) events.push_back({EventKind::SiteTreated, id, 0.0});
    }
    if (status_.fsm_state == FsmState::Treat && state_.mode != RoverMode::Manual) {
      apply_spray_result(status_, so.treated, so.rejected);
    } else {
      for (SiteId id : so.treated)
        if (std::find(status_.sites_treated.begin(), status_.sites_treated.end(), id) == status_.sites_treated.end())
          status_.sites_treated.push_back(id);
    }
    if (state_.mode == RoverMode::Fault) {
      state_.mode = mode_before;
      fault(FaultReason::Battery, events);
    }
  }

  if (!halted(state_.mode)) {
    const ControlCommand applied = state_.mode == RoverMode::Idle ? ControlCommand{} : cmd;
    RoverState next = step(state_, world_, initial_.rover, applied, config_.dt_s);
    const bool drained = next.mode == RoverMode::Fault;
    next.mode = state_.mode;
    next.clock_s = static_cast<double>(tick_index_ + 1) * config_.dt_s;   // no accumulated drift
    state_ = next;
    if (state_.proximity_alert && !alert_before) events.push_back({EventKind::Collision, 0, 0.0});
    if (drained) fault(FaultReason::Battery, events);
  }
  if (!finished() && state_.clock_s >= config_.max_sim_time_s - 1e-9) fault(FaultReason::Timeout, events);

  if (state_.mode != mode_before)
    events.push_back({EventKind::ModeChanged, static_cast<std::int64_t>(state_.mode), 0.0});

  publish(frame, events);

  TraceRecord rec;
  rec.clock_s = clock;
  rec.state = state_;
  rec.fsm_state = status_.fsm_state;
  rec.waypoint_index = static_cast<std::uint32_t>(status_.current_waypoint_index);
  rec.gps_fix = last_gps_;
  rec.command = halted(mode_before) ? ControlCommand{} : cmd;
  rec.events = std::move(events);
  trace_.records.push_back(std::move(rec));
  ++tick_index_;
}

void Simulation::run_to_end() {
  const auto wall_start = std::chrono::steady_clock::now();
  while (!finished()) {
    tick();
    if (config_.realtime_factor > 0.0) {
      const auto due = wall_start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                        std::chrono::duration<double>(state_.clock_s / config_.realtime_factor));
      std::this_thread::sleep_until(due);
    }
  }
}

MissionReport Simulation::report() const {
  return mission_report(status_, initial_, mission_.waypoints.size(), trace_);
}

RunResult run(const RunConfig& config, Link* link) {
  Simulation sim(config, link);
  sim.run_to_end();
  return {sim.report(), sim.trace()};
}

MissionReport replay(const TraceLog& trace) {
  const Scenario scenario = load_scenario(trace.scenario_text);
  MissionStatus status;
  std::size_t nodes_total = scenario.mission.waypoints.size();
  for (const auto& rec : trace.records) {
    for (const auto& e : rec.events) {
      switch (e.kind) {
        case EventKind::MissionStarted: status.start_clock_s = rec.clock_s; break;
        case EventKind::FsmChanged: status.fsm_state = FsmState(e.id); break;
        case EventKind::NodeReached: status.nodes_reached.push_back(NodeId(e.id)); break;
        case EventKind::NodeSkipped: status.nodes_skipped.push_back(NodeId(e.id)); break;
        case EventKind::SiteTreated:
          if (std::find(status.sites_treated.begin(), status.sites_treated.end(), SiteId(e.id)) ==
              status.sites_treated.end())
            status.sites_treated.push_back(SiteId(e.id));
          break;
        case EventKind::MissionUploaded:
          status.nodes_reached.clear();
          status.nodes_skipped.clear();
          nodes_total = static_cast<std::size_t>(e.id);
          break;
        case EventKind::Done:
        case EventKind::Fault: status.end_clock_s = rec.clock_s; break;
        default: break;
      }
    }
  }
  return mission_report(status, scenario, nodes_total, trace);
}

}  // namespace sprayrover
