#include "sprayrover/trace.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace sprayrover {

TraceError::TraceError(std::size_t record, const std::string& what)
    : std::runtime_error(record == npos ? "trace header: " + what
                                        : "trace record " + std::to_string(record) + ": " + what),
      record_(record) {}

namespace {

constexpr char kMagic[8] = {'S', 'R', 'T', 'R', 'A', 'C', 'E', '1'};
constexpr std::uint32_t kEndMarker = 0xFFFFFFFFu;

class Out {
 public:
  void u8(std::uint8_t v) { buf.push_back(v); }
  void u16(std::uint16_t v) {
    for (int s = 8; s >= 0; s -= 8) u8(std::uint8_t(v >> s));
  }
  void u32(std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) u8(std::uint8_t(v >> s));
  }
  void u64(std::uint64_t v) {
    for (int s = 56; s >= 0; s -= 8) u8(std::uint8_t(v >> s));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::span<const std::uint8_t> b) { buf.insert(buf.end(), b.begin(), b.end()); }

  std::vector<std::uint8_t> buf;
};

struct Truncated {};

class In {
 public:
  explicit In(std::span<const std::uint8_t> b) : b_(b) {}
  std::uint8_t u8() {
    if (pos_ >= b_.size()) throw Truncated{};
    return b_[pos_++];
  }
  std::uint16_t u16() {
    std::uint16_t v = u8();
    return std::uint16_t((v << 8) | u8());
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | u8();
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | u8();
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::span<const std::uint8_t> take(std::size_t n) {
    if (b_.size() - pos_ < n) throw Truncated{};
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

void write_record(Out& o, const TraceRecord& r) {
  o.f64(r.clock_s);
  const RoverState& s = r.state;
  o.f64(s.pose.position.x());
  o.f64(s.pose.position.y());
  o.f64(s.pose.heading);
  o.f64(s.linear_velocity);
  o.f64(s.angular_velocity);
  o.f64(s.battery_mAh);
  o.f64(s.reservoir_ml);
  o.u8(std::uint8_t(s.mode));
  o.f64(s.clock_s);
  o.u8(s.proximity_alert ? 1 : 0);
  o.u8(std::uint8_t(r.fsm_state));
  o.u32(r.waypoint_index);
  o.f64(r.gps_fix.x());
  o.f64(r.gps_fix.y());
  o.f64(r.command.linear);
  o.f64(r.command.angular);
  o.u8(r.command.spray_trigger ? 1 : 0);
  o.u32(std::uint32_t(r.events.size()));
  for (const auto& e : r.events) {
    o.u8(std::uint8_t(e.kind));
    o.u64(static_cast<std::uint64_t>(e.id));
    o.f64(e.value);
  }
}

TraceRecord read_record(In& in) {
  TraceRecord r;
  r.clock_s = in.f64();
  RoverState& s = r.state;
  const double x = in.f64();
  const double y = in.f64();
  s.pose.position = Vec2d(x, y);
  s.pose.heading = in.f64();
  s.linear_velocity = in.f64();
  s.angular_velocity = in.f64();
  s.battery_mAh = in.f64();
  s.reservoir_ml = in.f64();
  const std::uint8_t mode = in.u8();
  if (mode > std::uint8_t(RoverMode::Fault)) throw std::invalid_argument("bad rover mode");
  s.mode = RoverMode(mode);
  s.clock_s = in.f64();
  s.proximity_alert = in.u8() != 0;
  const std::uint8_t fsm = in.u8();
  if (fsm > std::uint8_t(FsmState::Fault)) throw std::invalid_argument("bad fsm state");
  r.fsm_state = FsmState(fsm);
  r.waypoint_index = in.u32();
  const double gx = in.f64();
  const double gy = in.f64();
  r.gps_fix = Vec2d(gx, gy);
  r.command.linear = in.f64();
  r.command.angular = in.f64();
  r.command.spray_trigger = in.u8() != 0;
  const std::uint32_t n = in.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    Event e;
    const std::uint8_t kind = in.u8();
    if (kind < std::uint8_t(EventKind::MissionStarted) || kind > std::uint8_t(EventKind::Collision))
      throw std::invalid_argument("bad event kind " + std::to_string(kind));
    e.kind = EventKind(kind);
    e.id = static_cast<std::int64_t>(in.u64());
    e.value = in.f64();
    r.events.push_back(e);
  }
  return r;
}

}  // namespace

std::vector<std::uint8_t> serialize_trace(const TraceLog& t) {
  Out o;
  o.bytes(std::span(reinterpret_cast<const std::uint8_t*>(kMagic), sizeof kMagic));
  o.u16(kTraceVersion);
  o.u64(t.seed);
  o.f64(t.dt_s);
  o.u32(std::uint32_t(t.scenario_text.size()));
  o.bytes(std::span(reinterpret_cast<const std::uint8_t*>(t.scenario_text.data()), t.scenario_text.size()));
  for (const auto& r : t.records) {
    Out body;
    write_record(body, r);
    o.u32(std::uint32_t(body.buf.size()));
    o.bytes(body.buf);
  }
  o.u32(kEndMarker);
  o.u64(t.records.size());
  return std::move(o.buf);
}

TraceLog parse_trace(std::span<const std::uint8_t> bytes) {
  In in(bytes);
  TraceLog t;
  try {
    const auto magic = in.take(sizeof kMagic);
    if (std::memcmp(magic.data(), kMagic, sizeof kMagic) != 0) throw TraceError(TraceError::npos, "bad magic");
    const std::uint16_t version = in.u16();
    if (version != kTraceVersion)
      throw TraceError(TraceError::npos, "unsupported version " + std::to_string(version));
    t.seed = in.u64();
    t.dt_s = in.f64();
    if (!(t.dt_s > 0.0)) throw TraceError(TraceError::npos, "dt must be > 0");
    const auto text = in.take(in.u32());
    t.scenario_text.assign(text.begin(), text.end());
  } catch (const Truncated&) {
    throw TraceError(TraceError::npos, "truncated");
  }

  for (std::size_t index = 0;; ++index) {
    std::uint32_t len = 0;
    try {
      len = in.u32();
    } catch (const Truncated&) {
      throw TraceError(index, "missing (trace truncated)");
    }
    if (len == kEndMarker) {
      std::uint64_t count = 0;
      try {
        count = in.u64();
      } catch (const Truncated&) {
        throw TraceError(index, "truncated end marker");
      }
      if (count != t.records.size())
        throw TraceError(index, "end marker counts " + std::to_string(count) + " records, found " +
                                    std::to_string(t.records.size()));
      if (!in.done()) throw TraceError(index, "trailing bytes after end marker");
      break;
    }
    try {
      In body(in.take(len));
      TraceRecord r = read_record(body);
      if (!body.done()) throw TraceError(index, "record length mismatch");
      if (!t.records.empty() && std::abs(r.clock_s - t.records.back().clock_s - t.dt_s) > 1e-6)
        throw TraceError(index, "clock does not advance by dt");
      t.records.push_back(std::move(r));
    } catch (const Truncated&) {
      throw TraceError(index, "truncated");
    } catch (const std::invalid_argument& e) {
      throw TraceError(index, e.what());
    }
  }
  return t;
}

void write_trace_file(const std::filesystem::path& path, const TraceLog& trace) {
  const auto bytes = serialize_trace(trace);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

TraceLog read_trace_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("trace not found: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_trace(bytes);
}

}  // namespace sprayrover
