#include "sprayrover/telemetry.hpp"

#include <zlib.h>

#include <bit>
#include <string>

namespace sprayrover {

MessageType message_type(const Message& m) {
  static constexpr MessageType kTypes[] = {
      MessageType::Heartbeat,     MessageType::Telemetry,   MessageType::DetectionEvent,
      MessageType::SprayEvent,    MessageType::NodeReached, MessageType::CommandMode,
      MessageType::CommandManual, MessageType::MissionUpload, MessageType::Ack};
  return kTypes[m.index()];
}

std::string_view to_string(MessageType t) {
  switch (t) {
    case MessageType::Heartbeat: return "HEARTBEAT";
    case MessageType::Telemetry: return "TELEMETRY";
    case MessageType::DetectionEvent: return "DETECTION_EVENT";
    case MessageType::SprayEvent: return "SPRAY_EVENT";
    case MessageType::NodeReached: return "NODE_REACHED";
    case MessageType::CommandMode: return "COMMAND_MODE";
    case MessageType::CommandManual: return "COMMAND_MANUAL";
    case MessageType::MissionUpload: return "MISSION_UPLOAD";
    case MessageType::Ack: return "ACK";
  }
  return "?";
}

bool is_command(const Message& m) {
  const auto t = message_type(m);
  return t == MessageType::CommandMode || t == MessageType::CommandManual || t == MessageType::MissionUpload;
}

std::string_view to_string(DecodeError e) {
  switch (e) {
    case DecodeError::BadMagic: return "BAD_MAGIC";
    case DecodeError::BadVersion: return "BAD_VERSION";
    case DecodeError::BadLength: return "BAD_LENGTH";
    case DecodeError::BadCrc: return "BAD_CRC";
    case DecodeError::UnknownType: return "UNKNOWN_TYPE";
    case DecodeError::BadPayload: return "BAD_PAYLOAD";
  }
  return "?";
}

std::uint32_t crc32_ieee(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(::crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    u8(std::uint8_t(v >> 8));
    u8(std::uint8_t(v));
  }
  void u32(std::uint32_t v) {
    u16(std::uint16_t(v >> 16));
    u16(std::uint16_t(v));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

// Bounds-checked reader; any overrun latches `bad`.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint8_t u8() {
    if (pos_ >= in_.size()) {
      bad_ = true;
      return 0;
    }
    return in_[pos_++];
  }
  std::uint16_t u16() {
    const std::uint16_t hi = u8();
    return std::uint16_t((hi << 8) | u8());
  }
  std::uint32_t u32() {
    const std::uint32_t hi = u16();
    return (hi << 16) | u16();
  }
  float f32() { return std::bit_cast<float>(u32()); }
  bool exhausted_cleanly() const { return !bad_ && pos_ == in_.size(); }
  bool bad() const { return bad_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  bool bad_ = false;
};

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool valid_mode(std::uint8_t v) { return v <= static_cast<std::uint8_t>(RoverMode::Fault); }
bool valid_fsm(std::uint8_t v) { return v <= static_cast<std::uint8_t>(FsmState::Fault); }

std::optional<Message> parse_payload(MessageType type, std::span<const std::uint8_t> payload) {
  Reader r(payload);
  Message m;
  switch (type) {
    case MessageType::Heartbeat: {
      const std::uint8_t mode = r.u8();
      if (!valid_mode(mode)) return std::nullopt;
      m = msg::Heartbeat{RoverMode(mode), r.u32()};
      break;
    }
    case MessageType::Telemetry: {
      msg::Telemetry t;
      t.clock_ms = r.u32();
      t.x = r.f32();
      t.y = r.f32();
      t.heading = r.f32();
      t.battery_mAh = r.f32();
      t.reservoir_ml = r.f32();
      const std::uint8_t fsm = r.u8();
      const std::uint8_t mode = r.u8();
      if (!valid_fsm(fsm) || !valid_mode(mode)) return std::nullopt;
      t.fsm_state = FsmState(fsm);
      t.mode = RoverMode(mode);
      t.gps_x = r.f32();
      t.gps_y = r.f32();
      m = t;
      break;
    }
    case MessageType::DetectionEvent: {
      msg::DetectionEvent d;
      const std::uint8_t cls = r.u8();
      if (cls >= kNumClasses) return std::nullopt;
      d.class_id = ObjectClass(cls);
      d.confidence = r.f32();
      d.x_min = r.f32();
      d.y_min = r.f32();
      d.x_max = r.f32();
      d.y_max = r.f32();
      d.site_id = static_cast<std::int32_t>(r.u32());
      m = d;
      break;
    }
    case MessageType::SprayEvent: {
      msg::SprayEvent s;
      s.reservoir_ml = r.f32();
      const std::uint8_t n = r.u8();
      for (std::uint8_t i = 0; i < n && !r.bad(); ++i) s.site_ids.push_back(r.u32());
      m = std::move(s);
      break;
    }
    case MessageType::NodeReached: {
      msg::NodeReached n;
      n.node_id = r.u32();
      n.clock_ms = r.u32();
      m = n;
      break;
    }
    case MessageType::CommandMode: {
      const std::uint8_t mode = r.u8();
      if (!valid_mode(mode)) return std::nullopt;
      m = msg::CommandMode{RoverMode(mode)};
      break;
    }
    case MessageType::CommandManual: {
      msg::CommandManual c;
      c.linear = r.f32();
      c.angular = r.f32();
      const std::uint8_t spray = r.u8();
      if (spray > 1) return std::nullopt;
      c.spray = spray == 1;
      m = c;
      break;
    }
    case MessageType::MissionUpload: {
      msg::MissionUpload u;
      const std::uint16_t n = r.u16();
      for (std::uint16_t i = 0; i < n && !r.bad(); ++i) u.waypoints.push_back(r.u32());
      m = std::move(u);
      break;
    }
    case MessageType::Ack: {
      msg::Ack a;
      a.acked_seq = r.u32();
      const std::uint8_t status = r.u8();
      if (status > static_cast<std::uint8_t>(AckStatus::Stale)) return std::nullopt;
      a.status = AckStatus(status);
      m = a;
      break;
    }
    default:
      return std::nullopt;
  }
  if (!r.exhausted_cleanly()) return std::nullopt;
  return m;
}

bool known_type(std::uint8_t t) {
  switch (MessageType(t)) {
    case MessageType::Heartbeat:
    case MessageType::Telemetry:
    case MessageType::DetectionEvent:
    case MessageType::SprayEvent:
    case MessageType::NodeReached:
    case MessageType::CommandMode:
    case MessageType::CommandManual:
    case MessageType::MissionUpload:
    case MessageType::Ack:
      return true;
  }
  return false;
}

}  // namespace

std::vector<std::uint8_t> encode_payload(const Message& message) {
  Writer w;
  std::visit(Overloaded{
                 [&](const msg::Heartbeat& h) {
                   w.u8(std::uint8_t(h.mode));
                   w.u32(h.clock_ms);
                 },
                 [&](const msg::Telemetry& t) {
                   w.u32(t.clock_ms);
                   w.f32(t.x);
                   w.f32(t.y);
                   w.f32(t.heading);
                   w.f32(t.battery_mAh);
                   w.f32(t.reservoir_ml);
                   w.u8(std::uint8_t(t.fsm_state));
                   w.u8(std::uint8_t(t.mode));
                   w.f32(t.gps_x);
                   w.f32(t.gps_y);
                 },
                 [&](const msg::DetectionEvent& d) {
                   w.u8(std::uint8_t(d.class_id));
                   w.f32(d.confidence);
                   w.f32(d.x_min);
                   w.f32(d.y_min);
                   w.f32(d.x_max);
                   w.f32(d.y_max);
                   w.u32(static_cast<std::uint32_t>(d.site_id));
                 },
                 [&](const msg::SprayEvent& s) {
                   if (s.site_ids.size() > 255) throw EncodeError("SPRAY_EVENT carries at most 255 sites");
                   w.f32(s.reservoir_ml);
                   w.u8(std::uint8_t(s.site_ids.size()));
                   for (auto id : s.site_ids) w.u32(id);
                 },
                 [&](const msg::NodeReached& n) {
                   w.u32(n.node_id);
                   w.u32(n.clock_ms);
                 },
                 [&](const msg::CommandMode& c) { w.u8(std::uint8_t(c.target)); },
                 [&](const msg::CommandManual& c) {
                   w.f32(c.linear);
                   w.f32(c.angular);
                   w.u8(c.spray ? 1 : 0);
                 },
                 [&](const msg::MissionUpload& u) {
                   if (u.waypoints.size() > 0xFFFF) throw EncodeError("MISSION_UPLOAD waypoint count overflow");
                   w.u16(std::uint16_t(u.waypoints.size()));
                   for (auto id : u.waypoints) w.u32(id);
                 },
                 [&](const msg::Ack& a) {
                   w.u32(a.acked_seq);
                   w.u8(std::uint8_t(a.status));
                 },
             },
             message);
  return w.take();
}

std::vector<std::uint8_t> encode_frame(MessageType type, std::uint32_t seq, std::span<const std::uint8_t> payload) {
  if (payload.size() > kMaxPayload)
    throw EncodeError("payload of " + std::to_string(payload.size()) + " bytes exceeds " + std::to_string(kMaxPayload));
  Writer w;
  w.u8(kFrameMagic0);
  w.u8(kFrameMagic1);
  w.u8(kProtocolVersion);
  w.u8(std::uint8_t(type));
  w.u32(seq);
  w.u16(std::uint16_t(payload.size()));
  auto out = w.take();
  out.insert(out.end(), payload.begin(), payload.end());
  const std::uint32_t crc = crc32_ieee(out);
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(std::uint8_t(crc >> shift));
  return out;
}

std::vector<std::uint8_t> encode(const Message& m, std::uint32_t seq) {
  const auto payload = encode_payload(m);
  return encode_frame(message_type(m), seq, payload);
}

DecodeResult decode(std::span<const std::uint8_t> bytes) {
  DecodeResult r;
  if (bytes.size() < 2 || bytes[0] != kFrameMagic0 || bytes[1] != kFrameMagic1) {
    r.error = bytes.size() < 2 ? DecodeError::BadLength : DecodeError::BadMagic;
    return r;
  }
  if (bytes.size() < kHeaderSize + kCrcSize) {
    r.error = DecodeError::BadLength;
    return r;
  }
  if (bytes[2] != kProtocolVersion) {
    r.error = DecodeError::BadVersion;
    return r;
  }
  Reader h(bytes.subspan(4, 6));
  const std::uint32_t seq = h.u32();
  const std::uint16_t len = h.u16();
  if (len > kMaxPayload || bytes.size() != kHeaderSize + len + kCrcSize) {
    r.error = DecodeError::BadLength;
    return r;
  }
  Reader c(bytes.subspan(kHeaderSize + len, kCrcSize));
  if (c.u32() != crc32_ieee(bytes.first(kHeaderSize + len))) {
    r.error = DecodeError::BadCrc;
    return r;
  }
  if (!known_type(bytes[3])) {
    r.error = DecodeError::UnknownType;
    return r;
  }
  auto m = parse_payload(MessageType(bytes[3]), bytes.subspan(kHeaderSize, len));
  if (!m) {
    r.error = DecodeError::BadPayload;
    return r;
  }
  r.frame = Decoded{seq, std::move(*m)};
  return r;
}

// ---------------------------------------------------------------------------
// JSON mirror

namespace {

RoverMode mode_from_string(const std::string& s) {
  for (std::uint8_t v = 0; v <= std::uint8_t(RoverMode::Fault); ++v)
    if (to_string(RoverMode(v)) == s) return RoverMode(v);
  throw std::invalid_argument("unknown mode '" + s + "'");
}

FsmState fsm_from_string(const std::string& s) {
  for (std::uint8_t v = 0; v <= std::uint8_t(FsmState::Fault); ++v)
    if (to_string(FsmState(v)) == s) return FsmState(v);
  throw std::invalid_argument("unknown fsm state '" + s + "'");
}

AckStatus ack_from_string(const std::string& s) {
  if (s == "OK") return AckStatus::Ok;
  if (s == "REJECTED") return AckStatus::Rejected;
  if (s == "STALE") return AckStatus::Stale;
  throw std::invalid_argument("unknown ack status '" + s + "'");
}

std::string_view to_string(AckStatus s) {
  switch (s) {
    case AckStatus::Ok: return "OK";
    case AckStatus::Rejected: return "REJECTED";
    case AckStatus::Stale: return "STALE";
  }
  return "?";
}

}  // namespace

nlohmann::json to_json(const Decoded& frame) {
  nlohmann::json j;
  j["type"] = std::string(to_string(message_type(frame.message)));
  j["seq"] = frame.seq;
  std::visit(Overloaded{
                 [&](const msg::Heartbeat& h) {
                   j["mode"] = std::string(to_string(h.mode));
                   j["clock_ms"] = h.clock_ms;
                 },
                 [&](const msg::Telemetry& t) {
                   j["clock_ms"] = t.clock_ms;
                   j["x"] = t.x;
                   j["y"] = t.y;
                   j["heading"] = t.heading;
                   j["battery_mAh"] = t.battery_mAh;
                   j["reservoir_ml"] = t.reservoir_ml;
                   j["fsm_state"] = std::string(to_string(t.fsm_state));
                   j["mode"] = std::string(to_string(t.mode));
                   j["gps_x"] = t.gps_x;
                   j["gps_y"] = t.gps_y;
                 },
                 [&](const msg::DetectionEvent& d) {
                   j["class_id"] = int(d.class_id);
                   j["confidence"] = d.confidence;
                   j["box"] = {d.x_min, d.y_min, d.x_max, d.y_max};
                   j["site_id"] = d.site_id;
                 },
                 [&](const msg::SprayEvent& s) {
                   j["reservoir_ml"] = s.reservoir_ml;
                   j["site_ids"] = s.site_ids;
                 },
                 [&](const msg::NodeReached& n) {
                   j["node_id"] = n.node_id;
                   j["clock_ms"] = n.clock_ms;
                 },
                 [&](const msg::CommandMode& c) { j["mode"] = std::string(to_string(c.target)); },
                 [&](const msg::CommandManual& c) {
                   j["linear"] = c.linear;
                   j["angular"] = c.angular;
                   j["spray"] = c.spray;
                 },
                 [&](const msg::MissionUpload& u) { j["waypoints"] = u.waypoints; },
                 [&](const msg::Ack& a) {
                   j["acked_seq"] = a.acked_seq;
                   j["status"] = std::string(to_string(a.status));
                 },
             },
             frame.message);
  return j;
}

Decoded from_json(const nlohmann::json& j) {
  try {
    const std::string type = j.at("type").get<std::string>();
    Decoded d;
    d.seq = j.value("seq", 0u);
    if (type == "HEARTBEAT") {
      d.message = msg::Heartbeat{mode_from_string(j.at("mode")), j.at("clock_ms").get<std::uint32_t>()};
    } else if (type == "TELEMETRY") {
      msg::Telemetry t;
      t.clock_ms = j.at("clock_ms");
      t.x = j.at("x");
      t.y = j.at("y");
      t.heading = j.at("heading");
      t.battery_mAh = j.at("battery_mAh");
      t.reservoir_ml = j.at("reservoir_ml");
      t.fsm_state = fsm_from_string(j.at("fsm_state"));
      t.mode = mode_from_string(j.at("mode"));
      t.gps_x = j.at("gps_x");
      t.gps_y = j.at("gps_y");
      d.message = t;
    } else if (type == "DETECTION_EVENT") {
      msg::DetectionEvent e;
      const int cls = j.at("class_id");
      if (cls < 0 || cls >= kNumClasses) throw std::invalid_argument("class_id out of range");
      e.class_id = ObjectClass(cls);
      e.confidence = j.at("confidence");
      const auto& box = j.at("box");
      e.x_min = box.at(0);
      e.y_min = box.at(1);
      e.x_max = box.at(2);
      e.y_max = box.at(3);
      e.site_id = j.at("site_id");
      d.message = e;
    } else if (type == "SPRAY_EVENT") {
      d.message = msg::SprayEvent{j.at("reservoir_ml"), j.at("site_ids").get<std::vector<std::uint32_t>>()};
    } else if (type == "NODE_REACHED") {
      d.message = msg::NodeReached{j.at("node_id"), j.at("clock_ms")};
    } else if (type == "COMMAND_MODE") {
      d.message = msg::CommandMode{mode_from_string(j.at("mode"))};
    } else if (type == "COMMAND_MANUAL") {
      d.message = msg::CommandManual{j.at("linear"), j.at("angular"), j.value("spray", false)};
    } else if (type == "MISSION_UPLOAD") {
      d.message = msg::MissionUpload{j.at("waypoints").get<std::vector<std::uint32_t>>()};
    } else if (type == "ACK") {
      d.message = msg::Ack{j.at("acked_seq"), ack_from_string(j.at("status"))};
    } else {
      throw std::invalid_argument("unknown message type '" + type + "'");
    }
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed message: ") + e.what());
  }
}

}  // namespace sprayrover
