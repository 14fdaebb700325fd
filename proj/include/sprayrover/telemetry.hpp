// Framed datagram protocol between the rover and ground control.
//
// Frame layout (all integers big-endian):
//
//   offset  size  field
//   0       2     magic 0x4D 0x51
//   2       1     version (1)
//   3       1     message type
//   4       4     sequence number
//   8       2     payload length (<= 1024)
//   10      n     payload
//   10+n    4     CRC-32 (IEEE) over bytes [0, 10+n)
//
// Payload reals are IEEE-754 binary32, big-endian.
#pragma once

#include "sprayrover/autonomy.hpp"
#include "sprayrover/rover.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <variant>
#include <vector>

namespace sprayrover {

inline constexpr std::uint8_t kFrameMagic0 = 0x4D;
inline constexpr std::uint8_t kFrameMagic1 = 0x51;
inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr std::size_t kHeaderSize = 10;
inline constexpr std::size_t kCrcSize = 4;
inline constexpr std::size_t kMaxPayload = 1024;

enum class MessageType : std::uint8_t {
  Heartbeat = 0x01,
  Telemetry = 0x02,
  DetectionEvent = 0x03,
  SprayEvent = 0x04,
  NodeReached = 0x05,
  CommandMode = 0x10,
  CommandManual = 0x11,
  MissionUpload = 0x12,
  Ack = 0x7F,
};

enum class AckStatus : std::uint8_t { Ok = 0, Rejected = 1, Stale = 2 };

namespace msg {

struct Heartbeat {
  RoverMode mode = RoverMode::Idle;
  std::uint32_t clock_ms = 0;
  bool operator==(const Heartbeat&) const = default;
};

struct Telemetry {
  std::uint32_t clock_ms = 0;
  float x = 0, y = 0, heading = 0;
  float battery_mAh = 0, reservoir_ml = 0;
  FsmState fsm_state = FsmState::Idle;
  RoverMode mode = RoverMode::Idle;
  float gps_x = 0, gps_y = 0;
  bool operator==(const Telemetry&) const = default;
};

struct DetectionEvent {
  ObjectClass class_id = ObjectClass::BreedingSite;
  float confidence = 0;
  float x_min = 0, y_min = 0, x_max = 0, y_max = 0;
  std::int32_t site_id = -1;   // -1 when unresolved
  bool operator==(const DetectionEvent&) const = default;
};

struct SprayEvent {
  float reservoir_ml = 0;
  std::vector<std::uint32_t> site_ids;
  bool operator==(const SprayEvent&) const = default;
};

struct NodeReached {
  std::uint32_t node_id = 0;
  std::uint32_t clock_ms = 0;
  bool operator==(const NodeReached&) const = default;
};

struct CommandMode {
  RoverMode target = RoverMode::Auto;
  bool operator==(const CommandMode&) const = default;
};

struct CommandManual {
  float linear = 0, angular = 0;
  bool spray = false;
  bool operator==(const CommandManual&) const = default;
};

struct MissionUpload {
  std::vector<std::uint32_t> waypoints;
  bool operator==(const MissionUpload&) const = default;
};

struct Ack {
  std::uint32_t acked_seq = 0;
  AckStatus status = AckStatus::Ok;
  bool operator==(const Ack&) const = default;
};

}  // namespace msg

using Message = std::variant<msg::Heartbeat, msg::Telemetry, msg::DetectionEvent, msg::SprayEvent, msg::NodeReached,
                             msg::CommandMode, msg::CommandManual, msg::MissionUpload, msg::Ack>;

MessageType message_type(const Message& m);
std::string_view to_string(MessageType t);
bool is_command(const Message& m);

class EncodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DecodeError : std::uint8_t { BadMagic, BadVersion, BadLength, BadCrc, UnknownType, BadPayload };
std::string_view to_string(DecodeError e);

struct Decoded {
  std::uint32_t seq = 0;
  Message message;
};

struct DecodeResult {
  std::optional<Decoded> frame;
  DecodeError error = DecodeError::BadLength;
  bool ok() const { return frame.has_value(); }
};

std::vector<std::uint8_t> encode_payload(const Message& m);

/// Wraps a raw payload. Throws EncodeError when it exceeds kMaxPayload.
std::vector<std::uint8_t> encode_frame(MessageType type, std::uint32_t seq, std::span<const std::uint8_t> payload);
std::vector<std::uint8_t> encode(const Message& m, std::uint32_t seq);

/// Never throws; every malformed input maps to a DecodeError.
DecodeResult decode(std::span<const std::uint8_t> bytes);

/// Per-sender encoder with a strictly increasing sequence number.
class Encoder {
 public:
  explicit Encoder(std::uint32_t first_seq = 1) : next_seq_(first_seq) {}
  std::vector<std::uint8_t> operator()(const Message& m) { return encode(m, next_seq_++); }
  std::uint32_t next_seq() const { return next_seq_; }

 private:
  std::uint32_t next_seq_;
};

std::uint32_t crc32_ieee(std::span<const std::uint8_t> bytes);

// Structured mirror for the web ground station: one JSON object per message,
// {"type": "<NAME>", "seq": n, ...fields}.
nlohmann::json to_json(const Decoded& frame);
/// Throws std::invalid_argument on unknown types or missing fields.
Decoded from_json(const nlohmann::json& j);

}  // namespace sprayrover
