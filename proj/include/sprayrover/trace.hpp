// Run trace: one record per tick, persisted as a length-prefixed binary
// record stream.
//
//   header   "SRTRACE1" | u16 version | u64 seed | f64 dt | u32 n | scenario text (n bytes)
//   record   u32 length | body
//   end      u32 0xFFFFFFFF | u64 record count
//
// Integers and reals are big-endian; reals are IEEE-754 binary64.
#pragma once

#include "sprayrover/autonomy.hpp"
#include "sprayrover/events.hpp"
#include "sprayrover/rover.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sprayrover {

inline constexpr std::uint16_t kTraceVersion = 1;

struct TraceRecord {
  double clock_s = 0.0;        // clock at the start of the tick
  RoverState state;            // plant state at the end of the tick
  FsmState fsm_state = FsmState::Idle;
  std::uint32_t waypoint_index = 0;
  Vec2d gps_fix = Vec2d::Zero();
  ControlCommand command;      // command applied to the plant
  std::vector<Event> events;

  bool operator==(const TraceRecord&) const = default;
};

struct TraceLog {
  std::uint64_t seed = 0;
  double dt_s = 0.1;
  std::string scenario_text;   // canonical scenario the run used
  std::vector<TraceRecord> records;

  bool operator==(const TraceLog&) const = default;
};

/// Malformed trace. `record()` is the index of the first unreadable record,
/// or npos for header problems.
class TraceError : public std::runtime_error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  TraceError(std::size_t record, const std::string& what);
  std::size_t record() const { return record_; }

 private:
  std::size_t record_;
};

std::vector<std::uint8_t> serialize_trace(const TraceLog& trace);
/// Also checks that record clocks advance by exactly one dt.
TraceLog parse_trace(std::span<const std::uint8_t> bytes);

void write_trace_file(const std::filesystem::path& path, const TraceLog& trace);
TraceLog read_trace_file(const std::filesystem::path& path);

}  // namespace sprayrover
