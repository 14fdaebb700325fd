#include "sprayrover/session.hpp"

#include <utility>

namespace sprayrover {

namespace {
bool newer(std::uint32_t seq, const std::optional<std::uint32_t>& last) { return !last || seq > *last; }
}  // namespace

std::optional<msg::Ack> CommandSession::ingest(const Decoded& frame, double clock_s,
                                               const Validators& validate) {
  if (!is_command(frame.message)) {
    ++counters_.ignored;
    return std::nullopt;
  }
  if (!seen_.insert(frame.seq).second) {
    ++counters_.duplicates;
    // The sender may have lost our ACK; repeat the original verdict.
    if (auto it = acked_.find(frame.seq); it != acked_.end()) return msg::Ack{frame.seq, it->second};
    return std::nullopt;
  }
  // Bound the memory; anything this old is stale anyway.
  while (seen_.size() > 4096) seen_.erase(seen_.begin());
  while (acked_.size() > 4096) acked_.erase(acked_.begin());

  auto ack = [&](AckStatus s) {
    acked_[frame.seq] = s;
    return msg::Ack{frame.seq, s};
  };

  if (const auto* m = std::get_if<msg::CommandManual>(&frame.message)) {
    if (!newer(frame.seq, last_manual_seq_)) {
      ++counters_.stale;
      return std::nullopt;
    }
    last_manual_seq_ = frame.seq;
    manual_ = ControlCommand{m->linear, m->angular, m->spray};
    manual_clock_s_ = clock_s;
    manual_arrived_ = true;
    ++counters_.accepted;
    return std::nullopt;
  }
  if (const auto* m = std::get_if<msg::CommandMode>(&frame.message)) {
    if (!newer(frame.seq, last_mode_seq_)) {
      ++counters_.stale;
      return ack(AckStatus::Stale);
    }
    if (validate.mode && !validate.mode(m->target)) {
      rejected_.push_back(frame.seq);
      return ack(AckStatus::Rejected);
    }
    last_mode_seq_ = frame.seq;
    pending_mode_ = m->target;
    ++counters_.accepted;
    return ack(AckStatus::Ok);
  }
  const auto& up = std::get<msg::MissionUpload>(frame.message);
  if (!newer(frame.seq, last_mission_seq_)) {
    ++counters_.stale;
    return ack(AckStatus::Stale);
  }
  std::vector<NodeId> waypoints(up.waypoints.begin(), up.waypoints.end());
  if (validate.mission && !validate.mission(waypoints)) {
    rejected_.push_back(frame.seq);
    return ack(AckStatus::Rejected);
  }
  last_mission_seq_ = frame.seq;
  pending_mission_ = std::move(waypoints);
  ++counters_.accepted;
  return ack(AckStatus::Ok);
}

PendingCommands CommandSession::take(double clock_s) {
  PendingCommands out;
  out.mode = std::exchange(pending_mode_, std::nullopt);
  out.mission = std::exchange(pending_mission_, std::nullopt);
  out.manual_arrived = std::exchange(manual_arrived_, false);
  out.rejected = std::exchange(rejected_, {});
  if (manual_ && clock_s - manual_clock_s_ <= manual_timeout_s_ + 1e-9) out.manual = manual_;
  return out;
}

}  // namespace sprayrover
