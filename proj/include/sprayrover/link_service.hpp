// Live ground-control endpoints for `serve`: the binary UDP link plus an
// HTTP mirror carrying the same catalog as JSON.
//
//   GET  /snapshot   latest rover snapshot
//   GET  /events     server-sent events, one mirrored frame per event
//   POST /command    one mirror command object; re-encoded onto the binary path
//
// The simulation thread talks to the service only through Link: receive()
// drains the inbound queue, send() and publish() hand over outbound data.
#pragma once

#include "sprayrover/scheduler.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace sprayrover {

class LinkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LinkServiceConfig {
  std::uint16_t udp_port = 14550;     // 0 picks a free port
  std::uint16_t mirror_port = 8080;   // 0 picks a free port
  std::string mirror_host = "127.0.0.1";
  bool enable_mirror = true;
  bool log_rejects = true;            // one stderr line per rejected datagram
};

/// Owns a bound UDP socket.
class UdpSocket {
 public:
  /// Throws LinkError when the port cannot be bound.
  explicit UdpSocket(std::uint16_t port, bool loopback_only = false);
  ~UdpSocket();
  UdpSocket(const UdpSocket&) = delete;
  UdpSocket& operator=(const UdpSocket&) = delete;

  std::uint16_t port() const { return port_; }
  int fd() const { return fd_; }

  void send_to(std::span<const std::uint8_t> bytes, std::uint32_t addr_be, std::uint16_t port_be) const;
  void send_to_loopback(std::span<const std::uint8_t> bytes, std::uint16_t port) const;
  /// Waits up to `timeout_ms`; returns false when nothing arrived.
  bool receive(std::vector<std::uint8_t>& out, std::uint32_t& addr_be, std::uint16_t& port_be, int timeout_ms) const;

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

class LinkService : public Link {
 public:
  explicit LinkService(const LinkServiceConfig& config);
  ~LinkService() override;

  std::vector<std::vector<std::uint8_t>> receive(double clock_s) override;
  void send(std::vector<std::uint8_t> datagram, double clock_s) override;
  void publish(const Snapshot& snapshot) override;

  std::uint16_t udp_port() const { return udp_.port(); }
  std::uint16_t mirror_port() const { return mirror_port_; }
  std::uint64_t rejected(DecodeError e) const { return rejects_[static_cast<std::size_t>(e)].load(); }

 private:
  void udp_loop();
  void broadcast(std::string json);

  LinkServiceConfig config_;
  UdpSocket udp_;
  std::atomic<bool> stop_{false};
  std::thread udp_thread_;

  std::mutex inbound_mu_;
  std::vector<std::vector<std::uint8_t>> inbound_;

  std::mutex peer_mu_;
  bool have_peer_ = false;
  std::uint32_t peer_addr_ = 0;
  std::uint16_t peer_port_ = 0;

  std::array<std::atomic<std::uint64_t>, 6> rejects_{};

  // Mirror state.
  std::mutex mirror_mu_;
  std::condition_variable mirror_cv_;
  std::deque<std::string> events_;
  std::uint64_t events_base_ = 0;   // index of events_.front()
  std::string snapshot_json_ = "{}";
  std::unique_ptr<httplib::Server> http_;
  std::thread http_thread_;
  std::uint16_t mirror_port_ = 0;
};

}  // namespace sprayrover
