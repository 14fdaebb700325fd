#include "sprayrover/link_service.hpp"

#include <httplib.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <iostream>

namespace sprayrover {

// ---------------------------------------------------------------------------
// UdpSocket

UdpSocket::UdpSocket(std::uint16_t port, bool loopback_only) {
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) throw LinkError(std::string("udp socket: ") + std::strerror(errno));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(loopback_only ? INADDR_LOOPBACK : INADDR_ANY);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    const int err = errno;
    ::close(fd_);
    fd_ = -1;
    throw LinkError("cannot bind udp port " + std::to_string(port) + ": " + std::strerror(err));
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

UdpSocket::~UdpSocket() {
  if (fd_ >= 0) ::close(fd_);
}

void UdpSocket::send_to(std::span<const std::uint8_t> bytes, std::uint32_t addr_be, std::uint16_t port_be) const {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = port_be;
  addr.sin_addr.s_addr = addr_be;
  ::sendto(fd_, bytes.data(), bytes.size(), 0, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
}

void UdpSocket::send_to_loopback(std::span<const std::uint8_t> bytes, std::uint16_t port) const {
  send_to(bytes, htonl(INADDR_LOOPBACK), htons(port));
}

bool UdpSocket::receive(std::vector<std::uint8_t>& out, std::uint32_t& addr_be, std::uint16_t& port_be,
                        int timeout_ms) const {
  pollfd p{fd_, POLLIN, 0};
  if (::poll(&p, 1, timeout_ms) <= 0) return false;
  out.resize(65536);
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  const auto n = ::recvfrom(fd_, out.data(), out.size(), 0, reinterpret_cast<sockaddr*>(&addr), &len);
  if (n < 0) return false;
  out.resize(static_cast<std::size_t>(n));
  addr_be = addr.sin_addr.s_addr;
  port_be = addr.sin_port;
  return true;
}

// ---------------------------------------------------------------------------
// LinkService

namespace {

constexpr std::size_t kMirrorBacklog = 1024;

nlohmann::json snapshot_to_json(const Snapshot& s) {
  return {{"clock_s", s.state.clock_s},
          {"x", s.state.pose.position.x()},
          {"y", s.state.pose.position.y()},
          {"heading", s.state.pose.heading},
          {"battery_mAh", s.state.battery_mAh},
          {"reservoir_ml", s.state.reservoir_ml},
          {"mode", std::string(to_string(s.state.mode))},
          {"fsm_state", std::string(to_string(s.fsm_state))},
          {"waypoint_index", s.waypoint_index},
          {"gps_x", s.gps_fix.x()},
          {"gps_y", s.gps_fix.y()},
          {"sites_treated", s.sites_treated},
          {"nodes_reached", s.nodes_reached}};
}

}  // namespace

LinkService::LinkService(const LinkServiceConfig& config) : config_(config), udp_(config.udp_port) {
  if (config_.enable_mirror) {
    http_ = std::make_unique<httplib::Server>();
    // Address reuse only; port sharing would let a second instance bind.
    http_->set_socket_options([](socket_t sock) {
      int yes = 1;
      ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    });

    http_->Get("/snapshot", [this](const httplib::Request&, httplib::Response& res) {
      std::lock_guard lock(mirror_mu_);
      res.set_content(snapshot_json_, "application/json");
    });

    http_->Get("/events", [this](const httplib::Request&, httplib::Response& res) {
      std::uint64_t cursor;
      {
        std::lock_guard lock(mirror_mu_);
        cursor = events_base_ + events_.size();
      }
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider("text/event-stream", [this, cursor](std::size_t, httplib::DataSink& sink) mutable {
        std::unique_lock lock(mirror_mu_);
        mirror_cv_.wait_for(lock, std::chrono::seconds(1),
                            [&] { return stop_.load() || cursor < events_base_ + events_.size(); });
        if (stop_) {
          lock.unlock();
          sink.done();
          return false;
        }
        std::string chunk;
        if (cursor < events_base_) cursor = events_base_;   // slow reader: skip what was evicted
        for (; cursor < events_base_ + events_.size(); ++cursor)
          chunk += "data: " + events_[cursor - events_base_] + "\n\n";
        lock.unlock();
        if (chunk.empty()) chunk = ": keepalive\n\n";
        return sink.write(chunk.data(), chunk.size());
      });
    });

    http_->Post("/command", [this](const httplib::Request& req, httplib::Response& res) {
      try {
        const Decoded d = from_json(nlohmann::json::parse(req.body));
        if (!is_command(d.message)) throw std::invalid_argument("not a command message");
        auto bytes = encode(d.message, d.seq);
        {
          std::lock_guard lock(inbound_mu_);
          inbound_.push_back(std::move(bytes));
        }
        res.status = 202;
        res.set_content(R"({"queued":true})", "application/json");
      } catch (const std::exception& e) {
        res.status = 400;
        res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
      }
    });

    if (config_.mirror_port == 0) {
      const int port = http_->bind_to_any_port(config_.mirror_host);
      if (port < 0) throw LinkError("cannot bind mirror port");
      mirror_port_ = static_cast<std::uint16_t>(port);
    } else {
      if (!http_->bind_to_port(config_.mirror_host, config_.mirror_port))
        throw LinkError("cannot bind mirror port " + std::to_string(config_.mirror_port) + " (in use?)");
      mirror_port_ = config_.mirror_port;
    }
    http_thread_ = std::thread([this] { http_->listen_after_bind(); });
  }
  udp_thread_ = std::thread([this] { udp_loop(); });
}

LinkService::~LinkService() {
  stop_ = true;
  mirror_cv_.notify_all();
  if (http_) http_->stop();
  if (http_thread_.joinable()) http_thread_.join();
  if (udp_thread_.joinable()) udp_thread_.join();
}

void LinkService::udp_loop() {
  std::vector<std::uint8_t> buf;
  std::uint32_t addr = 0;
  std::uint16_t port = 0;
  while (!stop_) {
    if (!udp_.receive(buf, addr, port, 100)) continue;
    const auto result = decode(buf);
    if (!result.ok()) {
      ++rejects_[static_cast<std::size_t>(result.error)];
      if (config_.log_rejects) std::cerr << "link: rejected datagram (" << to_string(result.error) << ")\n";
      continue;
    }
    {
      std::lock_guard lock(peer_mu_);
      have_peer_ = true;
      peer_addr_ = addr;
      peer_port_ = port;
    }
    std::lock_guard lock(inbound_mu_);
    inbound_.push_back(buf);
  }
}

std::vector<std::vector<std::uint8_t>> LinkService::receive(double) {
  std::lock_guard lock(inbound_mu_);
  return std::exchange(inbound_, {});
}

void LinkService::send(std::vector<std::uint8_t> datagram, double) {
  {
    std::lock_guard lock(peer_mu_);
    if (have_peer_) udp_.send_to(datagram, peer_addr_, peer_port_);
  }
  if (http_) {
    if (const auto d = decode(datagram); d.ok()) broadcast(to_json(*d.frame).dump());
  }
}

void LinkService::publish(const Snapshot& snapshot) {
  if (!http_) return;
  auto json = snapshot_to_json(snapshot).dump();
  std::lock_guard lock(mirror_mu_);
  snapshot_json_ = std::move(json);
}

void LinkService::broadcast(std::string json) {
  {
    std::lock_guard lock(mirror_mu_);
    events_.push_back(std::move(json));
    while (events_.size() > kMirrorBacklog) {
      events_.pop_front();
      ++events_base_;
    }
  }
  mirror_cv_.notify_all();
}

}  // namespace sprayrover
