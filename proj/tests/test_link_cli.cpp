#include "harness.hpp"

#include "sprayrover/link_service.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

using namespace sprayrover;
namespace fs = std::filesystem;

namespace {

LinkServiceConfig ephemeral(bool mirror = true) {
  LinkServiceConfig c;
  c.udp_port = 0;
  c.mirror_port = 0;
  c.enable_mirror = mirror;
  c.log_rejects = false;
  return c;
}

// Polls until the service has queued `n` inbound datagrams or the deadline passes.
template <typename Pred>
bool wait_for(Pred pred, int ms = 2000) {
  const auto until = std::chrono::steady_clock::now() + std::chrono::milliseconds(ms);
  while (std::chrono::steady_clock::now() < until) {
    if (pred()) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  return pred();
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(SPRAYROVER_CLI) + " " + args).c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("sprayrover_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Forwards to a LinkService but buffers received datagrams so a test can
// wait for them before ticking.
class Buffered : public Link {
 public:
  explicit Buffered(LinkService& s) : s_(s) {}
  std::vector<std::vector<std::uint8_t>> receive(double) override { return std::exchange(held_, {}); }
  void send(std::vector<std::uint8_t> d, double c) override { s_.send(std::move(d), c); }
  void publish(const Snapshot& snap) override { s_.publish(snap); }
  std::size_t pull() {
    for (auto& d : s_.receive(0)) held_.push_back(std::move(d));
    return held_.size();
  }

 private:
  LinkService& s_;
  std::vector<std::vector<std::uint8_t>> held_;
};

}  // namespace

TEST(LinkService, ManualOverUdp) {
  LinkService service(ephemeral(false));
  Buffered link(service);
  UdpSocket gcs(0, true);

  Simulation sim(harness::config_for("tcrr.scn"), &link);
  for (int i = 0; i < 10; ++i) sim.tick();
  EXPECT_EQ(sim.state().mode, RoverMode::Auto);

  gcs.send_to_loopback(encode(msg::CommandMode{RoverMode::Manual}, 1), service.udp_port());
  gcs.send_to_loopback(encode(msg::CommandManual{0.4f, 0.0f, false}, 2), service.udp_port());
  ASSERT_TRUE(wait_for([&] { return link.pull() >= 2; }));
  sim.tick();
  EXPECT_EQ(sim.state().mode, RoverMode::Manual);
  EXPECT_EQ(sim.trace().records.back().command, (ControlCommand{0.4f, 0.0f, false}));

  // The ACK for the mode command comes back to the sender.
  bool acked = false;
  std::vector<std::uint8_t> buf;
  std::uint32_t addr;
  std::uint16_t port;
  const auto until = std::chrono::steady_clock::now() + std::chrono::seconds(2);
  while (!acked && std::chrono::steady_clock::now() < until) {
    if (!gcs.receive(buf, addr, port, 100)) continue;
    const auto r = decode(buf);
    if (!r.ok()) continue;
    if (const auto* a = std::get_if<msg::Ack>(&r.frame->message))
      acked = a->acked_seq == 1 && a->status == AckStatus::Ok;
  }
  EXPECT_TRUE(acked);
}

TEST(LinkService, CorruptDatagramsCounted) {
  LinkService service(ephemeral(false));
  UdpSocket gcs(0, true);
  auto frame = encode(msg::CommandMode{RoverMode::Manual}, 1);
  frame[12] ^= 0x01;
  gcs.send_to_loopback(frame, service.udp_port());
  const std::vector<std::uint8_t> junk{1, 2, 3};
  gcs.send_to_loopback(junk, service.udp_port());
  EXPECT_TRUE(wait_for([&] { return service.rejected(DecodeError::BadCrc) == 1; }));
  EXPECT_TRUE(wait_for([&] { return service.rejected(DecodeError::BadMagic) + service.rejected(DecodeError::BadLength) == 1; }));
  EXPECT_TRUE(service.receive(0).empty());
}

TEST(LinkService, SecondInstanceOnSamePortFails) {
  LinkService first(ephemeral(false));
  LinkServiceConfig c = ephemeral(false);
  c.udp_port = first.udp_port();
  EXPECT_THROW(LinkService second(c), LinkError);
}

TEST(LinkService, MirrorSnapshotAndCommand) {
  LinkService service(ephemeral(true));
  Simulation sim(harness::config_for("tcrr.scn"), &service);
  for (int i = 0; i < 5; ++i) sim.tick();

  httplib::Client client("127.0.0.1", service.mirror_port());
  const auto snap = client.Get("/snapshot");
  ASSERT_TRUE(snap);
  EXPECT_EQ(snap->status, 200);
  const auto j = nlohmann::json::parse(snap->body);
  EXPECT_EQ(j.at("mode"), "AUTO");
  EXPECT_NEAR(j.at("clock_s").get<double>(), 0.5, 1e-9);

  const auto ok = client.Post("/command", R"({"type":"COMMAND_MODE","seq":1,"mode":"MANUAL"})", "application/json");
  ASSERT_TRUE(ok);
  EXPECT_EQ(ok->status, 202);
  const auto bad = client.Post("/command", R"({"type":"HEARTBEAT","seq":1,"mode":"AUTO","clock_ms":0})", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  const auto garbage = client.Post("/command", "{", "application/json");
  ASSERT_TRUE(garbage);
  EXPECT_EQ(garbage->status, 400);

  sim.tick();
  EXPECT_EQ(sim.state().mode, RoverMode::Manual);
}

// ---------------------------------------------------------------------------
// CLI

TEST(Cli, MissingScenarioExitCode) { EXPECT_EQ(run_cli("run missing.scn 2>/dev/null"), 2); }

TEST(Cli, MissingTraceExitCode) { EXPECT_EQ(run_cli("replay /nonexistent/trace.bin 2>/dev/null"), 2); }

TEST(Cli, ValidateScenario) {
  EXPECT_EQ(run_cli("validate " + oracle::scenario_path("tcrr.scn").string() + " >/dev/null"), 0);
}

TEST(Cli, RunThenReportMatches) {
  const auto dir = scratch("run");
  const auto again = scratch("report");
  ASSERT_EQ(run_cli("run " + oracle::scenario_path("coverage.scn").string() + " --seed 42 --format machine --out " +
                    dir.string() + " >" + (dir / "stdout.json").string()),
            0);
  const auto printed = nlohmann::json::parse(slurp(dir / "stdout.json"));
  EXPECT_EQ(printed.at("area_coverage_percent").get<double>(), 75.0);
  EXPECT_EQ(slurp(dir / "stdout.json"), slurp(dir / "report.json"));
  ASSERT_EQ(run_cli("report " + (dir / "trace.bin").string() + " --out " + again.string() + " >/dev/null"), 0);
  EXPECT_EQ(slurp(dir / "report.json"), slurp(again / "report.json"));
  EXPECT_EQ(slurp(dir / "report.txt"), slurp(again / "report.txt"));
}

TEST(Cli, TimingReportShowsBom) {
  const auto dir = scratch("timing");
  ASSERT_EQ(run_cli("run " + oracle::scenario_path("timing.scn").string() + " --out " + dir.string() + " >" +
                    (dir / "out.txt").string()),
            0);
  const std::string text = slurp(dir / "out.txt");
  EXPECT_NE(text.find("Total 410.41"), std::string::npos) << text;
}

TEST(Cli, ServeWithoutClientRunsToDone) {
  const auto dir = scratch("serve");
  ASSERT_EQ(run_cli("serve " + oracle::scenario_path("tcrr.scn").string() +
                    " --realtime 0 --udp-port 0 --mirror-port 0 --format machine --out " + dir.string() + " >" +
                    (dir / "out.json").string() + " 2>/dev/null"),
            0);
  const auto j = nlohmann::json::parse(slurp(dir / "out.json"));
  EXPECT_EQ(j.at("final_state"), "DONE");
  EXPECT_EQ(j.at("tcrr_percent").get<double>(), 80.0);
}

TEST(Cli, ServeOnBusyPortExits3) {
  LinkService holder(ephemeral(false));
  const auto dir = scratch("busy");
  EXPECT_EQ(run_cli("serve " + oracle::scenario_path("tcrr.scn").string() + " --realtime 0 --udp-port " +
                    std::to_string(holder.udp_port()) + " --mirror-port 0 --out " + dir.string() + " 2>/dev/null"),
            3);
}

TEST(Cli, ScriptedManualShowsInTrace) {
  const auto dir = scratch("script");
  {
    std::ofstream s(dir / "cmds.jsonl");
    s << R"({"at": 3.0, "type": "COMMAND_MODE", "seq": 1, "mode": "MANUAL"})" << '\n';
    s << R"({"at": 3.0, "type": "COMMAND_MANUAL", "seq": 2, "linear": 0.0, "angular": 0.5, "spray": false})" << '\n';
  }
  ASSERT_EQ(run_cli("run " + oracle::scenario_path("tcrr.scn").string() + " --max-time 10 --commands " +
                    (dir / "cmds.jsonl").string() + " --out " + dir.string() + " >/dev/null"),
            0);
  const TraceLog t = read_trace_file(dir / "trace.bin");
  const auto* rec = harness::record_at(t, 3.0);
  ASSERT_TRUE(rec);
  EXPECT_EQ(rec->state.mode, RoverMode::Manual);
  EXPECT_EQ(rec->command.angular, 0.5);
}
