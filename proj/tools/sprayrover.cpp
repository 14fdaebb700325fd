// sprayrover: validate scenarios, run and replay missions, render reports and
// serve the ground-control endpoints.
//
// Exit codes: 0 success, 1 failure, 2 input file missing, 3 port in use.

#include "sprayrover/link_service.hpp"
#include "sprayrover/report.hpp"
#include "sprayrover/scenario.hpp"
#include "sprayrover/scheduler.hpp"
#include "sprayrover/trace.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace sprayrover;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitMissing = 2;
constexpr int kExitPort = 3;

struct MissingInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string scenario;
  std::string trace;
  std::optional<std::uint64_t> seed;
  double dt = 0.1;
  double max_time = 3600.0;
  std::uint16_t udp_port = 14550;
  std::uint16_t mirror_port = 8080;
  std::optional<double> realtime;
  std::string out = "out";
  std::string format = "human";
  std::string commands;
};

Scenario load(const std::string& path) {
  if (!fs::exists(path)) throw MissingInput("scenario not found: " + path);
  return load_scenario_file(path);
}

TraceLog load_trace(const std::string& path) {
  if (!fs::exists(path)) throw MissingInput("trace not found: " + path);
  return read_trace_file(path);
}

RunConfig make_config(const Options& o, double default_realtime) {
  RunConfig cfg;
  cfg.scenario = load(o.scenario);
  cfg.seed = o.seed;
  cfg.dt_s = o.dt;
  cfg.max_sim_time_s = o.max_time;
  cfg.realtime_factor = o.realtime.value_or(default_realtime);
  if (!o.commands.empty()) {
    if (!fs::exists(o.commands)) throw MissingInput("command script not found: " + o.commands);
    cfg.commands = load_command_script(o.commands);
  }
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_outputs(const Options& o, const MissionReport& report, const TraceLog* trace) {
  const fs::path dir(o.out);
  fs::create_directories(dir);
  if (trace) write_trace_file(dir / "trace.bin", *trace);
  write_text(dir / "report.txt", render_key_value(report));
  write_text(dir / "report.json", render_machine(report));
}

void print_report(const Options& o, const MissionReport& report) {
  std::cout << (o.format == "machine" ? render_machine(report) : render_human(report));
}

int cmd_validate(const Options& o) {
  const Scenario sc = load(o.scenario);
  std::cout << "ok: " << sc.world.obstacles.size() << " obstacles, " << sc.world.sites.size() << " sites, "
            << sc.world.nodes.size() << " nodes, " << sc.mission.waypoints.size() << " waypoints";
  if (!sc.bom.items.empty()) std::cout << ", bom total " << format_money(cost_total(sc.bom));
  std::cout << '\n';
  try {
    const auto route = plan_route(sc.world, sc.mission, sc.world.home);
    std::cout << "planned route " << format_number(polyline_length<double>(route)) << " m\n";
  } catch (const PlanningError& e) {
    std::cout << "warning: " << e.what() << '\n';
  }
  return 0;
}

int cmd_run(const Options& o) {
  const RunResult result = run(make_config(o, 0.0));
  write_outputs(o, result.report, &result.trace);
  print_report(o, result.report);
  return 0;
}

int cmd_replay(const Options& o) {
  const TraceLog trace = load_trace(o.trace);
  const MissionReport report = replay(trace);
  std::cerr << "replayed " << trace.records.size() << " records\n";
  print_report(o, report);
  return 0;
}

int cmd_report(const Options& o) {
  const MissionReport report = replay(load_trace(o.trace));
  write_outputs(o, report, nullptr);
  print_report(o, report);
  return 0;
}

std::atomic<bool> g_interrupted{false};

int cmd_serve(const Options& o) {
  RunConfig cfg = make_config(o, 1.0);
  LinkServiceConfig lc;
  lc.udp_port = o.udp_port;
  lc.mirror_port = o.mirror_port;
  std::unique_ptr<LinkService> link;
  try {
    link = std::make_unique<LinkService>(lc);
  } catch (const LinkError& e) {
    std::cerr << "serve: " << e.what() << '\n';
    return kExitPort;
  }
  std::cerr << "serving: udp " << link->udp_port() << ", mirror http://127.0.0.1:" << link->mirror_port() << '\n';
  std::signal(SIGINT, [](int) { g_interrupted = true; });
  std::signal(SIGTERM, [](int) { g_interrupted = true; });

  Simulation sim(cfg, link.get());
  const auto wall_start = std::chrono::steady_clock::now();
  while (!sim.finished() && !g_interrupted) {
    sim.tick();
    if (cfg.realtime_factor > 0.0)
      std::this_thread::sleep_until(wall_start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                     std::chrono::duration<double>(sim.state().clock_s /
                                                                                   cfg.realtime_factor)));
  }
  if (!sim.finished()) {
    std::cerr << "serve: interrupted at t=" << format_number(sim.state().clock_s) << " s\n";
    fs::create_directories(o.out);
    write_trace_file(fs::path(o.out) / "trace.bin", sim.trace());
    return kExitFailure;
  }
  const MissionReport report = sim.report();
  write_outputs(o, report, &sim.trace());
  print_report(o, report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mosquito breeding-site rover simulator and ground-control link"};
  app.require_subcommand(1);
  Options o;

  auto add_format = [&](CLI::App* sub) {
    sub->add_option("--format", o.format, "human or machine")->check(CLI::IsMember({"human", "machine"}));
  };
  auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("scenario", o.scenario, "scenario file")->required();
    sub->add_option("--seed", o.seed, "override the scenario seed");
    sub->add_option("--dt", o.dt, "tick length in seconds")->check(CLI::PositiveNumber);
    sub->add_option("--max-time", o.max_time, "simulated time limit in seconds")->check(CLI::PositiveNumber);
    sub->add_option("--realtime", o.realtime, "wall-clock pacing factor (0 = unpaced)")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", o.out, "output directory for report and trace");
    sub->add_option("--commands", o.commands, "scripted ground commands (JSON lines)");
    add_format(sub);
  };

  auto* validate = app.add_subcommand("validate", "parse and check a scenario");
  validate->add_option("scenario", o.scenario, "scenario file")->required();

  auto* run_cmd = app.add_subcommand("run", "simulate a mission");
  add_run_flags(run_cmd);

  auto* replay_cmd = app.add_subcommand("replay", "recompute the report from a trace");
  replay_cmd->add_option("trace", o.trace, "trace file")->required();
  add_format(replay_cmd);

  auto* report_cmd = app.add_subcommand("report", "render the report of a trace");
  report_cmd->add_option("trace", o.trace, "trace file")->required();
  report_cmd->add_option("--out", o.out, "output directory for report files");
  add_format(report_cmd);

  auto* serve_cmd = app.add_subcommand("serve", "run live with the UDP link and the web mirror");
  add_run_flags(serve_cmd);
  serve_cmd->add_option("--udp-port", o.udp_port, "UDP port for the binary link");
  serve_cmd->add_option("--mirror-port", o.mirror_port, "HTTP port for the structured mirror");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) return cmd_validate(o);
    if (*run_cmd) return cmd_run(o);
    if (*replay_cmd) return cmd_replay(o);
    if (*report_cmd) return cmd_report(o);
    if (*serve_cmd) return cmd_serve(o);
  } catch (const MissingInput& e) {
    std::cerr << e.what() << '\n';
    return kExitMissing;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
