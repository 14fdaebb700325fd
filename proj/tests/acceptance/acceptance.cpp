// Acceptance gate: one PASS/FAIL line per headline criterion.
//
// A criterion listed in kKnownUnattainable still prints FAIL with its
// measured value; the exit status counts only the other failures.

#include "../harness.hpp"

#include "sprayrover/detection.hpp"
#include "sprayrover/metrics.hpp"
#include "sprayrover/report.hpp"
#include "sprayrover/scheduler.hpp"
#include "sprayrover/telemetry.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace sprayrover;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

// The printed hardware table total disagrees with the sum of its own lines.
const std::set<std::string> kKnownUnattainable{"cost_ledger"};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// ---------------------------------------------------------------------------

Verdict tcrr_reproduction() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run(harness::config_for("tcrr.scn"));
  const double wall = seconds_since(t0);
  const auto& rep = r.report;
  const bool ok = rep.sites_pre == 5 && rep.sites_treated.size() == 4 && rep.tcrr_percent &&
                  *rep.tcrr_percent == 80.0 && wall < 10.0;
  return {ok, "tcrr=" + (rep.tcrr_percent ? fmt(*rep.tcrr_percent, 1) : std::string("n/a")) + " treated " +
                  std::to_string(rep.sites_treated.size()) + "/" + std::to_string(rep.sites_pre) +
                  " wall=" + fmt(wall) + "s"};
}

Verdict coverage_reproduction() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run(harness::config_for("coverage.scn"));
  const double wall = seconds_since(t0);
  const auto& rep = r.report;
  const bool ok = rep.nodes_total == 8 && rep.nodes_reached == 6 && rep.area_coverage_percent &&
                  *rep.area_coverage_percent == 75.0 && wall < 10.0;
  return {ok, "coverage=" + (rep.area_coverage_percent ? fmt(*rep.area_coverage_percent, 1) : std::string("n/a")) +
                  " reached " + std::to_string(rep.nodes_reached) + "/" + std::to_string(rep.nodes_total) +
                  " wall=" + fmt(wall) + "s"};
}

Verdict timing() {
  const auto r = run(harness::config_for("timing.scn"));
  const bool ok = r.report.final_state == FsmState::Done && r.report.mission_time_s <= 583.0;
  return {ok, "mission_time_s=" + fmt(r.report.mission_time_s, 1) + " (bound 583) final=" +
                  std::string(to_string(r.report.final_state))};
}

Verdict cost_ledger() {
  const Scenario s = harness::scenario("timing.scn");
  // Line totals exactly as printed in the hardware table, in cents.
  const std::vector<std::int64_t> printed{4362, 2310, 564, 1026, 1966, 427, 256, 11112, 855, 684, 8547, 385, 5983, 2564};
  int matching = 0;
  for (std::size_t i = 0; i < s.bom.items.size() && i < printed.size(); ++i)
    matching += line_total(s.bom.items[i]).cents == printed[i];
  const bool lines_ok = s.bom.items.size() == printed.size() && matching == static_cast<int>(printed.size());
  const Money total = cost_total(s.bom);
  const bool total_ok = total.cents == 40939;
  std::string detail = "lines " + std::to_string(matching) + "/" + std::to_string(printed.size()) +
                       " match (motor line " + format_money(line_total(s.bom.items.at(0))) + "); total " +
                       format_money(total) + (total_ok ? " == 409.39" : " != 409.39");
  if (!total_ok)
    detail += " [known-unattainable: the printed line items sum to 410.41, so no faithful fixture totals 409.39]";
  return {lines_ok && total_ok, detail};
}

Verdict metrics_oracle() {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> pos(0, 300), size(5, 50), conf(0, 1), noise(-5, 5);
  std::uniform_int_distribution<int> coin(0, 3);
  double worst = 0.0;
  for (int corpus = 0; corpus < 1000; ++corpus) {
    const int frames = 1 + corpus % 4;
    const int budget = 1 + static_cast<int>(rng() % 20);   // detections across the corpus
    std::vector<FrameSample> c(static_cast<std::size_t>(frames));
    for (auto& f : c)
      for (int g = 1 + static_cast<int>(rng() % 4); g > 0; --g) {
        const double x = pos(rng), y = pos(rng);
        f.ground_truth.push_back({ObjectClass(rng() % 2), {x, y, x + size(rng), y + size(rng)}, std::nullopt});
      }
    for (int d = 0; d < budget; ++d) {
      auto& f = c[rng() % c.size()];
      double cf = conf(rng);
      if (coin(rng) == 0) cf = std::round(cf * 5) / 5;
      Detection det;
      det.confidence = cf;
      if (coin(rng) != 0) {
        const auto& g = f.ground_truth[rng() % f.ground_truth.size()];
        det.class_id = coin(rng) == 0 ? ObjectClass(1 - int(g.class_id)) : g.class_id;
        det.box = {g.box.x_min + noise(rng), g.box.y_min + noise(rng), g.box.x_max + noise(rng),
                   g.box.y_max + noise(rng)};
      } else {
        const double x = pos(rng), y = pos(rng);
        det.class_id = ObjectClass(rng() % 2);
        det.box = {x, y, x + size(rng), y + size(rng)};
      }
      f.detections.push_back(det);
    }
    for (int k = 0; k < kNumClasses; ++k) {
      const auto cls = ObjectClass(k);
      bool has_gt = false;
      for (const auto& f : c)
        for (const auto& g : f.ground_truth) has_gt |= g.class_id == cls;
      if (!has_gt) continue;
      worst = std::max(worst, std::abs(average_precision(c, cls, 0.5) - oracle::brute_force_ap(c, cls)));
    }
  }

  // Hand counts.
  bool hand = precision(11, 2) == 11.0 / 13.0 && recall(16, 15) == 16.0 / 31.0;
  {
    const std::vector<GroundTruthBox> g{{ObjectClass::BreedingSite, {0, 0, 10, 10}, std::nullopt}};
    const std::vector<Detection> d{{ObjectClass::BreedingSite, 0.9, {0, 0, 10, 9}, std::nullopt},
                                   {ObjectClass::BreedingSite, 0.8, {0, 0, 10, 8}, std::nullopt}};
    const auto m = match_detections(d, g, 0.5);
    hand = hand && m.tp == 1 && m.fp == 1 && m.fn == 0;
  }
  {
    const std::vector<GroundTruthBox> g{{ObjectClass::BreedingSite, {0, 0, 10, 10}, std::nullopt},
                                        {ObjectClass::BreedingSite, {100, 100, 110, 110}, std::nullopt}};
    const std::vector<Detection> d{{ObjectClass::BreedingSite, 0.9, {0, 0, 10, 10}, std::nullopt},
                                   {ObjectClass::BreedingSite, 0.8, {50, 50, 60, 60}, std::nullopt},
                                   {ObjectClass::BreedingSite, 0.7, {100, 100, 110, 110}, std::nullopt}};
    hand = hand && std::abs(average_precision(d, g, 0.5) - 5.0 / 6.0) < 1e-12;
  }
  return {worst <= 1e-9 && hand, "1000 corpora, max |AP - oracle| = " + fmt(worst, 12) +
                                     (hand ? "; worked examples exact" : "; worked examples MISMATCH")};
}

Verdict detector_calibration() {
  const Scenario s = harness::scenario("table1_detector.scn");
  Rng rng = fork_stream(s.seed, streams::kDetector);
  const auto corpus = synthesize_corpus(s.detector, 10000, rng);
  const CorpusStats st = evaluate_corpus(corpus);
  const double p = 100 * st.precision, r = 100 * st.recall, m = 100 * st.map50;
  const bool ok = std::abs(p - 84.7) <= 2.0 && std::abs(r - 51.6) <= 2.0 && std::abs(m - 61.7) <= 3.0;
  return {ok, "precision " + fmt(p) + " (84.7+-2), recall " + fmt(r) + " (51.6+-2), mAP@50 " + fmt(m) + " (61.7+-3)"};
}

Verdict protocol_robustness() {
  // Fuzzed datagrams: half raw noise, half mutated valid frames.
  std::mt19937_64 rng(777);
  auto f = [&] { return std::uniform_real_distribution<float>(-1e5f, 1e5f)(rng); };
  auto u32 = [&] { return static_cast<std::uint32_t>(rng()); };
  auto any = [&](int k) -> Message {
    switch (k) {
      case 0: return msg::Heartbeat{RoverMode(rng() % 6), u32()};
      case 1: return msg::Telemetry{u32(), f(), f(), f(), f(), f(), FsmState(rng() % 7), RoverMode(rng() % 6), f(), f()};
      case 2: return msg::DetectionEvent{ObjectClass(rng() % 2), f(), f(), f(), f(), f(), std::int32_t(u32())};
      case 3: {
        msg::SprayEvent e{f(), {}};
        for (auto n = rng() % 30; n > 0; --n) e.site_ids.push_back(u32());
        return e;
      }
      case 4: return msg::NodeReached{u32(), u32()};
      case 5: return msg::CommandMode{RoverMode(rng() % 6)};
      case 6: return msg::CommandManual{f(), f(), (rng() & 1) != 0};
      case 7: {
        msg::MissionUpload m;
        for (auto n = rng() % 100; n > 0; --n) m.waypoints.push_back(u32());
        return m;
      }
      default: return msg::Ack{u32(), AckStatus(rng() % 3)};
    }
  };

  std::uint64_t aborts = 0, accepted = 0;
  std::vector<std::uint8_t> b;
  for (int i = 0; i < 1'000'000; ++i) {
    if (i % 2 == 0) {
      b.resize(rng() % 80);
      for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    } else {
      b = encode(any(i % 9), u32());
      for (int e = 1 + static_cast<int>(rng() % 3); e > 0; --e) b[rng() % b.size()] ^= static_cast<std::uint8_t>(1 + rng() % 255);
      if (rng() % 5 == 0) b.resize(rng() % (b.size() + 4));
    }
    try {
      accepted += decode(b).ok();
    } catch (...) {
      ++aborts;
    }
  }

  int round_trip_failures = 0;
  for (int i = 0; i < 90000; ++i) {
    const Message m = any(i % 9);
    const std::uint32_t seq = u32();
    const auto r = decode(encode(m, seq));
    if (!r.ok() || r.frame->seq != seq || !(r.frame->message == m)) ++round_trip_failures;
  }

  const auto lossy = harness::run_lossy(harness::scenario("tcrr.scn"), 42, 0.2, 3);
  const bool mission_ok = lossy.finished && lossy.report.final_state == FsmState::Done && lossy.reordered > 0;

  const bool ok = aborts == 0 && round_trip_failures == 0 && mission_ok;
  return {ok, "1000000 fuzzed datagrams, " + std::to_string(aborts) + " aborts (" + std::to_string(accepted) +
                  " accepted); 90000 round trips, " + std::to_string(round_trip_failures) +
                  " failures; 20% loss mission " + std::string(to_string(lossy.report.final_state)) + " (" +
                  std::to_string(lossy.dropped) + " dropped, " + std::to_string(lossy.reordered) + " reordered, " +
                  std::to_string(lossy.retries) + " retries, tcrr " +
                  (lossy.report.tcrr_percent ? fmt(*lossy.report.tcrr_percent, 1) : std::string("n/a")) + ")"};
}

Verdict determinism() {
  std::string detail;
  bool ok = true;
  for (const char* name : {"tcrr.scn", "coverage.scn", "timing.scn"}) {
    RunConfig c = harness::config_for(name);
    c.commands = harness::manual_commands({});
    const auto a = run(c);
    const auto b = run(c);
    const bool same = serialize_trace(a.trace) == serialize_trace(b.trace) &&
                      render_machine(a.report) == render_machine(b.report) &&
                      render_human(a.report) == render_human(b.report) &&
                      render_key_value(a.report) == render_key_value(b.report);
    ok = ok && same;
    detail += std::string(detail.empty() ? "" : ", ") + name + (same ? " identical" : " DIFFERS");
  }
  return {ok, detail};
}

Verdict autonomy_invariants() {
  // Obstacle-free patrol: every node, then RTL, then DONE at home.
  RunConfig patrol;
  patrol.scenario = harness::open_patrol();
  const auto r = run(patrol);
  bool saw_rtl = false, rtl_before_done = false;
  for (const auto& rec : r.trace.records)
    for (const auto& e : rec.events) {
      if (e.kind == EventKind::FsmChanged && FsmState(e.id) == FsmState::Rtl) saw_rtl = true;
      if (e.kind == EventKind::FsmChanged && FsmState(e.id) == FsmState::Done) rtl_before_done = saw_rtl;
    }
  const auto& last = r.trace.records.back().state;
  const double home_dist = (last.pose.position - patrol.scenario.mission.home).norm();
  const bool patrol_ok = r.report.final_state == FsmState::Done && r.report.area_coverage_percent &&
                         *r.report.area_coverage_percent == 100.0 && rtl_before_done &&
                         home_dist <= patrol.scenario.mission.home_radius_m;

  // Manual override and dead-man stop.
  const harness::ManualScript script;
  RunConfig manual = harness::config_for("tcrr.scn");
  manual.commands = harness::manual_commands(script);
  const auto m = run(manual);
  const ControlCommand cmd{double(script.linear), double(script.angular), false};
  const auto* first = harness::record_at(m.trace, script.t_manual);
  const bool next_tick = first && first->state.mode == RoverMode::Manual && first->command == cmd;
  bool held = true, stopped = true;
  for (double t = script.t_last; t <= script.t_last + 1.0 + 1e-9; t += 0.1) {
    const auto* rec = harness::record_at(m.trace, t);
    held = held && rec && rec->command == cmd;
  }
  for (double t = script.t_last + 1.1; t < script.t_resume - 1e-9; t += 0.1) {
    const auto* rec = harness::record_at(m.trace, t);
    stopped = stopped && rec && rec->command == ControlCommand{} && rec->state.mode == RoverMode::Manual;
  }

  const bool ok = patrol_ok && next_tick && held && stopped;
  return {ok, "patrol coverage " +
                  (r.report.area_coverage_percent ? fmt(*r.report.area_coverage_percent, 1) : std::string("n/a")) +
                  "%, RTL->DONE " + (rtl_before_done ? "yes" : "no") + ", home distance " + fmt(home_dist, 3) +
                  " m (radius " + fmt(patrol.scenario.mission.home_radius_m, 1) + "); override next tick " +
                  (next_tick ? "yes" : "no") + "; manual held 1.0 s " + (held ? "yes" : "no") +
                  ", stopped after " + (stopped ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"tcrr_reproduction", tcrr_reproduction},
      {"coverage_reproduction", coverage_reproduction},
      {"timing", timing},
      {"cost_ledger", cost_ledger},
      {"metrics_oracle_equivalence", metrics_oracle},
      {"detector_calibration", detector_calibration},
      {"protocol_robustness", protocol_robustness},
      {"determinism", determinism},
      {"autonomy_invariants", autonomy_invariants},
  };
  int unexpected = 0, known = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << std::endl;
    if (!v.pass) (kKnownUnattainable.count(name) ? known : unexpected) += 1;
  }
  std::cout << "summary: " << criteria.size() - unexpected - known << " passed, " << unexpected
            << " failed, " << known << " known-unattainable" << std::endl;
  return unexpected == 0 ? 0 : 1;
}
