#include "sprayrover/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace sprayrover {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::MissionStarted: return "MISSION_STARTED";
    case EventKind::FsmChanged: return "FSM_CHANGED";
    case EventKind::ModeChanged: return "MODE_CHANGED";
    case EventKind::NodeReached: return "NODE_REACHED";
    case EventKind::NodeSkipped: return "NODE_SKIPPED";
    case EventKind::SiteDetected: return "SITE_DETECTED";
    case EventKind::SprayFired: return "SPRAY_FIRED";
    case EventKind::SiteTreated: return "SITE_TREATED";
    case EventKind::SprayRejected: return "SPRAY_REJECTED";
    case EventKind::ManualIgnored: return "MANUAL_IGNORED";
    case EventKind::MissionUploaded: return "MISSION_UPLOADED";
    case EventKind::CommandRejected: return "COMMAND_REJECTED";
    case EventKind::Fault: return "FAULT";
    case EventKind::Done: return "DONE";
    case EventKind::Collision: return "COLLISION";
  }
  return "?";
}

namespace {

std::string_view fault_name(FaultReason r) {
  switch (r) {
    case FaultReason::Battery: return "battery";
    case FaultReason::Timeout: return "timeout";
    case FaultReason::HomeUnreachable: return "home_unreachable";
  }
  return "?";
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

double swept_area_percent(const TraceLog& trace, const WorldMap& world, double radius, double cell) {
  const Vec2d lo = world.bounds.lo;
  const Vec2d size = world.bounds.hi - world.bounds.lo;
  const auto nx = static_cast<long>(std::ceil(size.x() / cell));
  const auto ny = static_cast<long>(std::ceil(size.y() / cell));
  if (nx <= 0 || ny <= 0) return 0.0;
  std::vector<bool> hit(static_cast<std::size_t>(nx * ny), false);
  const long reach = static_cast<long>(std::ceil(radius / cell)) + 1;
  for (const auto& r : trace.records) {
    const Vec2d p = r.state.pose.position;
    const long cx = static_cast<long>((p.x() - lo.x()) / cell);
    const long cy = static_cast<long>((p.y() - lo.y()) / cell);
    for (long iy = std::max(0L, cy - reach); iy <= std::min(ny - 1, cy + reach); ++iy)
      for (long ix = std::max(0L, cx - reach); ix <= std::min(nx - 1, cx + reach); ++ix) {
        const Vec2d c = lo + Vec2d((ix + 0.5) * cell, (iy + 0.5) * cell);
        if ((c - p).squaredNorm() <= radius * radius) hit[static_cast<std::size_t>(iy * nx + ix)] = true;
      }
  }
  const auto covered = std::count(hit.begin(), hit.end(), true);
  return 100.0 * static_cast<double>(covered) / static_cast<double>(hit.size());
}

MissionReport mission_report(const MissionStatus& status, const Scenario& scenario, std::size_t nodes_total,
                             const TraceLog& trace) {
  if (!status.terminal()) throw std::logic_error("mission_report: mission still running");
  MissionReport r;
  r.seed = trace.seed;
  r.dt_s = trace.dt_s;
  r.final_state = status.fsm_state;

  r.sites_pre = static_cast<std::uint32_t>(scenario.world.sites.size());
  for (SiteId id : status.sites_treated)
    if (scenario.world.find_site(id)) r.sites_treated.push_back(id);
  r.sites_post = r.sites_pre - static_cast<std::uint32_t>(r.sites_treated.size());
  if (r.sites_pre > 0) r.tcrr_percent = tcrr(r.sites_pre, r.sites_post);

  r.nodes_visited = status.nodes_reached;
  r.nodes_skipped = status.nodes_skipped;
  r.nodes_reached = static_cast<std::uint32_t>(status.nodes_reached.size());
  r.nodes_total = static_cast<std::uint32_t>(nodes_total);
  if (nodes_total > 0) r.area_coverage_percent = area_coverage(r.nodes_reached, r.nodes_total);

  if (status.end_clock_s)
    r.mission_time_s = *status.end_clock_s - status.start_clock_s.value_or(*status.end_clock_s);

  if (!trace.records.empty()) {
    const RoverState& last = trace.records.back().state;
    r.battery_used_mAh = scenario.rover.battery_capacity_mAh - last.battery_mAh;
    r.spray_used_ml = scenario.rover.reservoir_capacity_ml - last.reservoir_ml;
  }
  r.swept_area_percent = swept_area_percent(trace, scenario.world, scenario.rover.spray_range_m);

  for (const auto& rec : trace.records)
    for (const auto& e : rec.events) {
      if (e.kind == EventKind::SiteDetected) {
        ++r.detections_logged;
        continue;
      }
      if (e.kind == EventKind::Fault) r.fault = FaultReason(e.id);
      r.events.push_back({rec.clock_s, e});
    }

  if (!scenario.bom.items.empty()) {
    for (const auto& item : scenario.bom.items)
      r.bom.push_back({item.name, item.unit_price, item.quantity, line_total(item)});
    r.bom_total = cost_total(scenario.bom);
  }
  return r;
}

std::string render_human(const MissionReport& r) {
  std::ostringstream out;
  out << "Mission report (seed " << r.seed << ", dt " << format_number(r.dt_s) << " s)\n";
  out << "AP interpolation: all-point\n";
  out << "Final state " << to_string(r.final_state);
  if (r.fault) out << " (" << fault_name(*r.fault) << ")";
  out << "\n\n";
  if (r.tcrr_percent)
    out << "TCRR " << fixed(*r.tcrr_percent, 1) << "%  (" << r.sites_pre - r.sites_post << " of " << r.sites_pre
        << " sites treated)\n";
  else
    out << "TCRR n/a  (no breeding sites)\n";
  if (r.area_coverage_percent)
    out << "Coverage " << fixed(*r.area_coverage_percent, 1) << "%  (" << r.nodes_reached << " of " << r.nodes_total
        << " checkpoints)\n";
  else
    out << "Coverage n/a  (no checkpoints)\n";
  out << "Mission time " << fixed(r.mission_time_s, 1) << " s\n";
  out << "Battery used " << fixed(r.battery_used_mAh, 1) << " mAh\n";
  out << "Spray used " << fixed(r.spray_used_ml, 1) << " ml\n";
  out << "Swept area " << fixed(r.swept_area_percent, 1) << "% (diagnostic)\n";

  if (r.bom_total) {
    std::size_t width = 4;
    for (const auto& l : r.bom) width = std::max(width, l.name.size());
    out << "\nBill of materials\n";
    for (const auto& l : r.bom) {
      out << l.name << std::string(width - l.name.size() + 2, ' ') << l.quantity << " * " << format_price(l.unit_price)
          << " = " << format_money(l.total) << '\n';
    }
    out << "Total " << format_money(*r.bom_total) << '\n';
  }
  return out.str();
}

std::string render_key_value(const MissionReport& r) {
  std::ostringstream out;
  out << "ap_interpolation=all-point\n";
  out << "seed=" << r.seed << '\n';
  out << "dt_s=" << format_number(r.dt_s) << '\n';
  out << "final_state=" << to_string(r.final_state) << '\n';
  out << "fault=" << (r.fault ? fault_name(*r.fault) : "none") << '\n';
  out << "tcrr_percent=" << (r.tcrr_percent ? fixed(*r.tcrr_percent, 1) : "n/a") << '\n';
  out << "area_coverage_percent=" << (r.area_coverage_percent ? fixed(*r.area_coverage_percent, 1) : "n/a") << '\n';
  out << "mission_time_s=" << fixed(r.mission_time_s, 1) << '\n';
  out << "battery_used_mAh=" << fixed(r.battery_used_mAh, 3) << '\n';
  out << "spray_used_ml=" << fixed(r.spray_used_ml, 1) << '\n';
  out << "sites_pre=" << r.sites_pre << '\n';
  out << "sites_post=" << r.sites_post << '\n';
  out << "nodes_reached=" << r.nodes_reached << '\n';
  out << "nodes_total=" << r.nodes_total << '\n';
  out << "swept_area_percent=" << fixed(r.swept_area_percent, 2) << '\n';
  out << "detections_logged=" << r.detections_logged << '\n';
  if (r.bom_total) out << "bom_total_usd=" << format_money(*r.bom_total) << '\n';
  for (const auto& e : r.events)
    out << "event=" << fixed(e.clock_s, 1) << ' ' << to_string(e.event.kind) << ' ' << e.event.id << ' '
        << format_number(e.event.value) << '\n';
  return out.str();
}

nlohmann::json to_json(const MissionReport& r) {
  using nlohmann::json;
  json j;
  j["format"] = "sprayrover-report/1";
  j["ap_interpolation"] = "all-point";
  j["seed"] = r.seed;
  j["dt_s"] = r.dt_s;
  j["final_state"] = std::string(to_string(r.final_state));
  j["fault"] = r.fault ? json(std::string(fault_name(*r.fault))) : json(nullptr);
  j["tcrr_percent"] = r.tcrr_percent ? json(*r.tcrr_percent) : json(nullptr);
  j["area_coverage_percent"] = r.area_coverage_percent ? json(*r.area_coverage_percent) : json(nullptr);
  j["mission_time_s"] = r.mission_time_s;
  j["battery_used_mAh"] = r.battery_used_mAh;
  j["spray_used_ml"] = r.spray_used_ml;
  j["sites_pre"] = r.sites_pre;
  j["sites_post"] = r.sites_post;
  j["sites_treated"] = r.sites_treated;
  j["nodes_reached"] = r.nodes_reached;
  j["nodes_total"] = r.nodes_total;
  j["nodes_visited"] = r.nodes_visited;
  j["nodes_skipped"] = r.nodes_skipped;
  j["swept_area_percent"] = r.swept_area_percent;
  j["detections_logged"] = r.detections_logged;
  if (r.bom_total) {
    json lines = json::array();
    for (const auto& l : r.bom)
      lines.push_back({{"name", l.name},
                       {"unit_price", format_price(l.unit_price)},
                       {"quantity", l.quantity},
                       {"total", format_money(l.total)}});
    j["bom"] = {{"lines", lines}, {"total", format_money(*r.bom_total)}};
  } else {
    j["bom"] = nullptr;
  }
  json events = json::array();
  for (const auto& e : r.events)
    events.push_back({{"clock_s", e.clock_s},
                      {"kind", std::string(to_string(e.event.kind))},
                      {"id", e.event.id},
                      {"value", e.event.value}});
  j["events"] = std::move(events);
  return j;
}

std::string render_machine(const MissionReport& r) { return to_json(r).dump(2) + "\n"; }

}  // namespace sprayrover
