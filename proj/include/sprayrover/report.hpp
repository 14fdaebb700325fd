// Mission report: the headline quantities of a finished run plus renderers
// for the operator table, the key=value text and the machine JSON file.
#pragma once

#include "sprayrover/autonomy.hpp"
#include "sprayrover/events.hpp"
#include "sprayrover/metrics.hpp"
#include "sprayrover/scenario.hpp"
#include "sprayrover/trace.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sprayrover {

struct TimedEvent {
  double clock_s = 0.0;
  Event event;
  bool operator==(const TimedEvent&) const = default;
};

struct CostLine {
  std::string name;
  UnitPrice unit_price;
  std::int64_t quantity = 0;
  Money total;
  bool operator==(const CostLine&) const = default;
};

struct MissionReport {
  std::uint64_t seed = 0;
  double dt_s = 0.1;
  FsmState final_state = FsmState::Idle;
  std::optional<FaultReason> fault;

  std::optional<double> tcrr_percent;            // absent without breeding sites
  std::optional<double> area_coverage_percent;   // absent without checkpoints
  double mission_time_s = 0.0;
  double battery_used_mAh = 0.0;
  double spray_used_ml = 0.0;
  std::uint32_t sites_pre = 0;
  std::uint32_t sites_post = 0;
  std::uint32_t nodes_reached = 0;
  std::uint32_t nodes_total = 0;
  std::vector<SiteId> sites_treated;
  std::vector<NodeId> nodes_visited;
  std::vector<NodeId> nodes_skipped;
  double swept_area_percent = 0.0;   // diagnostic: spray footprint union over arena area
  std::uint64_t detections_logged = 0;

  std::vector<CostLine> bom;
  std::optional<Money> bom_total;

  std::vector<TimedEvent> events;    // SiteDetected events are counted, not listed

  bool operator==(const MissionReport&) const = default;
};

/// Aggregates a finished mission. `status` must be terminal (DONE or FAULT),
/// otherwise std::logic_error. Plant quantities come from the trace.
MissionReport mission_report(const MissionStatus& status, const Scenario& scenario, std::size_t nodes_total,
                             const TraceLog& trace);

/// Union of spray-range discs along the trajectory, as a percentage of the
/// arena, on a `cell` metre raster.
double swept_area_percent(const TraceLog& trace, const WorldMap& world, double radius, double cell = 0.05);

std::string render_human(const MissionReport& report);
std::string render_key_value(const MissionReport& report);
nlohmann::json to_json(const MissionReport& report);
std::string render_machine(const MissionReport& report);

}  // namespace sprayrover
