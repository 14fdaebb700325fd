// Scenario documents: a line-oriented text format describing the arena, the
// mission, the rover, the detector profile, the run seed and an optional bill
// of materials.
//
//   bounds <xmin> <ymin> <xmax> <ymax>
//   home <x> <y>
//   obstacle circle <x> <y> <r>
//   obstacle poly <x1> <y1> <x2> <y2> <x3> <y3> ...
//   site <id> <x> <y> <r> <pre_population>
//   node <id> <x> <y> <accept_r>
//   waypoint <node-id>
//   rover <key>=<value>...
//   detector <key>=<value>...
//   mission <key>=<value>...
//   seed <u64>
//   bom "<name>" <unit_price> [<quantity>]
//
// '#' starts a comment. Lengths are metres, angles radians.
#pragma once

#include "sprayrover/autonomy.hpp"
#include "sprayrover/detection.hpp"
#include "sprayrover/environment.hpp"
#include "sprayrover/metrics.hpp"
#include "sprayrover/rover.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sprayrover {

/// Malformed scenario text; carries the 1-based line number.
class ScenarioParseError : public std::runtime_error {
 public:
  ScenarioParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct Scenario {
  WorldMap world;
  Mission mission;
  DetectorProfile detector;
  RoverParams rover;
  std::uint64_t seed = 0;
  CostLedger bom;
};

/// Parses and validates. Throws ScenarioParseError or ValidationError.
Scenario load_scenario(std::string_view text);
Scenario load_scenario_file(const std::filesystem::path& path);

/// Canonical text; load_scenario(serialize_scenario(s)) reproduces `s`.
std::string serialize_scenario(const Scenario& scenario);

/// Shortest decimal that round-trips the double.
std::string format_number(double v);

}  // namespace sprayrover
