#include "sprayrover/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <vector>

namespace sprayrover {

ScenarioParseError::ScenarioParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, end);
}

namespace {

struct Field {
  std::string name;
  std::function<std::string()> get;
  std::function<void(std::string_view)> set;
};

double parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::invalid_argument("expected a number, got '" + std::string(s) + "'");
  return v;
}

template <typename Int>
Int parse_int(std::string_view s) {
  Int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::invalid_argument("expected an integer, got '" + std::string(s) + "'");
  return v;
}

bool parse_bool(std::string_view s) {
  if (s == "1" || s == "true" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "no") return false;
  throw std::invalid_argument("expected a boolean, got '" + std::string(s) + "'");
}

Field real(std::string name, double& ref) {
  return {std::move(name), [&ref] { return format_number(ref); }, [&ref](std::string_view s) { ref = parse_double(s); }};
}

Field integer(std::string name, int& ref) {
  return {std::move(name), [&ref] { return std::to_string(ref); }, [&ref](std::string_view s) { ref = parse_int<int>(s); }};
}

Field boolean(std::string name, bool& ref) {
  return {std::move(name), [&ref] { return std::string(ref ? "1" : "0"); },
          [&ref](std::string_view s) { ref = parse_bool(s); }};
}

std::vector<Field> rover_fields(RoverParams& r) {
  return {real("max_speed", r.max_speed),
          real("max_turn_rate", r.max_turn_rate),
          real("wheelbase", r.wheelbase),
          real("battery", r.battery_capacity_mAh),
          real("drive_draw", r.drive_draw_mA),
          real("idle_draw", r.idle_draw_mA),
          real("spray_draw", r.spray_draw_mA),
          real("spray_duration", r.spray_duration_s),
          real("reservoir", r.reservoir_capacity_ml),
          real("spray_dose", r.spray_dose_ml),
          real("spray_range", r.spray_range_m),
          real("gps_sigma", r.gps_sigma_m),
          real("ultrasonic_range", r.ultrasonic_max_range_m),
          {"ultrasonic_bearings",
           [&r] {
             std::string out;
             for (std::size_t i = 0; i < r.ultrasonic_bearings.size(); ++i)
               out += (i ? "," : "") + format_number(r.ultrasonic_bearings[i]);
             return out;
           },
           [&r](std::string_view s) {
             r.ultrasonic_bearings.clear();
             while (!s.empty()) {
               const auto comma = s.find(',');
               r.ultrasonic_bearings.push_back(parse_double(s.substr(0, comma)));
               s = comma == std::string_view::npos ? std::string_view{} : s.substr(comma + 1);
             }
           }}};
}

std::vector<Field> detector_fields(DetectorProfile& d) {
  return {{"tp_rate",
           [&d] { return format_number(d.tp_rate[1]); },
           [&d](std::string_view s) { d.tp_rate[0] = d.tp_rate[1] = parse_double(s); }},
          real("tp_rate_mosquito", d.tp_rate[0]),
          real("tp_rate_site", d.tp_rate[1]),
          real("fp_per_frame", d.fp_per_frame),
          real("fp_site_share", d.fp_site_share),
          real("mosquito_rate", d.mosquito_rate),
          real("tp_conf_min", d.tp_conf_min),
          real("tp_conf_max", d.tp_conf_max),
          real("fp_conf_min", d.fp_conf_min),
          real("fp_conf_max", d.fp_conf_max),
          real("jitter", d.jitter),
          integer("width", d.width),
          integer("height", d.height),
          real("focal", d.focal_px),
          real("camera_height", d.camera_height_m),
          real("fov", d.fov),
          real("range", d.range_m)};
}

std::vector<Field> mission_fields(Mission& m) {
  GuidanceParams& g = m.guidance;
  return {boolean("treat_on_detect", m.treat_on_detect),
          real("confidence", m.detect_confidence_threshold),
          real("home_radius", m.home_radius_m),
          boolean("autostart", m.autostart),
          real("cruise_speed", g.cruise_speed),
          real("turn_rate", g.turn_rate),
          real("lookahead", g.lookahead_m),
          real("clearance", g.clearance_m),
          real("avoid_threshold", g.avoid_threshold_m),
          real("forward_cone", g.forward_cone),
          integer("debounce", g.debounce_ticks),
          real("inspect_timeout", g.inspect_timeout_s),
          real("treat_timeout", g.treat_timeout_s),
          integer("max_spray_attempts", g.max_spray_attempts),
          integer("max_inspections", g.max_inspections_per_site),
          real("approach_fraction", g.approach_fraction),
          real("leg_timeout_factor", g.leg_timeout_factor),
          real("leg_timeout_slack", g.leg_timeout_slack_s)};
}

// Whitespace tokens; double-quoted tokens may contain spaces; '#' outside
// quotes ends the line.
std::vector<std::string> tokenize(std::string_view line, std::size_t lineno) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
    } else if (c == '#') {
      break;
    } else if (c == '"') {
      const auto close = line.find('"', i + 1);
      if (close == std::string_view::npos) throw ScenarioParseError(lineno, "unterminated quoted string");
      out.emplace_back(line.substr(i + 1, close - i - 1));
      i = close + 1;
    } else {
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r' && line[j] != '#') ++j;
      out.emplace_back(line.substr(i, j - i));
      i = j;
    }
  }
  return out;
}

void apply_fields(std::vector<Field> fields, const std::vector<std::string>& tok, std::size_t lineno) {
  for (std::size_t i = 1; i < tok.size(); ++i) {
    const auto eq = tok[i].find('=');
    if (eq == std::string::npos) throw ScenarioParseError(lineno, "expected key=value, got '" + tok[i] + "'");
    const std::string key = tok[i].substr(0, eq);
    auto it = std::find_if(fields.begin(), fields.end(), [&](const Field& f) { return f.name == key; });
    if (it == fields.end()) throw ScenarioParseError(lineno, tok[0] + ": unknown key '" + key + "'");
    try {
      it->set(std::string_view(tok[i]).substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw ScenarioParseError(lineno, tok[0] + " " + key + ": " + e.what());
    }
  }
}

void expect_args(const std::vector<std::string>& tok, std::size_t n, std::size_t lineno, const char* usage) {
  if (tok.size() != n + 1) throw ScenarioParseError(lineno, std::string("usage: ") + usage);
}

}  // namespace

Scenario load_scenario(std::string_view text) {
  Scenario sc;
  bool have_bounds = false, have_home = false;
  std::size_t lineno = 0;
  while (!text.empty()) {
    ++lineno;
    const auto nl = text.find('\n');
    const std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    const auto tok = tokenize(line, lineno);
    if (tok.empty()) continue;
    const std::string& kw = tok[0];
    auto num = [&](std::size_t i) {
      try {
        return parse_double(tok[i]);
      } catch (const std::invalid_argument& e) {
        throw ScenarioParseError(lineno, kw + ": " + e.what());
      }
    };
    auto id = [&](std::size_t i) {
      try {
        return parse_int<std::uint32_t>(tok[i]);
      } catch (const std::invalid_argument& e) {
        throw ScenarioParseError(lineno, kw + ": " + e.what());
      }
    };

    if (kw == "bounds") {
      expect_args(tok, 4, lineno, "bounds <xmin> <ymin> <xmax> <ymax>");
      sc.world.bounds = {Vec2d(num(1), num(2)), Vec2d(num(3), num(4))};
      have_bounds = true;
    } else if (kw == "home") {
      expect_args(tok, 2, lineno, "home <x> <y>");
      sc.world.home = Vec2d(num(1), num(2));
      have_home = true;
    } else if (kw == "obstacle") {
      if (tok.size() < 2) throw ScenarioParseError(lineno, "usage: obstacle circle|poly ...");
      if (tok[1] == "circle") {
        if (tok.size() != 5) throw ScenarioParseError(lineno, "usage: obstacle circle <x> <y> <r>");
        sc.world.obstacles.push_back(CircleObstacle{Vec2d(num(2), num(3)), num(4)});
      } else if (tok[1] == "poly") {
        if (tok.size() < 8 || tok.size() % 2 != 0)
          throw ScenarioParseError(lineno, "usage: obstacle poly <x1> <y1> <x2> <y2> <x3> <y3> ...");
        PolygonObstacle poly;
        for (std::size_t i = 2; i < tok.size(); i += 2) poly.vertices.emplace_back(num(i), num(i + 1));
        sc.world.obstacles.push_back(std::move(poly));
      } else {
        throw ScenarioParseError(lineno, "unknown obstacle shape '" + tok[1] + "'");
      }
    } else if (kw == "site") {
      expect_args(tok, 5, lineno, "site <id> <x> <y> <r> <pre_population>");
      sc.world.sites.push_back({id(1), Vec2d(num(2), num(3)), num(4), id(5), true});
    } else if (kw == "node") {
      expect_args(tok, 4, lineno, "node <id> <x> <y> <accept_r>");
      sc.world.nodes.push_back({id(1), Vec2d(num(2), num(3)), num(4)});
    } else if (kw == "waypoint") {
      expect_args(tok, 1, lineno, "waypoint <node-id>");
      sc.mission.waypoints.push_back(id(1));
    } else if (kw == "rover") {
      apply_fields(rover_fields(sc.rover), tok, lineno);
    } else if (kw == "detector") {
      apply_fields(detector_fields(sc.detector), tok, lineno);
    } else if (kw == "mission") {
      apply_fields(mission_fields(sc.mission), tok, lineno);
    } else if (kw == "seed") {
      expect_args(tok, 1, lineno, "seed <u64>");
      try {
        sc.seed = parse_int<std::uint64_t>(tok[1]);
      } catch (const std::invalid_argument& e) {
        throw ScenarioParseError(lineno, std::string("seed: ") + e.what());
      }
    } else if (kw == "bom") {
      if (tok.size() != 3 && tok.size() != 4) throw ScenarioParseError(lineno, "usage: bom \"<name>\" <price> [<qty>]");
      CostItem item{tok[1], {}, 1};
      try {
        item.unit_price = parse_price(tok[2]);
        if (tok.size() == 4) item.quantity = parse_int<std::int64_t>(tok[3]);
      } catch (const ValidationError& e) {
        throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
      } catch (const std::invalid_argument& e) {
        throw ScenarioParseError(lineno, std::string("bom: ") + e.what());
      }
      sc.bom.items.push_back(std::move(item));
    } else {
      throw ScenarioParseError(lineno, "unknown statement '" + kw + "'");
    }
  }
  if (!have_bounds) throw ScenarioParseError(lineno, "missing bounds statement");
  if (!have_home) throw ScenarioParseError(lineno, "missing home statement");

  sc.mission.home = sc.world.home;
  sc.world.validate();
  sc.rover.validate();
  sc.detector.validate();
  sc.mission.validate(sc.world);
  if (!sc.world.bounds.contains(sc.world.home, sc.rover.body_radius()))
    throw ValidationError("home must leave room for the rover body inside bounds");
  return sc;
}

Scenario load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("scenario not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_scenario(ss.str());
}

std::string serialize_scenario(const Scenario& input) {
  Scenario sc = input;   // the field tables bind mutable references
  std::ostringstream out;
  const auto& w = sc.world;
  out << "bounds " << format_number(w.bounds.lo.x()) << ' ' << format_number(w.bounds.lo.y()) << ' '
      << format_number(w.bounds.hi.x()) << ' ' << format_number(w.bounds.hi.y()) << '\n';
  out << "home " << format_number(w.home.x()) << ' ' << format_number(w.home.y()) << '\n';
  out << "seed " << sc.seed << '\n';
  for (const auto& o : w.obstacles) {
    if (const auto* c = std::get_if<CircleObstacle>(&o)) {
      out << "obstacle circle " << format_number(c->center.x()) << ' ' << format_number(c->center.y()) << ' '
          << format_number(c->radius) << '\n';
    } else {
      out << "obstacle poly";
      for (const auto& v : std::get<PolygonObstacle>(o).vertices)
        out << ' ' << format_number(v.x()) << ' ' << format_number(v.y());
      out << '\n';
    }
  }
  for (const auto& s : w.sites)
    out << "site " << s.id << ' ' << format_number(s.center.x()) << ' ' << format_number(s.center.y()) << ' '
        << format_number(s.radius) << ' ' << s.pre_population << '\n';
  for (const auto& n : w.nodes)
    out << "node " << n.id << ' ' << format_number(n.center.x()) << ' ' << format_number(n.center.y()) << ' '
        << format_number(n.acceptance_radius) << '\n';
  for (NodeId id : sc.mission.waypoints) out << "waypoint " << id << '\n';

  auto emit = [&out](const char* kw, const std::vector<Field>& fields) {
    out << kw;
    for (const auto& f : fields) {
      if (std::string_view(kw) == "detector" && f.name == "tp_rate") continue;
      out << ' ' << f.name << '=' << f.get();
    }
    out << '\n';
  };
  emit("rover", rover_fields(sc.rover));
  emit("detector", detector_fields(sc.detector));
  emit("mission", mission_fields(sc.mission));
  for (const auto& item : sc.bom.items)
    out << "bom \"" << item.name << "\" " << format_price(item.unit_price) << ' ' << item.quantity << '\n';
  return out.str();
}

}  // namespace sprayrover
