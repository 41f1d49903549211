#include "recoat/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "recoat/error.hpp"
#include "recoat/rng.hpp"
#include "recoat/scene_io.hpp"

namespace recoat {

using nlohmann::json;

Intent parse_intent(const std::string& s) {
  if (s == "straight") return Intent::straight;
  if (s == "left_turn") return Intent::left_turn;
  if (s == "right_turn") return Intent::right_turn;
  if (s == "stop") return Intent::stop;
  throw ParseError("unknown intent: " + s);
}

std::string to_string(Intent i) {
  switch (i) {
    case Intent::straight: return "straight";
    case Intent::left_turn: return "left_turn";
    case Intent::right_turn: return "right_turn";
    case Intent::stop: return "stop";
  }
  throw ValueError("bad intent enum");
}

MapTemplate parse_map_template(const std::string& s) {
  if (s == "straight_road") return MapTemplate::straight_road;
  if (s == "t_junction") return MapTemplate::t_junction;
  if (s == "crossroad") return MapTemplate::crossroad;
  throw ParseError("unknown map template: " + s);
}

std::string to_string(MapTemplate t) {
  switch (t) {
    case MapTemplate::straight_road: return "straight_road";
    case MapTemplate::t_junction: return "t_junction";
    case MapTemplate::crossroad: return "crossroad";
  }
  throw ValueError("bad map template enum");
}

void ScenarioSpec::validate() const {
  if (!(speed_min >= 0.0 && speed_max <= 20.0 && speed_min <= speed_max))
    throw ValueError("speed range must lie within [0, 20]");
  if (!(neighbors_min >= 0 && neighbors_max <= 12 &&
        neighbors_min <= neighbors_max))
    throw ValueError("neighbor count range must lie within [0, 12]");
  if (!(noise_sigma >= 0.0)) throw ValueError("noise sigma must be >= 0");
}

namespace {

constexpr double kLaneHalf = 1.75;
constexpr double kLaneWidth = 3.5;

// target path in the local frame, by arc length
struct PathGeom {
  Intent intent;
  double entry;   // straight run before the arc
  double radius;  // turn radius

  Point at(double s) const {
    switch (intent) {
      case Intent::straight:
      case Intent::stop:
        return {s, 0.0};
      case Intent::left_turn:
      case Intent::right_turn: {
        const double sign = intent == Intent::left_turn ? 1.0 : -1.0;
        if (s <= entry) return {s, 0.0};
        const double arc = radius * M_PI / 2.0;
        if (s <= entry + arc) {
          const double phi = (s - entry) / radius;
          return {entry + radius * std::sin(phi),
                  sign * radius * (1.0 - std::cos(phi))};
        }
        return {entry + radius, sign * (radius + (s - entry - arc))};
      }
    }
    return {0.0, 0.0};
  }
};

Polygon closed_rect(double x0, double x1, double y0, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}};
}

Polyline x_line(double x0, double x1, double y) {
  return {{x0, y}, {x1, y}};
}

Polyline path_centerline(const PathGeom& geom, double length) {
  Polyline line;
  for (double s = 0.0; s <= length; s += 1.0) line.push_back(geom.at(s));
  return line;
}

struct MapBuild {
  MapContext map;
  std::vector<Polyline> centerlines;
  bool stem_up = false;
  bool stem_down = false;
  double junction_x = 0.0;
};

MapBuild build_map(MapTemplate tmpl, Intent intent, const PathGeom& geom,
                   Rng& rng) {
  MapBuild out;
  const double x0 = -25.0, x1 = 60.0;
  out.junction_x = geom.entry + geom.radius;
  const double jx = out.junction_x;

  // main road: target lane centered y=0, oncoming lane centered y=+3.5
  out.map.lanes.push_back(closed_rect(x0, x1, -kLaneHalf, kLaneHalf));
  out.map.lanes.push_back(closed_rect(x0, x1, kLaneHalf, kLaneHalf + kLaneWidth));
  out.map.road_lines.push_back(
      {RoadLine::Type::yellow, x_line(x0, x1, kLaneHalf)});
  out.centerlines.push_back(x_line(-20.0, x1, 0.0));

  if (tmpl == MapTemplate::straight_road) {
    out.map.road_lines.push_back(
        {RoadLine::Type::road_edge, x_line(x0, x1, -kLaneHalf)});
    out.map.road_lines.push_back(
        {RoadLine::Type::road_edge, x_line(x0, x1, kLaneHalf + kLaneWidth)});
    out.map.road_lines.push_back(
        {RoadLine::Type::solid_white, x_line(x0, x1, kLaneHalf + kLaneWidth - 0.3)});
    if (rng.uniform() < 0.5)
      out.map.speed_bumps.push_back(
          closed_rect(jx - 0.4, jx + 0.4, -kLaneHalf, kLaneHalf));
    if (rng.uniform() < 0.3)
      out.map.crosswalks.push_back(
          closed_rect(jx + 4.0, jx + 6.0, -kLaneHalf - 1.0,
                      kLaneHalf + kLaneWidth + 1.0));
    return out;
  }

  if (tmpl == MapTemplate::t_junction) {
    const bool up = intent == Intent::left_turn
                        ? true
                        : (intent == Intent::right_turn ? false
                                                        : rng.uniform() < 0.5);
    out.stem_up = up;
    out.stem_down = !up;
  } else {
    out.stem_up = true;
    out.stem_down = true;
  }

  const double stem_x0 = jx - kLaneWidth, stem_x1 = jx + kLaneWidth;
  const double top = kLaneHalf + kLaneWidth;
  if (out.stem_up) {
    out.map.lanes.push_back(closed_rect(jx, stem_x1, top, 45.0));
    out.map.lanes.push_back(closed_rect(stem_x0, jx, top, 45.0));
    out.map.road_lines.push_back(
        {RoadLine::Type::road_edge, {{stem_x0, top}, {stem_x0, 45.0}}});
    out.map.road_lines.push_back(
        {RoadLine::Type::road_edge, {{stem_x1, top}, {stem_x1, 45.0}}});
    out.map.road_lines.push_back(
        {RoadLine::Type::broken_white, {{jx, top}, {jx, 45.0}}});
  }
  if (out.stem_down) {
    out.map.lanes.push_back(closed_rect(jx, stem_x1, -40.0, -kLaneHalf));
    out.map.lanes.push_back(closed_rect(stem_x0, jx, -40.0, -kLaneHalf));
    out.map.road_lines.push_back(
        {RoadLine::Type::road_edge, {{stem_x0, -40.0}, {stem_x0, -kLaneHalf}}});
    out.map.road_lines.push_back(
        {RoadLine::Type::road_edge, {{stem_x1, -40.0}, {stem_x1, -kLaneHalf}}});
    out.map.road_lines.push_back(
        {RoadLine::Type::broken_white, {{jx, -40.0}, {jx, -kLaneHalf}}});
  }
  // main-road edges broken at the stem mouths
  auto edge_segments = [&](double y, bool broken) {
    if (broken) {
      out.map.road_lines.push_back(
          {RoadLine::Type::road_edge, x_line(x0, stem_x0, y)});
      out.map.road_lines.push_back(
          {RoadLine::Type::road_edge, x_line(stem_x1, x1, y)});
    } else {
      out.map.road_lines.push_back({RoadLine::Type::road_edge, x_line(x0, x1, y)});
    }
  };
  edge_segments(-kLaneHalf, out.stem_down);
  edge_segments(top, out.stem_up);

  out.map.crosswalks.push_back(closed_rect(stem_x0 - 3.0, stem_x0 - 1.0,
                                           -kLaneHalf - 1.0, top + 1.0));
  if (tmpl == MapTemplate::crossroad) {
    out.map.traffic_lights.push_back(
        {{stem_x0 - 1.5, top + 1.5},
         rng.uniform() < 0.5 ? TrafficLight::State::red
                             : TrafficLight::State::green});
  } else {
    out.map.stop_signs.push_back({stem_x0 - 1.5, -kLaneHalf - 1.5});
  }

  if (out.stem_up)
    out.centerlines.push_back(
        path_centerline({Intent::left_turn, geom.entry, geom.radius}, 40.0));
  if (out.stem_down)
    out.centerlines.push_back(
        path_centerline({Intent::right_turn, geom.entry, geom.radius}, 40.0));
  return out;
}

AgentTrack constant_velocity_track(AgentType type, const Point& p0,
                                   double heading, double speed,
                                   int invalid_prefix) {
  AgentTrack t;
  t.type = type;
  const double vx = speed * std::cos(heading);
  const double vy = speed * std::sin(heading);
  for (int k = 0; k < kHistorySteps; ++k) {
    if (k < invalid_prefix) {
      t.states.push_back(AgentState{});
      continue;
    }
    const double tk = (k - (kHistorySteps - 1)) / kHistoryHz;
    AgentState s;
    s.x = p0.x + vx * tk;
    s.y = p0.y + vy * tk;
    s.vx = vx;
    s.vy = vy;
    s.heading = heading;
    s.valid = true;
    t.states.push_back(s);
  }
  return t;
}

std::vector<AgentTrack> sample_neighbors(const MapBuild& mb,
                                         const ScenarioSpec& spec, Rng& rng) {
  const int n = spec.neighbors_min +
                static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(
                    spec.neighbors_max - spec.neighbors_min + 1)));
  std::vector<AgentTrack> out;
  for (int i = 0; i < n; ++i) {
    const double kind = rng.uniform();
    const int invalid_prefix =
        rng.uniform() < 0.25 ? 1 + static_cast<int>(rng.uniform_int(7)) : 0;
    if (kind < 0.15) {  // pedestrian near the roadside
      const double x = rng.uniform(-20.0, 40.0);
      const double y = rng.uniform() < 0.5 ? rng.uniform(-6.0, -2.5)
                                           : rng.uniform(6.0, 9.0);
      out.push_back(constant_velocity_track(
          AgentType::pedestrian, {x, y}, rng.uniform(-M_PI, M_PI),
          rng.uniform(0.3, 1.8), invalid_prefix));
    } else if (kind < 0.3) {  // cyclist along the road edge
      const double x = rng.uniform(-30.0, 40.0);
      out.push_back(constant_velocity_track(
          AgentType::cyclist, {x, -kLaneHalf - 0.8},
          rng.uniform() < 0.8 ? 0.0 : M_PI, rng.uniform(2.0, 6.0),
          invalid_prefix));
    } else if ((mb.stem_up || mb.stem_down) && kind < 0.5) {  // stem traffic
      const bool up = mb.stem_up && (!mb.stem_down || rng.uniform() < 0.5);
      const double y = up ? rng.uniform(7.0, 35.0) : rng.uniform(-35.0, -6.0);
      const double lane = rng.uniform() < 0.5 ? mb.junction_x - kLaneHalf
                                              : mb.junction_x + kLaneHalf;
      const double heading = (lane > mb.junction_x) == up ? M_PI / 2 : -M_PI / 2;
      out.push_back(constant_velocity_track(AgentType::vehicle, {lane, y},
                                            heading, rng.uniform(1.0, 8.0),
                                            invalid_prefix));
    } else if (kind < 0.65) {  // oncoming lane
      out.push_back(constant_velocity_track(
          AgentType::vehicle, {rng.uniform(-34.0, 34.0), kLaneWidth}, M_PI,
          rng.uniform(1.0, 8.0), invalid_prefix));
    } else {  // own lane, ahead or behind
      const double gap = rng.uniform(7.0, 34.0);
      const double x = rng.uniform() < 0.6 ? gap : -gap;
      out.push_back(constant_velocity_track(AgentType::vehicle, {x, 0.0}, 0.0,
                                            rng.uniform(1.0, 8.0),
                                            invalid_prefix));
    }
  }
  return out;
}

}  // namespace

Scene place_scene_in_world(const Scene& local, const Pose& world_pose) {
  // to_target_frame with the inverse pose maps the local frame out to world
  const Pose inv = inverse_pose(world_pose);
  Scene out;
  out.scenario_id = local.scenario_id;
  out.target = to_target_frame(local.target, inv);
  for (const Point& p : local.target_future)
    out.target_future.push_back(to_target_frame(p, inv));
  for (const AgentTrack& t : local.neighbors)
    out.neighbors.push_back(to_target_frame(t, inv));
  auto tf_points = [&](const std::vector<Point>& pts) {
    std::vector<Point> r;
    r.reserve(pts.size());
    for (const Point& p : pts) r.push_back(to_target_frame(p, inv));
    return r;
  };
  for (const Polygon& poly : local.map.lanes) out.map.lanes.push_back(tf_points(poly));
  for (const RoadLine& rl : local.map.road_lines)
    out.map.road_lines.push_back({rl.type, tf_points(rl.points)});
  for (const Polygon& poly : local.map.crosswalks)
    out.map.crosswalks.push_back(tf_points(poly));
  for (const Polygon& poly : local.map.speed_bumps)
    out.map.speed_bumps.push_back(tf_points(poly));
  for (const Point& p : local.map.stop_signs)
    out.map.stop_signs.push_back(to_target_frame(p, inv));
  for (const TrafficLight& tl : local.map.traffic_lights)
    out.map.traffic_lights.push_back(
        {to_target_frame(tl.position, inv), tl.state});
  for (const Polyline& line : local.centerlines)
    out.centerlines.push_back(tf_points(line));
  return out;
}

Scene generate(const ScenarioSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, 0x6763656e));

  const double v0 = rng.uniform(spec.speed_min, spec.speed_max);
  PathGeom geom{spec.intent, rng.uniform(4.0, 7.0), rng.uniform(7.0, 9.0)};
  const double t_stop = rng.uniform(2.0, 4.0);

  Scene scene;
  scene.scenario_id = "scene-" + std::to_string(spec.seed);
  scene.target.type = spec.target_type;
  for (int k = 0; k < kHistorySteps; ++k) {
    const double tk = (k - (kHistorySteps - 1)) / kHistoryHz;
    AgentState s;
    s.x = v0 * tk;
    s.y = 0.0;
    s.vx = v0;
    s.vy = 0.0;
    s.heading = 0.0;
    s.valid = true;
    scene.target.states.push_back(s);
  }
  for (int k = 1; k <= kFutureSteps; ++k) {
    const double t = k / kFutureHz;
    double s = v0 * t;
    if (spec.intent == Intent::stop) {
      const double a = t_stop > 0.0 ? v0 / t_stop : 0.0;
      s = t < t_stop ? v0 * t - 0.5 * a * t * t : 0.5 * v0 * t_stop;
    }
    Point p = geom.at(s);
    if (spec.noise_sigma > 0.0) {
      p.x += rng.normal(0.0, spec.noise_sigma);
      p.y += rng.normal(0.0, spec.noise_sigma);
    }
    scene.target_future.push_back(p);
  }

  MapBuild mb = build_map(spec.map_template, spec.intent, geom, rng);
  scene.map = std::move(mb.map);
  scene.centerlines = std::move(mb.centerlines);
  scene.neighbors = sample_neighbors(mb, spec, rng);

  const Pose world{rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0),
                   normalize_angle(rng.uniform(-M_PI, M_PI))};
  return place_scene_in_world(scene, world);
}

Intent classify_future(const std::vector<Point>& future) {
  if (future.size() < 2) return Intent::stop;
  const Point& last = future.back();
  const Point& prev = future[future.size() - 2];
  const double end_speed =
      std::hypot(last.x - prev.x, last.y - prev.y) * kFutureHz;
  const double displacement = std::hypot(last.x, last.y);
  if (end_speed < 1.0 || displacement < 1.0) return Intent::stop;
  const double h_first =
      std::atan2(future[1].y - future[0].y, future[1].x - future[0].x);
  const double h_last = std::atan2(last.y - prev.y, last.x - prev.x);
  const double turn = normalize_angle(h_last - h_first);
  if (turn > M_PI / 4.0) return Intent::left_turn;
  if (turn < -M_PI / 4.0) return Intent::right_turn;
  return Intent::straight;
}

void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries) {
  json j;
  j["schema"] = "recoat-manifest/1";
  json arr = json::array();
  for (const ManifestEntry& e : entries)
    arr.push_back({{"path", e.path}, {"intent", to_string(e.intent)}});
  j["entries"] = arr;
  std::ofstream os(path);
  if (!os) throw IoError("cannot open manifest for writing: " + path);
  os << j.dump(2) << "\n";
  if (!os) throw IoError("manifest write failed: " + path);
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open manifest: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    const json j = json::parse(ss.str());
    if (j.at("schema").get<std::string>() != "recoat-manifest/1")
      throw ParseError("unsupported manifest schema: " + path);
    std::vector<ManifestEntry> out;
    for (const auto& e : j.at("entries"))
      out.push_back({e.at("path").get<std::string>(),
                     parse_intent(e.at("intent").get<std::string>())});
    return out;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed manifest: ") + e.what());
  }
}

std::vector<ManifestEntry> generate_dataset(const DatasetConfig& cfg) {
  if (cfg.count <= 0) throw ValueError("dataset count must be positive");
  if (cfg.intents.empty()) throw ValueError("dataset needs at least one intent");
  std::filesystem::create_directories(cfg.out_dir);
  std::vector<ManifestEntry> entries;
  entries.reserve(static_cast<std::size_t>(cfg.count));
  for (int i = 0; i < cfg.count; ++i) {
    ScenarioSpec spec;
    spec.seed = derive_seed(cfg.seed, 0x64617461, static_cast<std::uint64_t>(i));
    spec.intent = cfg.intents[static_cast<std::size_t>(i) % cfg.intents.size()];
    spec.speed_min = cfg.speed_min;
    spec.speed_max = cfg.speed_max;
    spec.neighbors_min = cfg.neighbors_min;
    spec.neighbors_max = cfg.neighbors_max;
    spec.noise_sigma = cfg.noise_sigma;
    spec.target_type = cfg.target_type;
    // junction templates for turns; any template otherwise
    Rng trng(derive_seed(cfg.seed, 0x746d706c, static_cast<std::uint64_t>(i)));
    if (spec.intent == Intent::left_turn || spec.intent == Intent::right_turn)
      spec.map_template = trng.uniform() < 0.5 ? MapTemplate::t_junction
                                               : MapTemplate::crossroad;
    else {
      const double u = trng.uniform();
      spec.map_template = u < 0.34 ? MapTemplate::straight_road
                                   : (u < 0.67 ? MapTemplate::t_junction
                                               : MapTemplate::crossroad);
    }
    Scene scene = generate(spec);
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%06d.json", i);
    scene.scenario_id = std::string(name, std::strlen(name) - 5);
    write_scene((std::filesystem::path(cfg.out_dir) / name).string(), scene);
    entries.push_back({name, spec.intent});
  }
  write_manifest(
      (std::filesystem::path(cfg.out_dir) / kManifestName).string(), entries);
  return entries;
}

}  // namespace recoat
