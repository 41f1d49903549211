#include "recoat/scene_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "recoat/error.hpp"

namespace recoat {

using nlohmann::json;

namespace {

json points_to_json(const std::vector<Point>& pts) {
  json arr = json::array();
  for (const Point& p : pts) arr.push_back({p.x, p.y});
  return arr;
}

std::vector<Point> points_from_json(const json& arr) {
  std::vector<Point> out;
  out.reserve(arr.size());
  for (const auto& p : arr) {
    if (!p.is_array() || p.size() != 2)
      throw ParseError("point must be a [x, y] pair");
    out.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return out;
}

json track_to_json(const AgentTrack& t) {
  json states = json::array();
  for (const AgentState& s : t.states)
    states.push_back({s.x, s.y, s.vx, s.vy, s.heading, s.valid ? 1 : 0});
  return {{"type", to_string(t.type)}, {"states", states}};
}

AgentTrack track_from_json(const json& j) {
  AgentTrack t;
  t.type = parse_agent_type(j.at("type").get<std::string>());
  for (const auto& s : j.at("states")) {
    if (!s.is_array() || s.size() != 6)
      throw ParseError("state must be [x, y, vx, vy, heading, valid]");
    AgentState st;
    st.x = s[0].get<double>();
    st.y = s[1].get<double>();
    st.vx = s[2].get<double>();
    st.vy = s[3].get<double>();
    st.heading = s[4].get<double>();
    st.valid = s[5].get<double>() != 0.0;
    t.states.push_back(st);
  }
  return t;
}

json polys_to_json(const std::vector<Polygon>& polys) {
  json arr = json::array();
  for (const Polygon& p : polys) arr.push_back(points_to_json(p));
  return arr;
}

std::vector<Polygon> polys_from_json(const json& arr) {
  std::vector<Polygon> out;
  for (const auto& p : arr) out.push_back(points_from_json(p));
  return out;
}

}  // namespace

std::string scene_to_json(const Scene& scene) {
  json j;
  j["schema"] = kSceneSchema;
  j["scenario_id"] = scene.scenario_id;
  j["target"] = track_to_json(scene.target);
  j["target_future"] = points_to_json(scene.target_future);
  json neighbors = json::array();
  for (const AgentTrack& t : scene.neighbors) neighbors.push_back(track_to_json(t));
  j["neighbors"] = neighbors;
  json road_lines = json::array();
  for (const RoadLine& rl : scene.map.road_lines)
    road_lines.push_back(
        {{"type", to_string(rl.type)}, {"points", points_to_json(rl.points)}});
  json lights = json::array();
  for (const TrafficLight& tl : scene.map.traffic_lights)
    lights.push_back(
        {{"position", {tl.position.x, tl.position.y}},
         {"state", tl.state == TrafficLight::State::red ? "red" : "green"}});
  j["map"] = {{"lanes", polys_to_json(scene.map.lanes)},
              {"road_lines", road_lines},
              {"crosswalks", polys_to_json(scene.map.crosswalks)},
              {"speed_bumps", polys_to_json(scene.map.speed_bumps)},
              {"stop_signs", points_to_json(scene.map.stop_signs)},
              {"traffic_lights", lights}};
  json centerlines = json::array();
  for (const Polyline& line : scene.centerlines)
    centerlines.push_back(points_to_json(line));
  j["centerlines"] = centerlines;
  return j.dump();
}

Scene scene_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("scene parse error: ") + e.what());
  }
  try {
    const std::string schema = j.at("schema").get<std::string>();
    if (schema != kSceneSchema)
      throw ParseError("unsupported scene schema version: " + schema);
    Scene s;
    s.scenario_id = j.at("scenario_id").get<std::string>();
    s.target = track_from_json(j.at("target"));
    s.target_future = points_from_json(j.at("target_future"));
    for (const auto& n : j.at("neighbors"))
      s.neighbors.push_back(track_from_json(n));
    const json& m = j.at("map");
    s.map.lanes = polys_from_json(m.at("lanes"));
    for (const auto& rl : m.at("road_lines"))
      s.map.road_lines.push_back(
          {parse_road_line_type(rl.at("type").get<std::string>()),
           points_from_json(rl.at("points"))});
    s.map.crosswalks = polys_from_json(m.at("crosswalks"));
    s.map.speed_bumps = polys_from_json(m.at("speed_bumps"));
    s.map.stop_signs = points_from_json(m.at("stop_signs"));
    for (const auto& tl : m.at("traffic_lights")) {
      TrafficLight light;
      const auto& pos = tl.at("position");
      light.position = {pos[0].get<double>(), pos[1].get<double>()};
      const std::string state = tl.at("state").get<std::string>();
      if (state == "red")
        light.state = TrafficLight::State::red;
      else if (state == "green")
        light.state = TrafficLight::State::green;
      else
        throw ParseError("unknown traffic light state: " + state);
      s.map.traffic_lights.push_back(light);
    }
    for (const auto& line : j.at("centerlines"))
      s.centerlines.push_back(points_from_json(line));
    return s;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed scene field: ") + e.what());
  }
}

void write_scene(const std::string& path, const Scene& scene) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << scene_to_json(scene) << "\n";
  if (!os) throw IoError("write failed: " + path);
}

Scene read_scene(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open scene: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return scene_from_json(ss.str());
}

}  // namespace recoat
