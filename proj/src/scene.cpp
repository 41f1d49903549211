#include "recoat/scene.hpp"

#include <algorithm>
#include <cmath>

#include "recoat/error.hpp"

namespace recoat {

AgentType parse_agent_type(const std::string& s) {
  if (s == "vehicle") return AgentType::vehicle;
  if (s == "pedestrian") return AgentType::pedestrian;
  if (s == "cyclist") return AgentType::cyclist;
  throw ParseError("unknown agent type: " + s);
}

std::string to_string(AgentType t) {
  switch (t) {
    case AgentType::vehicle: return "vehicle";
    case AgentType::pedestrian: return "pedestrian";
    case AgentType::cyclist: return "cyclist";
  }
  throw ValueError("bad agent type enum");
}

RoadLine::Type parse_road_line_type(const std::string& s) {
  if (s == "road_edge") return RoadLine::Type::road_edge;
  if (s == "solid_white") return RoadLine::Type::solid_white;
  if (s == "broken_white") return RoadLine::Type::broken_white;
  if (s == "yellow") return RoadLine::Type::yellow;
  throw ParseError("unknown road line type: " + s);
}

std::string to_string(RoadLine::Type t) {
  switch (t) {
    case RoadLine::Type::road_edge: return "road_edge";
    case RoadLine::Type::solid_white: return "solid_white";
    case RoadLine::Type::broken_white: return "broken_white";
    case RoadLine::Type::yellow: return "yellow";
  }
  throw ValueError("bad road line enum");
}

double normalize_angle(double a) {
  double r = std::remainder(a, 2.0 * M_PI);
  if (r <= -M_PI) r += 2.0 * M_PI;
  return r;
}

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v))
    throw ValueError(std::string("non-finite ") + what + " in frame transform");
}

}  // namespace

Point to_target_frame(const Point& p, const Pose& pose) {
  require_finite(pose.x, "pose");
  require_finite(pose.y, "pose");
  require_finite(pose.heading, "pose heading");
  require_finite(p.x, "coordinate");
  require_finite(p.y, "coordinate");
  const double c = std::cos(pose.heading), s = std::sin(pose.heading);
  const double dx = p.x - pose.x, dy = p.y - pose.y;
  return {c * dx + s * dy, -s * dx + c * dy};
}

AgentTrack to_target_frame(const AgentTrack& track, const Pose& pose) {
  require_finite(pose.x, "pose");
  require_finite(pose.y, "pose");
  require_finite(pose.heading, "pose heading");
  const double c = std::cos(pose.heading), s = std::sin(pose.heading);
  AgentTrack out;
  out.type = track.type;
  out.states.reserve(track.states.size());
  for (const AgentState& st : track.states) {
    if (!st.valid) {
      out.states.push_back(AgentState{});  // all-zero numerics by invariant
      continue;
    }
    require_finite(st.x, "coordinate");
    require_finite(st.y, "coordinate");
    require_finite(st.vx, "velocity");
    require_finite(st.vy, "velocity");
    require_finite(st.heading, "heading");
    AgentState o;
    const double dx = st.x - pose.x, dy = st.y - pose.y;
    o.x = c * dx + s * dy;
    o.y = -s * dx + c * dy;
    o.vx = c * st.vx + s * st.vy;
    o.vy = -s * st.vx + c * st.vy;
    o.heading = normalize_angle(st.heading - pose.heading);
    o.valid = true;
    out.states.push_back(o);
  }
  return out;
}

Pose inverse_pose(const Pose& pose) {
  const double c = std::cos(pose.heading), s = std::sin(pose.heading);
  // the pose of the original frame as seen from the transformed frame
  return {-(c * pose.x + s * pose.y), -(-s * pose.x + c * pose.y),
          -pose.heading};
}

Pose target_t0_pose(const Scene& scene) {
  if (scene.target.states.size() != kHistorySteps)
    throw SceneError("target history must have " +
                     std::to_string(kHistorySteps) + " states");
  const AgentState& s = scene.target.states.back();
  if (!s.valid) throw SceneError("target state at t0 is invalid");
  return {s.x, s.y, s.heading};
}

double target_speed(const Scene& scene) {
  const AgentState& s = scene.target.states.back();
  return std::hypot(s.vx, s.vy);
}

Scene to_target_frame(const Scene& scene) {
  const Pose pose = target_t0_pose(scene);
  Scene out;
  out.scenario_id = scene.scenario_id;
  out.target = to_target_frame(scene.target, pose);
  out.target_future.reserve(scene.target_future.size());
  for (const Point& p : scene.target_future)
    out.target_future.push_back(to_target_frame(p, pose));
  out.neighbors.reserve(scene.neighbors.size());
  for (const AgentTrack& t : scene.neighbors)
    out.neighbors.push_back(to_target_frame(t, pose));
  auto tf_points = [&](const std::vector<Point>& pts) {
    std::vector<Point> r;
    r.reserve(pts.size());
    for (const Point& p : pts) r.push_back(to_target_frame(p, pose));
    return r;
  };
  for (const Polygon& poly : scene.map.lanes)
    out.map.lanes.push_back(tf_points(poly));
  for (const RoadLine& rl : scene.map.road_lines)
    out.map.road_lines.push_back({rl.type, tf_points(rl.points)});
  for (const Polygon& poly : scene.map.crosswalks)
    out.map.crosswalks.push_back(tf_points(poly));
  for (const Polygon& poly : scene.map.speed_bumps)
    out.map.speed_bumps.push_back(tf_points(poly));
  for (const Point& p : scene.map.stop_signs)
    out.map.stop_signs.push_back(to_target_frame(p, pose));
  for (const TrafficLight& tl : scene.map.traffic_lights)
    out.map.traffic_lights.push_back(
        {to_target_frame(tl.position, pose), tl.state});
  for (const Polyline& line : scene.centerlines)
    out.centerlines.push_back(tf_points(line));
  return out;
}

void validate_scene(const Scene& scene) {
  if (scene.target.states.size() != kHistorySteps)
    throw SceneError("target history length " +
                     std::to_string(scene.target.states.size()) + ", expected " +
                     std::to_string(kHistorySteps));
  if (scene.target_future.size() != kFutureSteps)
    throw SceneError("target future length " +
                     std::to_string(scene.target_future.size()) +
                     ", expected " + std::to_string(kFutureSteps));
  auto check_state = [](const AgentState& s) {
    if (!(std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.vx) &&
          std::isfinite(s.vy) && std::isfinite(s.heading)))
      throw SceneError("non-finite state values");
    if (!s.valid &&
        (s.x != 0.0 || s.y != 0.0 || s.vx != 0.0 || s.vy != 0.0 ||
         s.heading != 0.0))
      throw SceneError("invalid state carries nonzero numerics");
  };
  for (const AgentState& s : scene.target.states) check_state(s);
  for (const AgentTrack& t : scene.neighbors) {
    if (t.states.size() != kHistorySteps)
      throw SceneError("neighbor history length mismatch");
    for (const AgentState& s : t.states) check_state(s);
  }
  for (const Point& p : scene.target_future)
    if (!(std::isfinite(p.x) && std::isfinite(p.y)))
      throw SceneError("non-finite future coordinate");
}

double last_valid_distance(const AgentTrack& track) {
  for (auto it = track.states.rbegin(); it != track.states.rend(); ++it)
    if (it->valid) return std::hypot(it->x, it->y);
  return -1.0;
}

std::vector<const AgentTrack*> select_neighbors(const Scene& scene) {
  struct Entry {
    double distance;
    const AgentTrack* track;
  };
  std::vector<Entry> entries;
  for (const AgentTrack& t : scene.neighbors) {
    const double d = last_valid_distance(t);
    if (d < 0.0 || d > kNeighborRadius) continue;
    entries.push_back({d, &t});
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) {
                     return a.distance < b.distance;
                   });
  if (entries.size() > kMaxNeighbors) entries.resize(kMaxNeighbors);
  std::vector<const AgentTrack*> out;
  out.reserve(entries.size());
  for (const Entry& e : entries) out.push_back(e.track);
  return out;
}

NeighborTensor build_neighbor_tensor(const Scene& scene) {
  const std::vector<const AgentTrack*> selected = select_neighbors(scene);
  NeighborTensor out;
  out.data = Tensor({kMaxNeighbors, kHistorySteps, kStateDim});
  out.count = static_cast<int>(selected.size());
  for (int i = 0; i < out.count; ++i) {
    const AgentTrack& t = *selected[static_cast<std::size_t>(i)];
    for (int s = 0; s < kHistorySteps; ++s) {
      const AgentState& st = t.states[static_cast<std::size_t>(s)];
      out.data.at(i, s, 0) = st.x;
      out.data.at(i, s, 1) = st.y;
      out.data.at(i, s, 2) = st.vx;
      out.data.at(i, s, 3) = st.vy;
      out.data.at(i, s, 4) = st.heading;
    }
  }
  return out;
}

Tensor target_state_tensor(const Scene& scene) {
  if (scene.target.states.size() != kHistorySteps)
    throw SceneError("target history length " +
                     std::to_string(scene.target.states.size()) + ", expected " +
                     std::to_string(kHistorySteps));
  Tensor out({kHistorySteps, kStateDim});
  for (int s = 0; s < kHistorySteps; ++s) {
    const AgentState& st = scene.target.states[static_cast<std::size_t>(s)];
    out.at(s, 0) = st.x;
    out.at(s, 1) = st.y;
    out.at(s, 2) = st.vx;
    out.at(s, 3) = st.vy;
    out.at(s, 4) = st.heading;
  }
  return out;
}

}  // namespace recoat
