#pragma once

#include <string>
#include <vector>

#include "recoat/tensor.hpp"

namespace recoat {

inline constexpr int kHistorySteps = 10;   // past 1 s at 10 Hz
inline constexpr int kFutureSteps = 16;    // 8 s at 2 Hz
inline constexpr double kHistoryHz = 10.0;
inline constexpr double kFutureHz = 2.0;
inline constexpr int kMaxNeighbors = 10;
inline constexpr double kNeighborRadius = 30.0;
inline constexpr int kStateDim = 5;        // (x, y, vx, vy, heading)

enum class AgentType { vehicle, pedestrian, cyclist };

AgentType parse_agent_type(const std::string& s);
std::string to_string(AgentType t);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

using Polyline = std::vector<Point>;
using Polygon = std::vector<Point>;  // closed: first point == last point

// Kinematic state at one timestep. Invalid states carry all-zero numerics.
struct AgentState {
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double heading = 0.0;
  bool valid = false;
};

struct AgentTrack {
  AgentType type = AgentType::vehicle;
  std::vector<AgentState> states;  // kHistorySteps entries, oldest first
};

struct RoadLine {
  enum class Type { road_edge, solid_white, broken_white, yellow };
  Type type = Type::road_edge;
  Polyline points;
};

RoadLine::Type parse_road_line_type(const std::string& s);
std::string to_string(RoadLine::Type t);

struct TrafficLight {
  enum class State { red, green };
  Point position;
  State state = State::red;
};

struct MapContext {
  std::vector<Polygon> lanes;
  std::vector<RoadLine> road_lines;
  std::vector<Polygon> crosswalks;
  std::vector<Polygon> speed_bumps;
  std::vector<Point> stop_signs;
  std::vector<TrafficLight> traffic_lights;
};

struct Scene {
  std::string scenario_id;
  AgentTrack target;
  std::vector<Point> target_future;  // kFutureSteps points at 2 Hz
  std::vector<AgentTrack> neighbors;
  MapContext map;
  std::vector<Polyline> centerlines;
};

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
};

// (10,10,5); rows 0..count-1 are real neighbors by ascending t0 distance
struct NeighborTensor {
  Tensor data;
  int count = 0;
};

// wraps into (-pi, pi]
double normalize_angle(double a);

// Translation then rotation mapping `pose` to the origin with heading along
// +x; velocities rotated, headings shifted and renormalized, valid flags
// preserved, invalid states stay all-zero. Non-finite inputs are rejected.
AgentTrack to_target_frame(const AgentTrack& track, const Pose& pose);
Point to_target_frame(const Point& p, const Pose& pose);
Pose inverse_pose(const Pose& pose);

// pose of the target at t0 (its last history state); the state must be valid
Pose target_t0_pose(const Scene& scene);

// speed magnitude of the target at t0
double target_speed(const Scene& scene);

// whole-scene transform into the target's t0 frame
Scene to_target_frame(const Scene& scene);

// throws SceneError on wrong history/future lengths or non-finite values
void validate_scene(const Scene& scene);

// neighbors with a valid state within kNeighborRadius of the origin, sorted
// ascending by t0 distance (stable on ties), truncated to kMaxNeighbors;
// pre: scene in target frame
std::vector<const AgentTrack*> select_neighbors(const Scene& scene);

// pre: scene in target frame
NeighborTensor build_neighbor_tensor(const Scene& scene);

// (10,5) history of the target, time-ordered; pre: target frame
Tensor target_state_tensor(const Scene& scene);

// t0 distance of a track to the origin measured at its last valid state;
// negative when the track has no valid state
double last_valid_distance(const AgentTrack& track);

}  // namespace recoat
