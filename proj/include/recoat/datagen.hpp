#pragma once

#include <string>
#include <vector>

#include "recoat/scene.hpp"

namespace recoat {

enum class Intent { straight, left_turn, right_turn, stop };
enum class MapTemplate { straight_road, t_junction, crossroad };

Intent parse_intent(const std::string& s);
std::string to_string(Intent i);
MapTemplate parse_map_template(const std::string& s);
std::string to_string(MapTemplate t);

struct ScenarioSpec {
  std::uint64_t seed = 0;
  Intent intent = Intent::straight;
  double speed_min = 2.0;
  double speed_max = 8.0;
  int neighbors_min = 0;
  int neighbors_max = 12;
  MapTemplate map_template = MapTemplate::straight_road;
  double noise_sigma = 0.1;
  AgentType target_type = AgentType::vehicle;

  void validate() const;  // speed range within [0,20], neighbor count <= 12
};

// Deterministic per seed. The scene is stored in a randomized world frame;
// pipelines re-center it via to_target_frame.
Scene generate(const ScenarioSpec& spec);

// rigid map of a scene out of the local frame: p -> R(heading) p + (x, y)
Scene place_scene_in_world(const Scene& local, const Pose& world_pose);

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory
  Intent intent = Intent::straight;
};

inline constexpr const char* kManifestName = "manifest.json";

void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::string& path);

struct DatasetConfig {
  std::string out_dir;
  int count = 0;
  std::uint64_t seed = 0;
  std::vector<Intent> intents{Intent::straight, Intent::left_turn,
                              Intent::right_turn, Intent::stop};
  double speed_min = 2.0;
  double speed_max = 8.0;
  int neighbors_min = 0;
  int neighbors_max = 12;
  double noise_sigma = 0.1;
  AgentType target_type = AgentType::vehicle;
};

// writes `count` scene files plus a manifest; intents cycle through the list
std::vector<ManifestEntry> generate_dataset(const DatasetConfig& cfg);

// classifies a generated future by displacement/heading change; used to
// verify the corpus is genuinely multi-modal
Intent classify_future(const std::vector<Point>& future);

}  // namespace recoat
