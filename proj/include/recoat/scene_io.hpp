#pragma once

#include <string>

#include "recoat/scene.hpp"

namespace recoat {

inline constexpr const char* kSceneSchema = "recoat-scene/1";

// One scene per file, schema "recoat-scene/1". Round-trips every field
// value-exactly at 64-bit precision.
void write_scene(const std::string& path, const Scene& scene);
Scene read_scene(const std::string& path);

std::string scene_to_json(const Scene& scene);
Scene scene_from_json(const std::string& text);

}  // namespace recoat
