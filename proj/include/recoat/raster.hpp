#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "recoat/scene.hpp"

namespace recoat {

inline constexpr int kRasterSize = 240;

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

// 240x240x3 semantic BEV image. meters_per_pixel is 80/240, 60/240 or 40/240
// depending on the target type.
struct RasterImage {
  std::vector<std::uint8_t> pixels;  // row-major, 3 bytes per pixel
  double meters_per_pixel = 0.0;

  RasterImage() : pixels(static_cast<std::size_t>(kRasterSize) * kRasterSize * 3, 0) {}

  Rgb get(int row, int col) const {
    const std::size_t i =
        (static_cast<std::size_t>(row) * kRasterSize + col) * 3;
    return {pixels[i], pixels[i + 1], pixels[i + 2]};
  }
  void set(int row, int col, Rgb c) {
    if (row < 0 || row >= kRasterSize || col < 0 || col >= kRasterSize) return;
    const std::size_t i =
        (static_cast<std::size_t>(row) * kRasterSize + col) * 3;
    pixels[i] = c.r;
    pixels[i + 1] = c.g;
    pixels[i + 2] = c.b;
  }
};

// Concrete RGB values for the named semantic colors; all entries distinct.
struct RasterPalette {
  Rgb background{0, 0, 0};
  Rgb lane{87, 87, 87};
  Rgb centerline{0, 255, 255};
  Rgb road_edge{255, 255, 0};
  Rgb solid_white{255, 255, 255};
  Rgb broken_white{200, 200, 200};
  Rgb yellow_line{255, 240, 150};
  Rgb crosswalk{40, 40, 255};
  Rgb speed_bump{255, 150, 20};
  Rgb stop_sign{180, 0, 30};
  Rgb light_red{255, 40, 40};
  Rgb light_green{40, 220, 40};
  Rgb target{255, 0, 0};
  Rgb vehicle{255, 0, 255};
  Rgb pedestrian{0, 90, 255};
  Rgb cyclist{0, 200, 90};

  void validate() const;  // all entries distinct
};

// "name R G B" per line; '#' comments allowed; unknown names rejected
RasterPalette load_palette(const std::string& path);
void save_palette(const std::string& path, const RasterPalette& palette);

// Oriented-box sizes drawn for agents, in meters (length x width).
struct AgentBoxSizes {
  double vehicle_len = 4.5, vehicle_wid = 2.0;
  double pedestrian_len = 0.8, pedestrian_wid = 0.8;
  double cyclist_len = 1.8, cyclist_wid = 0.6;
};

double meters_per_pixel_for(AgentType type);

// Deterministic semantic rasterization; pre: scene in target frame. The
// target sits at pixel (row 120, col 48) heading along +x.
RasterImage rasterize(const Scene& scene, AgentType target_type,
                      const RasterPalette& palette = RasterPalette{},
                      const AgentBoxSizes& boxes = AgentBoxSizes{});

// Lossless PPM (P6) round-trip.
void export_image(const RasterImage& img, const std::string& path);
RasterImage import_image(const std::string& path);

}  // namespace recoat
