#include "recoat/raster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "recoat/error.hpp"

namespace recoat {

namespace {

struct Pix {
  double x, y;  // fractional pixel coordinates (col, row)
};

struct Canvas {
  RasterImage* img;
  double mpp;

  Pix to_pix(const Point& p) const {
    return {48.0 + p.x / mpp, 120.0 - p.y / mpp};
  }
};

void fill_polygon(Canvas& cv, const std::vector<Point>& poly, Rgb color) {
  if (poly.size() < 3) return;
  std::vector<Pix> pts;
  pts.reserve(poly.size());
  for (const Point& p : poly) pts.push_back(cv.to_pix(p));

  double ymin = pts[0].y, ymax = pts[0].y;
  for (const Pix& p : pts) {
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const int r0 = std::max(0, static_cast<int>(std::floor(ymin - 0.5)));
  const int r1 = std::min(kRasterSize - 1, static_cast<int>(std::ceil(ymax)));

  std::vector<double> xs;
  for (int row = r0; row <= r1; ++row) {
    const double yc = row + 0.5;
    xs.clear();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Pix& a = pts[i];
      const Pix& b = pts[(i + 1) % pts.size()];
      if ((a.y <= yc && yc < b.y) || (b.y <= yc && yc < a.y))
        xs.push_back(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
      const int c0 = static_cast<int>(std::ceil(xs[i] - 0.5));
      const int c1 = static_cast<int>(std::floor(xs[i + 1] - 0.5));
      for (int c = std::max(0, c0); c <= std::min(kRasterSize - 1, c1); ++c)
        cv.img->set(row, c, color);
    }
  }
}

// Bresenham; `dash` of {on, off} in pixels, {0,0} = solid. The dash phase
// carries across segments through `phase`.
void draw_segment(Canvas& cv, Pix a, Pix b, Rgb color, int dash_on,
                  int dash_off, int& phase) {
  int x0 = static_cast<int>(std::floor(a.x));
  int y0 = static_cast<int>(std::floor(a.y));
  const int x1 = static_cast<int>(std::floor(b.x));
  const int y1 = static_cast<int>(std::floor(b.y));
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  const int period = dash_on + dash_off;
  while (true) {
    if (period == 0 || phase % period < dash_on) cv.img->set(y0, x0, color);
    ++phase;
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void draw_polyline(Canvas& cv, const std::vector<Point>& line, Rgb color,
                   int dash_on = 0, int dash_off = 0) {
  if (line.size() < 2) return;
  int phase = 0;
  for (std::size_t i = 0; i + 1 < line.size(); ++i)
    draw_segment(cv, cv.to_pix(line[i]), cv.to_pix(line[i + 1]), color,
                 dash_on, dash_off, phase);
}

void fill_circle(Canvas& cv, const Point& center, double radius_px, Rgb color) {
  const Pix c = cv.to_pix(center);
  const int r0 = static_cast<int>(std::floor(c.y - radius_px - 1));
  const int r1 = static_cast<int>(std::ceil(c.y + radius_px + 1));
  for (int row = std::max(0, r0); row <= std::min(kRasterSize - 1, r1); ++row)
    for (int col = std::max(0, static_cast<int>(std::floor(c.x - radius_px - 1)));
         col <= std::min(kRasterSize - 1,
                          static_cast<int>(std::ceil(c.x + radius_px + 1)));
         ++col) {
      const double dx = col + 0.5 - c.x, dy = row + 0.5 - c.y;
      if (dx * dx + dy * dy <= radius_px * radius_px)
        cv.img->set(row, col, color);
    }
}

void fill_oriented_box(Canvas& cv, const AgentState& s, double len, double wid,
                       Rgb color) {
  const double c = std::cos(s.heading), sn = std::sin(s.heading);
  const double hl = len / 2.0, hw = wid / 2.0;
  auto corner = [&](double lx, double ly) -> Point {
    return {s.x + c * lx - sn * ly, s.y + sn * lx + c * ly};
  };
  fill_polygon(cv, {corner(hl, hw), corner(hl, -hw), corner(-hl, -hw),
                    corner(-hl, hw)},
               color);
}

const AgentState* last_valid(const AgentTrack& t) {
  for (auto it = t.states.rbegin(); it != t.states.rend(); ++it)
    if (it->valid) return &*it;
  return nullptr;
}

std::vector<Point> history_tail(const AgentTrack& t) {
  std::vector<Point> pts;
  for (const AgentState& s : t.states)
    if (s.valid) pts.push_back({s.x, s.y});
  return pts;
}

Rgb agent_color(const RasterPalette& p, AgentType t) {
  switch (t) {
    case AgentType::vehicle: return p.vehicle;
    case AgentType::pedestrian: return p.pedestrian;
    case AgentType::cyclist: return p.cyclist;
  }
  return p.vehicle;
}

void box_size(const AgentBoxSizes& b, AgentType t, double& len, double& wid) {
  switch (t) {
    case AgentType::vehicle: len = b.vehicle_len; wid = b.vehicle_wid; return;
    case AgentType::pedestrian: len = b.pedestrian_len; wid = b.pedestrian_wid; return;
    case AgentType::cyclist: len = b.cyclist_len; wid = b.cyclist_wid; return;
  }
}

}  // namespace

void RasterPalette::validate() const {
  const Rgb all[] = {background, lane,       centerline, road_edge,
                     solid_white, broken_white, yellow_line, crosswalk,
                     speed_bump, stop_sign,  light_red,  light_green,
                     target,     vehicle,    pedestrian, cyclist};
  const int n = static_cast<int>(sizeof(all) / sizeof(all[0]));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (all[i] == all[j])
        throw ValueError("palette entries must be distinct");
}

double meters_per_pixel_for(AgentType type) {
  switch (type) {
    case AgentType::vehicle: return 80.0 / kRasterSize;
    case AgentType::cyclist: return 60.0 / kRasterSize;
    case AgentType::pedestrian: return 40.0 / kRasterSize;
  }
  throw ValueError("bad agent type enum");
}

RasterImage rasterize(const Scene& scene, AgentType target_type,
                      const RasterPalette& palette, const AgentBoxSizes& boxes) {
  palette.validate();
  RasterImage img;
  img.meters_per_pixel = meters_per_pixel_for(target_type);
  Canvas cv{&img, img.meters_per_pixel};

  if (!(palette.background == Rgb{0, 0, 0}))
    for (int r = 0; r < kRasterSize; ++r)
      for (int c = 0; c < kRasterSize; ++c) img.set(r, c, palette.background);

  for (const Polygon& p : scene.map.lanes) fill_polygon(cv, p, palette.lane);
  for (const Polygon& p : scene.map.crosswalks)
    fill_polygon(cv, p, palette.crosswalk);
  for (const Polygon& p : scene.map.speed_bumps)
    fill_polygon(cv, p, palette.speed_bump);
  for (const RoadLine& rl : scene.map.road_lines) {
    switch (rl.type) {
      case RoadLine::Type::road_edge:
        draw_polyline(cv, rl.points, palette.road_edge);
        break;
      case RoadLine::Type::solid_white:
        draw_polyline(cv, rl.points, palette.solid_white);
        break;
      case RoadLine::Type::broken_white:
        draw_polyline(cv, rl.points, palette.broken_white, 6, 4);
        break;
      case RoadLine::Type::yellow:
        draw_polyline(cv, rl.points, palette.yellow_line);
        break;
    }
  }
  for (const Polyline& line : scene.centerlines)
    draw_polyline(cv, line, palette.centerline);

  for (const AgentTrack& t : scene.neighbors)
    draw_polyline(cv, history_tail(t), agent_color(palette, t.type));
  draw_polyline(cv, history_tail(scene.target), palette.target);

  for (const AgentTrack& t : scene.neighbors) {
    const AgentState* s = last_valid(t);
    if (s == nullptr) continue;
    double len = 0, wid = 0;
    box_size(boxes, t.type, len, wid);
    fill_oriented_box(cv, *s, len, wid, agent_color(palette, t.type));
  }

  for (const Point& p : scene.map.stop_signs)
    fill_circle(cv, p, 2.0, palette.stop_sign);
  for (const TrafficLight& tl : scene.map.traffic_lights)
    fill_circle(cv, tl.position, 3.0,
                tl.state == TrafficLight::State::red ? palette.light_red
                                                     : palette.light_green);

  const AgentState* ts = last_valid(scene.target);
  if (ts != nullptr) {
    double len = 0, wid = 0;
    box_size(boxes, target_type, len, wid);
    fill_oriented_box(cv, *ts, len, wid, palette.target);
  }
  return img;
}

void export_image(const RasterImage& img, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open image for writing: " + path);
  os << "P6\n" << kRasterSize << " " << kRasterSize << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.pixels.data()),
           static_cast<std::streamsize>(img.pixels.size()));
  if (!os) throw IoError("image write failed: " + path);
}

RasterImage import_image(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open image: " + path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  is >> magic >> w >> h >> maxval;
  if (magic != "P6" || w != kRasterSize || h != kRasterSize || maxval != 255)
    throw ParseError("unsupported PPM header: " + path);
  is.get();  // single whitespace after header
  RasterImage img;
  if (!is.read(reinterpret_cast<char*>(img.pixels.data()),
               static_cast<std::streamsize>(img.pixels.size())))
    throw ParseError("truncated PPM payload: " + path);
  return img;
}

namespace {

struct NamedColor {
  const char* name;
  Rgb RasterPalette::* field;
};

constexpr NamedColor kPaletteFields[] = {
    {"background", &RasterPalette::background},
    {"lane", &RasterPalette::lane},
    {"centerline", &RasterPalette::centerline},
    {"road_edge", &RasterPalette::road_edge},
    {"solid_white", &RasterPalette::solid_white},
    {"broken_white", &RasterPalette::broken_white},
    {"yellow_line", &RasterPalette::yellow_line},
    {"crosswalk", &RasterPalette::crosswalk},
    {"speed_bump", &RasterPalette::speed_bump},
    {"stop_sign", &RasterPalette::stop_sign},
    {"light_red", &RasterPalette::light_red},
    {"light_green", &RasterPalette::light_green},
    {"target", &RasterPalette::target},
    {"vehicle", &RasterPalette::vehicle},
    {"pedestrian", &RasterPalette::pedestrian},
    {"cyclist", &RasterPalette::cyclist},
};

}  // namespace

RasterPalette load_palette(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open palette: " + path);
  RasterPalette palette;
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::string name;
    if (!(ss >> name)) continue;
    int r, g, b;
    if (!(ss >> r >> g >> b) || r < 0 || r > 255 || g < 0 || g > 255 ||
        b < 0 || b > 255)
      throw ParseError("bad palette line: " + line);
    bool found = false;
    for (const NamedColor& nc : kPaletteFields)
      if (name == nc.name) {
        palette.*nc.field = {static_cast<std::uint8_t>(r),
                             static_cast<std::uint8_t>(g),
                             static_cast<std::uint8_t>(b)};
        found = true;
        break;
      }
    if (!found) throw ParseError("unknown palette color name: " + name);
  }
  palette.validate();
  return palette;
}

void save_palette(const std::string& path, const RasterPalette& palette) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open palette for writing: " + path);
  for (const NamedColor& nc : kPaletteFields) {
    const Rgb c = palette.*nc.field;
    os << nc.name << " " << static_cast<int>(c.r) << " " << static_cast<int>(c.g)
       << " " << static_cast<int>(c.b) << "\n";
  }
  if (!os) throw IoError("palette write failed: " + path);
}

}  // namespace recoat
