#include "pano/layout.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <numbers>

#include <nlohmann/json.hpp>

#include "pano/errors.hpp"
#include "pano/io.hpp"

namespace pano {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

double polygon_signed_area(const std::vector<Vec2>& poly) {
  double a = 0;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const auto& p = poly[k];
    const auto& q = poly[(k + 1) % poly.size()];
    a += p.x * q.z - q.x * p.z;
  }
  return a / 2;
}

bool segments_properly_intersect(const Vec2& a, const Vec2& b, const Vec2& c,
                                 const Vec2& d) {
  auto cross = [](const Vec2& o, const Vec2& p, const Vec2& q) {
    return (p.x - o.x) * (q.z - o.z) - (q.x - o.x) * (p.z - o.z);
  };
  const double d1 = cross(c, d, a), d2 = cross(c, d, b);
  const double d3 = cross(a, b, c), d4 = cross(a, b, d);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
         ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

bool polygon_is_simple(const std::vector<Vec2>& poly) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      // Adjacent edges share an endpoint; skip them.
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (segments_properly_intersect(poly[i], poly[(i + 1) % n], poly[j],
                                      poly[(j + 1) % n]))
        return false;
    }
  }
  return true;
}

bool point_inside_polygon(const std::vector<Vec2>& poly, const Vec2& p) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t k = 0, m = n - 1; k < n; m = k++) {
    const auto& a = poly[k];
    const auto& b = poly[m];
    if ((a.z > p.z) != (b.z > p.z) &&
        p.x < (b.x - a.x) * (p.z - a.z) / (b.z - a.z) + a.x)
      inside = !inside;
  }
  return inside;
}

double point_to_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const double abx = b.x - a.x, abz = b.z - a.z;
  const double len2 = abx * abx + abz * abz;
  double t = len2 > 0 ? ((p.x - a.x) * abx + (p.z - a.z) * abz) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = p.x - (a.x + t * abx), dz = p.z - (a.z + t * abz);
  return std::hypot(dx, dz);
}

}  // namespace

void FloorPlan::validate() const {
  if (corners.size() < 3)
    throw ContractError("floorplan.corners: need at least 3 corners");
  if (!polygon_is_simple(corners))
    throw ContractError("floorplan.corners: polygon self-intersects");
  const double area = polygon_signed_area(corners);
  if (!(std::abs(area) > 1e-12))
    throw ContractError("floorplan.corners: polygon is degenerate");
  if (area < 0)
    throw ContractError("floorplan.corners: polygon must be counter-clockwise");
  if (!(ceiling_height > floor_height))
    throw ContractError(
        "floorplan.ceiling_height: must exceed floor_height");
  if (!point_inside_polygon(corners, observer.position))
    throw ContractError(
        "floorplan.observer.position: must lie strictly inside the polygon");
  for (std::size_t k = 0; k < corners.size(); ++k) {
    if (point_to_segment_distance(observer.position, corners[k],
                                  corners[(k + 1) % corners.size()]) < 1e-9)
      throw ContractError(
          "floorplan.observer.position: must lie strictly inside the polygon");
  }
  if (!(observer.eye_height >= floor_height &&
        observer.eye_height <= ceiling_height))
    throw ContractError(
        "floorplan.observer.eye_height: must lie between floor and ceiling");
  for (std::size_t k = 0; k < objects.size(); ++k) {
    const auto& o = objects[k];
    const std::string path = "floorplan.objects[" + std::to_string(k) + "]";
    if (o.class_name.empty())
      throw ContractError(path + ".class: must be non-empty");
    if (!(o.bbox_max.x > o.bbox_min.x && o.bbox_max.z > o.bbox_min.z))
      throw ContractError(path + ".bbox: must have positive area");
    if (!(o.top > o.bottom))
      throw ContractError(path + ".top: must exceed bottom");
  }
}

void TerrainMap::validate() const {
  if (heights.height() < 2 || heights.width() < 2)
    throw ContractError("terrain.heights: grid must be at least 2x2");
  if (!(cell_size > 0))
    throw ContractError("terrain.cell_size: must be positive");
  if (!(max_distance > 0))
    throw ContractError("terrain.max_distance: must be positive");
  for (std::size_t p = 0; p < heights.size(); ++p)
    if (!std::isfinite(heights[p]))
      throw ContractError("terrain.heights: all heights must be finite");
  if (!(observer.eye_height > 0))
    throw ContractError("terrain.observer.eye_height: must be positive");
  const auto& pos = observer.position;
  if (!(pos.x >= 0 && pos.x <= heights.height() - 1 && pos.z >= 0 &&
        pos.z <= heights.width() - 1))
    throw ContractError("terrain.observer.grid_pos: outside the grid");
}

double TerrainMap::height_at(double u, double v) const {
  const double fu = std::clamp(u, 0.0, heights.height() - 1.0);
  const double fv = std::clamp(v, 0.0, heights.width() - 1.0);
  const int u0 = std::min(static_cast<int>(fu), heights.height() - 2);
  const int v0 = std::min(static_cast<int>(fv), heights.width() - 2);
  const double a = fu - u0, b = fv - v0;
  return heights.at(u0, v0) * (1 - a) * (1 - b) +
         heights.at(u0, v0 + 1) * (1 - a) * b +
         heights.at(u0 + 1, v0) * a * (1 - b) +
         heights.at(u0 + 1, v0 + 1) * a * b;
}

void GmmSpec::validate() const {
  if (height < 2 || width < 2)
    throw ContractError("gmm.height/width: output grid must be at least 2x2");
  if (components.empty())
    throw ContractError("gmm.components: need at least one component");
  for (std::size_t k = 0; k < components.size(); ++k) {
    const auto& c = components[k];
    const double det = c.cov_xx * c.cov_zz - c.cov_xz * c.cov_xz;
    if (!(c.cov_xx > 0 && c.cov_zz > 0 && det > 0))
      throw ContractError("gmm.components[" + std::to_string(k) +
                          "].cov: must be symmetric positive-definite");
  }
}

namespace {

double room_ray_depth(const FloorPlan& fp, const Vec3& eye, const Vec3& d) {
  double best = kInf;
  const std::size_t n = fp.corners.size();
  // Wall quads: polygon edges extruded from floor to ceiling.
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2& a = fp.corners[k];
    const Vec2& b = fp.corners[(k + 1) % n];
    const double ex = b.x - a.x, ez = b.z - a.z;
    const double denom = d.x * ez - d.z * ex;
    if (std::abs(denom) < 1e-15) continue;  // ray parallel to the wall
    const double t = ((a.x - eye.x) * ez - (a.z - eye.z) * ex) / denom;
    if (t <= 0 || t >= best) continue;
    const double u = std::abs(ex) > std::abs(ez)
                         ? (eye.x + t * d.x - a.x) / ex
                         : (eye.z + t * d.z - a.z) / ez;
    if (u < 0 || u > 1) continue;
    const double y = eye.y + t * d.y;
    if (y < fp.floor_height - 1e-12 || y > fp.ceiling_height + 1e-12) continue;
    best = t;
  }
  if (d.y < 0) {
    const double t = (fp.floor_height - eye.y) / d.y;
    if (t > 0) best = std::min(best, t);
  } else if (d.y > 0) {
    const double t = (fp.ceiling_height - eye.y) / d.y;
    if (t > 0) best = std::min(best, t);
  }
  return best;
}

}  // namespace

double floorplan_ray_depth(const FloorPlan& fp, const Vec3& dir) {
  fp.validate();
  const Vec3 eye{fp.observer.position.x, fp.observer.eye_height,
                 fp.observer.position.z};
  return room_ray_depth(fp, eye, dir.normalized());
}

DepthMap floorplan_coarse_depth(const FloorPlan& fp, const ErpGrid& grid) {
  fp.validate();
  DepthMap depth(grid.height, grid.width, 0.0f);
  const Vec3 eye{fp.observer.position.x, fp.observer.eye_height,
                 fp.observer.position.z};
  for (int i = 0; i < grid.height; ++i)
    for (int j = 0; j < grid.width; ++j)
      depth.at(i, j) = static_cast<float>(
          room_ray_depth(fp, eye, pixel_to_direction(grid, i, j)));
  return depth;
}

namespace {

// Slab test against the solid box; returns the entry distance (0 when the
// origin is inside), or +inf on a miss.
double ray_box_distance(const Vec3& origin, const Vec3& dir, const Vec3& lo,
                        const Vec3& hi) {
  double tmin = 0, tmax = kInf;
  const double o[3] = {origin.x, origin.y, origin.z};
  const double d[3] = {dir.x, dir.y, dir.z};
  const double l[3] = {lo.x, lo.y, lo.z};
  const double h[3] = {hi.x, hi.y, hi.z};
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (o[a] < l[a] || o[a] > h[a]) return kInf;
      continue;
    }
    double t0 = (l[a] - o[a]) / d[a];
    double t1 = (h[a] - o[a]) / d[a];
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return kInf;
  }
  return tmin;
}

}  // namespace

SemanticMap floorplan_semantic_map(const FloorPlan& fp, const ErpGrid& grid) {
  fp.validate();
  SemanticMap sem;
  std::map<std::string, int> channel_of;
  for (const auto& o : fp.objects) {
    if (!channel_of.contains(o.class_name)) {
      channel_of[o.class_name] = static_cast<int>(sem.legend.size());
      sem.legend.push_back(o.class_name);
      sem.channels.emplace_back(grid.height, grid.width, std::uint8_t{0});
      sem.hit_distances.emplace_back(grid.height, grid.width, kInfDepth);
    }
  }
  const Vec3 eye{fp.observer.position.x, fp.observer.eye_height,
                 fp.observer.position.z};
  for (int i = 0; i < grid.height; ++i) {
    for (int j = 0; j < grid.width; ++j) {
      const Vec3 d = pixel_to_direction(grid, i, j);
      for (const auto& o : fp.objects) {
        const double t = ray_box_distance(
            eye, d, {o.bbox_min.x, o.bottom, o.bbox_min.z},
            {o.bbox_max.x, o.top, o.bbox_max.z});
        if (!std::isfinite(t)) continue;
        const int c = channel_of.at(o.class_name);
        sem.channels[c].at(i, j) = 1;
        auto& dist = sem.hit_distances[c].at(i, j);
        dist = std::min(dist, static_cast<float>(t));
      }
    }
  }
  return sem;
}

namespace {

struct TerrainRayContext {
  const TerrainMap& tm;
  Vec3 eye;
  float max_height;

  explicit TerrainRayContext(const TerrainMap& terrain) : tm(terrain) {
    tm.validate();
    const double eye_u = tm.observer.position.x;
    const double eye_v = tm.observer.position.z;
    const double ground = tm.height_at(eye_u, eye_v);
    // World frame: x runs along grid columns, z along grid rows, y up.
    eye = {eye_v * tm.cell_size, ground + tm.observer.eye_height,
           eye_u * tm.cell_size};
    if (eye.y <= ground)
      throw ContractError("terrain.observer: eye point below the terrain");
    max_height = tm.heights[0];
    for (std::size_t p = 0; p < tm.heights.size(); ++p)
      max_height = std::max(max_height, tm.heights[p]);
  }

  double surface(double t, const Vec3& d) const {
    const double u = (eye.z + t * d.z) / tm.cell_size;
    const double v = (eye.x + t * d.x) / tm.cell_size;
    return tm.height_at(u, v);
  }

  // Fixed-step march at cell_size/4 followed by bisection refinement.
  double cast(const Vec3& d) const {
    if (d.y >= 0 && eye.y >= max_height) return kInf;  // never descends
    const double step = tm.cell_size / 4;
    double t_prev = 0;
    for (double t = step; t <= tm.max_distance; t += step) {
      if (eye.y + t * d.y - surface(t, d) <= 0) {
        double lo = t_prev, hi = t;
        for (int it = 0; it < 40; ++it) {
          const double mid = (lo + hi) / 2;
          (eye.y + mid * d.y - surface(mid, d) <= 0 ? hi : lo) = mid;
        }
        return (lo + hi) / 2;
      }
      t_prev = t;
    }
    return kInf;
  }
};

}  // namespace

double terrain_ray_depth(const TerrainMap& tm, const Vec3& dir) {
  return TerrainRayContext(tm).cast(dir.normalized());
}

DepthMap terrain_coarse_depth(const TerrainMap& tm, const ErpGrid& grid) {
  const TerrainRayContext ctx(tm);
  DepthMap depth(grid.height, grid.width, kInfDepth);
  for (int i = 0; i < grid.height; ++i)
    for (int j = 0; j < grid.width; ++j)
      depth.at(i, j) =
          static_cast<float>(ctx.cast(pixel_to_direction(grid, i, j)));
  return depth;
}

TerrainMap synth_terrain_gmm(const GmmSpec& spec) {
  spec.validate();
  TerrainMap tm;
  tm.heights = FloatMap(spec.height, spec.width, 0.0f);
  for (int i = 0; i < spec.height; ++i) {
    for (int j = 0; j < spec.width; ++j) {
      double h = 0;
      for (const auto& c : spec.components) {
        const double du = i - c.mean.x;
        const double dv = j - c.mean.z;
        const double det = c.cov_xx * c.cov_zz - c.cov_xz * c.cov_xz;
        const double q = (c.cov_zz * du * du - 2 * c.cov_xz * du * dv +
                          c.cov_xx * dv * dv) /
                         det;
        h += c.weight * std::exp(-0.5 * q);
      }
      tm.heights.at(i, j) = static_cast<float>(h);
    }
  }
  tm.cell_size = 1.0;
  tm.max_distance = 4.0 * std::max(spec.height, spec.width);
  tm.observer.position = {(spec.height - 1) / 2.0, (spec.width - 1) / 2.0};
  tm.observer.eye_height = 1.7;
  tm.observer.camera = CameraSpec(0, 0, 0, kPi / 2, 512, 512);
  return tm;
}

namespace {

using nlohmann::json;

const json& require_field(const json& j, const std::string& key,
                          const std::string& path) {
  if (!j.contains(key))
    throw ContractError(path + "." + key + ": missing required field");
  return j.at(key);
}

double require_number(const json& j, const std::string& key,
                      const std::string& path) {
  const json& v = require_field(j, key, path);
  if (!v.is_number())
    throw ContractError(path + "." + key + ": expected a number");
  return v.get<double>();
}

Vec2 parse_vec2(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ContractError(path + ": expected [x, z]");
  return {v[0].get<double>(), v[1].get<double>()};
}

ObserverSpec parse_observer(const json& j, const std::string& path,
                            bool terrain) {
  ObserverSpec obs{
      .position = parse_vec2(
          require_field(j, terrain ? "grid_pos" : "position", path), path),
      .eye_height = require_number(j, "eye_height", path),
      .camera = CameraSpec(0, 0, 0, kPi / 2, 512, 512),
  };
  const double deg = kPi / 180;
  const double yaw = j.value("yaw_deg", 0.0) * deg;
  const double pitch = j.value("pitch_deg", 0.0) * deg;
  const double roll = j.value("roll_deg", 0.0) * deg;
  const double hfov = j.value("hfov_deg", 90.0) * deg;
  const int w = j.value("image_width", 512);
  const int h = j.value("image_height", 512);
  try {
    obs.camera = CameraSpec(yaw, pitch, roll, hfov, w, h);
  } catch (const ContractError& e) {
    throw ContractError(path + ": " + e.what());
  }
  if (j.contains("partial_image"))
    obs.partial_image = j.at("partial_image").get<std::string>();
  return obs;
}

}  // namespace

Layout parse_layout(const std::string& json_text, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ContractError(std::string("layout: malformed JSON: ") + e.what());
  }
  const std::string kind =
      require_field(doc, "kind", "layout").get<std::string>();
  if (kind == "floorplan") {
    FloorPlan fp;
    const json& corners = require_field(doc, "corners", "floorplan");
    if (!corners.is_array())
      throw ContractError("floorplan.corners: expected an array");
    for (std::size_t k = 0; k < corners.size(); ++k)
      fp.corners.push_back(parse_vec2(
          corners[k], "floorplan.corners[" + std::to_string(k) + "]"));
    fp.floor_height = require_number(doc, "floor_height", "floorplan");
    fp.ceiling_height = require_number(doc, "ceiling_height", "floorplan");
    if (doc.contains("objects")) {
      const json& objs = doc.at("objects");
      for (std::size_t k = 0; k < objs.size(); ++k) {
        const std::string path = "floorplan.objects[" + std::to_string(k) + "]";
        const json& o = objs[k];
        const json& bbox = require_field(o, "bbox", path);
        if (!bbox.is_array() || bbox.size() != 2)
          throw ContractError(path + ".bbox: expected [[xmin,zmin],[xmax,zmax]]");
        fp.objects.push_back(RoomObject{
            .class_name = require_field(o, "class", path).get<std::string>(),
            .bbox_min = parse_vec2(bbox[0], path + ".bbox[0]"),
            .bbox_max = parse_vec2(bbox[1], path + ".bbox[1]"),
            .bottom = require_number(o, "bottom", path),
            .top = require_number(o, "top", path),
        });
      }
    }
    fp.observer = parse_observer(require_field(doc, "observer", "floorplan"),
                                 "floorplan.observer", false);
    fp.validate();
    return fp;
  }
  if (kind == "terrain") {
    TerrainMap tm;
    const json& heights = require_field(doc, "heights", "terrain");
    if (heights.is_object() && heights.contains("pfm")) {
      const auto path = std::filesystem::path(base_dir) /
                        heights.at("pfm").get<std::string>();
      tm.heights = read_pfm(path.string());
    } else if (heights.is_array() && !heights.empty() &&
               heights[0].is_array()) {
      const int h = static_cast<int>(heights.size());
      const int w = static_cast<int>(heights[0].size());
      tm.heights = FloatMap(h, w);
      for (int i = 0; i < h; ++i) {
        if (static_cast<int>(heights[i].size()) != w)
          throw ContractError("terrain.heights: ragged rows");
        for (int j = 0; j < w; ++j)
          tm.heights.at(i, j) = heights[i][j].get<float>();
      }
    } else {
      throw ContractError(
          "terrain.heights: expected a 2D array or {\"pfm\": path}");
    }
    tm.cell_size = require_number(doc, "cell_size", "terrain");
    tm.max_distance = require_number(doc, "max_distance", "terrain");
    tm.observer = parse_observer(require_field(doc, "observer", "terrain"),
                                 "terrain.observer", true);
    tm.validate();
    return tm;
  }
  throw ContractError("layout.kind: unknown layout kind '" + kind + "'");
}

GmmSpec parse_gmm_spec(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ContractError(std::string("gmm: malformed JSON: ") + e.what());
  }
  GmmSpec spec;
  spec.height = static_cast<int>(require_number(doc, "height", "gmm"));
  spec.width = static_cast<int>(require_number(doc, "width", "gmm"));
  const json& comps = require_field(doc, "components", "gmm");
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const std::string path = "gmm.components[" + std::to_string(k) + "]";
    const json& c = comps[k];
    const json& cov = require_field(c, "cov", path);
    if (!cov.is_array() || cov.size() != 2 || cov[0].size() != 2 ||
        cov[1].size() != 2)
      throw ContractError(path + ".cov: expected [[a,b],[b,c]]");
    if (std::abs(cov[0][1].get<double>() - cov[1][0].get<double>()) > 1e-12)
      throw ContractError(path + ".cov: must be symmetric");
    spec.components.push_back(GmmComponent{
        .weight = require_number(c, "weight", path),
        .mean = parse_vec2(require_field(c, "mean", path), path + ".mean"),
        .cov_xx = cov[0][0].get<double>(),
        .cov_xz = cov[0][1].get<double>(),
        .cov_zz = cov[1][1].get<double>(),
    });
  }
  spec.validate();
  return spec;
}

}  // namespace pano
