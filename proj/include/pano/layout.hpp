#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pano/image.hpp"
#include "pano/sphere.hpp"

namespace pano {

struct Vec2 {
  double x = 0, z = 0;
};

struct ObserverSpec {
  Vec2 position;          // meters (floor plan) or grid coordinates (terrain)
  double eye_height = 0;  // absolute height for rooms, above-terrain for maps
  CameraSpec camera;
  std::optional<std::string> partial_image;  // path of the conditioning photo
};

struct RoomObject {
  std::string class_name;
  Vec2 bbox_min;  // top view, axis aligned
  Vec2 bbox_max;
  double bottom = 0;
  double top = 0;
};

struct FloorPlan {
  std::vector<Vec2> corners;  // counter-clockwise simple polygon
  double floor_height = 0;
  double ceiling_height = 0;
  std::vector<RoomObject> objects;
  ObserverSpec observer;

  void validate() const;  // throws ContractError naming the bad field
};

struct TerrainMap {
  FloatMap heights;         // meters, H_ter x W_ter
  double cell_size = 1;     // meters per grid step
  double max_distance = 0;  // ray marching horizon, meters
  ObserverSpec observer;    // position in continuous grid coordinates

  void validate() const;
  // Bilinear terrain height at continuous grid coordinates (clamped).
  double height_at(double u, double v) const;
};

struct GmmComponent {
  double weight = 0;  // pi_k, meters
  Vec2 mean;          // grid coordinates
  double cov_xx = 1, cov_xz = 0, cov_zz = 1;
};

struct GmmSpec {
  int height = 0;
  int width = 0;
  std::vector<GmmComponent> components;

  void validate() const;
};

// Binary per-class occupancy over the ERP grid, with the ray-hit distance
// per channel so writers can pick a nearest class.
struct SemanticMap {
  std::vector<std::string> legend;         // class names, first appearance
  std::vector<ByteMap> channels;           // values in {0,1}
  std::vector<FloatMap> hit_distances;     // +inf where the channel is 0
};

using Layout = std::variant<FloorPlan, TerrainMap>;

// Distance from the observer eye point to the unfurnished room boundary
// (walls, floor, ceiling) along one unit ray.
double floorplan_ray_depth(const FloorPlan& fp, const Vec3& dir);

// Distance to the first heightfield intersection along one unit ray from
// the observer eye point; +inf when nothing is hit within max_distance.
double terrain_ray_depth(const TerrainMap& tm, const Vec3& dir);

// Distance to the unfurnished room boundary (walls, floor, ceiling)
// along every ERP pixel ray. Objects are ignored.
DepthMap floorplan_coarse_depth(const FloorPlan& fp, const ErpGrid& grid);

// Ray vs. object-box occupancy, one binary channel per distinct class.
SemanticMap floorplan_semantic_map(const FloorPlan& fp, const ErpGrid& grid);

// Distance to the first heightfield intersection per pixel ray; +inf when
// nothing is hit within max_distance.
DepthMap terrain_coarse_depth(const TerrainMap& tm, const ErpGrid& grid);

// Heights from a Gaussian mixture evaluated at integer grid points.
TerrainMap synth_terrain_gmm(const GmmSpec& spec);

// Parses and fully validates a layout JSON document (UTF-8 text).
// `base_dir` resolves relative heightfield / image references.
Layout parse_layout(const std::string& json_text,
                    const std::string& base_dir = ".");

GmmSpec parse_gmm_spec(const std::string& json_text);

}  // namespace pano
