#pragma once

#include <string>
#include <vector>

#include "pano/image.hpp"
#include "pano/sphere.hpp"

namespace pano {

struct PointCloud {
  std::vector<Vec3> points;  // meters
  std::vector<Rgb8> colors;
};

struct RenderResult {
  RgbImage image;
  DepthMap depth;  // +inf where nothing splatted
  ByteMap holes;   // 255 where no point landed
};

// One colored point per finite-depth pixel at depth * ray direction
// (radial depth). Infinite pixels are skipped.
PointCloud unproject(const RgbImage& rgb, const DepthMap& depth,
                     const ErpGrid& grid);

// Forward point splatting into a translated perspective camera with a
// nearest-depth z-buffer (1-pixel splats, lower pixel index wins ties).
RenderResult render_translated(const RgbImage& rgb, const DepthMap& depth,
                               const ErpGrid& grid, const CameraSpec& cam,
                               const Vec3& translation);

// Binary little-endian PLY with float32 x,y,z and uint8 red,green,blue.
void write_ply(const PointCloud& pc, const std::string& path);
PointCloud read_ply(const std::string& path);

}  // namespace pano
