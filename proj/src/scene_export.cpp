#include "pano/scene_export.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "pano/errors.hpp"

namespace pano {

PointCloud unproject(const RgbImage& rgb, const DepthMap& depth,
                     const ErpGrid& grid) {
  if (!rgb.same_shape(depth) || !depth.same_shape(grid.height, grid.width))
    throw ContractError("unproject: shape mismatch");
  PointCloud pc;
  for (int i = 0; i < grid.height; ++i) {
    for (int j = 0; j < grid.width; ++j) {
      const float d = depth.at(i, j);
      if (!std::isfinite(d)) continue;
      if (d < 0) throw ContractError("unproject: negative depth");
      pc.points.push_back(pixel_to_direction(grid, i, j) * d);
      pc.colors.push_back(rgb.at(i, j));
    }
  }
  return pc;
}

RenderResult render_translated(const RgbImage& rgb, const DepthMap& depth,
                               const ErpGrid& grid, const CameraSpec& cam,
                               const Vec3& translation) {
  RenderResult out{
      .image = RgbImage(cam.height, cam.width),
      .depth = DepthMap(cam.height, cam.width, kInfDepth),
      .holes = ByteMap(cam.height, cam.width, std::uint8_t{255}),
  };
  const Mat3 cam_from_world =
      rotation_from_angles(cam.yaw, cam.pitch, cam.roll).transposed();
  const double f = cam.focal();
  for (int i = 0; i < grid.height; ++i) {
    for (int j = 0; j < grid.width; ++j) {
      const float d = depth.at(i, j);
      if (!std::isfinite(d)) continue;
      const Vec3 world = pixel_to_direction(grid, i, j) * double(d);
      const Vec3 q = cam_from_world * (world - translation);
      if (q.z <= 0) continue;
      const long u = std::lround(f * q.x / q.z + cam.width / 2.0 - 0.5);
      const long v = std::lround(cam.height / 2.0 - f * q.y / q.z - 0.5);
      if (u < 0 || u >= cam.width || v < 0 || v >= cam.height) continue;
      const double radial = q.norm();
      auto& zbuf = out.depth.at(static_cast<int>(v), static_cast<int>(u));
      if (radial < zbuf) {
        zbuf = static_cast<float>(radial);
        out.image.at(static_cast<int>(v), static_cast<int>(u)) = rgb.at(i, j);
        out.holes.at(static_cast<int>(v), static_cast<int>(u)) = 0;
      }
    }
  }
  return out;
}

void write_ply(const PointCloud& pc, const std::string& path) {
  if (pc.points.size() != pc.colors.size())
    throw ContractError("write_ply: point/color count mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "ply\n"
      << "format binary_little_endian 1.0\n"
      << "element vertex " << pc.points.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "end_header\n";
  for (std::size_t k = 0; k < pc.points.size(); ++k) {
    const float xyz[3] = {static_cast<float>(pc.points[k].x),
                          static_cast<float>(pc.points[k].y),
                          static_cast<float>(pc.points[k].z)};
    out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
    out.write(reinterpret_cast<const char*>(&pc.colors[k]), 3);
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

PointCloud read_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  std::size_t vertex_count = 0;
  bool header_ok = false;
  if (!std::getline(in, line) || line != "ply")
    throw IoError("'" + path + "': not a PLY file");
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "element") {
      std::string what;
      ls >> what >> vertex_count;
      if (what != "vertex")
        throw IoError("'" + path + "': unsupported PLY element");
    } else if (word == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "binary_little_endian")
        throw IoError("'" + path + "': unsupported PLY format");
    } else if (word == "end_header") {
      header_ok = true;
      break;
    }
  }
  if (!header_ok) throw IoError("'" + path + "': truncated PLY header");
  PointCloud pc;
  pc.points.resize(vertex_count);
  pc.colors.resize(vertex_count);
  for (std::size_t k = 0; k < vertex_count; ++k) {
    float xyz[3];
    in.read(reinterpret_cast<char*>(xyz), sizeof(xyz));
    in.read(reinterpret_cast<char*>(&pc.colors[k]), 3);
    if (!in) throw IoError("'" + path + "': truncated PLY payload");
    pc.points[k] = {xyz[0], xyz[1], xyz[2]};
  }
  return pc;
}

}  // namespace pano
