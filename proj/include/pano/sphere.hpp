#pragma once

#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "pano/image.hpp"

namespace pano {

struct Vec3 {
  double x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const {
    const double n = norm();
    return {x / n, y / n, z / n};
  }
};

struct Mat3 {
  // row-major
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }
  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0;
        for (int k = 0; k < 3; ++k) s += m[i * 3 + k] * o.m[k * 3 + j];
        r.m[i * 3 + j] = s;
      }
    return r;
  }
  Mat3 transposed() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[i * 3 + j] = m[j * 3 + i];
    return r;
  }
};

// Equirectangular grid covering the full sphere.
//
// Angular convention shared by the whole library: y is up, longitude phi=0
// looks along +z and phi=pi/2 along +x. Pixel centers sit at
//   theta = pi/2 - pi*(i+0.5)/H,   phi = -pi + 2*pi*(j+0.5)/W
// for integer row i and column j.
struct ErpGrid {
  int height = 0;
  int width = 0;

  ErpGrid(int h, int w);
};

// Perspective pinhole camera posed on the sphere. Square pixels; the
// vertical FoV follows from the focal length and image height.
struct CameraSpec {
  double yaw = 0;    // radians, about +y; yaw=pi/2 turns forward to +x
  double pitch = 0;  // radians, positive tilts up
  double roll = 0;   // radians, about the optical axis
  double hfov = 1.5707963267948966;  // radians, in (0, pi)
  int width = 512;   // pixels
  int height = 512;  // pixels

  CameraSpec() = default;
  CameraSpec(double yaw, double pitch, double roll, double hfov, int width,
             int height);

  double focal() const { return (width / 2.0) / std::tan(hfov / 2.0); }
};

using Mask = FloatMap;  // coverage in [0,1], same shape as its image

// Direction of the ray through continuous pixel coordinate (i, j).
// Requires 0 <= i <= H and 0 <= j <= W.
Vec3 pixel_to_direction(const ErpGrid& grid, double i, double j);

// Inverse of pixel_to_direction up to longitude wrap. At the poles the
// latitude is clamped to the nearest row center and longitude comes from
// atan2 (0 when undefined).
std::pair<double, double> direction_to_pixel(const ErpGrid& grid,
                                             const Vec3& d);

// World-from-camera rotation, applied as R = R_yaw * R_pitch * R_roll.
Mat3 rotation_from_angles(double yaw, double pitch, double roll);

// Camera-frame ray of pixel (u=col, v=row); +z forward, +x right, +y up.
Vec3 camera_pixel_ray(const CameraSpec& cam, double v, double u);

// Projects a perspective image onto the ERP sphere. Pixels inside the
// frustum get a bilinear sample and mask 1; everything else is zero.
std::pair<RgbImage, Mask> perspective_to_erp(const RgbImage& img,
                                             const CameraSpec& cam,
                                             const ErpGrid& grid);

// Gnomonic extraction: renders the camera's view of the panorama.
RgbImage erp_to_perspective(const RgbImage& erp, const CameraSpec& cam);

// The 16-view tangent rig: hfov 90 degrees, 512x512, four views at
// latitude +pi/4, four at -pi/4, eight on the equator.
std::vector<CameraSpec> tangent_rig();

// Bilinear ERP sampling; columns wrap around the seam, rows clamp.
float sample_erp_bilinear(const FloatMap& map, double i, double j);
Vec3 sample_erp_bilinear_rgb(const RgbImage& img, double i, double j);

}  // namespace pano
