#include "pano/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pano/errors.hpp"

namespace pano {

namespace {
constexpr double kPi = std::numbers::pi;
}

ErpGrid::ErpGrid(int h, int w) : height(h), width(w) {
  if (h < 1 || w < 1) throw ContractError("ErpGrid: dimensions must be >= 1");
}

CameraSpec::CameraSpec(double yaw_, double pitch_, double roll_, double hfov_,
                       int width_, int height_)
    : yaw(yaw_), pitch(pitch_), roll(roll_), hfov(hfov_), width(width_),
      height(height_) {
  if (!(hfov > 0 && hfov < kPi))
    throw ContractError("CameraSpec: hfov must be in (0, pi)");
  if (width < 1 || height < 1)
    throw ContractError("CameraSpec: image dimensions must be >= 1");
}

Vec3 pixel_to_direction(const ErpGrid& grid, double i, double j) {
  if (!(i >= 0 && i <= grid.height && j >= 0 && j <= grid.width))
    throw ContractError("pixel_to_direction: coordinates out of range");
  double theta = kPi / 2 - kPi * (i + 0.5) / grid.height;
  theta = std::clamp(theta, -kPi / 2, kPi / 2);
  const double phi = -kPi + 2 * kPi * (j + 0.5) / grid.width;
  const double c = std::cos(theta);
  return {c * std::sin(phi), std::sin(theta), c * std::cos(phi)};
}

std::pair<double, double> direction_to_pixel(const ErpGrid& grid,
                                             const Vec3& d) {
  const double theta = std::asin(std::clamp(d.y, -1.0, 1.0));
  const double phi = (d.x == 0 && d.z == 0) ? 0.0 : std::atan2(d.x, d.z);
  double i = (kPi / 2 - theta) * grid.height / kPi - 0.5;
  i = std::clamp(i, 0.0, grid.height - 1.0);  // pole rows
  double j = (phi + kPi) * grid.width / (2 * kPi) - 0.5;
  j = std::fmod(j, static_cast<double>(grid.width));
  if (j < 0) j += grid.width;
  return {i, j};
}

Mat3 rotation_from_angles(double yaw, double pitch, double roll) {
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  const double cr = std::cos(roll), sr = std::sin(roll);
  // About +y; maps camera forward +z to (sin yaw, 0, cos yaw).
  const Mat3 ry{{cy, 0, sy, 0, 1, 0, -sy, 0, cy}};
  // About +x; positive pitch tilts forward up.
  const Mat3 rp{{1, 0, 0, 0, cp, sp, 0, -sp, cp}};
  // About the optical axis.
  const Mat3 rr{{cr, -sr, 0, sr, cr, 0, 0, 0, 1}};
  return ry * rp * rr;
}

Vec3 camera_pixel_ray(const CameraSpec& cam, double v, double u) {
  const double f = cam.focal();
  return Vec3{(u + 0.5 - cam.width / 2.0) / f,
              (cam.height / 2.0 - (v + 0.5)) / f, 1.0}
      .normalized();
}

namespace {

struct BilinearTaps {
  int i0, i1, j0, j1;
  double wi, wj;  // weight of the (i1, j1) side
};

BilinearTaps erp_taps(int height, int width, double i, double j) {
  double fi = std::clamp(i, 0.0, height - 1.0);
  int i0 = static_cast<int>(std::floor(fi));
  if (i0 > height - 2) i0 = std::max(0, height - 2);
  const int i1 = std::min(i0 + 1, height - 1);
  const double wi = fi - i0;

  double fj = std::fmod(j, static_cast<double>(width));
  if (fj < 0) fj += width;
  const int j0 = static_cast<int>(std::floor(fj)) % width;
  const int j1 = (j0 + 1) % width;  // seam wraps
  const double wj = fj - j0;
  return {i0, i1, j0, j1, wi, wj};
}

}  // namespace

float sample_erp_bilinear(const FloatMap& map, double i, double j) {
  const auto t = erp_taps(map.height(), map.width(), i, j);
  const double a = map.at(t.i0, t.j0) * (1 - t.wj) + map.at(t.i0, t.j1) * t.wj;
  const double b = map.at(t.i1, t.j0) * (1 - t.wj) + map.at(t.i1, t.j1) * t.wj;
  return static_cast<float>(a * (1 - t.wi) + b * t.wi);
}

Vec3 sample_erp_bilinear_rgb(const RgbImage& img, double i, double j) {
  const auto t = erp_taps(img.height(), img.width(), i, j);
  auto lerp2 = [&](auto get) {
    const double a = get(t.i0, t.j0) * (1 - t.wj) + get(t.i0, t.j1) * t.wj;
    const double b = get(t.i1, t.j0) * (1 - t.wj) + get(t.i1, t.j1) * t.wj;
    return a * (1 - t.wi) + b * t.wi;
  };
  return {lerp2([&](int a, int b) { return double(img.at(a, b).r); }),
          lerp2([&](int a, int b) { return double(img.at(a, b).g); }),
          lerp2([&](int a, int b) { return double(img.at(a, b).b); })};
}

namespace {

// Clamped (no wrap) bilinear sample of a perspective image.
Vec3 sample_persp_bilinear(const RgbImage& img, double v, double u) {
  const double fu = std::clamp(u, 0.0, img.width() - 1.0);
  const double fv = std::clamp(v, 0.0, img.height() - 1.0);
  int u0 = std::min(static_cast<int>(std::floor(fu)), img.width() - 2);
  int v0 = std::min(static_cast<int>(std::floor(fv)), img.height() - 2);
  u0 = std::max(u0, 0);
  v0 = std::max(v0, 0);
  const int u1 = std::min(u0 + 1, img.width() - 1);
  const int v1 = std::min(v0 + 1, img.height() - 1);
  const double wu = fu - u0, wv = fv - v0;
  auto lerp2 = [&](auto get) {
    const double a = get(v0, u0) * (1 - wu) + get(v0, u1) * wu;
    const double b = get(v1, u0) * (1 - wu) + get(v1, u1) * wu;
    return a * (1 - wv) + b * wv;
  };
  return {lerp2([&](int a, int b) { return double(img.at(a, b).r); }),
          lerp2([&](int a, int b) { return double(img.at(a, b).g); }),
          lerp2([&](int a, int b) { return double(img.at(a, b).b); })};
}

Rgb8 to_rgb8(const Vec3& c) {
  auto q = [](double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0l, 255l));
  };
  return {q(c.x), q(c.y), q(c.z)};
}

}  // namespace

std::pair<RgbImage, Mask> perspective_to_erp(const RgbImage& img,
                                             const CameraSpec& cam,
                                             const ErpGrid& grid) {
  if (!img.same_shape(cam.height, cam.width))
    throw ContractError("perspective_to_erp: image does not match camera");
  RgbImage out(grid.height, grid.width);
  Mask mask(grid.height, grid.width, 0.0f);
  const Mat3 world_from_cam = rotation_from_angles(cam.yaw, cam.pitch, cam.roll);
  const Mat3 cam_from_world = world_from_cam.transposed();
  const double f = cam.focal();
  const double half_w = cam.width / 2.0, half_h = cam.height / 2.0;

  for (int i = 0; i < grid.height; ++i) {
    for (int j = 0; j < grid.width; ++j) {
      const Vec3 d = cam_from_world * pixel_to_direction(grid, i, j);
      if (d.z <= 0) continue;
      const double u = f * d.x / d.z + half_w - 0.5;
      const double v = half_h - f * d.y / d.z - 0.5;
      if (u < -0.5 || u > cam.width - 0.5 || v < -0.5 || v > cam.height - 0.5)
        continue;
      out.at(i, j) = to_rgb8(sample_persp_bilinear(img, v, u));
      mask.at(i, j) = 1.0f;
    }
  }
  return {std::move(out), std::move(mask)};
}

RgbImage erp_to_perspective(const RgbImage& erp, const CameraSpec& cam) {
  RgbImage out(cam.height, cam.width);
  const ErpGrid grid(erp.height(), erp.width());
  const Mat3 world_from_cam = rotation_from_angles(cam.yaw, cam.pitch, cam.roll);
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const Vec3 d = world_from_cam * camera_pixel_ray(cam, v, u);
      const auto [i, j] = direction_to_pixel(grid, d);
      out.at(v, u) = to_rgb8(sample_erp_bilinear_rgb(erp, i, j));
    }
  }
  return out;
}

std::vector<CameraSpec> tangent_rig() {
  std::vector<CameraSpec> rig;
  rig.reserve(16);
  for (int n = 1; n <= 16; ++n) {
    const double theta = (n <= 4) ? kPi / 4 : (n <= 8) ? -kPi / 4 : 0.0;
    double phi = (n <= 8) ? kPi * n / 2 : kPi * n / 4;
    phi = std::fmod(phi, 2 * kPi);
    rig.emplace_back(phi, theta, 0.0, kPi / 2, 512, 512);
  }
  return rig;
}

}  // namespace pano
