#include "pano/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pano/errors.hpp"

namespace pano {

namespace {

constexpr double kPi = std::numbers::pi;

double tangent_weight_formula(double i, double j, int h, int w) {
  const double a = 2.0 * i / h - 1.0;
  const double b = 2.0 * j / w - 1.0;
  return (1.0 - a * a) * (1.0 - b * b);
}

void check_views(const DepthMap& d0, const WeightMap& phi0,
                 const std::vector<ViewEstimate>& views) {
  if (!d0.same_shape(phi0))
    throw ContractError("integrate: coarse depth and weight shapes differ");
  for (std::size_t n = 0; n < views.size(); ++n) {
    const auto& v = views[n];
    if (!v.estimate.same_shape(d0) || !v.weight.same_shape(d0))
      throw ContractError("integrate: view " + std::to_string(n) +
                          " shape mismatch");
    for (std::size_t p = 0; p < v.weight.size(); ++p) {
      if (v.weight[p] < 0)
        throw ContractError("integrate: view " + std::to_string(n) +
                            " has a negative weight");
      if (v.weight[p] > 0 && !std::isfinite(v.estimate[p]))
        throw ContractError("integrate: view " + std::to_string(n) +
                            " has positive weight on a non-finite estimate");
    }
  }
  for (std::size_t p = 0; p < phi0.size(); ++p) {
    if (phi0[p] < 0)
      throw ContractError("integrate: negative coarse weight");
    if (phi0[p] > 0 && !std::isfinite(d0[p]))
      throw ContractError(
          "integrate: positive coarse weight on non-finite coarse depth");
  }
}

}  // namespace

WeightMap tangent_weight_map(int height, int width) {
  if (height < 2 || width < 2)
    throw ContractError("tangent_weight_map: dimensions must be >= 2");
  WeightMap w(height, width);
  for (int i = 0; i < height; ++i)
    for (int j = 0; j < width; ++j)
      w.at(i, j) =
          static_cast<float>(tangent_weight_formula(i, j, height, width));
  return w;
}

std::vector<WeightMap> erp_view_weights(const std::vector<CameraSpec>& rig,
                                        const ErpGrid& grid) {
  std::vector<WeightMap> maps;
  maps.reserve(rig.size());
  for (const auto& cam : rig) {
    WeightMap w(grid.height, grid.width, 0.0f);
    const Mat3 cam_from_world =
        rotation_from_angles(cam.yaw, cam.pitch, cam.roll).transposed();
    const double f = cam.focal();
    for (int i = 0; i < grid.height; ++i) {
      for (int j = 0; j < grid.width; ++j) {
        const Vec3 d = cam_from_world * pixel_to_direction(grid, i, j);
        if (d.z <= 0) continue;
        const double u = f * d.x / d.z + cam.width / 2.0 - 0.5;
        const double v = cam.height / 2.0 - f * d.y / d.z - 0.5;
        if (u < -0.5 || u > cam.width - 0.5 || v < -0.5 ||
            v > cam.height - 0.5)
          continue;
        // The separable falloff evaluated at the continuous tangent
        // position; the image extent [-0.5, W-0.5] spans the formula's
        // [0, W] so the frustum edge is exactly zero.
        w.at(i, j) = static_cast<float>(std::max(
            0.0, tangent_weight_formula(v + 0.5, u + 0.5, cam.height,
                                        cam.width)));
      }
    }
    maps.push_back(std::move(w));
  }
  return maps;
}

WeightMap coarse_weight_floorplan(const Mask& partial_mask,
                                  const SemanticMap& semantic,
                                  const IntegrationConfig& cfg,
                                  const ErpGrid& grid) {
  if (!partial_mask.same_shape(grid.height, grid.width))
    throw ContractError("coarse_weight_floorplan: mask shape mismatch");
  for (const auto& ch : semantic.channels)
    if (!ch.same_shape(grid.height, grid.width))
      throw ContractError("coarse_weight_floorplan: semantic shape mismatch");
  WeightMap w(grid.height, grid.width);
  for (std::size_t p = 0; p < w.size(); ++p) {
    bool occupied = partial_mask[p] > 0;
    for (const auto& ch : semantic.channels) occupied = occupied || ch[p];
    w[p] = static_cast<float>(occupied ? cfg.eta_low : cfg.eta_high);
  }
  return w;
}

WeightMap coarse_weight_terrain(const DepthMap& d0,
                                const IntegrationConfig& cfg) {
  float max_finite = 0;
  for (std::size_t p = 0; p < d0.size(); ++p)
    if (std::isfinite(d0[p])) max_finite = std::max(max_finite, d0[p]);
  if (max_finite <= 0)
    throw ContractError(
        "coarse_weight_terrain: coarse depth has no finite values to anchor");
  WeightMap w(d0.height(), d0.width());
  for (std::size_t p = 0; p < d0.size(); ++p) {
    if (!std::isfinite(d0[p])) {
      w[p] = 0;
      continue;
    }
    const double dn = d0[p] / max_finite;
    w[p] = static_cast<float>(cfg.alpha / (dn * dn + cfg.epsilon));
  }
  return w;
}

double depth_loss(const DepthMap& x, const DepthMap& d0, const WeightMap& phi0,
                  const std::vector<ViewEstimate>& views,
                  const std::vector<AffineCoeff>& coeffs) {
  if (views.size() != coeffs.size())
    throw ContractError("depth_loss: one coefficient pair per view required");
  check_views(d0, phi0, views);
  if (!x.same_shape(d0)) throw ContractError("depth_loss: shape mismatch");
  double loss = 0;
  for (std::size_t p = 0; p < x.size(); ++p) {
    if (phi0[p] > 0) {
      if (!std::isfinite(x[p]))
        throw ContractError("depth_loss: positive weight on non-finite x");
      const double r = x[p] - d0[p];
      loss += phi0[p] * r * r;
    }
    for (std::size_t n = 0; n < views.size(); ++n) {
      const double w = views[n].weight[p];
      if (w <= 0) continue;
      if (!std::isfinite(x[p]))
        throw ContractError("depth_loss: positive weight on non-finite x");
      const double r =
          x[p] - (coeffs[n].scale * views[n].estimate[p] + coeffs[n].offset);
      loss += w * r * r;
    }
  }
  return loss;
}

NormalSystem assemble_normal_system(const DepthMap& d0, const WeightMap& phi0,
                                    const std::vector<ViewEstimate>& views) {
  check_views(d0, phi0, views);
  const int n_views = static_cast<int>(views.size());
  bool anchored = false;
  for (std::size_t p = 0; p < phi0.size(); ++p) anchored |= phi0[p] > 0;
  if (!anchored)
    throw NumericalError(
        "assemble_normal_system: coarse weight is zero everywhere, nothing "
        "anchors the affine coefficients");

  NormalSystem sys;
  sys.view_count = n_views;
  sys.diag.assign(n_views, {0, 0, 0, 0});
  sys.off_diag.assign(static_cast<std::size_t>(n_views) * n_views,
                      {0, 0, 0, 0});
  sys.rhs.assign(n_views, {0, 0});

  for (std::size_t p = 0; p < d0.size(); ++p) {
    double sigma = phi0[p];
    for (const auto& v : views) sigma += v.weight[p];
    if (sigma <= 0) continue;
    for (int k = 0; k < n_views; ++k) {
      const double wk = views[k].weight[p];
      if (wk <= 0) continue;
      const double dk = views[k].estimate[p];
      const double ck = wk * (sigma - wk) / sigma;
      auto& dkk = sys.diag[k];
      dkk[0] += ck * dk * dk;
      dkk[1] += ck * dk;
      dkk[2] += ck * dk;
      dkk[3] += ck;
      if (phi0[p] > 0) {
        const double cb = wk * phi0[p] / sigma * d0[p];
        sys.rhs[k][0] += cb * dk;
        sys.rhs[k][1] += cb;
      }
      for (int l = 0; l < n_views; ++l) {
        if (l == k) continue;
        const double wl = views[l].weight[p];
        if (wl <= 0) continue;
        const double dl = views[l].estimate[p];
        const double cu = -wk * wl / sigma;
        auto& u = sys.off_diag[static_cast<std::size_t>(k) * n_views + l];
        u[0] += cu * dk * dl;
        u[1] += cu * dk;
        u[2] += cu * dl;
        u[3] += cu;
      }
    }
  }
  return sys;
}

std::vector<AffineCoeff> solve_affine_coeffs(const NormalSystem& sys,
                                             double ridge) {
  const int n = sys.view_count;
  const int dim = 2 * n;
  if (n == 0) return {};
  std::vector<double> a(static_cast<std::size_t>(dim) * dim, 0.0);
  std::vector<double> rhs(dim, 0.0);
  auto put = [&](int r, int c, double v) { a[static_cast<std::size_t>(r) * dim + c] = v; };
  for (int k = 0; k < n; ++k) {
    const auto& d = sys.diag[k];
    put(2 * k, 2 * k, d[0]);
    put(2 * k, 2 * k + 1, d[1]);
    put(2 * k + 1, 2 * k, d[2]);
    put(2 * k + 1, 2 * k + 1, d[3]);
    rhs[2 * k] = sys.rhs[k][0];
    rhs[2 * k + 1] = sys.rhs[k][1];
    for (int l = 0; l < n; ++l) {
      if (l == k) continue;
      const auto& u = sys.off_diag[static_cast<std::size_t>(k) * n + l];
      put(2 * k, 2 * l, u[0]);
      put(2 * k, 2 * l + 1, u[1]);
      put(2 * k + 1, 2 * l, u[2]);
      put(2 * k + 1, 2 * l + 1, u[3]);
    }
  }

  double diag_mean = 0;
  for (int r = 0; r < dim; ++r) diag_mean += a[static_cast<std::size_t>(r) * dim + r];
  diag_mean /= dim;
  for (int r = 0; r < dim; ++r)
    a[static_cast<std::size_t>(r) * dim + r] += ridge * diag_mean;

  double max_abs = 0;
  for (double v : a) max_abs = std::max(max_abs, std::abs(v));
  const double pivot_tol = 1e-12 * std::max(max_abs, 1e-300);

  // Gaussian elimination with partial pivoting.
  std::vector<int> perm(dim);
  for (int r = 0; r < dim; ++r) perm[r] = r;
  auto at = [&](int r, int c) -> double& {
    return a[static_cast<std::size_t>(perm[r]) * dim + c];
  };
  for (int col = 0; col < dim; ++col) {
    int best = col;
    for (int r = col + 1; r < dim; ++r)
      if (std::abs(at(r, col)) > std::abs(at(best, col))) best = r;
    std::swap(perm[col], perm[best]);
    const double pivot = at(col, col);
    if (std::abs(pivot) < pivot_tol)
      throw NumericalError(
          "solve_affine_coeffs: singular system at view " +
              std::to_string(col / 2) +
              " (constant or unsupported estimate); increase ridge",
          col / 2);
    for (int r = col + 1; r < dim; ++r) {
      const double m = at(r, col) / pivot;
      if (m == 0) continue;
      at(r, col) = 0;
      for (int c = col + 1; c < dim; ++c) at(r, c) -= m * at(col, c);
      rhs[perm[r]] -= m * rhs[perm[col]];
    }
  }
  std::vector<double> x(dim);
  for (int r = dim - 1; r >= 0; --r) {
    double s = rhs[perm[r]];
    for (int c = r + 1; c < dim; ++c) s -= at(r, c) * x[c];
    x[r] = s / at(r, r);
  }
  std::vector<AffineCoeff> coeffs(n);
  for (int k = 0; k < n; ++k) {
    coeffs[k] = {x[2 * k], x[2 * k + 1]};
    if (!std::isfinite(coeffs[k].scale) || !std::isfinite(coeffs[k].offset))
      throw NumericalError(
          "solve_affine_coeffs: non-finite coefficients for view " +
              std::to_string(k),
          k);
  }
  return coeffs;
}

DepthMap fuse_depth(const DepthMap& d0, const WeightMap& phi0,
                    const std::vector<ViewEstimate>& views,
                    const std::vector<AffineCoeff>& coeffs) {
  if (views.size() != coeffs.size())
    throw ContractError("fuse_depth: one coefficient pair per view required");
  DepthMap fused(d0.height(), d0.width(), kInfDepth);
  for (std::size_t p = 0; p < d0.size(); ++p) {
    double num = 0, sigma = 0;
    if (phi0[p] > 0) {
      num += phi0[p] * d0[p];
      sigma += phi0[p];
    }
    for (std::size_t n = 0; n < views.size(); ++n) {
      const double w = views[n].weight[p];
      if (w <= 0) continue;
      num += w * (coeffs[n].scale * views[n].estimate[p] + coeffs[n].offset);
      sigma += w;
    }
    if (sigma > 0) fused[p] = static_cast<float>(num / sigma);
  }
  return fused;
}

IntegrationResult integrate(const DepthMap& d0, const WeightMap& phi0,
                            const std::vector<ViewEstimate>& views,
                            const IntegrationConfig& cfg) {
  const NormalSystem sys = assemble_normal_system(d0, phi0, views);
  IntegrationResult res;
  res.coeffs = solve_affine_coeffs(sys, cfg.ridge);
  res.fused = fuse_depth(d0, phi0, views, res.coeffs);
  res.loss = depth_loss(res.fused, d0, phi0, views, res.coeffs);
  return res;
}

IntegrationResult oracle_integrate(const DepthMap& d0, const WeightMap& phi0,
                                   const std::vector<ViewEstimate>& views,
                                   int max_iters, double tol) {
  check_views(d0, phi0, views);
  IntegrationResult res;
  res.coeffs.assign(views.size(), AffineCoeff{1.0, 0.0});

  // Internal state stays in double so the iteration is not limited by the
  // float storage of the exchanged maps.
  std::vector<double> x(d0.size(), 0.0);
  auto x_step = [&]() {
    for (std::size_t p = 0; p < d0.size(); ++p) {
      double num = 0, sigma = 0;
      if (phi0[p] > 0) {
        num += double(phi0[p]) * d0[p];
        sigma += phi0[p];
      }
      for (std::size_t n = 0; n < views.size(); ++n) {
        const double w = views[n].weight[p];
        if (w <= 0) continue;
        num += w * (res.coeffs[n].scale * views[n].estimate[p] +
                    res.coeffs[n].offset);
        sigma += w;
      }
      x[p] = sigma > 0 ? num / sigma
                       : std::numeric_limits<double>::infinity();
    }
  };
  auto loss_at = [&]() {
    double loss = 0;
    for (std::size_t p = 0; p < d0.size(); ++p) {
      if (phi0[p] > 0) {
        const double r = x[p] - d0[p];
        loss += phi0[p] * r * r;
      }
      for (std::size_t n = 0; n < views.size(); ++n) {
        const double w = views[n].weight[p];
        if (w <= 0) continue;
        const double r = x[p] - (res.coeffs[n].scale * views[n].estimate[p] +
                                 res.coeffs[n].offset);
        loss += w * r * r;
      }
    }
    return loss;
  };

  double prev_loss = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iters; ++it) {
    x_step();
    // Per-view 2x2 weighted least squares against the current fused map.
    for (std::size_t n = 0; n < views.size(); ++n) {
      double sdd = 0, sd = 0, sw = 0, sdx = 0, sx = 0;
      for (std::size_t p = 0; p < d0.size(); ++p) {
        const double w = views[n].weight[p];
        if (w <= 0) continue;
        const double dh = views[n].estimate[p];
        sdd += w * dh * dh;
        sd += w * dh;
        sw += w;
        sdx += w * dh * x[p];
        sx += w * x[p];
      }
      const double det = sdd * sw - sd * sd;
      if (std::abs(det) < 1e-14 * std::max(1.0, sdd * sw)) continue;
      res.coeffs[n] = {(sdx * sw - sd * sx) / det,
                       (sdd * sx - sd * sdx) / det};
    }
    x_step();
    res.loss = loss_at();
    if (prev_loss - res.loss <= tol * std::abs(res.loss)) break;
    prev_loss = res.loss;
  }
  res.fused = DepthMap(d0.height(), d0.width());
  for (std::size_t p = 0; p < x.size(); ++p)
    res.fused[p] = static_cast<float>(x[p]);
  return res;
}

}  // namespace pano
