#include "pano/metrics.hpp"

#include <cmath>

#include "pano/errors.hpp"

namespace pano {

namespace {

void require_same_shape(const DepthMap& a, const DepthMap& b,
                        const char* who) {
  if (!a.same_shape(b))
    throw ContractError(std::string(who) + ": shape mismatch");
}

bool valid_pixel(float e, float g) {
  return std::isfinite(e) && std::isfinite(g);
}

}  // namespace

std::pair<double, double> align_affine(const DepthMap& est,
                                       const DepthMap& gt) {
  require_same_shape(est, gt, "align_affine");
  double se = 0, sg = 0, see = 0, seg = 0;
  long m = 0;
  for (std::size_t p = 0; p < est.size(); ++p) {
    if (!valid_pixel(est[p], gt[p])) continue;
    se += est[p];
    sg += gt[p];
    see += double(est[p]) * est[p];
    seg += double(est[p]) * gt[p];
    ++m;
  }
  if (m < 2)
    throw ContractError("align_affine: need at least 2 valid pixels");
  const double det = see * m - se * se;
  if (det <= 1e-12 * std::max(1.0, see * m)) {
    // Constant estimate: scale is unidentifiable, fit the offset only.
    return {1.0, (sg - se) / m};
  }
  const double scale = (seg * m - se * sg) / det;
  const double offset = (see * sg - se * seg) / det;
  return {scale, offset};
}

double absrel(const DepthMap& est_aligned, const DepthMap& gt) {
  require_same_shape(est_aligned, gt, "absrel");
  double sum = 0;
  long m = 0;
  for (std::size_t p = 0; p < gt.size(); ++p) {
    if (!valid_pixel(est_aligned[p], gt[p])) continue;
    if (gt[p] <= 0)
      throw ContractError("absrel: ground truth must be positive");
    sum += std::abs(est_aligned[p] - gt[p]) / gt[p];
    ++m;
  }
  if (m == 0) throw ContractError("absrel: no valid pixels");
  return sum / m;
}

double rmse(const DepthMap& est_aligned, const DepthMap& gt) {
  require_same_shape(est_aligned, gt, "rmse");
  double sum = 0;
  long m = 0;
  for (std::size_t p = 0; p < gt.size(); ++p) {
    if (!valid_pixel(est_aligned[p], gt[p])) continue;
    const double r = double(est_aligned[p]) - gt[p];
    sum += r * r;
    ++m;
  }
  if (m == 0) throw ContractError("rmse: no valid pixels");
  return std::sqrt(sum / m);
}

EvalReport evaluate_depth(const DepthMap& est, const DepthMap& gt) {
  const auto [scale, offset] = align_affine(est, gt);
  DepthMap aligned(est.height(), est.width(), kInfDepth);
  for (std::size_t p = 0; p < est.size(); ++p)
    if (std::isfinite(est[p]))
      aligned[p] = static_cast<float>(scale * est[p] + offset);
  EvalReport report;
  report.aligned_scale = scale;
  report.aligned_offset = offset;
  report.rmse = rmse(aligned, gt);
  report.absrel = absrel(aligned, gt);
  for (std::size_t p = 0; p < est.size(); ++p)
    if (valid_pixel(est[p], gt[p])) ++report.valid_pixel_count;
  return report;
}

double psnr(const RgbImage& a, const RgbImage& b, const Mask* mask) {
  if (!a.same_shape(b)) throw ContractError("psnr: shape mismatch");
  if (mask && !mask->same_shape(a))
    throw ContractError("psnr: mask shape mismatch");
  double se = 0;
  long m = 0;
  for (std::size_t p = 0; p < a.size(); ++p) {
    if (mask && (*mask)[p] <= 0) continue;
    const double dr = double(a[p].r) - b[p].r;
    const double dg = double(a[p].g) - b[p].g;
    const double db = double(a[p].b) - b[p].b;
    se += dr * dr + dg * dg + db * db;
    m += 3;
  }
  if (m == 0) throw ContractError("psnr: empty mask");
  const double mse = se / m;
  if (mse == 0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(255.0) - 10.0 * std::log10(mse);
}

}  // namespace pano
