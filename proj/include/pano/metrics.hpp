#pragma once

#include <optional>

#include "pano/image.hpp"
#include "pano/sphere.hpp"

namespace pano {

struct EvalReport {
  double rmse = 0;
  double absrel = 0;
  double aligned_scale = 1;
  double aligned_offset = 0;
  long valid_pixel_count = 0;
};

// Least-squares (scale, offset) minimizing sum((a*est + b - gt)^2) over
// pixels where both maps are finite. A constant estimate degrades to an
// offset-only fit with scale 1.
std::pair<double, double> align_affine(const DepthMap& est,
                                       const DepthMap& gt);

// Mean absolute relative error over valid pixels; ground truth must be
// positive there.
double absrel(const DepthMap& est_aligned, const DepthMap& gt);

// Root mean squared error over valid pixels.
double rmse(const DepthMap& est_aligned, const DepthMap& gt);

// Aligns the estimate then reports both depth metrics.
EvalReport evaluate_depth(const DepthMap& est, const DepthMap& gt);

// Peak signal-to-noise ratio against an 8-bit peak of 255; +inf for
// identical images. `mask` restricts evaluation (nonzero = evaluated).
double psnr(const RgbImage& a, const RgbImage& b,
            const Mask* mask = nullptr);

}  // namespace pano
