#pragma once

#include <array>
#include <vector>

#include "pano/image.hpp"
#include "pano/layout.hpp"
#include "pano/sphere.hpp"

namespace pano {

// One tangent view's monocular depth estimate re-projected to ERP, with
// its per-pixel weight (the diagonal of the view's weight matrix).
// The estimate must be finite wherever the weight is positive.
struct ViewEstimate {
  DepthMap estimate;
  WeightMap weight;
};

struct IntegrationConfig {
  double eta_low = 0.0;    // coarse weight where partial image / objects sit
  double eta_high = 2.0;   // coarse weight elsewhere
  double alpha = 1e-3;     // terrain coarse-weight numerator
  double epsilon = 1e-8;   // terrain coarse-weight stabilizer
  double ridge = 1e-10;    // relative regularization of the normal system
};

// Per-view affine correction: depth ~ scale * estimate + offset.
struct AffineCoeff {
  double scale = 1;
  double offset = 0;
};

// Block-structured normal equations of the coefficient solve: N diagonal
// 2x2 blocks, NxN off-diagonal 2x2 blocks, N 2-vector right-hand sides.
struct NormalSystem {
  int view_count = 0;
  std::vector<std::array<double, 4>> diag;      // D_k, row-major 2x2
  std::vector<std::array<double, 4>> off_diag;  // U_{k,l} at k*N+l
  std::vector<std::array<double, 2>> rhs;       // b_k
};

struct IntegrationResult {
  DepthMap fused;
  std::vector<AffineCoeff> coeffs;
  double loss = 0;
};

// Separable quadratic falloff: 1 at the tangent-image center, 0 on edges.
WeightMap tangent_weight_map(int height, int width);

// Tangent-image weights resampled to ERP, one map per view; zero outside
// each view's frustum.
std::vector<WeightMap> erp_view_weights(const std::vector<CameraSpec>& rig,
                                        const ErpGrid& grid);

// Floor-plan coarse weight: eta_low where the partial image or any object
// covers the pixel, eta_high elsewhere.
WeightMap coarse_weight_floorplan(const Mask& partial_mask,
                                  const SemanticMap& semantic,
                                  const IntegrationConfig& cfg,
                                  const ErpGrid& grid);

// Terrain coarse weight: alpha / (d0^2 + epsilon) after normalizing d0 by
// its finite maximum; zero where d0 is infinite.
WeightMap coarse_weight_terrain(const DepthMap& d0,
                                const IntegrationConfig& cfg);

// The weighted squared-error objective at a candidate solution.
double depth_loss(const DepthMap& x, const DepthMap& d0, const WeightMap& phi0,
                  const std::vector<ViewEstimate>& views,
                  const std::vector<AffineCoeff>& coeffs);

NormalSystem assemble_normal_system(const DepthMap& d0, const WeightMap& phi0,
                                    const std::vector<ViewEstimate>& views);

// Dense Gaussian elimination with partial pivoting on the 2N x 2N system,
// after adding ridge * mean(diagonal) to the diagonal.
std::vector<AffineCoeff> solve_affine_coeffs(const NormalSystem& sys,
                                             double ridge);

// Per-pixel weighted mean of the coarse depth and affine-corrected
// estimates; +inf where every weight is zero.
DepthMap fuse_depth(const DepthMap& d0, const WeightMap& phi0,
                    const std::vector<ViewEstimate>& views,
                    const std::vector<AffineCoeff>& coeffs);

// Closed-form minimizer of the objective: assemble, solve, fuse.
IntegrationResult integrate(const DepthMap& d0, const WeightMap& phi0,
                            const std::vector<ViewEstimate>& views,
                            const IntegrationConfig& cfg = {});

// Independent alternating-minimization reference for the same objective.
// Converges to the global minimum of the convex quadratic on
// non-degenerate instances.
IntegrationResult oracle_integrate(const DepthMap& d0, const WeightMap& phi0,
                                   const std::vector<ViewEstimate>& views,
                                   int max_iters = 20000, double tol = 0.0);

}  // namespace pano
