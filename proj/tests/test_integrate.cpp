#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pano/errors.hpp"
#include "pano/integrate.hpp"
#include "pano/sphere.hpp"

using namespace pano;

namespace {
constexpr double kPi = std::numbers::pi;

struct Instance {
  DepthMap d0;
  WeightMap phi0;
  std::vector<ViewEstimate> views;
};

// Random positive-weight instance of the integration problem.
Instance random_instance(std::mt19937& rng, int h, int w, int n_views) {
  std::uniform_real_distribution<float> depth(0.5f, 10.0f);
  std::uniform_real_distribution<float> weight(0.1f, 2.0f);
  Instance inst{DepthMap(h, w), WeightMap(h, w), {}};
  for (std::size_t p = 0; p < inst.d0.size(); ++p) {
    inst.d0[p] = depth(rng);
    inst.phi0[p] = weight(rng);
  }
  for (int n = 0; n < n_views; ++n) {
    ViewEstimate v{DepthMap(h, w), WeightMap(h, w)};
    for (std::size_t p = 0; p < v.estimate.size(); ++p) {
      v.estimate[p] = depth(rng);
      v.weight[p] = weight(rng);
    }
    inst.views.push_back(std::move(v));
  }
  return inst;
}

DepthMap single(float v) {
  DepthMap m(1, 1);
  m[0] = v;
  return m;
}

}  // namespace

TEST_CASE("tangent weight map hand cases") {
  const WeightMap w = tangent_weight_map(64, 128);
  CHECK(w.at(32, 64) == doctest::Approx(1.0));
  CHECK(w.at(0, 17) == 0.0f);
  CHECK(w.at(9, 0) == 0.0f);
  CHECK(w.at(16, 64) == doctest::Approx(0.75));
}

TEST_CASE("erp view weights vanish outside the frustum, peak on axis") {
  // Odd ERP so the equatorial forward pixel is exact.
  const ErpGrid grid(255, 511);
  const auto rig = tangent_rig();
  const auto weights = erp_view_weights({rig[15]}, grid);  // yaw 0, pitch 0
  REQUIRE(weights.size() == 1);
  CHECK(weights[0].at(127, 255) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(weights[0].at(127, 0) == 0.0f);   // behind the camera
  CHECK(weights[0].at(0, 255) == 0.0f);   // near the pole, outside hfov 90
}

TEST_CASE("16-view rig covers every pixel with |theta| <= 80 degrees") {
  const ErpGrid grid(512, 1024);
  const auto weights = erp_view_weights(tangent_rig(), grid);
  for (int i = 0; i < grid.height; ++i) {
    const double theta = kPi / 2 - kPi * (i + 0.5) / grid.height;
    if (std::abs(theta) > 80.0 * kPi / 180) continue;
    for (int j = 0; j < grid.width; ++j) {
      double total = 0;
      for (const auto& w : weights) total += w.at(i, j);
      CHECK(total > 0);
    }
  }
}

TEST_CASE("floor-plan coarse weights use eta_low on occupied pixels") {
  const ErpGrid grid(4, 8);
  Mask partial(4, 8, 0.0f);
  partial.at(1, 2) = 1.0f;
  SemanticMap sem;
  sem.legend = {"chair"};
  sem.channels.emplace_back(4, 8, std::uint8_t{0});
  sem.channels[0].at(2, 5) = 1;
  const IntegrationConfig cfg;
  const WeightMap w = coarse_weight_floorplan(partial, sem, cfg, grid);
  CHECK(w.at(1, 2) == 0.0f);  // partial image
  CHECK(w.at(2, 5) == 0.0f);  // object
  CHECK(w.at(0, 0) == 2.0f);  // free
}

TEST_CASE("terrain coarse weights follow alpha / (d^2 + eps)") {
  DepthMap d0(1, 3);
  d0[0] = 4.0f;   // the finite max -> normalized 1
  d0[1] = 0.0f;   // normalized 0
  d0[2] = kInfDepth;
  const WeightMap w = coarse_weight_terrain(d0, IntegrationConfig{});
  CHECK(w[0] == doctest::Approx(9.9999999e-4).epsilon(1e-6));
  CHECK(w[1] == doctest::Approx(1e5).epsilon(1e-9));
  CHECK(w[2] == 0.0f);

  DepthMap all_inf(2, 2, kInfDepth);
  CHECK_THROWS_AS(coarse_weight_terrain(all_inf, IntegrationConfig{}),
                  ContractError);
}

TEST_CASE("depth loss hand cases") {
  CHECK(depth_loss(single(1), single(1), single(3), {}, {}) == 0.0);
  CHECK(depth_loss(single(2), single(1), single(3), {}, {}) ==
        doctest::Approx(3.0));
  const std::vector<ViewEstimate> views{{single(2), single(2)}};
  const std::vector<AffineCoeff> coeffs{{1.0, 0.0}};
  CHECK(depth_loss(single(2), single(1), single(3), views, coeffs) ==
        doctest::Approx(3.0));
}

TEST_CASE("depth loss rejects positive weight on non-finite values") {
  CHECK_THROWS_AS(
      depth_loss(single(kInfDepth), single(1), single(1), {}, {}),
      ContractError);
  const std::vector<ViewEstimate> views{{single(kInfDepth), single(1)}};
  CHECK_THROWS_AS(depth_loss(single(1), single(1), single(1), views,
                             {AffineCoeff{1, 0}}),
                  ContractError);
}

TEST_CASE("normal system single-pixel hand assembly") {
  const std::vector<ViewEstimate> views{{single(3), single(1)}};
  const NormalSystem sys = assemble_normal_system(single(2), single(1), views);
  REQUIRE(sys.view_count == 1);
  CHECK(sys.diag[0][0] == doctest::Approx(4.5));
  CHECK(sys.diag[0][1] == doctest::Approx(1.5));
  CHECK(sys.diag[0][2] == doctest::Approx(1.5));
  CHECK(sys.diag[0][3] == doctest::Approx(0.5));
  CHECK(sys.rhs[0][0] == doctest::Approx(3.0));
  CHECK(sys.rhs[0][1] == doctest::Approx(1.0));
}

TEST_CASE("zero-weight view contributes an empty block") {
  std::mt19937 rng(5);
  Instance inst = random_instance(rng, 4, 8, 2);
  for (std::size_t p = 0; p < inst.views[1].weight.size(); ++p)
    inst.views[1].weight[p] = 0.0f;
  const NormalSystem sys =
      assemble_normal_system(inst.d0, inst.phi0, inst.views);
  for (int e = 0; e < 4; ++e) {
    CHECK(sys.diag[1][e] == 0.0);
    CHECK(sys.off_diag[0 * 2 + 1][e] == 0.0);
    CHECK(sys.off_diag[1 * 2 + 0][e] == 0.0);
  }
  CHECK(sys.rhs[1][0] == 0.0);
  CHECK(sys.rhs[1][1] == 0.0);
}

TEST_CASE("off-diagonal blocks satisfy U_kl = U_lk^T") {
  std::mt19937 rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    const Instance inst = random_instance(rng, 8, 16, 4);
    const NormalSystem sys =
        assemble_normal_system(inst.d0, inst.phi0, inst.views);
    for (int k = 0; k < 4; ++k) {
      const auto& dk = sys.diag[k];
      CHECK(dk[1] == doctest::Approx(dk[2]));          // D_k symmetric
      CHECK(dk[0] >= 0);
      CHECK(dk[3] >= 0);
      CHECK(dk[0] * dk[3] - dk[1] * dk[2] >= -1e-9);   // PSD
      for (int l = 0; l < 4; ++l) {
        if (l == k) continue;
        const auto& u = sys.off_diag[k * 4 + l];
        const auto& ut = sys.off_diag[l * 4 + k];
        CHECK(u[0] == doctest::Approx(ut[0]).epsilon(1e-10));
        CHECK(u[1] == doctest::Approx(ut[2]).epsilon(1e-10));
        CHECK(u[2] == doctest::Approx(ut[1]).epsilon(1e-10));
        CHECK(u[3] == doctest::Approx(ut[3]).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("all-zero coarse weight fails with the anchoring error") {
  std::mt19937 rng(23);
  Instance inst = random_instance(rng, 4, 8, 2);
  for (std::size_t p = 0; p < inst.phi0.size(); ++p) inst.phi0[p] = 0.0f;
  CHECK_THROWS_AS(assemble_normal_system(inst.d0, inst.phi0, inst.views),
                  NumericalError);
}

TEST_CASE("exact affine recovery for consistent estimates") {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> scale(0.5, 2.0);
  std::uniform_real_distribution<double> offset(-1.0, 1.0);
  Instance inst = random_instance(rng, 16, 32, 3);
  std::vector<std::pair<double, double>> truth;
  for (auto& v : inst.views) {
    const double m = scale(rng), o = offset(rng);
    truth.emplace_back(m, o);
    // estimate = (gt - o) / m, so scale m and offset o map it back.
    for (std::size_t p = 0; p < v.estimate.size(); ++p)
      v.estimate[p] = static_cast<float>((inst.d0[p] - o) / m);
  }
  const IntegrationResult res = integrate(inst.d0, inst.phi0, inst.views);
  double gt_norm2 = 0;
  for (std::size_t p = 0; p < inst.d0.size(); ++p)
    gt_norm2 += double(inst.d0[p]) * inst.d0[p];
  CHECK(res.loss <= 1e-10 * gt_norm2);
  for (std::size_t n = 0; n < inst.views.size(); ++n) {
    CHECK(res.coeffs[n].scale == doctest::Approx(truth[n].first).epsilon(1e-6));
    CHECK(res.coeffs[n].offset ==
          doctest::Approx(truth[n].second).epsilon(1e-6));
  }
  for (std::size_t p = 0; p < res.fused.size(); ++p)
    CHECK(res.fused[p] == doctest::Approx(inst.d0[p]).epsilon(1e-5));
}

TEST_CASE("constant estimate is singular without ridge, finite with it") {
  std::mt19937 rng(37);
  Instance inst = random_instance(rng, 8, 16, 2);
  for (std::size_t p = 0; p < inst.views[0].estimate.size(); ++p)
    inst.views[0].estimate[p] = 4.2f;
  const NormalSystem sys =
      assemble_normal_system(inst.d0, inst.phi0, inst.views);
  CHECK_THROWS_AS(solve_affine_coeffs(sys, 0.0), NumericalError);
  try {
    solve_affine_coeffs(sys, 0.0);
  } catch (const NumericalError& e) {
    CHECK(e.view_index == 0);
  }
  const auto coeffs = solve_affine_coeffs(sys, IntegrationConfig{}.ridge);
  for (const auto& c : coeffs) {
    CHECK(std::isfinite(c.scale));
    CHECK(std::isfinite(c.offset));
  }
}

TEST_CASE("fuse_depth hand cases") {
  const std::vector<ViewEstimate> views{{single(4), single(1)}};
  const DepthMap fused =
      fuse_depth(single(2), single(1), views, {AffineCoeff{1, 0}});
  CHECK(fused[0] == doctest::Approx(3.0));

  const std::vector<ViewEstimate> zero{{single(4), single(0)}};
  const DepthMap only_coarse =
      fuse_depth(single(2), single(1), zero, {AffineCoeff{1, 0}});
  CHECK(only_coarse[0] == 2.0f);

  const DepthMap orphan =
      fuse_depth(single(2), single(0), zero, {AffineCoeff{1, 0}});
  CHECK(std::isinf(orphan[0]));
}

TEST_CASE("fused depth is a per-pixel convex combination") {
  std::mt19937 rng(41);
  const Instance inst = random_instance(rng, 8, 16, 3);
  const IntegrationResult res = integrate(inst.d0, inst.phi0, inst.views);
  for (std::size_t p = 0; p < res.fused.size(); ++p) {
    double lo = inst.d0[p], hi = inst.d0[p];
    for (std::size_t n = 0; n < inst.views.size(); ++n) {
      const double mapped = res.coeffs[n].scale * inst.views[n].estimate[p] +
                            res.coeffs[n].offset;
      lo = std::min(lo, mapped);
      hi = std::max(hi, mapped);
    }
    CHECK(res.fused[p] >= lo - 1e-6);
    CHECK(res.fused[p] <= hi + 1e-6);
  }
}

TEST_CASE("closed form matches the alternating-minimization oracle") {
  std::mt19937 rng(43);
  for (int rep = 0; rep < 5; ++rep) {
    const Instance inst = random_instance(rng, 32, 64, 3);
    const IntegrationResult closed =
        integrate(inst.d0, inst.phi0, inst.views);
    const IntegrationResult oracle =
        oracle_integrate(inst.d0, inst.phi0, inst.views);
    CHECK(std::abs(closed.loss - oracle.loss) <=
          1e-6 * std::max(closed.loss, 1e-30));
    for (std::size_t p = 0; p < closed.fused.size(); ++p)
      CHECK(closed.fused[p] ==
            doctest::Approx(oracle.fused[p]).epsilon(1e-5));
  }
}

TEST_CASE("oracle loss sequence is non-increasing and reaches zero on "
          "consistent data") {
  std::mt19937 rng(47);
  Instance inst = random_instance(rng, 8, 16, 2);
  for (auto& v : inst.views)
    for (std::size_t p = 0; p < v.estimate.size(); ++p)
      v.estimate[p] = (inst.d0[p] - 0.3f) / 1.7f;
  const IntegrationResult res =
      oracle_integrate(inst.d0, inst.phi0, inst.views);
  CHECK(res.loss <= 1e-8);
}

TEST_CASE("integrate beats any explicit candidate (global optimality)") {
  std::mt19937 rng(53);
  const Instance inst = random_instance(rng, 8, 16, 2);
  const IntegrationResult res = integrate(inst.d0, inst.phi0, inst.views);
  std::uniform_real_distribution<double> pert(-0.2, 0.2);
  for (int rep = 0; rep < 20; ++rep) {
    DepthMap x = res.fused;
    for (std::size_t p = 0; p < x.size(); ++p)
      x[p] += static_cast<float>(pert(rng));
    std::vector<AffineCoeff> coeffs = res.coeffs;
    for (auto& c : coeffs) {
      c.scale += pert(rng);
      c.offset += pert(rng);
    }
    CHECK(depth_loss(x, inst.d0, inst.phi0, inst.views, coeffs) >=
          res.loss - 1e-8 * (1 + res.loss));
  }
}

TEST_CASE("scale equivariance of the integrated solution") {
  std::mt19937 rng(59);
  Instance inst = random_instance(rng, 8, 16, 2);
  const IntegrationResult base = integrate(inst.d0, inst.phi0, inst.views);
  const double c = 3.5;
  Instance scaled = inst;
  for (std::size_t p = 0; p < scaled.d0.size(); ++p)
    scaled.d0[p] *= static_cast<float>(c);
  for (auto& v : scaled.views)
    for (std::size_t p = 0; p < v.estimate.size(); ++p)
      v.estimate[p] *= static_cast<float>(c);
  const IntegrationResult res = integrate(scaled.d0, scaled.phi0, scaled.views);
  for (std::size_t n = 0; n < inst.views.size(); ++n) {
    CHECK(res.coeffs[n].scale ==
          doctest::Approx(base.coeffs[n].scale).epsilon(1e-4));
    CHECK(res.coeffs[n].offset ==
          doctest::Approx(base.coeffs[n].offset * c).epsilon(1e-4));
  }
  for (std::size_t p = 0; p < res.fused.size(); ++p)
    CHECK(res.fused[p] == doctest::Approx(base.fused[p] * c).epsilon(1e-4));
}

TEST_CASE("view permutation permutes coefficients and fixes the fusion") {
  std::mt19937 rng(61);
  Instance inst = random_instance(rng, 8, 16, 3);
  const IntegrationResult base = integrate(inst.d0, inst.phi0, inst.views);
  Instance permuted = inst;
  std::swap(permuted.views[0], permuted.views[2]);
  const IntegrationResult res =
      integrate(permuted.d0, permuted.phi0, permuted.views);
  CHECK(res.coeffs[0].scale == doctest::Approx(base.coeffs[2].scale));
  CHECK(res.coeffs[2].scale == doctest::Approx(base.coeffs[0].scale));
  CHECK(res.coeffs[1].scale == doctest::Approx(base.coeffs[1].scale));
  for (std::size_t p = 0; p < res.fused.size(); ++p)
    CHECK(res.fused[p] == doctest::Approx(base.fused[p]).epsilon(1e-6));
}

TEST_CASE("infinite coarse regions defer to the covering view") {
  std::mt19937 rng(67);
  Instance inst = random_instance(rng, 8, 16, 1);
  // Top half is "sky": infinite coarse depth, zero coarse weight.
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 16; ++j) {
      inst.d0.at(i, j) = kInfDepth;
      inst.phi0.at(i, j) = 0.0f;
    }
  const IntegrationResult res = integrate(inst.d0, inst.phi0, inst.views);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 16; ++j) {
      const double mapped =
          res.coeffs[0].scale * inst.views[0].estimate.at(i, j) +
          res.coeffs[0].offset;
      CHECK(res.fused.at(i, j) == doctest::Approx(mapped).epsilon(1e-6));
    }
}

TEST_CASE("default config carries the published constants") {
  const IntegrationConfig cfg;
  CHECK(cfg.eta_low == 0.0);
  CHECK(cfg.eta_high == 2.0);
  CHECK(cfg.alpha == 1e-3);
  CHECK(cfg.epsilon == 1e-8);
  CHECK(cfg.ridge == 1e-10);
}
