#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "pano/errors.hpp"
#include "pano/metrics.hpp"

using namespace pano;

namespace {
DepthMap map_of(std::initializer_list<float> vals) {
  DepthMap m(1, static_cast<int>(vals.size()));
  int j = 0;
  for (float v : vals) m.at(0, j++) = v;
  return m;
}
}  // namespace

TEST_CASE("align_affine recovers the identity and inverse maps") {
  const DepthMap gt = map_of({1, 2, 3, 4});
  auto [s1, o1] = align_affine(gt, gt);
  CHECK(s1 == doctest::Approx(1).epsilon(1e-12));
  CHECK(o1 == doctest::Approx(0).epsilon(1e-12));

  DepthMap est(1, 4);
  for (int j = 0; j < 4; ++j) est.at(0, j) = 2 * gt.at(0, j) + 3;
  auto [s2, o2] = align_affine(est, gt);
  CHECK(s2 == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(o2 == doctest::Approx(-1.5).epsilon(1e-10));
}

TEST_CASE("align_affine excludes non-finite pixels and needs two of them") {
  const DepthMap gt = map_of({kInfDepth, kInfDepth, kInfDepth});
  CHECK_THROWS_AS(align_affine(gt, gt), ContractError);

  // The infinite gt pixel must not influence the fit.
  const DepthMap est2 = map_of({1, 2, 99});
  const DepthMap gt2 = map_of({2, 4, kInfDepth});
  auto [s, o] = align_affine(est2, gt2);
  CHECK(s == doctest::Approx(2).epsilon(1e-10));
  CHECK(o == doctest::Approx(0).epsilon(1e-10));
}

TEST_CASE("constant estimate falls back to an offset-only fit") {
  const DepthMap est = map_of({5, 5, 5, 5});
  const DepthMap gt = map_of({1, 2, 3, 4});
  auto [s, o] = align_affine(est, gt);
  CHECK(s == 1.0);
  CHECK(o == doctest::Approx(-2.5));
}

TEST_CASE("absrel hand cases") {
  CHECK(absrel(map_of({2}), map_of({1})) == doctest::Approx(1.0));
  CHECK(absrel(map_of({1, 2, 3}), map_of({1, 2, 3})) == 0.0);
  CHECK(absrel(map_of({1, 3}), map_of({2, 2})) == doctest::Approx(0.5));
  CHECK_THROWS_AS(absrel(map_of({1}), map_of({-1})), ContractError);
}

TEST_CASE("rmse hand cases") {
  CHECK(rmse(map_of({1, 2}), map_of({1, 2})) == 0.0);
  CHECK(rmse(map_of({1, 3}), map_of({2, 2})) == doctest::Approx(1.0));
  CHECK(rmse(map_of({5}), map_of({2})) == doctest::Approx(3.0));
  CHECK_THROWS_AS(rmse(map_of({kInfDepth}), map_of({1})), ContractError);
}

TEST_CASE("metrics after alignment are invariant to affine corruption") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<float> depth(0.5f, 10.0f);
  DepthMap gt(16, 32), est(16, 32);
  for (std::size_t p = 0; p < gt.size(); ++p) {
    gt[p] = depth(rng);
    est[p] = gt[p] + 0.1f * depth(rng);  // imperfect estimate
  }
  const EvalReport base = evaluate_depth(est, gt);
  std::uniform_real_distribution<double> scale(0.3, 3.0);
  std::uniform_real_distribution<double> offset(-5.0, 5.0);
  for (int rep = 0; rep < 20; ++rep) {
    const double a = scale(rng), b = offset(rng);
    DepthMap corrupted(16, 32);
    for (std::size_t p = 0; p < gt.size(); ++p)
      corrupted[p] = static_cast<float>(a * est[p] + b);
    const EvalReport r = evaluate_depth(corrupted, gt);
    CHECK(r.rmse == doctest::Approx(base.rmse).epsilon(1e-6));
    CHECK(r.absrel == doctest::Approx(base.absrel).epsilon(1e-6));
  }
}

TEST_CASE("metrics vanish iff the maps agree after alignment") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<float> depth(0.5f, 10.0f);
  DepthMap gt(8, 8);
  for (std::size_t p = 0; p < gt.size(); ++p) gt[p] = depth(rng);
  const EvalReport perfect = evaluate_depth(gt, gt);
  CHECK(perfect.rmse == doctest::Approx(0).epsilon(1e-10));
  CHECK(perfect.absrel == doctest::Approx(0).epsilon(1e-10));
  CHECK(perfect.valid_pixel_count == 64);

  DepthMap off = gt;
  off[10] += 1.0f;
  const EvalReport flawed = evaluate_depth(off, gt);
  CHECK(flawed.rmse > 0);
  CHECK(flawed.absrel > 0);
}

TEST_CASE("psnr hand cases") {
  RgbImage a(4, 4, Rgb8{100, 100, 100});
  RgbImage b = a;
  CHECK(std::isinf(psnr(a, b)));

  // MSE of exactly 1 across all channels.
  for (std::size_t p = 0; p < b.size(); ++p)
    b[p] = {101, 99, 101};
  CHECK(psnr(a, b) == doctest::Approx(48.1308).epsilon(1e-4));

  RgbImage black(4, 4, Rgb8{0, 0, 0});
  RgbImage white(4, 4, Rgb8{255, 255, 255});
  CHECK(psnr(black, white) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("psnr is monotone decreasing in MSE and respects the mask") {
  RgbImage ref(4, 4, Rgb8{50, 50, 50});
  RgbImage mild = ref, harsh = ref;
  mild.at(0, 0) = {60, 50, 50};
  harsh.at(0, 0) = {90, 50, 50};
  CHECK(psnr(ref, mild) > psnr(ref, harsh));

  Mask mask(4, 4, 0.0f);
  mask.at(3, 3) = 1.0f;  // error is outside the mask
  CHECK(std::isinf(psnr(ref, harsh, &mask)));
  Mask empty(4, 4, 0.0f);
  CHECK_THROWS_AS(psnr(ref, harsh, &empty), ContractError);
}
