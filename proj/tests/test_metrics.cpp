#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "viewsynth/image.hpp"
#include "viewsynth/metrics.hpp"

using namespace vs;

namespace {

Image random_depth(int w, int h, unsigned seed, double lo = 1.0, double hi = 20.0) {
  Image img(w, h, 1);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& x : img.data) x = u(rng);
  return img;
}

std::vector<std::uint8_t> ones(std::size_t n) { return std::vector<std::uint8_t>(n, 1); }

double plain_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

TEST_CASE("a perfect prediction scores zero error and full accuracy") {
  const Image gt = random_depth(8, 6, 1);
  for (bool med : {false, true}) {
    const DepthMetrics m = evaluate_depth(gt, gt, ones(gt.pixel_count()), med);
    CHECK(m.abs_rel == 0.0);
    CHECK(m.sq_rel == 0.0);
    CHECK(m.rmse == 0.0);
    CHECK(m.rmse_log == Catch::Approx(0.0).margin(1e-12));
    CHECK(m.delta1 == 1.0);
    CHECK(m.delta2 == 1.0);
    CHECK(m.delta3 == 1.0);
    CHECK(m.count == gt.pixel_count());
  }
}

TEST_CASE("a uniform 1.25x overestimate sits exactly on the first accuracy boundary") {
  const Image gt = random_depth(8, 6, 2);
  Image pred = gt;
  for (double& x : pred.data) x *= 1.25;
  const DepthMetrics m = evaluate_depth(pred, gt, ones(gt.pixel_count()), false);
  CHECK(m.abs_rel == Catch::Approx(0.25).margin(1e-12));
  CHECK(m.delta1 == 0.0);  // the ratio comparison is strict
  CHECK(m.delta2 == 1.0);
  CHECK(m.delta3 == 1.0);
  SECTION("median alignment removes the uniform factor entirely") {
    const DepthMetrics ms = evaluate_depth(pred, gt, ones(gt.pixel_count()), true);
    CHECK(ms.abs_rel == Catch::Approx(0.0).margin(1e-12));
    CHECK(ms.delta1 == 1.0);
    CHECK(ms.scale == Catch::Approx(1.0 / 1.25).margin(1e-12));
  }
}

TEST_CASE("metrics agree with a scalar double-loop reference") {
  const Image gt = random_depth(16, 16, 3);
  const Image pred = random_depth(16, 16, 4);
  SECTION("metric comparison") {
    const DepthMetrics m = evaluate_depth(pred, gt, ones(gt.pixel_count()), false);
    const oracle::Metrics ref = oracle::depth_metrics(pred.data, gt.data);
    CHECK(m.abs_rel == Catch::Approx(ref.abs_rel).margin(1e-12));
    CHECK(m.sq_rel == Catch::Approx(ref.sq_rel).margin(1e-12));
    CHECK(m.rmse == Catch::Approx(ref.rmse).margin(1e-12));
    CHECK(m.rmse_log == Catch::Approx(ref.rmse_log).margin(1e-12));
    CHECK(m.delta1 == ref.d1);
    CHECK(m.delta2 == ref.d2);
    CHECK(m.delta3 == ref.d3);
  }
  SECTION("median-aligned comparison, alignment applied by hand first") {
    const double scale = plain_median(gt.data) / plain_median(pred.data);
    std::vector<double> scaled = pred.data;
    for (double& x : scaled) x *= scale;
    const DepthMetrics m = evaluate_depth(pred, gt, ones(gt.pixel_count()), true);
    const oracle::Metrics ref = oracle::depth_metrics(scaled, gt.data);
    CHECK(m.scale == Catch::Approx(scale).margin(1e-12));
    CHECK(m.abs_rel == Catch::Approx(ref.abs_rel).margin(1e-12));
    CHECK(m.rmse_log == Catch::Approx(ref.rmse_log).margin(1e-12));
  }
}

TEST_CASE("accuracy fractions are nested across their thresholds") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.5, 15.0);
  for (int trial = 0; trial < 100; ++trial) {
    Image gt(6, 5, 1), pred(6, 5, 1);
    for (double& x : gt.data) x = u(rng);
    for (double& x : pred.data) x = u(rng);
    const DepthMetrics m = evaluate_depth(pred, gt, ones(gt.pixel_count()), trial % 2 == 0);
    CHECK(m.delta1 <= m.delta2);
    CHECK(m.delta2 <= m.delta3);
    CHECK(m.delta3 <= 1.0);
    CHECK(m.abs_rel >= 0.0);
    CHECK(m.rmse >= 0.0);
  }
}

TEST_CASE("median alignment makes the metrics scale-invariant") {
  const Image gt = random_depth(10, 7, 6);
  const Image pred = random_depth(10, 7, 7);
  Image scaled = pred;
  for (double& x : scaled.data) x *= 3.7;
  const DepthMetrics a = evaluate_depth(pred, gt, ones(gt.pixel_count()), true);
  const DepthMetrics b = evaluate_depth(scaled, gt, ones(gt.pixel_count()), true);
  CHECK(a.abs_rel == Catch::Approx(b.abs_rel).margin(1e-12));
  CHECK(a.rmse == Catch::Approx(b.rmse).margin(1e-10));
  CHECK(a.delta1 == b.delta1);
}

TEST_CASE("accuracy is symmetric under swapping prediction and truth") {
  const Image gt = random_depth(9, 6, 8);
  const Image pred = random_depth(9, 6, 9);
  const DepthMetrics ab = evaluate_depth(pred, gt, ones(gt.pixel_count()), false);
  const DepthMetrics ba = evaluate_depth(gt, pred, ones(gt.pixel_count()), false);
  CHECK(ab.delta1 == ba.delta1);
  CHECK(ab.delta2 == ba.delta2);
  CHECK(ab.delta3 == ba.delta3);
  CHECK(ab.rmse == Catch::Approx(ba.rmse).margin(1e-12));  // symmetric too
}

TEST_CASE("the validity mask restricts the evaluated pixels") {
  const Image gt = random_depth(4, 4, 10);
  const Image pred = random_depth(4, 4, 11);
  std::vector<std::uint8_t> valid(16, 0);
  valid[0] = valid[5] = valid[10] = 1;
  const DepthMetrics m = evaluate_depth(pred, gt, valid, false);
  CHECK(m.count == 3);
  SECTION("median scale factor follows the masked medians") {
    Image g2(4, 1, 1), p2(4, 1, 1);
    g2.data = {1.0, 2.0, 3.0, 4.0};
    p2.data = {2.0, 2.0, 2.0, 2.0};
    const DepthMetrics mm = evaluate_depth(p2, g2, ones(4), true);
    CHECK(mm.scale == Catch::Approx(2.5 / 2.0).margin(1e-15));
  }
}

TEST_CASE("evaluate_depth rejects malformed inputs") {
  const Image gt = random_depth(5, 4, 12);
  Image pred = random_depth(5, 4, 13);
  SECTION("non-positive prediction on a valid pixel") {
    pred.data[7] = 0.0;
    CHECK_THROWS_AS(evaluate_depth(pred, gt, ones(20), false), std::domain_error);
  }
  SECTION("non-positive ground truth on a valid pixel") {
    Image bad = gt;
    bad.data[3] = -1.0;
    CHECK_THROWS_AS(evaluate_depth(pred, bad, ones(20), false), std::domain_error);
  }
  SECTION("a fully masked-out image") {
    CHECK_THROWS_AS(evaluate_depth(pred, gt, std::vector<std::uint8_t>(20, 0), false),
                    std::domain_error);
  }
  SECTION("shape and mask-size mismatches") {
    CHECK_THROWS_AS(evaluate_depth(Image(4, 4, 1, 1.0), gt, ones(16), false), std::domain_error);
    CHECK_THROWS_AS(evaluate_depth(pred, gt, ones(19), false), std::domain_error);
  }
  SECTION("a masked-out non-positive pixel is ignored") {
    pred.data[7] = 0.0;
    std::vector<std::uint8_t> valid = ones(20);
    valid[7] = 0;
    CHECK_NOTHROW(evaluate_depth(pred, gt, valid, false));
  }
}

TEST_CASE("the range mask keeps ground truth within the evaluation cap") {
  Image gt(3, 2, 1);
  gt.data = {0.5, 1.0, 5.0, 49.9, 50.0, 80.0};
  const std::vector<std::uint8_t> v = depth_range_mask(gt, 1.0, 50.0);
  CHECK(v == std::vector<std::uint8_t>({0, 0, 1, 1, 0, 0}));
}

TEST_CASE("flip blending assigns hard column bands") {
  SECTION("constant maps show the 5/90/5 split") {
    Image d(100, 2, 1, 2.0), f(100, 2, 1, 4.0);
    const Image out = postprocess_flip_blend(d, f);
    for (int v = 0; v < 2; ++v) {
      for (int u = 0; u <= 4; ++u) CHECK(out.at(u, v) == 2.0);
      for (int u = 5; u <= 94; ++u) CHECK(out.at(u, v) == 3.0);
      for (int u = 95; u <= 99; ++u) CHECK(out.at(u, v) == 4.0);
    }
  }
  SECTION("identical inputs pass through unchanged") {
    const Image d = random_depth(30, 4, 14);
    const Image out = postprocess_flip_blend(d, d);
    for (std::size_t i = 0; i < d.data.size(); ++i) CHECK(out.data[i] == d.data[i]);
  }
  SECTION("a mirror-symmetric map is a fixed point of flip-back blending") {
    Image d(24, 3, 1);
    for (int v = 0; v < 3; ++v)
      for (int u = 0; u < 24; ++u) d.at(u, v) = 1.0 + std::abs(u - 11.5) + 0.1 * v;
    const Image flipped_back = flip_horizontal(d);
    for (std::size_t i = 0; i < d.data.size(); ++i)
      REQUIRE(flipped_back.data[i] == d.data[i]);  // symmetric by construction
    const Image out = postprocess_flip_blend(d, flipped_back);
    for (std::size_t i = 0; i < d.data.size(); ++i) CHECK(out.data[i] == d.data[i]);
  }
  SECTION("each output pixel lies between its two inputs") {
    const Image d = random_depth(40, 5, 15);
    const Image f = random_depth(40, 5, 16);
    const Image out = postprocess_flip_blend(d, f);
    for (int v = 0; v < 5; ++v)
      for (int u = 0; u < 40; ++u) {
        CHECK(out.at(u, v) >= std::min(d.at(u, v), f.at(u, v)) - 1e-15);
        CHECK(out.at(u, v) <= std::max(d.at(u, v), f.at(u, v)) + 1e-15);
      }
  }
  SECTION("narrow images are rejected") {
    Image d(19, 2, 1, 1.0);
    CHECK_THROWS_AS(postprocess_flip_blend(d, d), std::domain_error);
  }
  SECTION("mismatched inputs are rejected") {
    Image d(30, 2, 1, 1.0), f(30, 3, 1, 1.0);
    CHECK_THROWS_AS(postprocess_flip_blend(d, f), std::domain_error);
  }
}
