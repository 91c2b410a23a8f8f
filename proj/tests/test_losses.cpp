#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "viewsynth/losses.hpp"

using namespace vs;

namespace {
std::vector<std::uint8_t> all_valid(const Image& img) {
  return std::vector<std::uint8_t>(img.pixel_count(), 1);
}
}  // namespace

TEST_CASE("photometric loss is an L1 sum over valid pixels") {
  const Image a = oracle::random_uniform_image(6, 4, 1, 1);
  SECTION("identical images give zero") {
    const LossTerm t = photometric_loss(a, a, all_valid(a));
    CHECK(t.sum == 0.0);
    CHECK(t.count == static_cast<long>(a.pixel_count()));
    CHECK(t.normalized() == 0.0);
  }
  SECTION("constant offset accumulates linearly") {
    Image b = a;
    for (double& x : b.data) x += 0.1;
    const LossTerm t = photometric_loss(a, b, all_valid(a));
    CHECK(t.normalized() == Catch::Approx(0.1).margin(1e-12));
    CHECK(t.sum == Catch::Approx(0.1 * a.pixel_count()).margin(1e-10));
  }
  SECTION("matches the double-loop reference") {
    const Image b = oracle::random_uniform_image(6, 4, 1, 2);
    std::vector<std::uint8_t> valid = all_valid(a);
    valid[3] = 0;
    valid[17] = 0;
    const LossTerm t = photometric_loss(a, b, valid);
    const oracle::SumCount ref = oracle::photometric(a, b, valid);
    CHECK(std::abs(t.sum - ref.sum) < 1e-12);
    CHECK(t.count == static_cast<long>(ref.count));
  }
  SECTION("no valid pixels yields a zero term with zero count") {
    std::vector<std::uint8_t> none(a.pixel_count(), 0);
    const LossTerm t = photometric_loss(a, a, none);
    CHECK(t.sum == 0.0);
    CHECK(t.count == 0);
    CHECK(t.normalized() == 0.0);
  }
  SECTION("channel order permutation leaves the loss unchanged") {
    const Image x = oracle::random_uniform_image(5, 4, 3, 3);
    const Image y = oracle::random_uniform_image(5, 4, 3, 4);
    Image xp(5, 4, 3), yp(5, 4, 3);
    const int perm[3] = {2, 0, 1};
    for (int v = 0; v < 4; ++v)
      for (int u = 0; u < 5; ++u)
        for (int c = 0; c < 3; ++c) {
          xp.at(u, v, c) = x.at(u, v, perm[c]);
          yp.at(u, v, c) = y.at(u, v, perm[c]);
        }
    const LossTerm t1 = photometric_loss(x, y, all_valid(x));
    const LossTerm t2 = photometric_loss(xp, yp, all_valid(xp));
    CHECK(std::abs(t1.sum - t2.sum) < 1e-12);
    CHECK(t1.count == t2.count);
  }
}

TEST_CASE("masked photometric loss weights residuals per pixel") {
  const Image a = oracle::random_uniform_image(6, 4, 1, 5);
  const Image b = oracle::random_uniform_image(6, 4, 1, 6);
  SECTION("unit mask reproduces the unmasked loss bit for bit") {
    Image ones(6, 4, 1, 1.0);
    const LossTerm t1 = masked_photometric_loss(a, b, ones, all_valid(a));
    const LossTerm t2 = photometric_loss(a, b, all_valid(a));
    CHECK(t1.sum == t2.sum);
    CHECK(t1.count == t2.count);
  }
  SECTION("half mask on constant residual") {
    Image b2 = a;
    for (double& x : b2.data) x += 0.2;
    Image half(6, 4, 1, 0.5);
    const LossTerm t = masked_photometric_loss(a, b2, half, all_valid(a));
    CHECK(t.normalized() == Catch::Approx(0.1).margin(1e-12));
  }
  SECTION("matches the double-loop reference") {
    const Image m = oracle::random_uniform_image(6, 4, 1, 7, 0.05, 1.0);
    const LossTerm t = masked_photometric_loss(a, b, m, all_valid(a));
    const oracle::SumCount ref = oracle::masked_photometric(a, b, m, all_valid(a));
    CHECK(std::abs(t.sum - ref.sum) < 1e-12);
    CHECK(t.count == static_cast<long>(ref.count));
  }
  SECTION("mask values outside (0,1] are rejected") {
    Image bad(6, 4, 1, 1.0);
    bad.at(0, 0) = 0.0;
    CHECK_THROWS_AS(masked_photometric_loss(a, b, bad, all_valid(a)), std::domain_error);
    bad.at(0, 0) = 1.5;
    CHECK_THROWS_AS(masked_photometric_loss(a, b, bad, all_valid(a)), std::domain_error);
  }
}

TEST_CASE("mask regularization is the negative log sum") {
  SECTION("unit mask gives zero") {
    Image ones(5, 3, 1, 1.0);
    CHECK(mask_regularization(ones).sum == 0.0);
  }
  SECTION("mask of 1/e gives one per pixel") {
    Image m(5, 3, 1, std::exp(-1.0));
    const LossTerm t = mask_regularization(m);
    CHECK(t.sum == Catch::Approx(15.0).margin(1e-10));
    CHECK(t.count == 15);
  }
  SECTION("matches the scalar-loop reference") {
    const Image m = oracle::random_uniform_image(7, 5, 1, 8, 0.05, 1.0);
    CHECK(std::abs(mask_regularization(m).sum - oracle::neg_log_sum(m)) < 1e-10);
  }
  SECTION("non-positive mask values are rejected") {
    Image m(3, 3, 1, 0.5);
    m.at(1, 1) = 0.0;
    CHECK_THROWS_AS(mask_regularization(m), std::domain_error);
  }
}

TEST_CASE("stereo appearance loss vanishes for identical pair at zero disparity") {
  const Image img = oracle::random_uniform_image(8, 6, 1, 9);
  Image zero(8, 6, 1, 0.0);
  const LossTerm t = stereo_appearance_loss(img, img, zero, zero);
  CHECK(t.sum == 0.0);
  CHECK(t.count == 2 * static_cast<long>(img.pixel_count()));
}

TEST_CASE("left-right consistency compares each map against the sampled other") {
  SECTION("equal constant maps are self-consistent") {
    Image c(10, 4, 1, 2.5);
    const LossTerm t = lr_consistency_loss(c, c);
    CHECK(t.sum == Catch::Approx(0.0).margin(1e-12));
    CHECK(t.count > 0);
  }
  SECTION("constant 2 versus constant 3 disagrees by one per direction site") {
    Image dl(10, 4, 1, 2.0), dr(10, 4, 1, 3.0);
    const LossTerm t = lr_consistency_loss(dl, dr);
    // Direction 1 valid where u-2 stays in bounds (8 columns), direction 2
    // where u+3 does (7 columns); each valid site contributes exactly 1.
    CHECK(t.count == (8 + 7) * 4);
    CHECK(t.sum == Catch::Approx(static_cast<double>(t.count)).margin(1e-12));
  }
  SECTION("matches the double-loop reference on random fields") {
    const Image dl = oracle::random_uniform_image(9, 6, 1, 10, 0.0, 3.0);
    const Image dr = oracle::random_uniform_image(9, 6, 1, 11, 0.0, 3.0);
    const LossTerm t = lr_consistency_loss(dl, dr);
    const oracle::SumCount ref = oracle::lr_consistency(dl, dr);
    CHECK(std::abs(t.sum - ref.sum) < 1e-12);
    CHECK(t.count == static_cast<long>(ref.count));
  }
}

TEST_CASE("edge-aware smoothness penalizes curvature, relaxed at image edges") {
  SECTION("constant and linear-ramp fields have zero curvature") {
    Image flat(8, 5, 1, 3.0);
    Image imgc(8, 5, 1, 0.5);
    CHECK(edge_aware_smoothness(flat, imgc).sum == 0.0);
    Image ramp(8, 5, 1);
    for (int v = 0; v < 5; ++v)
      for (int u = 0; u < 8; ++u) ramp.at(u, v) = 0.7 * u;
    CHECK(edge_aware_smoothness(ramp, imgc).sum == Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("quadratic field on a constant one-row image") {
    const int n = 9;
    Image quad(n, 1, 1);
    for (int u = 0; u < n; ++u) quad.at(u, 0) = static_cast<double>(u) * u;
    Image imgc(n, 1, 1, 0.5);
    const LossTerm t = edge_aware_smoothness(quad, imgc);
    // Second difference of u^2 is 2 at each of the n-2 interior sites,
    // weighted by e^0 on a constant image; no vertical sites on one row.
    CHECK(t.count == static_cast<long>(n - 2));
    CHECK(t.sum == Catch::Approx(2.0 * (n - 2)).margin(1e-12));
  }
  SECTION("matches the double-loop reference on random inputs") {
    const Image d = oracle::random_uniform_image(10, 7, 1, 12, 0.0, 5.0);
    const Image img = oracle::random_uniform_image(10, 7, 3, 13);
    const LossTerm t = edge_aware_smoothness(d, img);
    const oracle::SumCount ref = oracle::smoothness(d, img);
    CHECK(std::abs(t.sum - ref.sum) < 1e-12);
    CHECK(t.count == static_cast<long>(ref.count));
  }
}

TEST_CASE("total loss combines normalized terms with per-scale weights") {
  SECTION("all-zero terms give zero total") {
    ScaleLosses p;
    p.scale = 1;
    const LossReport rep = total_synthesis_loss({p}, LossWeights{});
    CHECK(rep.total == 0.0);
  }
  SECTION("single-scale weighted sum") {
    ScaleLosses p;
    p.scale = 1;
    p.vs = {1.0, 1};
    p.ap = {2.0, 1};
    p.lr = {4.0, 1};
    LossWeights w{0.5, 0.5, 0.0, 0.0};
    const LossReport rep = total_synthesis_loss({p}, w);
    CHECK(rep.total == Catch::Approx(4.0).margin(1e-12));
  }
  SECTION("smoothness weight decays with the scale factor") {
    ScaleLosses p1, p2;
    p1.scale = 1;
    p1.smooth = {3.0, 1};
    p2.scale = 4;
    p2.smooth = {3.0, 1};
    LossWeights w{0.0, 0.0, 0.2, 0.0};
    const LossReport rep = total_synthesis_loss({p1, p2}, w);
    CHECK(rep.scales[0].total == Catch::Approx(0.2 * 3.0).margin(1e-12));
    CHECK(rep.scales[1].total == Catch::Approx(0.05 * 3.0).margin(1e-12));
    CHECK(rep.total == Catch::Approx(0.6 + 0.15).margin(1e-10));
  }
  SECTION("hand-computed sum with the default weights") {
    ScaleLosses p;
    p.scale = 2;
    p.vs = {0.6, 2};    // normalized 0.3
    p.ap = {1.0, 4};    // 0.25
    p.lr = {0.5, 5};    // 0.1
    p.smooth = {2.0, 4};  // 0.5
    p.reg = {0.9, 3};   // 0.3
    LossWeights w{0.5, 0.5, 0.2, 0.2};
    const double expect = 0.3 + 0.5 * 0.25 + 0.5 * 0.1 + (0.2 / 2) * 0.5 + 0.2 * 0.3;
    const LossReport rep = total_synthesis_loss({p}, w);
    CHECK(rep.total == Catch::Approx(expect).margin(1e-10));
    // The report's total is the weighted sum of its parts.
    const auto& s = rep.scales[0];
    CHECK(std::abs(s.total - (s.vs + 0.5 * s.ap + 0.5 * s.lr + 0.1 * s.smooth + 0.2 * s.reg)) <
          1e-10);
  }
  SECTION("normalization is invariant to replicating sites") {
    ScaleLosses once, twice;
    once.scale = twice.scale = 1;
    once.vs = {1.7, 5};
    twice.vs = {3.4, 10};
    const double a = total_synthesis_loss({once}, LossWeights{}).total;
    const double b = total_synthesis_loss({twice}, LossWeights{}).total;
    CHECK(a == Catch::Approx(b).margin(1e-14));
  }
  SECTION("non-finite terms are reported by name") {
    ScaleLosses p;
    p.scale = 1;
    p.ap = {std::numeric_limits<double>::quiet_NaN(), 1};
    try {
      total_synthesis_loss({p}, LossWeights{});
      FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("L_ap") != std::string::npos);
    }
  }
  SECTION("negative weights are rejected") {
    LossWeights w{-0.1, 0.5, 0.2, 0.2};
    CHECK_THROWS_AS(w.validate(), std::domain_error);
  }
}
