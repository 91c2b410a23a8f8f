#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "viewsynth/image.hpp"

using namespace vs;

TEST_CASE("image storage and access") {
  Image img(3, 2, 1);
  CHECK(img.data.size() == 6);
  img.at(2, 1) = 0.75;
  CHECK(img.at(2, 1) == 0.75);
  CHECK(img.pixel_count() == 6);
  CHECK(img.all_finite());
  img.at(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(img.all_finite());
  CHECK_THROWS_AS(Image(2, 2, 2), std::domain_error);
}

TEST_CASE("half downsampling averages 2x2 blocks") {
  Image img(4, 2, 1);
  // Row 0: 0 1 2 3 / Row 1: 4 5 6 7.
  for (int v = 0; v < 2; ++v)
    for (int u = 0; u < 4; ++u) img.at(u, v) = v * 4 + u;
  const Image half = downsample_half(img);
  REQUIRE(half.width == 2);
  REQUIRE(half.height == 1);
  CHECK(half.at(0, 0) == Catch::Approx((0 + 1 + 4 + 5) / 4.0));
  CHECK(half.at(1, 0) == Catch::Approx((2 + 3 + 6 + 7) / 4.0));

  // Odd sizes drop the trailing row/column (integer-division halving).
  Image odd(5, 3, 1, 1.0);
  const Image oh = downsample_half(odd);
  CHECK(oh.width == 2);
  CHECK(oh.height == 1);
  CHECK(oh.at(0, 0) == 1.0);
}

TEST_CASE("pyramids halve sizes and stop before degenerate levels") {
  CHECK(feasible_levels(128, 96, 4) == 4);
  CHECK(feasible_levels(10, 8, 4) == 3);   // 10x8 -> 5x4 -> 2x2, then 1x1 is refused
  CHECK(feasible_levels(2, 2, 4) == 1);
  CHECK(feasible_levels(64, 64, 1) == 1);

  const Image img = oracle::random_smooth_image(10, 8, 1, 5);
  const auto pyr = build_pyramid(img, 3);
  REQUIRE(pyr.size() == 3);
  CHECK(pyr[0].width == 10);
  CHECK(pyr[1].width == 5);
  CHECK(pyr[1].height == 4);
  CHECK(pyr[2].width == 2);
  CHECK(pyr[2].height == 2);
  // Level k+1 is the 2x2 mean of level k.
  for (std::size_t l = 0; l + 1 < pyr.size(); ++l) {
    const Image ref = downsample_half(pyr[l]);
    REQUIRE(ref.data.size() == pyr[l + 1].data.size());
    for (std::size_t i = 0; i < ref.data.size(); ++i) CHECK(ref.data[i] == pyr[l + 1].data[i]);
  }
}

TEST_CASE("mean pooling preserves the global mean over full blocks") {
  const Image img = oracle::random_uniform_image(8, 6, 1, 9);
  const Image half = downsample_half(img);
  double m1 = 0, m2 = 0;
  for (double x : img.data) m1 += x;
  for (double x : half.data) m2 += x;
  CHECK(m1 / img.data.size() == Catch::Approx(m2 / half.data.size()).margin(1e-12));
}

TEST_CASE("horizontal flip is an involution and mirrors columns") {
  const Image img = oracle::random_uniform_image(7, 3, 3, 21);
  const Image flipped = flip_horizontal(img);
  for (int v = 0; v < 3; ++v)
    for (int u = 0; u < 7; ++u)
      for (int c = 0; c < 3; ++c) CHECK(flipped.at(u, v, c) == img.at(6 - u, v, c));
  const Image twice = flip_horizontal(flipped);
  for (std::size_t i = 0; i < img.data.size(); ++i) CHECK(twice.data[i] == img.data[i]);
}
