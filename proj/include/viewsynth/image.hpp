#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace vs {

/// Dense 2-D grid of real intensities (1 or 3 channels), row-major.
/// Also reused for scalar fields (depth, disparity, masks) with channels=1.
struct Image {
  int width = 0, height = 0, channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, int c, double fill = 0.0) : width(w), height(h), channels(c) {
    if (w < 0 || h < 0 || (c != 1 && c != 3))
      throw std::domain_error("Image: channels must be 1 or 3 and size nonnegative");
    data.assign(static_cast<std::size_t>(w) * h * c, fill);
  }

  bool empty() const { return data.empty(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

  // u = column, v = row
  double at(int u, int v, int c = 0) const { return data[(static_cast<std::size_t>(v) * width + u) * channels + c]; }
  double& at(int u, int v, int c = 0) { return data[(static_cast<std::size_t>(v) * width + u) * channels + c]; }

  bool same_shape(const Image& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }

  bool all_finite() const {
    for (double x : data)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

/// 2x halving by 2x2 mean pooling. Output size is floor(w/2) x floor(h/2),
/// so every pooling window is a full 2x2 block.
inline Image downsample_half(const Image& img) {
  Image out(img.width / 2, img.height / 2, img.channels);
  for (int v = 0; v < out.height; ++v)
    for (int u = 0; u < out.width; ++u)
      for (int c = 0; c < img.channels; ++c)
        out.at(u, v, c) = 0.25 * (img.at(2 * u, 2 * v, c) + img.at(2 * u + 1, 2 * v, c) +
                                  img.at(2 * u, 2 * v + 1, c) + img.at(2 * u + 1, 2 * v + 1, c));
  return out;
}

/// Number of pyramid levels actually buildable: halving stops before either
/// dimension would drop below 2.
inline int feasible_levels(int width, int height, int requested) {
  int levels = 1;
  int w = width / 2, h = height / 2;
  while (levels < requested && w >= 2 && h >= 2) {
    ++levels;
    w /= 2;
    h /= 2;
  }
  return levels;
}

inline std::vector<Image> build_pyramid(const Image& img, int levels) {
  std::vector<Image> pyr;
  pyr.reserve(levels);
  pyr.push_back(img);
  for (int l = 1; l < levels; ++l) pyr.push_back(downsample_half(pyr.back()));
  return pyr;
}

inline Image flip_horizontal(const Image& img) {
  Image out(img.width, img.height, img.channels);
  for (int v = 0; v < img.height; ++v)
    for (int u = 0; u < img.width; ++u)
      for (int c = 0; c < img.channels; ++c) out.at(u, v, c) = img.at(img.width - 1 - u, v, c);
  return out;
}

}  // namespace vs
