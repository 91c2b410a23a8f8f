#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "viewsynth/geometry.hpp"
#include "viewsynth/image.hpp"

namespace vs {

/// Per-pixel real-valued source coordinates plus a validity flag. Invalid
/// pixels (source coordinate out of bounds or behind the camera) are
/// excluded from sampling and from every loss.
struct SampleGrid {
  int width = 0, height = 0;
  std::vector<double> u, v;
  std::vector<std::uint8_t> valid;

  SampleGrid() = default;
  SampleGrid(int w, int h) : width(w), height(h) {
    const std::size_t n = static_cast<std::size_t>(w) * h;
    u.assign(n, 0.0);
    v.assign(n, 0.0);
    valid.assign(n, 0);
  }

  std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

/// The four-neighbor footprint of one bilinear lookup. Neighbor indices are
/// clamped so a coordinate exactly on the last row/column stays in bounds;
/// the clamped neighbor then carries weight 0.
struct BilinearTap {
  int u0, v0, u1, v1;
  double au, av;  // fractional offsets in [0,1)
};

inline BilinearTap make_tap(double u, double v, int width, int height) {
  BilinearTap t;
  const double fu = std::floor(u), fv = std::floor(v);
  t.u0 = static_cast<int>(fu);
  t.v0 = static_cast<int>(fv);
  t.au = u - fu;
  t.av = v - fv;
  t.u1 = t.u0 + 1 < width ? t.u0 + 1 : t.u0;
  t.v1 = t.v0 + 1 < height ? t.v0 + 1 : t.v0;
  return t;
}

inline double tap_value(const Image& src, const BilinearTap& t, int c) {
  const double s00 = src.at(t.u0, t.v0, c), s10 = src.at(t.u1, t.v0, c);
  const double s01 = src.at(t.u0, t.v1, c), s11 = src.at(t.u1, t.v1, c);
  return (1 - t.au) * (1 - t.av) * s00 + t.au * (1 - t.av) * s10 + (1 - t.au) * t.av * s01 +
         t.au * t.av * s11;
}

/// d(sampled value)/du at the tap. Piecewise constant between integer
/// coordinates; at exact integers the right-hand cell is used.
inline double tap_du(const Image& src, const BilinearTap& t, int c) {
  const double s00 = src.at(t.u0, t.v0, c), s10 = src.at(t.u1, t.v0, c);
  const double s01 = src.at(t.u0, t.v1, c), s11 = src.at(t.u1, t.v1, c);
  return (1 - t.av) * (s10 - s00) + t.av * (s11 - s01);
}

inline double tap_dv(const Image& src, const BilinearTap& t, int c) {
  const double s00 = src.at(t.u0, t.v0, c), s10 = src.at(t.u1, t.v0, c);
  const double s01 = src.at(t.u0, t.v1, c), s11 = src.at(t.u1, t.v1, c);
  return (1 - t.au) * (s01 - s00) + t.au * (s11 - s10);
}

/// Adjoint of tap_value w.r.t. the source: scatter g times the bilinear
/// weights into a single-channel gradient buffer laid out like the source.
inline void tap_scatter(Image& grad, const BilinearTap& t, double g) {
  grad.at(t.u0, t.v0) += (1 - t.au) * (1 - t.av) * g;
  grad.at(t.u1, t.v0) += t.au * (1 - t.av) * g;
  grad.at(t.u0, t.v1) += (1 - t.au) * t.av * g;
  grad.at(t.u1, t.v1) += t.au * t.av * g;
}

inline bool in_sample_domain(double u, double v, int width, int height) {
  return u >= 0.0 && u <= width - 1.0 && v >= 0.0 && v <= height - 1.0;
}

/// Differentiable bilinear sampling: each output pixel interpolates the four
/// nearest source pixels at grid (u,v). Invalid grid entries produce 0.
inline Image bilinear_sample(const Image& src, const SampleGrid& grid) {
  Image out(grid.width, grid.height, src.channels);
  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x < grid.width; ++x) {
      const std::size_t i = grid.idx(x, y);
      if (!grid.valid[i]) continue;
      const BilinearTap t = make_tap(grid.u[i], grid.v[i], src.width, src.height);
      for (int c = 0; c < src.channels; ++c) out.at(x, y, c) = tap_value(src, t, c);
    }
  }
  return out;
}

/// Rigid-motion warp grid: each target pixel is lifted to 3-D with its depth,
/// moved by the pose, and reprojected. Pixels whose transformed point falls
/// behind the camera or outside the image are marked invalid.
inline SampleGrid make_temporal_grid(const CameraModel& cam, const Image& depth, const Pose6& pose) {
  if (depth.channels != 1 || depth.width != cam.width || depth.height != cam.height)
    throw std::domain_error("make_temporal_grid: depth map must be single-channel at camera size");
  const Mat3 rot = rotation_of(pose);
  const Point3 t = pose.translation();
  SampleGrid grid(cam.width, cam.height);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const std::size_t i = grid.idx(x, y);
      const double z = depth.at(x, y);
      if (!(z > 0))
        throw std::domain_error("make_temporal_grid: depth must be positive everywhere");
      const Point3 p = {z * (x - cam.cx) / cam.fx, z * (y - cam.cy) / cam.fy, z};
      const Point3 q = transform_point(rot, t, p);
      if (!(q.z > 0)) continue;  // behind camera: leave invalid
      const double su = cam.fx * q.x / q.z + cam.cx;
      const double sv = cam.fy * q.y / q.z + cam.cy;
      if (!in_sample_domain(su, sv, cam.width, cam.height)) continue;
      grid.u[i] = su;
      grid.v[i] = sv;
      grid.valid[i] = 1;
    }
  }
  return grid;
}

enum class WarpDirection {
  left_from_right,  // sample the right image at u - d to rebuild the left
  right_from_left   // sample the left image at u + d to rebuild the right
};

/// Horizontal disparity warp grid for a rectified pair.
inline SampleGrid make_disparity_grid(const Image& disp, WarpDirection dir) {
  if (disp.channels != 1) throw std::domain_error("make_disparity_grid: disparity must be single-channel");
  SampleGrid grid(disp.width, disp.height);
  const double sign = dir == WarpDirection::left_from_right ? -1.0 : 1.0;
  for (int y = 0; y < disp.height; ++y) {
    for (int x = 0; x < disp.width; ++x) {
      const std::size_t i = grid.idx(x, y);
      const double su = x + sign * disp.at(x, y);
      if (su < 0.0 || su > disp.width - 1.0) continue;
      grid.u[i] = su;
      grid.v[i] = y;
      grid.valid[i] = 1;
    }
  }
  return grid;
}

}  // namespace vs
