#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "viewsynth/image.hpp"

namespace vs {

/// Standard monocular-depth error and accuracy measures. Lower is better
/// for the error fields, higher for the delta accuracies.
struct DepthMetrics {
  double abs_rel = 0;   // mean |p - g| / g
  double sq_rel = 0;    // mean (p - g)^2 / g
  double rmse = 0;      // sqrt(mean (p - g)^2)
  double rmse_log = 0;  // sqrt(mean (ln p - ln g)^2)
  double delta1 = 0, delta2 = 0, delta3 = 0;  // fraction with max(p/g, g/p) < 1.25^k
  std::size_t count = 0;                      // pixels entering the averages
  double scale = 1.0;                         // median alignment factor applied to pred
};

namespace detail {
inline double median_of(std::vector<double> v) {
  if (v.empty()) throw std::domain_error("median_of: empty input");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + mid - 1, v.end());
  return 0.5 * (v[mid - 1] + hi);
}
}  // namespace detail

/// Validity mask selecting ground-truth pixels inside an evaluation range,
/// for capped protocols (e.g. ignore beyond 50 or 80 scene units).
inline std::vector<std::uint8_t> depth_range_mask(const Image& gt, double min_depth,
                                                  double max_depth) {
  std::vector<std::uint8_t> valid(gt.pixel_count());
  for (std::size_t i = 0; i < valid.size(); ++i)
    valid[i] = (gt.data[i] > min_depth && gt.data[i] < max_depth) ? 1 : 0;
  return valid;
}

/// Compare a predicted depth map against ground truth over the masked
/// pixels. With median_scale the prediction is first multiplied by
/// median(gt)/median(pred), removing any global scale ambiguity; without
/// it the comparison is metric.
inline DepthMetrics evaluate_depth(const Image& pred, const Image& gt,
                                   const std::vector<std::uint8_t>& valid,
                                   bool median_scale = true) {
  if (pred.channels != 1 || gt.channels != 1)
    throw std::domain_error("evaluate_depth: depth maps must be single-channel");
  if (!pred.same_shape(gt)) throw std::domain_error("evaluate_depth: shape mismatch");
  if (valid.size() != gt.pixel_count())
    throw std::domain_error("evaluate_depth: validity mask size mismatch");

  std::vector<double> gv, pv;
  for (std::size_t i = 0; i < valid.size(); ++i) {
    if (!valid[i]) continue;
    if (!(gt.data[i] > 0))
      throw std::domain_error("evaluate_depth: ground truth must be positive on valid pixels");
    if (!(pred.data[i] > 0))
      throw std::domain_error("evaluate_depth: prediction must be positive on valid pixels");
    gv.push_back(gt.data[i]);
    pv.push_back(pred.data[i]);
  }
  if (gv.empty()) throw std::domain_error("evaluate_depth: no valid pixels");

  DepthMetrics m;
  m.count = gv.size();
  if (median_scale) m.scale = detail::median_of(gv) / detail::median_of(pv);

  double abs_rel = 0, sq_rel = 0, sq = 0, sq_log = 0, d1 = 0, d2 = 0, d3 = 0;
  for (std::size_t i = 0; i < gv.size(); ++i) {
    const double g = gv[i];
    const double p = pv[i] * m.scale;
    const double d = p - g;
    abs_rel += std::abs(d) / g;
    sq_rel += d * d / g;
    sq += d * d;
    const double dl = std::log(p) - std::log(g);
    sq_log += dl * dl;
    const double ratio = std::max(p / g, g / p);
    if (ratio < 1.25) ++d1;
    if (ratio < 1.25 * 1.25) ++d2;
    if (ratio < 1.25 * 1.25 * 1.25) ++d3;
  }
  const double n = static_cast<double>(m.count);
  m.abs_rel = abs_rel / n;
  m.sq_rel = sq_rel / n;
  m.rmse = std::sqrt(sq / n);
  m.rmse_log = std::sqrt(sq_log / n);
  m.delta1 = d1 / n;
  m.delta2 = d2 / n;
  m.delta3 = d3 / n;
  return m;
}

/// Merge a disparity map with the prediction made on the mirrored input
/// (mirrored back before the call). Each prediction is unreliable near the
/// border that was disoccluded in its input, so columns are assigned
/// piecewise: leftmost 5% from the original, rightmost 5% from the
/// flipped-input prediction, the central 90% averaged.
inline Image postprocess_flip_blend(const Image& disp, const Image& disp_flipped_back) {
  if (disp.channels != 1 || !disp.same_shape(disp_flipped_back))
    throw std::domain_error("postprocess_flip_blend: need two single-channel maps of equal size");
  const int W = disp.width, H = disp.height;
  if (W < 20)
    throw std::domain_error("postprocess_flip_blend: width below 20, the 5% bands would be empty");
  const int cut = static_cast<int>(std::floor(0.05 * W));
  Image out(W, H, 1);
  for (int v = 0; v < H; ++v)
    for (int u = 0; u < W; ++u) {
      if (u < cut)
        out.at(u, v) = disp.at(u, v);
      else if (u >= W - cut)
        out.at(u, v) = disp_flipped_back.at(u, v);
      else
        out.at(u, v) = 0.5 * (disp.at(u, v) + disp_flipped_back.at(u, v));
    }
  return out;
}

}  // namespace vs
