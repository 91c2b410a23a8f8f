#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "viewsynth/image.hpp"
#include "viewsynth/sampler.hpp"

namespace vs {

/// Weights of the combined objective: stereo appearance, left-right
/// consistency, smoothness base weight (decayed per scale), and mask
/// regularization.
struct LossWeights {
  double lambda_a = 0.5;
  double lambda_c = 0.5;
  double lambda_s = 0.2;
  double lambda_e = 0.2;

  void validate() const {
    if (lambda_a < 0 || lambda_c < 0 || lambda_s < 0 || lambda_e < 0)
      throw std::domain_error("LossWeights: weights must be nonnegative");
  }
};

/// Raw loss sum plus the number of contributing sites. Losses are combined
/// as means (sum/count) so scales and validity patterns stay comparable.
struct LossTerm {
  double sum = 0;
  long count = 0;

  double normalized() const { return count > 0 ? sum / count : 0.0; }
  LossTerm& operator+=(const LossTerm& o) {
    sum += o.sum;
    count += o.count;
    return *this;
  }
};

namespace detail {
inline void require_same_shape(const Image& a, const Image& b, const char* who) {
  if (!a.same_shape(b)) throw std::domain_error(std::string(who) + ": shape mismatch");
}
inline double sign(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }
}  // namespace detail

/// L1 photometric loss over valid pixels, channels summed per pixel.
inline LossTerm photometric_loss(const Image& target, const Image& recon,
                                 const std::vector<std::uint8_t>& valid) {
  detail::require_same_shape(target, recon, "photometric_loss");
  if (valid.size() != target.pixel_count())
    throw std::domain_error("photometric_loss: validity mask size mismatch");
  LossTerm t;
  std::size_t i = 0;
  for (int v = 0; v < target.height; ++v)
    for (int u = 0; u < target.width; ++u, ++i) {
      if (!valid[i]) continue;
      for (int c = 0; c < target.channels; ++c) t.sum += std::abs(target.at(u, v, c) - recon.at(u, v, c));
      ++t.count;
    }
  return t;
}

/// Mask-weighted L1 photometric loss; the per-pixel weight discounts pixels
/// where the static-scene assumption fails.
inline LossTerm masked_photometric_loss(const Image& target, const Image& recon, const Image& mask,
                                        const std::vector<std::uint8_t>& valid) {
  detail::require_same_shape(target, recon, "masked_photometric_loss");
  if (mask.channels != 1 || mask.width != target.width || mask.height != target.height)
    throw std::domain_error("masked_photometric_loss: mask must be single-channel at target size");
  if (valid.size() != target.pixel_count())
    throw std::domain_error("masked_photometric_loss: validity mask size mismatch");
  LossTerm t;
  std::size_t i = 0;
  for (int v = 0; v < target.height; ++v)
    for (int u = 0; u < target.width; ++u, ++i) {
      if (!valid[i]) continue;
      const double m = mask.at(u, v);
      if (!(m > 0.0) || m > 1.0)
        throw std::domain_error("masked_photometric_loss: mask value outside (0,1]: " + std::to_string(m));
      for (int c = 0; c < target.channels; ++c)
        t.sum += m * std::abs(target.at(u, v, c) - recon.at(u, v, c));
      ++t.count;
    }
  return t;
}

/// -sum(ln m): keeps free masks away from the all-zero degenerate optimum.
inline LossTerm mask_regularization(const Image& mask) {
  if (mask.channels != 1) throw std::domain_error("mask_regularization: mask must be single-channel");
  LossTerm t;
  for (int v = 0; v < mask.height; ++v)
    for (int u = 0; u < mask.width; ++u) {
      const double m = mask.at(u, v);
      if (!(m > 0.0)) throw std::domain_error("mask_regularization: mask value <= 0 hits the log singularity");
      t.sum += -std::log(m);
      ++t.count;
    }
  return t;
}

/// Stereo pair reconstruction loss: each image rebuilt from the other via
/// its disparity map, both residuals summed over their valid pixels.
inline LossTerm stereo_appearance_loss(const Image& left, const Image& right, const Image& disp_l,
                                       const Image& disp_r) {
  detail::require_same_shape(left, right, "stereo_appearance_loss");
  const SampleGrid grid_l = make_disparity_grid(disp_l, WarpDirection::left_from_right);
  const Image recon_l = bilinear_sample(right, grid_l);
  LossTerm t = photometric_loss(left, recon_l, grid_l.valid);
  const SampleGrid grid_r = make_disparity_grid(disp_r, WarpDirection::right_from_left);
  const Image recon_r = bilinear_sample(left, grid_r);
  t += photometric_loss(right, recon_r, grid_r.valid);
  return t;
}

/// Left-right disparity consistency: each map compared against the opposite
/// map sampled at the disparity-displaced position.
inline LossTerm lr_consistency_loss(const Image& disp_l, const Image& disp_r) {
  detail::require_same_shape(disp_l, disp_r, "lr_consistency_loss");
  const int W = disp_l.width, H = disp_l.height;
  LossTerm t;
  for (int v = 0; v < H; ++v)
    for (int u = 0; u < W; ++u) {
      const double dl = disp_l.at(u, v);
      const double su = u - dl;
      if (su >= 0.0 && su <= W - 1.0) {
        const BilinearTap tap = make_tap(su, v, W, H);
        t.sum += std::abs(dl - tap_value(disp_r, tap, 0));
        ++t.count;
      }
    }
  for (int v = 0; v < H; ++v)
    for (int u = 0; u < W; ++u) {
      const double dr = disp_r.at(u, v);
      const double su = u + dr;
      if (su >= 0.0 && su <= W - 1.0) {
        const BilinearTap tap = make_tap(su, v, W, H);
        t.sum += std::abs(dr - tap_value(disp_l, tap, 0));
        ++t.count;
      }
    }
  return t;
}

/// Edge weight e^{-|dI|} with the image gradient magnitude averaged over
/// channels; forward differences.
inline double edge_weight_x(const Image& img, int u, int v) {
  double g = 0;
  for (int c = 0; c < img.channels; ++c) g += std::abs(img.at(u + 1, v, c) - img.at(u, v, c));
  return std::exp(-g / img.channels);
}

inline double edge_weight_y(const Image& img, int u, int v) {
  double g = 0;
  for (int c = 0; c < img.channels; ++c) g += std::abs(img.at(u, v + 1, c) - img.at(u, v, c));
  return std::exp(-g / img.channels);
}

/// Second-order smoothness of a field, relaxed where the image has strong
/// gradients so depth discontinuities can align with image edges. Sites
/// lacking a neighbor contribute nothing and are not counted.
inline LossTerm edge_aware_smoothness(const Image& disp, const Image& img) {
  if (disp.channels != 1) throw std::domain_error("edge_aware_smoothness: field must be single-channel");
  if (disp.width != img.width || disp.height != img.height)
    throw std::domain_error("edge_aware_smoothness: field and image sizes differ");
  const int W = disp.width, H = disp.height;
  LossTerm t;
  for (int v = 0; v < H; ++v)
    for (int u = 1; u + 1 < W; ++u) {
      const double c2 = disp.at(u + 1, v) - 2 * disp.at(u, v) + disp.at(u - 1, v);
      t.sum += std::abs(c2) * edge_weight_x(img, u, v);
      ++t.count;
    }
  for (int v = 1; v + 1 < H; ++v)
    for (int u = 0; u < W; ++u) {
      const double c2 = disp.at(u, v + 1) - 2 * disp.at(u, v) + disp.at(u, v - 1);
      t.sum += std::abs(c2) * edge_weight_y(img, u, v);
      ++t.count;
    }
  return t;
}

/// Loss terms of one pyramid scale, raw sums plus counts.
struct ScaleLosses {
  int scale = 1;  // downscaling factor r
  LossTerm vs, ap, lr, smooth, reg;
};

/// Per-scale normalized term values and the weighted grand total.
struct LossReport {
  struct Scale {
    int scale = 1;
    double vs = 0, ap = 0, lr = 0, smooth = 0, reg = 0;
    double total = 0;
  };
  std::vector<Scale> scales;
  double total = 0;
  bool had_empty_term = false;

  double term_sum(double Scale::*term) const {
    double s = 0;
    for (const auto& sc : scales) s += sc.*term;
    return s;
  }
};

namespace detail {
inline void check_finite(double x, const char* term) {
  if (!std::isfinite(x))
    throw std::runtime_error(std::string("total_synthesis_loss: non-finite value in term ") + term);
}
}  // namespace detail

/// Combine per-scale terms into the final objective. Terms are normalized by
/// their site counts, then weighted; the smoothness weight decays as
/// lambda_s / r with the scale factor r.
inline LossReport total_synthesis_loss(const std::vector<ScaleLosses>& parts, const LossWeights& w) {
  w.validate();
  LossReport rep;
  rep.scales.reserve(parts.size());
  for (const ScaleLosses& p : parts) {
    LossReport::Scale s;
    s.scale = p.scale;
    s.vs = p.vs.normalized();
    s.ap = p.ap.normalized();
    s.lr = p.lr.normalized();
    s.smooth = p.smooth.normalized();
    s.reg = p.reg.normalized();
    detail::check_finite(s.vs, "L_vs");
    detail::check_finite(s.ap, "L_ap");
    detail::check_finite(s.lr, "L_lr");
    detail::check_finite(s.smooth, "L_smooth");
    detail::check_finite(s.reg, "L_reg");
    s.total = s.vs + w.lambda_a * s.ap + w.lambda_c * s.lr + (w.lambda_s / p.scale) * s.smooth +
              w.lambda_e * s.reg;
    rep.scales.push_back(s);
    rep.total += s.total;
  }
  return rep;
}

}  // namespace vs
