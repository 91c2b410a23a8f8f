#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "viewsynth/geometry.hpp"
#include "viewsynth/image.hpp"
#include "viewsynth/losses.hpp"
#include "viewsynth/params.hpp"
#include "viewsynth/sampler.hpp"

namespace vs {

/// Which terms of the combined objective are active.
///
/// Three supported configurations:
///   joint:    temporal + stereo; the left disparity is derived from the
///             depth field through d = fx*b/z, the right disparity is free.
///   temporal: no stereo terms; depth, poses and masks only.
///   stereo:   no temporal terms; two free disparity fields.
struct ObjectiveOptions {
  LossWeights weights;
  int scales = 4;
  bool temporal = true;
  bool stereo = true;
  bool masks = true;  // weight the temporal loss by per-pixel masks and add their regularizer
  double z_min = 0.1;
  double z_max = 100.0;
};

/// The combined multi-scale view-synthesis objective over a fixed frame set.
/// Parameters live in flat raw blocks; a single full-resolution raw field per
/// kind is mean-pooled to every pyramid scale and activated there, so coarse
/// scales contribute large-region gradients to the same variables the fine
/// scales refine. Poses are shared across scales.
class SynthesisObjective {
 public:
  SynthesisObjective(Image left_target, std::vector<Image> left_sources, Image right,
                     CameraModel cam, ObjectiveOptions opt)
      : opt_(opt), cam_(cam) {
    cam_.validate();
    opt_.weights.validate();
    if (opt_.scales < 1) throw std::domain_error("SynthesisObjective: scales must be >= 1");
    if (!opt_.temporal && !opt_.stereo)
      throw std::domain_error("SynthesisObjective: at least one of temporal/stereo must be active");
    if (!opt_.temporal) opt_.masks = false;
    if (left_target.width != cam_.width || left_target.height != cam_.height)
      throw std::domain_error("SynthesisObjective: target size does not match camera");
    if (opt_.temporal && left_sources.empty())
      throw std::domain_error("SynthesisObjective: temporal terms need source frames");
    for (const Image& s : left_sources)
      if (!s.same_shape(left_target))
        throw std::domain_error("SynthesisObjective: source frame shape mismatch");
    if (opt_.stereo && !right.same_shape(left_target))
      throw std::domain_error("SynthesisObjective: right frame shape mismatch");

    levels_ = feasible_levels(cam_.width, cam_.height, opt_.scales);
    for (int l = 0; l < levels_; ++l) cams_.push_back(cam_.scaled(1 << l));
    target_pyr_ = build_pyramid(left_target, levels_);
    if (opt_.temporal)
      for (const Image& s : left_sources) source_pyrs_.push_back(build_pyramid(s, levels_));
    if (opt_.stereo) right_pyr_ = build_pyramid(right, levels_);

    num_sources_ = static_cast<int>(source_pyrs_.size());
    int idx = 0;
    depth_idx_ = opt_.temporal ? idx++ : -1;
    disp_left_idx_ = opt_.temporal ? -1 : idx++;
    disp_right_idx_ = opt_.stereo ? idx++ : -1;
    pose0_idx_ = opt_.temporal ? idx : -1;
    if (opt_.temporal) idx += num_sources_;
    mask0_idx_ = opt_.masks ? idx : -1;
    if (opt_.masks) idx += num_sources_;
    num_blocks_ = idx;
  }

  int levels() const { return levels_; }
  int num_sources() const { return num_sources_; }
  int num_blocks() const { return num_blocks_; }
  const ObjectiveOptions& options() const { return opt_; }
  const CameraModel& camera(int level = 0) const { return cams_[level]; }
  const Image& target(int level = 0) const { return target_pyr_[level]; }

  int depth_block() const { return depth_idx_; }
  int disp_left_block() const { return disp_left_idx_; }
  int disp_right_block() const { return disp_right_idx_; }
  int pose_block(int s) const { return pose0_idx_ < 0 ? -1 : pose0_idx_ + s; }
  int mask_block(int s) const { return mask0_idx_ < 0 ? -1 : mask0_idx_ + s; }

  /// Neutral starting point: constant fields mapping to the given depth and
  /// disparity, identity poses, masks near 0.88.
  std::vector<ParamBlock> initial_params(double init_depth = 2.0, double init_disparity = 1.0,
                                         double init_mask_raw = 2.0) const {
    const std::size_t n = static_cast<std::size_t>(cam_.width) * cam_.height;
    std::vector<ParamBlock> blocks(num_blocks_);
    if (depth_idx_ >= 0)
      blocks[depth_idx_] = {"depth", ParamKind::inverse_depth_field,
                            std::vector<double>(n, depth_to_raw(init_depth))};
    if (disp_left_idx_ >= 0)
      blocks[disp_left_idx_] = {"disp_left", ParamKind::disparity_field,
                                std::vector<double>(n, disparity_to_raw(init_disparity))};
    if (disp_right_idx_ >= 0)
      blocks[disp_right_idx_] = {"disp_right", ParamKind::disparity_field,
                                 std::vector<double>(n, disparity_to_raw(init_disparity))};
    for (int s = 0; s < num_sources_; ++s) {
      if (pose0_idx_ >= 0)
        blocks[pose0_idx_ + s] = {"pose_" + std::to_string(s), ParamKind::pose6,
                                  std::vector<double>(6, 0.0)};
      if (mask0_idx_ >= 0)
        blocks[mask0_idx_ + s] = {"mask_" + std::to_string(s), ParamKind::mask_field,
                                  std::vector<double>(n, init_mask_raw)};
    }
    return blocks;
  }

  LossReport evaluate(const std::vector<ParamBlock>& params) const {
    std::vector<LevelState> states;
    return run_forward(params, nullptr, states);
  }

  double value(const std::vector<ParamBlock>& params) const { return evaluate(params).total; }

  /// Forward pass plus hand-derived adjoints through every layer: losses,
  /// sampling, the warp constructors, activations and the scale pooling.
  /// Accumulation order is fixed, so repeated runs are bit-identical.
  LossReport gradient(const std::vector<ParamBlock>& params, GradientSet& grads) const {
    std::vector<LevelState> states;
    RawPyramids raws;
    const LossReport rep = run_forward(params, &raws, states);

    grads.blocks.assign(num_blocks_, {});
    for (int b = 0; b < num_blocks_; ++b) grads.blocks[b].assign(params[b].values.size(), 0.0);

    for (int l = 0; l < levels_; ++l) backward_level(params, raws, states[l], l, grads);

    for (int b = 0; b < num_blocks_; ++b)
      for (double g : grads.blocks[b])
        if (!std::isfinite(g))
          throw std::runtime_error("SynthesisObjective::gradient: non-finite gradient in block " +
                                   params[b].name);
    return rep;
  }

 private:
  struct RawPyramids {
    std::vector<Image> depth, disp_left, disp_right;
    std::vector<std::vector<Image>> masks;  // [source][level]
  };

  struct LevelState {
    Image depth;            // activated depth (temporal modes)
    Image disp_l, disp_r;   // level-scale disparities
    std::vector<Image> masks;
    std::vector<SampleGrid> tgrids;
    std::vector<Image> trecons;
    SampleGrid grid_l, grid_r;
    Image recon_l, recon_r;
    ScaleLosses losses;
  };

  void check_params(const std::vector<ParamBlock>& params) const {
    if (static_cast<int>(params.size()) != num_blocks_)
      throw std::domain_error("SynthesisObjective: expected " + std::to_string(num_blocks_) +
                              " parameter blocks, got " + std::to_string(params.size()));
    const std::size_t n = static_cast<std::size_t>(cam_.width) * cam_.height;
    for (int b = 0; b < num_blocks_; ++b) {
      const std::size_t want = params[b].kind == ParamKind::pose6 ? 6 : n;
      if (params[b].values.size() != want)
        throw std::domain_error("SynthesisObjective: block " + params[b].name + " has wrong size");
    }
  }

  Image field_image(const std::vector<double>& values) const {
    Image img(cam_.width, cam_.height, 1);
    img.data = values;
    return img;
  }

  Pose6 pose_of(const std::vector<ParamBlock>& params, int s) const {
    const std::vector<double>& v = params[pose0_idx_ + s].values;
    return {v[0], v[1], v[2], v[3], v[4], v[5]};
  }

  LossReport run_forward(const std::vector<ParamBlock>& params, RawPyramids* raws_out,
                         std::vector<LevelState>& states) const {
    check_params(params);
    RawPyramids raws;
    if (depth_idx_ >= 0) raws.depth = build_pyramid(field_image(params[depth_idx_].values), levels_);
    if (disp_left_idx_ >= 0)
      raws.disp_left = build_pyramid(field_image(params[disp_left_idx_].values), levels_);
    if (disp_right_idx_ >= 0)
      raws.disp_right = build_pyramid(field_image(params[disp_right_idx_].values), levels_);
    for (int s = 0; s < num_sources_ && mask0_idx_ >= 0; ++s)
      raws.masks.push_back(build_pyramid(field_image(params[mask0_idx_ + s].values), levels_));

    states.assign(levels_, {});
    std::vector<ScaleLosses> parts;
    for (int l = 0; l < levels_; ++l) {
      forward_level(params, raws, l, states[l]);
      parts.push_back(states[l].losses);
    }
    LossReport rep = total_synthesis_loss(parts, opt_.weights);
    for (const ScaleLosses& p : parts) {
      if (opt_.temporal && p.vs.count == 0) rep.had_empty_term = true;
      if (opt_.stereo && (p.ap.count == 0 || p.lr.count == 0)) rep.had_empty_term = true;
    }
    if (raws_out) *raws_out = std::move(raws);
    return rep;
  }

  void forward_level(const std::vector<ParamBlock>& params, const RawPyramids& raws, int l,
                     LevelState& st) const {
    const CameraModel& cam = cams_[l];
    const int r = 1 << l;
    const int W = cam.width, H = cam.height;

    if (depth_idx_ >= 0) {
      st.depth = Image(W, H, 1);
      for (std::size_t i = 0; i < st.depth.data.size(); ++i)
        st.depth.data[i] = activate_depth_value(raws.depth[l].data[i], opt_.z_min, opt_.z_max);
      // Left disparity follows the depth field through d = fx*b/z.
      st.disp_l = Image(W, H, 1);
      for (std::size_t i = 0; i < st.disp_l.data.size(); ++i)
        st.disp_l.data[i] = cam.fx * cam.baseline / st.depth.data[i];
    } else {
      st.disp_l = Image(W, H, 1);
      for (std::size_t i = 0; i < st.disp_l.data.size(); ++i)
        st.disp_l.data[i] = activate_disparity_value(raws.disp_left[l].data[i]) / r;
    }
    if (disp_right_idx_ >= 0) {
      st.disp_r = Image(W, H, 1);
      for (std::size_t i = 0; i < st.disp_r.data.size(); ++i)
        st.disp_r.data[i] = activate_disparity_value(raws.disp_right[l].data[i]) / r;
    }
    for (int s = 0; s < num_sources_ && mask0_idx_ >= 0; ++s) {
      Image m(W, H, 1);
      for (std::size_t i = 0; i < m.data.size(); ++i)
        m.data[i] = activate_mask_value(raws.masks[s][l].data[i]);
      st.masks.push_back(std::move(m));
    }

    ScaleLosses& out = st.losses;
    out.scale = r;

    if (opt_.temporal) {
      for (int s = 0; s < num_sources_; ++s) {
        SampleGrid grid = make_temporal_grid(cam, st.depth, pose_of(params, s));
        Image recon = bilinear_sample(source_pyrs_[s][l], grid);
        if (opt_.masks)
          out.vs += masked_photometric_loss(target_pyr_[l], recon, st.masks[s], grid.valid);
        else
          out.vs += photometric_loss(target_pyr_[l], recon, grid.valid);
        st.tgrids.push_back(std::move(grid));
        st.trecons.push_back(std::move(recon));
      }
    }
    if (opt_.stereo) {
      st.grid_l = make_disparity_grid(st.disp_l, WarpDirection::left_from_right);
      st.recon_l = bilinear_sample(right_pyr_[l], st.grid_l);
      out.ap += photometric_loss(target_pyr_[l], st.recon_l, st.grid_l.valid);
      st.grid_r = make_disparity_grid(st.disp_r, WarpDirection::right_from_left);
      st.recon_r = bilinear_sample(target_pyr_[l], st.grid_r);
      out.ap += photometric_loss(right_pyr_[l], st.recon_r, st.grid_r.valid);
      out.lr += lr_consistency_loss(st.disp_l, st.disp_r);
    }
    out.smooth += edge_aware_smoothness(st.disp_l, target_pyr_[l]);
    if (opt_.stereo) out.smooth += edge_aware_smoothness(st.disp_r, right_pyr_[l]);
    for (int s = 0; s < num_sources_ && opt_.masks; ++s) out.reg += mask_regularization(st.masks[s]);
  }

  // Adjoints for one scale. Level-field gradients are chained through the
  // activations and pooled back up to the full-resolution raw blocks.
  void backward_level(const std::vector<ParamBlock>& params, const RawPyramids& raws,
                      const LevelState& st, int l, GradientSet& grads) const {
    const CameraModel& cam = cams_[l];
    const int r = 1 << l;
    const int W = cam.width, H = cam.height;
    const LossWeights& w = opt_.weights;

    const double up_vs = st.losses.vs.count > 0 ? 1.0 / st.losses.vs.count : 0.0;
    const double up_ap = st.losses.ap.count > 0 ? w.lambda_a / st.losses.ap.count : 0.0;
    const double up_lr = st.losses.lr.count > 0 ? w.lambda_c / st.losses.lr.count : 0.0;
    const double up_sm = st.losses.smooth.count > 0 ? (w.lambda_s / r) / st.losses.smooth.count : 0.0;
    const double up_reg = st.losses.reg.count > 0 ? w.lambda_e / st.losses.reg.count : 0.0;

    Image g_depth(W, H, 1), g_disp_l(W, H, 1);
    Image g_disp_r = disp_right_idx_ >= 0 ? Image(W, H, 1) : Image();
    std::vector<Image> g_masks;
    for (int s = 0; s < num_sources_ && mask0_idx_ >= 0; ++s) g_masks.emplace_back(W, H, 1);

    if (opt_.temporal && up_vs > 0) {
      for (int s = 0; s < num_sources_; ++s) {
        const Pose6 pose = pose_of(params, s);
        const Mat3 rot = rotation_of(pose);
        const RotationDerivatives rotd = rotation_derivatives(pose);
        const Image& src = source_pyrs_[s][l];
        const SampleGrid& grid = st.tgrids[s];
        std::vector<double>& gp = grads.blocks[pose0_idx_ + s];
        for (int y = 0; y < H; ++y) {
          for (int x = 0; x < W; ++x) {
            const std::size_t i = grid.idx(x, y);
            if (!grid.valid[i]) continue;
            const BilinearTap tap = make_tap(grid.u[i], grid.v[i], W, H);
            const double m = opt_.masks ? st.masks[s].at(x, y) : 1.0;
            double gu = 0, gv = 0, res_abs = 0;
            for (int c = 0; c < target_pyr_[l].channels; ++c) {
              const double res = target_pyr_[l].at(x, y, c) - st.trecons[s].at(x, y, c);
              const double coeff = -m * detail::sign(res) * up_vs;
              res_abs += std::abs(res);
              gu += coeff * tap_du(src, tap, c);
              gv += coeff * tap_dv(src, tap, c);
            }
            if (mask0_idx_ >= 0) g_masks[s].at(x, y) += up_vs * res_abs;

            // Chain the sample-coordinate gradient through reprojection,
            // rigid motion and inverse projection.
            const double z = st.depth.at(x, y);
            const double alpha = (x - cam.cx) / cam.fx, beta = (y - cam.cy) / cam.fy;
            const Point3 p{z * alpha, z * beta, z};
            const Point3 q = transform_point(rot, pose.translation(), p);
            const double inv_qz = 1.0 / q.z;
            const Point3 gq{gu * cam.fx * inv_qz,
                            gv * cam.fy * inv_qz,
                            -(gu * cam.fx * q.x + gv * cam.fy * q.y) * inv_qz * inv_qz};
            const Point3 dq_dz = rot * Point3{alpha, beta, 1.0};
            g_depth.at(x, y) += gq.x * dq_dz.x + gq.y * dq_dz.y + gq.z * dq_dz.z;
            const Point3 da = rotd.d_rx * p, db = rotd.d_ry * p, dc = rotd.d_rz * p;
            gp[0] += gq.x * da.x + gq.y * da.y + gq.z * da.z;
            gp[1] += gq.x * db.x + gq.y * db.y + gq.z * db.z;
            gp[2] += gq.x * dc.x + gq.y * dc.y + gq.z * dc.z;
            gp[3] += gq.x;
            gp[4] += gq.y;
            gp[5] += gq.z;
          }
        }
      }
    }

    if (opt_.stereo) {
      if (up_ap > 0) {
        for (int y = 0; y < H; ++y)
          for (int x = 0; x < W; ++x) {
            const std::size_t i = st.grid_l.idx(x, y);
            if (!st.grid_l.valid[i]) continue;
            const BilinearTap tap = make_tap(st.grid_l.u[i], st.grid_l.v[i], W, H);
            double gu = 0;
            for (int c = 0; c < target_pyr_[l].channels; ++c) {
              const double res = target_pyr_[l].at(x, y, c) - st.recon_l.at(x, y, c);
              gu += -detail::sign(res) * up_ap * tap_du(right_pyr_[l], tap, c);
            }
            g_disp_l.at(x, y) += -gu;  // source coordinate is u - d
          }
        for (int y = 0; y < H; ++y)
          for (int x = 0; x < W; ++x) {
            const std::size_t i = st.grid_r.idx(x, y);
            if (!st.grid_r.valid[i]) continue;
            const BilinearTap tap = make_tap(st.grid_r.u[i], st.grid_r.v[i], W, H);
            double gu = 0;
            for (int c = 0; c < target_pyr_[l].channels; ++c) {
              const double res = right_pyr_[l].at(x, y, c) - st.recon_r.at(x, y, c);
              gu += -detail::sign(res) * up_ap * tap_du(target_pyr_[l], tap, c);
            }
            g_disp_r.at(x, y) += gu;  // source coordinate is u + d
          }
      }
      if (up_lr > 0) {
        for (int y = 0; y < H; ++y)
          for (int x = 0; x < W; ++x) {
            const double dl = st.disp_l.at(x, y);
            const double su = x - dl;
            if (su < 0.0 || su > W - 1.0) continue;
            const BilinearTap tap = make_tap(su, y, W, H);
            const double res = dl - tap_value(st.disp_r, tap, 0);
            const double s_ = detail::sign(res);
            g_disp_l.at(x, y) += up_lr * s_ * (1.0 + tap_du(st.disp_r, tap, 0));
            tap_scatter(g_disp_r, tap, -up_lr * s_);
          }
        for (int y = 0; y < H; ++y)
          for (int x = 0; x < W; ++x) {
            const double dr = st.disp_r.at(x, y);
            const double su = x + dr;
            if (su < 0.0 || su > W - 1.0) continue;
            const BilinearTap tap = make_tap(su, y, W, H);
            const double res = dr - tap_value(st.disp_l, tap, 0);
            const double s_ = detail::sign(res);
            g_disp_r.at(x, y) += up_lr * s_ * (1.0 - tap_du(st.disp_l, tap, 0));
            tap_scatter(g_disp_l, tap, -up_lr * s_);
          }
      }
    }

    if (up_sm > 0) {
      smoothness_backward(st.disp_l, target_pyr_[l], up_sm, g_disp_l);
      if (opt_.stereo) smoothness_backward(st.disp_r, right_pyr_[l], up_sm, g_disp_r);
    }

    if (mask0_idx_ >= 0 && up_reg > 0)
      for (int s = 0; s < num_sources_; ++s)
        for (int y = 0; y < H; ++y)
          for (int x = 0; x < W; ++x) g_masks[s].at(x, y) += -up_reg / st.masks[s].at(x, y);

    // Chain level fields back to raw blocks.
    if (depth_idx_ >= 0) {
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          const double z = st.depth.at(x, y);
          g_depth.at(x, y) += g_disp_l.at(x, y) * (-cam.fx * cam.baseline / (z * z));
        }
      Image g_raw(W, H, 1);
      for (std::size_t i = 0; i < g_raw.data.size(); ++i)
        g_raw.data[i] =
            g_depth.data[i] * activate_depth_deriv(raws.depth[l].data[i], opt_.z_min, opt_.z_max);
      accumulate_up(g_raw, l, grads.blocks[depth_idx_]);
    } else {
      Image g_raw(W, H, 1);
      for (std::size_t i = 0; i < g_raw.data.size(); ++i)
        g_raw.data[i] = g_disp_l.data[i] * activate_disparity_deriv(raws.disp_left[l].data[i]) / r;
      accumulate_up(g_raw, l, grads.blocks[disp_left_idx_]);
    }
    if (disp_right_idx_ >= 0) {
      Image g_raw(W, H, 1);
      for (std::size_t i = 0; i < g_raw.data.size(); ++i)
        g_raw.data[i] = g_disp_r.data[i] * activate_disparity_deriv(raws.disp_right[l].data[i]) / r;
      accumulate_up(g_raw, l, grads.blocks[disp_right_idx_]);
    }
    for (int s = 0; s < num_sources_ && mask0_idx_ >= 0; ++s) {
      Image g_raw(W, H, 1);
      for (std::size_t i = 0; i < g_raw.data.size(); ++i)
        g_raw.data[i] = g_masks[s].data[i] * activate_mask_deriv(raws.masks[s][l].data[i]);
      accumulate_up(g_raw, l, grads.blocks[mask0_idx_ + s]);
    }
  }

  static void smoothness_backward(const Image& disp, const Image& img, double up, Image& gbuf) {
    const int W = disp.width, H = disp.height;
    for (int v = 0; v < H; ++v)
      for (int u = 1; u + 1 < W; ++u) {
        const double c2 = disp.at(u + 1, v) - 2 * disp.at(u, v) + disp.at(u - 1, v);
        const double g = up * detail::sign(c2) * edge_weight_x(img, u, v);
        gbuf.at(u + 1, v) += g;
        gbuf.at(u, v) -= 2 * g;
        gbuf.at(u - 1, v) += g;
      }
    for (int v = 1; v + 1 < H; ++v)
      for (int u = 0; u < W; ++u) {
        const double c2 = disp.at(u, v + 1) - 2 * disp.at(u, v) + disp.at(u, v - 1);
        const double g = up * detail::sign(c2) * edge_weight_y(img, u, v);
        gbuf.at(u, v + 1) += g;
        gbuf.at(u, v) -= 2 * g;
        gbuf.at(u, v - 1) += g;
      }
  }

  /// Adjoint of the repeated 2x2 mean pooling: expand a level-l gradient
  /// back to full resolution and add it into the flat block gradient.
  void accumulate_up(const Image& g_level, int level, std::vector<double>& block_grad) const {
    Image cur = g_level;
    for (int l = level; l > 0; --l) {
      Image prev(cams_[l - 1].width, cams_[l - 1].height, 1);
      for (int y = 0; y < cur.height; ++y)
        for (int x = 0; x < cur.width; ++x) {
          const double g = 0.25 * cur.at(x, y);
          prev.at(2 * x, 2 * y) += g;
          prev.at(2 * x + 1, 2 * y) += g;
          prev.at(2 * x, 2 * y + 1) += g;
          prev.at(2 * x + 1, 2 * y + 1) += g;
        }
      cur = std::move(prev);
    }
    for (std::size_t i = 0; i < cur.data.size(); ++i) block_grad[i] += cur.data[i];
  }

  ObjectiveOptions opt_;
  CameraModel cam_;
  int levels_ = 1;
  int num_sources_ = 0;
  int num_blocks_ = 0;
  int depth_idx_ = -1, disp_left_idx_ = -1, disp_right_idx_ = -1, pose0_idx_ = -1, mask0_idx_ = -1;
  std::vector<CameraModel> cams_;
  std::vector<Image> target_pyr_;
  std::vector<std::vector<Image>> source_pyrs_;
  std::vector<Image> right_pyr_;
};

}  // namespace vs
