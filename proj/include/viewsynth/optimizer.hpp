#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "viewsynth/geometry.hpp"
#include "viewsynth/image.hpp"
#include "viewsynth/losses.hpp"
#include "viewsynth/objective.hpp"
#include "viewsynth/params.hpp"

namespace vs {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First and second moment estimates, one slot per parameter.
struct AdamState {
  std::vector<std::vector<double>> m, v;
  long step_count = 0;

  void init(const std::vector<ParamBlock>& params) {
    m.clear();
    v.clear();
    for (const ParamBlock& b : params) {
      m.emplace_back(b.values.size(), 0.0);
      v.emplace_back(b.values.size(), 0.0);
    }
    step_count = 0;
  }
};

/// One Adam update with the standard bias correction.
inline void adam_step(std::vector<ParamBlock>& params, const GradientSet& grads, AdamState& st,
                      double lr, const AdamConfig& cfg = {}) {
  if (st.m.size() != params.size())
    throw std::domain_error("adam_step: state not initialized for these parameters");
  ++st.step_count;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step_count));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step_count));
  for (std::size_t b = 0; b < params.size(); ++b) {
    std::vector<double>& x = params[b].values;
    const std::vector<double>& g = grads.blocks[b];
    for (double gv : g)
      if (!std::isfinite(gv))
        throw std::runtime_error("adam_step: non-finite gradient in block " + params[b].name);
    for (std::size_t i = 0; i < x.size(); ++i) {
      st.m[b][i] = cfg.beta1 * st.m[b][i] + (1.0 - cfg.beta1) * g[i];
      st.v[b][i] = cfg.beta2 * st.v[b][i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mh = st.m[b][i] / bc1;
      const double vh = st.v[b][i] / bc2;
      x[i] -= lr * mh / (std::sqrt(vh) + cfg.epsilon);
    }
  }
}

struct OptimizeConfig {
  int iterations = 2000;
  double learning_rate = 1e-4;
  int halve_lr_every = 0;  // halve the learning rate every N iterations; 0 disables
  LossWeights weights;
  int scales = 4;
  int sequence_length = 3;  // temporal frames per sample (target plus sources)
  bool masks = true;        // joint/temporal runs only
  double z_min = 0.1, z_max = 100.0;
  double init_depth = 2.0;
  double init_disparity = 1.0;
  double init_mask_raw = 2.0;
  Image depth_init;  // optional full-resolution starting depth (empty = constant init)
  bool freeze_depth = false;
  bool freeze_disparity = false;
  bool freeze_pose = false;
  bool freeze_mask = false;
  AdamConfig adam;
  // The run aborts (flagging divergence) after this many consecutive
  // iterations with loss above divergence_factor times the starting loss.
  double divergence_factor = 10.0;
  int divergence_patience = 50;
  int record_every = 1;  // history row spacing; the final iterate is always recorded
};

struct HistoryRow {
  int iteration = 0;
  double learning_rate = 0;
  double vs = 0, ap = 0, lr = 0, smooth = 0, reg = 0;
  double total = 0;
  double best_total = 0;  // running minimum: the monotone envelope of total
};

/// The recovered state: activated full-resolution fields of the best-loss
/// iterate, its loss report, and the per-iteration trace.
struct Solution {
  Image depth;
  Image disp_left, disp_right;
  std::vector<Pose6> poses;
  std::vector<Image> masks;
  std::vector<ParamBlock> params;  // raw blocks of the returned iterate
  LossReport report;
  std::vector<HistoryRow> history;
  bool diverged = false;
  int best_iteration = -1;
};

namespace detail {

inline bool frozen_kind(const OptimizeConfig& cfg, ParamKind k) {
  switch (k) {
    case ParamKind::inverse_depth_field: return cfg.freeze_depth;
    case ParamKind::disparity_field: return cfg.freeze_disparity;
    case ParamKind::pose6: return cfg.freeze_pose;
    case ParamKind::mask_field: return cfg.freeze_mask;
  }
  return false;
}

inline HistoryRow history_row(int it, double lr, const LossReport& rep) {
  HistoryRow row;
  row.iteration = it;
  row.learning_rate = lr;
  row.vs = rep.term_sum(&LossReport::Scale::vs);
  row.ap = rep.term_sum(&LossReport::Scale::ap);
  row.lr = rep.term_sum(&LossReport::Scale::lr);
  row.smooth = rep.term_sum(&LossReport::Scale::smooth);
  row.reg = rep.term_sum(&LossReport::Scale::reg);
  row.total = rep.total;
  return row;
}

}  // namespace detail

/// Minimize the objective by Adam on the raw parameter blocks and return the
/// iterate with the lowest observed loss. Deterministic: no randomness in
/// the loop, fixed accumulation order throughout.
inline Solution optimize(const SynthesisObjective& obj, const OptimizeConfig& cfg) {
  if (cfg.iterations < 1) throw std::domain_error("optimize: iterations must be >= 1");

  std::vector<ParamBlock> params =
      obj.initial_params(cfg.init_depth, cfg.init_disparity, cfg.init_mask_raw);
  if (!cfg.depth_init.empty()) {
    if (obj.depth_block() < 0)
      throw std::domain_error("optimize: depth_init given but the objective has no depth field");
    const CameraModel& cam = obj.camera();
    if (cfg.depth_init.width != cam.width || cfg.depth_init.height != cam.height ||
        cfg.depth_init.channels != 1)
      throw std::domain_error("optimize: depth_init size mismatch");
    std::vector<double>& raw = params[obj.depth_block()].values;
    for (std::size_t i = 0; i < raw.size(); ++i)
      raw[i] = depth_to_raw(std::clamp(cfg.depth_init.data[i], 1.0 + 1e-9, 1e9));
  }

  AdamState st;
  st.init(params);
  GradientSet grads;

  Solution sol;
  double best = std::numeric_limits<double>::infinity();
  double initial_total = 0;
  int high_loss_streak = 0;
  double lr = cfg.learning_rate;

  for (int it = 0; it < cfg.iterations; ++it) {
    if (cfg.halve_lr_every > 0 && it > 0 && it % cfg.halve_lr_every == 0) lr *= 0.5;
    const LossReport rep = obj.gradient(params, grads);
    if (it == 0) initial_total = rep.total;

    if (rep.total < best) {
      best = rep.total;
      sol.params = params;
      sol.report = rep;
      sol.best_iteration = it;
    }
    if (it % cfg.record_every == 0 || it == cfg.iterations - 1) {
      HistoryRow row = detail::history_row(it, lr, rep);
      row.best_total = best;
      sol.history.push_back(row);
    }

    if (initial_total > 0 && rep.total > cfg.divergence_factor * initial_total) {
      if (++high_loss_streak >= cfg.divergence_patience) {
        sol.diverged = true;
        break;
      }
    } else {
      high_loss_streak = 0;
    }

    for (std::size_t b = 0; b < params.size(); ++b)
      if (detail::frozen_kind(cfg, params[b].kind))
        std::fill(grads.blocks[b].begin(), grads.blocks[b].end(), 0.0);
    adam_step(params, grads, st, lr, cfg.adam);
  }

  // Activate the best iterate's fields at full resolution.
  const CameraModel& cam = obj.camera();
  const std::vector<ParamBlock>& bp = sol.params;
  if (obj.depth_block() >= 0) {
    sol.depth = Image(cam.width, cam.height, 1);
    for (std::size_t i = 0; i < sol.depth.data.size(); ++i)
      sol.depth.data[i] =
          activate_depth_value(bp[obj.depth_block()].values[i], cfg.z_min, cfg.z_max);
    sol.disp_left = Image(cam.width, cam.height, 1);
    for (std::size_t i = 0; i < sol.disp_left.data.size(); ++i)
      sol.disp_left.data[i] = cam.fx * cam.baseline / sol.depth.data[i];
  }
  if (obj.disp_left_block() >= 0) {
    sol.disp_left = Image(cam.width, cam.height, 1);
    for (std::size_t i = 0; i < sol.disp_left.data.size(); ++i)
      sol.disp_left.data[i] = activate_disparity_value(bp[obj.disp_left_block()].values[i]);
  }
  if (obj.disp_right_block() >= 0) {
    sol.disp_right = Image(cam.width, cam.height, 1);
    for (std::size_t i = 0; i < sol.disp_right.data.size(); ++i)
      sol.disp_right.data[i] = activate_disparity_value(bp[obj.disp_right_block()].values[i]);
  }
  for (int s = 0; s < obj.num_sources(); ++s) {
    if (obj.pose_block(s) >= 0) {
      const std::vector<double>& v = bp[obj.pose_block(s)].values;
      sol.poses.push_back({v[0], v[1], v[2], v[3], v[4], v[5]});
    }
    if (obj.mask_block(s) >= 0) {
      Image m(cam.width, cam.height, 1);
      for (std::size_t i = 0; i < m.data.size(); ++i)
        m.data[i] = activate_mask_value(bp[obj.mask_block(s)].values[i]);
      sol.masks.push_back(std::move(m));
    }
  }
  return sol;
}

inline ObjectiveOptions detail_options(const OptimizeConfig& cfg, bool temporal, bool stereo) {
  ObjectiveOptions o;
  o.weights = cfg.weights;
  o.scales = cfg.scales;
  o.temporal = temporal;
  o.stereo = stereo;
  o.masks = temporal && cfg.masks;
  o.z_min = cfg.z_min;
  o.z_max = cfg.z_max;
  return o;
}

/// Recover two disparity fields from a rectified pair.
inline Solution optimize_stereo(const Image& left, const Image& right, const CameraModel& cam,
                                const OptimizeConfig& cfg) {
  SynthesisObjective obj(left, {}, right, cam, detail_options(cfg, false, true));
  return optimize(obj, cfg);
}

/// Recover depth, per-source poses and masks from a monocular sequence.
inline Solution optimize_temporal(const Image& target, const std::vector<Image>& sources,
                                  const CameraModel& cam, const OptimizeConfig& cfg) {
  SynthesisObjective obj(target, sources, Image(), cam, detail_options(cfg, true, false));
  return optimize(obj, cfg);
}

/// Full model: stereo plus temporal terms sharing one depth field.
inline Solution optimize_joint(const Image& left, const std::vector<Image>& sources,
                               const Image& right, const CameraModel& cam,
                               const OptimizeConfig& cfg) {
  SynthesisObjective obj(left, sources, right, cam, detail_options(cfg, true, true));
  return optimize(obj, cfg);
}

}  // namespace vs
