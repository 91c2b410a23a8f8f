#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "viewsynth/objective.hpp"
#include "viewsynth/params.hpp"

namespace vs {

/// Settings for the finite-difference audit of the analytic gradient.
struct GradCheckConfig {
  double step = 1e-6;       // central-difference half step
  double tolerance = 1e-4;  // max allowed relative error
  std::size_t samples_per_block = 200;  // field entries probed per block
  unsigned seed = 0;
  // Entries where the numeric estimate cannot certify the tolerance are
  // skipped rather than failed. For a subgradient kink at offset d inside
  // [-h, h] the central difference blends the two one-sided slopes and is
  // off by exactly |fwd - bwd| / 2 (fwd/bwd = one-sided differences), so
  // that quantity bounds the kink-induced uncertainty of the estimate; an
  // entry is skipped when it exceeds tolerance * scale. A second screen
  // compares the h and 2h central differences against kink_ratio to catch
  // jump discontinuities and cancellation pathologies in the wider stencil.
  double kink_ratio = 0.25;
};

struct GradCheckEntry {
  int block = 0;
  std::size_t index = 0;
  double analytic = 0;
  double numeric = 0;
  double rel_error = 0;
};

struct GradCheckBlock {
  std::string name;
  std::size_t checked = 0, skipped = 0, failed = 0;
  double max_rel_error = 0;
};

struct GradCheckReport {
  std::vector<GradCheckBlock> blocks;
  std::vector<GradCheckEntry> failures;
  std::size_t checked = 0, skipped = 0, failed = 0;
  double max_rel_error = 0;
  bool passed() const { return failed == 0 && checked > 0; }
};

/// Audit an objective's analytic gradient against central finite
/// differences at the given point. Works with anything exposing
/// value(params) and gradient(params, GradientSet&) over ParamBlocks.
/// Small blocks are probed exhaustively; larger ones are subsampled with a
/// seeded generator so runs repeat.
template <typename Objective>
GradCheckReport check_gradients(const Objective& obj, std::vector<ParamBlock> params,
                                const GradCheckConfig& cfg = {}) {
  GradientSet grads;
  obj.gradient(params, grads);
  const double f0 = obj.value(params);

  std::mt19937 rng(cfg.seed);
  GradCheckReport rep;
  const double h = cfg.step;

  for (int b = 0; b < static_cast<int>(params.size()); ++b) {
    GradCheckBlock stats;
    stats.name = params[b].name;
    std::vector<double>& vals = params[b].values;

    std::vector<std::size_t> indices;
    if (vals.size() <= cfg.samples_per_block) {
      indices.resize(vals.size());
      for (std::size_t i = 0; i < vals.size(); ++i) indices[i] = i;
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, vals.size() - 1);
      indices.resize(cfg.samples_per_block);
      for (std::size_t& i : indices) i = pick(rng);
    }

    for (std::size_t i : indices) {
      const double save = vals[i];
      vals[i] = save + h;
      const double fp = obj.value(params);
      vals[i] = save - h;
      const double fm = obj.value(params);
      vals[i] = save + 2 * h;
      const double fp2 = obj.value(params);
      vals[i] = save - 2 * h;
      const double fm2 = obj.value(params);
      vals[i] = save;

      const double fd1 = (fp - fm) / (2 * h);
      const double fd2 = (fp2 - fm2) / (4 * h);
      const double fwd = (fp - f0) / h;
      const double bwd = (f0 - fm) / h;
      const double scale = std::max({std::abs(fd1), std::abs(fd2), 1e-6});
      const bool kink_near = 0.5 * std::abs(fwd - bwd) > cfg.tolerance * scale;
      const bool kink_wide = std::abs(fd1 - fd2) > cfg.kink_ratio * scale;
      if (kink_near || kink_wide) {
        ++stats.skipped;
        continue;
      }
      const double ga = grads.blocks[b][i];
      const double rel =
          std::abs(ga - fd1) / std::max({std::abs(ga), std::abs(fd1), 1e-8});
      ++stats.checked;
      stats.max_rel_error = std::max(stats.max_rel_error, rel);
      if (rel > cfg.tolerance) {
        ++stats.failed;
        rep.failures.push_back({b, i, ga, fd1, rel});
      }
    }
    rep.checked += stats.checked;
    rep.skipped += stats.skipped;
    rep.failed += stats.failed;
    rep.max_rel_error = std::max(rep.max_rel_error, stats.max_rel_error);
    rep.blocks.push_back(std::move(stats));
  }
  return rep;
}

}  // namespace vs
