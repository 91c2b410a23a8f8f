#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "viewsynth/image.hpp"

namespace vs {

/// What an optimizable block stands for; fixes the activation applied to its
/// raw values before they enter the objective.
enum class ParamKind { inverse_depth_field, disparity_field, pose6, mask_field };

/// One flat block of raw (pre-activation) parameters.
struct ParamBlock {
  std::string name;
  ParamKind kind = ParamKind::inverse_depth_field;
  std::vector<double> values;
};

/// One gradient vector per ParamBlock, in block order.
struct GradientSet {
  std::vector<std::vector<double>> blocks;
};

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double softplus(double x) {
  if (x > 30) return x;
  if (x < -30) return std::exp(x);
  return std::log1p(std::exp(x));
}

inline double softplus_inverse(double y) {
  if (!(y > 0)) throw std::domain_error("softplus_inverse: argument must be positive");
  if (y > 30) return y;
  return std::log(std::expm1(y));
}

// ---- depth: raw -> 1/sigmoid(raw), clamped to [z_min, z_max] ----

inline double activate_depth_value(double raw, double z_min, double z_max) {
  const double d = 1.0 / sigmoid(raw);
  return d < z_min ? z_min : (d > z_max ? z_max : d);
}

/// Derivative of the clamped 1/sigmoid activation w.r.t. the raw value.
/// d(1/sigma)/draw = -(1/sigma - 1); zero where the clamp is active.
inline double activate_depth_deriv(double raw, double z_min, double z_max) {
  const double d = 1.0 / sigmoid(raw);
  if (d <= z_min || d >= z_max) return 0.0;
  return -(d - 1.0);
}

/// Raw value whose activation equals the given depth (before clamping).
inline double depth_to_raw(double depth) {
  if (!(depth > 1.0)) throw std::domain_error("depth_to_raw: 1/sigmoid only reaches depths > 1");
  return -std::log(depth - 1.0);
}

// ---- mask: raw -> sigmoid(raw), the two-logit softmax with one logit fixed at 0 ----

inline double activate_mask_value(double raw) { return sigmoid(raw); }

inline double activate_mask_deriv(double raw) {
  const double s = sigmoid(raw);
  return s * (1.0 - s);
}

// ---- free disparity: raw -> softplus(raw) full-resolution pixels ----

inline double activate_disparity_value(double raw) { return softplus(raw); }

inline double activate_disparity_deriv(double raw) { return sigmoid(raw); }

inline double disparity_to_raw(double disp) { return softplus_inverse(disp); }

/// Apply the depth activation to a whole raw field.
inline Image activate_depth(const Image& raw, double z_min = 0.1, double z_max = 100.0) {
  Image out(raw.width, raw.height, 1);
  for (std::size_t i = 0; i < raw.data.size(); ++i)
    out.data[i] = activate_depth_value(raw.data[i], z_min, z_max);
  return out;
}

inline Image activate_mask(const Image& raw) {
  Image out(raw.width, raw.height, 1);
  for (std::size_t i = 0; i < raw.data.size(); ++i) out.data[i] = activate_mask_value(raw.data[i]);
  return out;
}

}  // namespace vs
