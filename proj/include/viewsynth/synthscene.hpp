#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "viewsynth/geometry.hpp"
#include "viewsynth/image.hpp"

namespace vs {

/// One sinusoidal component of a plane texture, in cycles per scene unit.
struct WaveSpec {
  double amp = 0.1;
  double fu = 0.25, fv = 0.0;
  double phase = 0.0;
};

/// Procedural plane texture: a base level plus sinusoids, or a checkerboard.
/// Evaluated at the world-frame (x, y) of a surface point, so the same
/// surface point renders identically from every viewpoint. Checkerboards
/// are meant for visual/debug output; the smooth band-limited waves keep
/// interpolation error small in quantitative checks.
struct TextureSpec {
  enum class Kind { waves, checker } kind = Kind::waves;
  double base = 0.5;
  std::vector<WaveSpec> waves;
  double checker_period = 1.0;
  double checker_lo = 0.2, checker_hi = 0.8;

  double value(double x, double y, int c) const {
    if (kind == Kind::checker) {
      const long long ix = static_cast<long long>(std::floor(x / checker_period));
      const long long iy = static_cast<long long>(std::floor(y / checker_period));
      return ((ix + iy) & 1) ? checker_hi : checker_lo;
    }
    double s = base;
    for (const WaveSpec& w : waves)
      s += w.amp * std::sin(2.0 * M_PI * (w.fu * x + w.fv * y) + w.phase + 0.7 * c);
    return std::clamp(s, 0.0, 1.0);
  }
};

/// A textured plane n . X = offset in the reference (left target) frame,
/// optionally restricted to a world-coordinate rectangle in x and y.
struct PlaneSpec {
  Point3 normal{0, 0, 1};
  double offset = 10.0;
  double xmin = -std::numeric_limits<double>::infinity();
  double xmax = std::numeric_limits<double>::infinity();
  double ymin = -std::numeric_limits<double>::infinity();
  double ymax = std::numeric_limits<double>::infinity();
  TextureSpec texture;
};

/// A scene is a set of planes; the nearest intersection along each viewing
/// ray wins, which resolves occlusion exactly.
struct SceneSpec {
  std::vector<PlaneSpec> planes;
  int channels = 1;
};

namespace detail {

struct RayHit {
  double t = std::numeric_limits<double>::infinity();  // camera-frame depth
  const PlaneSpec* plane = nullptr;
  Point3 point{};  // reference-frame intersection
};

inline RayHit trace(const SceneSpec& scene, const Point3& origin, const Point3& dir) {
  RayHit hit;
  for (const PlaneSpec& pl : scene.planes) {
    const double denom = pl.normal.x * dir.x + pl.normal.y * dir.y + pl.normal.z * dir.z;
    if (std::abs(denom) < 1e-14) continue;  // ray parallel to the plane
    const double num =
        pl.offset - (pl.normal.x * origin.x + pl.normal.y * origin.y + pl.normal.z * origin.z);
    const double tt = num / denom;
    if (tt <= 1e-9 || tt >= hit.t) continue;
    const Point3 p{origin.x + tt * dir.x, origin.y + tt * dir.y, origin.z + tt * dir.z};
    if (p.x < pl.xmin || p.x > pl.xmax || p.y < pl.ymin || p.y > pl.ymax) continue;
    hit.t = tt;
    hit.plane = &pl;
    hit.point = p;
  }
  return hit;
}

/// Camera center in the reference frame for a pose X_cam = R X + T.
inline Point3 camera_center(const Mat3& rot_t, const Point3& t) {
  const Point3 c = rot_t * t;
  return {-c.x, -c.y, -c.z};
}

}  // namespace detail

struct RenderResult {
  Image image;
  Image depth;  // camera-frame z of the visible surface, single channel
};

/// Pose of the right camera of a rectified pair, as the transform that takes
/// reference-frame points into right-camera coordinates: the camera sits at
/// +baseline along x, so points shift by -baseline.
inline Pose6 right_camera_pose(const CameraModel& cam) {
  return {0, 0, 0, -cam.baseline, 0, 0};
}

/// Render the scene from the camera whose point transform from the reference
/// frame is `pose` (X_cam = R X + T). Rays are intersected with every plane
/// in closed form; no image resampling is involved anywhere. Throws if some
/// pixel sees no surface: scenes must cover the whole frustum.
inline RenderResult render_view(const SceneSpec& scene, const CameraModel& cam, const Pose6& pose) {
  cam.validate();
  if (scene.planes.empty()) throw std::domain_error("render_view: scene has no planes");
  const Mat3 rot_t = rotation_of(pose).transposed();
  const Point3 center = detail::camera_center(rot_t, pose.translation());

  RenderResult out;
  out.image = Image(cam.width, cam.height, scene.channels);
  out.depth = Image(cam.width, cam.height, 1);
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      // Direction with unit camera-frame z, so the ray parameter equals the
      // camera-frame depth of the intersection.
      const Point3 dir_cam{(u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0};
      const Point3 dir = rot_t * dir_cam;
      const detail::RayHit hit = detail::trace(scene, center, dir);
      if (!hit.plane)
        throw std::runtime_error("render_view: a viewing ray misses the scene; add a backdrop plane");
      out.depth.at(u, v) = hit.t;
      for (int c = 0; c < scene.channels; ++c)
        out.image.at(u, v, c) = hit.plane->texture.value(hit.point.x, hit.point.y, c);
    }
  }
  return out;
}

/// True when the reference-frame surface point is seen unoccluded by the
/// camera at `pose` and projects inside its sample domain. Visibility is
/// decided by re-tracing the exact ray from that camera to the point.
inline bool point_visible_from(const SceneSpec& scene, const CameraModel& cam, const Pose6& pose,
                               const Point3& point) {
  const Mat3 rot = rotation_of(pose);
  const Point3 p_cam = transform_point(rot, pose.translation(), point);
  if (!(p_cam.z > 0)) return false;
  const double u = cam.fx * p_cam.x / p_cam.z + cam.cx;
  const double v = cam.fy * p_cam.y / p_cam.z + cam.cy;
  if (u < 0.0 || u > cam.width - 1.0 || v < 0.0 || v > cam.height - 1.0) return false;
  const Mat3 rot_t = rot.transposed();
  const Point3 center = detail::camera_center(rot_t, pose.translation());
  const Point3 dir{point.x - center.x, point.y - center.y, point.z - center.z};
  const detail::RayHit hit = detail::trace(scene, center, dir);
  if (!hit.plane) return false;
  // The hit parameter is 1 at the queried point itself (dir reaches it).
  return std::abs(hit.t - 1.0) <= 1e-9;
}

/// Per-pixel usability of view A's pixels for reconstruction from view B:
/// 1 where the surface point seen from A is also visible (and in frame) in
/// B, 0 at occlusions and view-frustum gaps.
inline std::vector<std::uint8_t> visibility_mask(const SceneSpec& scene, const CameraModel& cam,
                                                 const Pose6& pose_a, const Pose6& pose_b) {
  const Mat3 rot_t = rotation_of(pose_a).transposed();
  const Point3 center = detail::camera_center(rot_t, pose_a.translation());
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(cam.width) * cam.height, 0);
  std::size_t i = 0;
  for (int v = 0; v < cam.height; ++v)
    for (int u = 0; u < cam.width; ++u, ++i) {
      const Point3 dir_cam{(u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0};
      const detail::RayHit hit = detail::trace(scene, center, rot_t * dir_cam);
      if (!hit.plane) continue;
      mask[i] = point_visible_from(scene, cam, pose_b, hit.point) ? 1 : 0;
    }
  return mask;
}

/// Everything the oracle knows about one scene from one viewpoint set:
/// frames, exact depths and disparities, and geometric occlusion masks.
struct RenderedBundle {
  Image left, right;
  Image left_depth, right_depth;
  Image disp_left, disp_right;  // fx*b/z of the respective view
  std::vector<Image> sources;
  std::vector<Image> source_depths;
  std::vector<Pose6> poses;  // reference-frame -> source-camera transforms
  std::vector<std::uint8_t> left_visible_in_right, right_visible_in_left;
  std::vector<std::vector<std::uint8_t>> left_visible_in_source;
};

inline RenderedBundle render_bundle(const SceneSpec& scene, const CameraModel& cam,
                                    const std::vector<Pose6>& source_poses,
                                    bool with_right = true) {
  RenderedBundle b;
  RenderResult ref = render_view(scene, cam, Pose6{});
  b.left = std::move(ref.image);
  b.left_depth = std::move(ref.depth);
  b.disp_left = Image(cam.width, cam.height, 1);
  for (std::size_t i = 0; i < b.disp_left.data.size(); ++i)
    b.disp_left.data[i] = cam.fx * cam.baseline / b.left_depth.data[i];
  if (with_right) {
    const Pose6 rp = right_camera_pose(cam);
    RenderResult r = render_view(scene, cam, rp);
    b.right = std::move(r.image);
    b.right_depth = std::move(r.depth);
    b.disp_right = Image(cam.width, cam.height, 1);
    for (std::size_t i = 0; i < b.disp_right.data.size(); ++i)
      b.disp_right.data[i] = cam.fx * cam.baseline / b.right_depth.data[i];
    b.left_visible_in_right = visibility_mask(scene, cam, Pose6{}, rp);
    b.right_visible_in_left = visibility_mask(scene, cam, rp, Pose6{});
  }
  for (const Pose6& p : source_poses) {
    RenderResult s = render_view(scene, cam, p);
    b.sources.push_back(std::move(s.image));
    b.source_depths.push_back(std::move(s.depth));
    b.poses.push_back(p);
    b.left_visible_in_source.push_back(visibility_mask(scene, cam, Pose6{}, p));
  }
  return b;
}

/// Scene with one fronto-parallel backdrop at depth z.
inline SceneSpec make_fronto_scene(double z, const TextureSpec& tex, int channels = 1) {
  SceneSpec s;
  s.channels = channels;
  PlaneSpec p;
  p.normal = {0, 0, 1};
  p.offset = z;
  p.texture = tex;
  s.planes.push_back(p);
  return s;
}

/// Backdrop at z_back plus a rectangular fronto-parallel patch at z_front.
inline SceneSpec make_two_plane_scene(double z_back, double z_front, double xmin, double xmax,
                                      double ymin, double ymax, const TextureSpec& back_tex,
                                      const TextureSpec& front_tex, int channels = 1) {
  SceneSpec s = make_fronto_scene(z_back, back_tex, channels);
  PlaneSpec f;
  f.normal = {0, 0, 1};
  f.offset = z_front;
  f.xmin = xmin;
  f.xmax = xmax;
  f.ymin = ymin;
  f.ymax = ymax;
  f.texture = front_tex;
  s.planes.push_back(f);
  return s;
}

/// Two fronto-parallel layers split at an image column of the reference
/// view: columns < split_col see the far plane, columns >= split_col the
/// near one (the near plane starts at the world x of that column ray).
inline SceneSpec make_split_scene(const CameraModel& cam, double z_far, double z_near,
                                  int split_col, const TextureSpec& far_tex,
                                  const TextureSpec& near_tex, int channels = 1) {
  if (!(z_near < z_far)) throw std::domain_error("make_split_scene: need z_near < z_far");
  if (split_col <= 0 || split_col >= cam.width)
    throw std::domain_error("make_split_scene: split column outside image");
  const double xmin = z_near * (split_col - 0.5 - cam.cx) / cam.fx;
  SceneSpec s = make_fronto_scene(z_far, far_tex, channels);
  PlaneSpec n;
  n.normal = {0, 0, 1};
  n.offset = z_near;
  n.xmin = xmin;
  n.texture = near_tex;
  s.planes.push_back(n);
  return s;
}

/// Seeded band-limited texture: wave amplitudes sum to amp_total so values
/// stay inside [base - amp_total, base + amp_total].
inline TextureSpec sample_wave_texture(unsigned seed, int n_waves = 4, double amp_total = 0.4,
                                       double freq_min = 0.05, double freq_max = 0.5) {
  if (n_waves < 1) throw std::domain_error("sample_wave_texture: need at least one wave");
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> freq(freq_min, freq_max);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> angle(0.0, M_PI);
  TextureSpec tex;
  tex.base = 0.5;
  for (int k = 0; k < n_waves; ++k) {
    WaveSpec w;
    w.amp = amp_total / n_waves;
    const double f = freq(rng), a = angle(rng);
    w.fu = f * std::cos(a);
    w.fv = f * std::sin(a);
    w.phase = phase(rng);
    tex.waves.push_back(w);
  }
  return tex;
}

/// Fraction of pixels where the image has a nonzero forward-difference
/// gradient; textured scenes should keep this high to sidestep the aperture
/// problem of purely photometric objectives.
inline double textured_fraction(const Image& img, double eps = 1e-12) {
  std::size_t textured = 0, total = 0;
  for (int v = 0; v < img.height; ++v)
    for (int u = 0; u < img.width; ++u) {
      double g = 0;
      for (int c = 0; c < img.channels; ++c) {
        if (u + 1 < img.width) g += std::abs(img.at(u + 1, v, c) - img.at(u, v, c));
        if (v + 1 < img.height) g += std::abs(img.at(u, v + 1, c) - img.at(u, v, c));
      }
      ++total;
      if (g > eps) ++textured;
    }
  return total ? static_cast<double>(textured) / total : 0.0;
}

/// Photometric jitter applied identically to every frame of a training
/// sample: gamma, global brightness, per-channel scale, optional mirroring.
struct AugmentParams {
  double gamma = 1.0;
  double brightness = 1.0;
  double color[3] = {1.0, 1.0, 1.0};
  bool flip = false;
};

inline AugmentParams sample_augment_params(std::mt19937& rng) {
  std::uniform_real_distribution<double> g(0.8, 1.2);
  std::uniform_real_distribution<double> b(0.5, 2.0);
  std::uniform_real_distribution<double> c(0.8, 1.2);
  std::bernoulli_distribution coin(0.5);
  AugmentParams p;
  p.gamma = g(rng);
  p.brightness = b(rng);
  for (double& ch : p.color) ch = c(rng);
  p.flip = coin(rng);
  return p;
}

/// Apply the photometric part of the jitter (no flip), clamping to [0, 1].
inline Image augment(const Image& img, const AugmentParams& p) {
  if (!(p.gamma > 0)) throw std::domain_error("augment: gamma must be positive");
  Image out(img.width, img.height, img.channels);
  for (int v = 0; v < img.height; ++v)
    for (int u = 0; u < img.width; ++u)
      for (int c = 0; c < img.channels; ++c) {
        const double val = std::pow(std::max(img.at(u, v, c), 0.0), p.gamma) * p.brightness *
                           p.color[img.channels == 3 ? c : 0];
        out.at(u, v, c) = std::clamp(val, 0.0, 1.0);
      }
  return out;
}

/// Jitter a rectified pair coherently. Mirroring a rectified pair swaps the
/// roles of the two cameras, so under flip the flipped right image becomes
/// the new left image and vice versa.
inline void augment_stereo_pair(Image& left, Image& right, const AugmentParams& p) {
  Image a = augment(left, p);
  Image b = augment(right, p);
  if (p.flip) {
    left = flip_horizontal(b);
    right = flip_horizontal(a);
  } else {
    left = std::move(a);
    right = std::move(b);
  }
}

}  // namespace vs
