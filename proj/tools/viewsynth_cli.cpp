// viewsynth command-line tool.
//
// One binary, seven modes:
//
//   render       generate a synthetic stereo+temporal bundle on disk
//   stereo       fit left/right disparity fields to a rectified pair
//   temporal     fit depth, camera motion and masks to an image sequence
//   joint        fit depth, motion, masks and right disparity to both cues
//   evaluate     compare a predicted depth map against a reference
//   postprocess  blend a disparity map with its mirrored-input counterpart
//   gradcheck    verify analytic gradients against finite differences
//
// Configuration is plain `key=value` text.  Precedence: command-line
// (--set and convenience flags) over --config file over built-in defaults.
// Environment variables are never consulted, and no output embeds time,
// hostname or absolute-path-dependent content, so a run is reproducible
// bit-for-bit from its config and seed.
//
// Every failure exits nonzero after printing a single line to stderr of
// the form `error: <reason>`.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "viewsynth/viewsynth.hpp"

namespace {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Merged configuration: defaults < config file < command line.
// ---------------------------------------------------------------------------

class RunConfig {
 public:
  RunConfig(const std::string& config_path, const std::map<std::string, std::string>& cli) {
    if (!config_path.empty()) {
      const vs::KeyValueConfig file = vs::read_config(config_path);
      entries_ = file.entries;
    }
    for (const auto& [k, v] : cli) entries_[k] = v;
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
  }

  std::string require_string(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end())
      throw vs::ParseError("missing required config key: " + key);
    return it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    return as_config().get_double(key, fallback);
  }

  int get_int(const std::string& key, int fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    return as_config().get_int(key, fallback);
  }

  bool get_bool(const std::string& key, bool fallback) const {
    return as_config().get_bool(key, fallback);
  }

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  // KeyValueConfig owns the typed getters (and their error messages); wrap
  // the merged map in one on demand.
  vs::KeyValueConfig as_config() const {
    vs::KeyValueConfig c;
    c.entries = entries_;
    return c;
  }

  std::map<std::string, std::string> entries_;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream stream(text);
  while (std::getline(stream, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    out += items[i];
  }
  return out;
}

vs::Pose6 parse_pose(const std::string& text, const std::string& key) {
  std::istringstream stream(text);
  vs::Pose6 p;
  if (!(stream >> p.rx >> p.ry >> p.rz >> p.tx >> p.ty >> p.tz))
    throw vs::ParseError("config key " + key + ": expected 6 numbers, got: " + text);
  std::string rest;
  if (stream >> rest)
    throw vs::ParseError("config key " + key + ": trailing text: " + rest);
  return p;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Scene presets.  Each preset pins camera intrinsics and geometry; any value
// can still be overridden through the regular config keys.
// ---------------------------------------------------------------------------

struct SceneSetup {
  vs::SceneSpec scene;
  vs::CameraModel camera;
  std::vector<vs::Pose6> source_poses;
};

struct PresetDefaults {
  int width = 128, height = 96;
  double fx = 128.0, fy = 128.0, baseline = 0.5;
};

PresetDefaults preset_defaults(const std::string& name) {
  PresetDefaults d;
  if (name == "plane_z10") {
    d.fx = d.fy = 100.0;
  } else if (name == "plane_z16" || name == "two_plane" || name == "split") {
    d.fx = d.fy = 128.0;
  } else {
    throw vs::ParseError("unknown scene preset: " + name +
                         " (expected plane_z10, plane_z16, two_plane or split)");
  }
  return d;
}

vs::CameraModel camera_from(const RunConfig& cfg, const PresetDefaults& d) {
  vs::CameraModel cam;
  cam.width = cfg.get_int("width", d.width);
  cam.height = cfg.get_int("height", d.height);
  cam.fx = cfg.get_double("fx", d.fx);
  cam.fy = cfg.get_double("fy", d.fy);
  cam.cx = cfg.get_double("cx", (cam.width - 1) / 2.0);
  cam.cy = cfg.get_double("cy", (cam.height - 1) / 2.0);
  cam.baseline = cfg.get_double("baseline", d.baseline);
  cam.validate();
  return cam;
}

vs::TextureSpec texture_from(const RunConfig& cfg, unsigned seed_offset) {
  const unsigned seed = static_cast<unsigned>(cfg.get_int("seed", 1));
  const int waves = cfg.get_int("texture_waves", 6);
  const double amp = cfg.get_double("texture_amplitude", 0.45);
  const double fmin = cfg.get_double("texture_freq_min", 0.05);
  const double fmax = cfg.get_double("texture_freq_max", 0.3);
  return vs::sample_wave_texture(seed + seed_offset, waves, amp, fmin, fmax);
}

std::vector<vs::Pose6> source_poses_from(const RunConfig& cfg) {
  const int n = cfg.get_int("n_sources", 2);
  if (n < 0) throw vs::ParseError("config key n_sources: must be >= 0");
  std::vector<vs::Pose6> poses;
  for (int i = 0; i < n; ++i) {
    const std::string key = "source" + std::to_string(i) + "_pose";
    const std::string fallback = i % 2 == 0 ? "0 0 0 -0.5 0 0" : "0 0 0 0.5 0 0";
    poses.push_back(parse_pose(cfg.get_string(key, fallback), key));
  }
  return poses;
}

SceneSetup build_scene(const RunConfig& cfg) {
  const std::string name = cfg.get_string("scene", "plane_z16");
  const PresetDefaults d = preset_defaults(name);
  SceneSetup setup;
  setup.camera = camera_from(cfg, d);
  const int channels = cfg.get_int("channels", 3);
  if (name == "plane_z10") {
    const double z = cfg.get_double("z", 10.0);
    setup.scene = vs::make_fronto_scene(z, texture_from(cfg, 0), channels);
  } else if (name == "plane_z16") {
    const double z = cfg.get_double("z", 16.0);
    setup.scene = vs::make_fronto_scene(z, texture_from(cfg, 0), channels);
  } else if (name == "two_plane") {
    const double z_back = cfg.get_double("z_back", 16.0);
    const double z_front = cfg.get_double("z_front", 8.0);
    const double xmin = cfg.get_double("patch_xmin", -1.5);
    const double xmax = cfg.get_double("patch_xmax", 1.2);
    const double ymin = cfg.get_double("patch_ymin", -1.0);
    const double ymax = cfg.get_double("patch_ymax", 0.8);
    setup.scene = vs::make_two_plane_scene(z_back, z_front, xmin, xmax, ymin, ymax,
                                           texture_from(cfg, 0), texture_from(cfg, 17),
                                           channels);
  } else {  // split
    const double z_far = cfg.get_double("z_far", 16.0);
    const double z_near = cfg.get_double("z_near", 8.0);
    const int split_col = cfg.get_int("split_col", setup.camera.width / 2);
    setup.scene = vs::make_split_scene(setup.camera, z_far, z_near, split_col,
                                       texture_from(cfg, 0), texture_from(cfg, 17),
                                       channels);
  }
  setup.source_poses = source_poses_from(cfg);
  return setup;
}

// ---------------------------------------------------------------------------
// Shared output helpers.
// ---------------------------------------------------------------------------

fs::path prepare_out_dir(const RunConfig& cfg) {
  const std::string out = cfg.require_string("out");
  fs::create_directories(out);
  return fs::path(out);
}

void write_depth_preview(const vs::Image& depth, const fs::path& path, double z_max) {
  vs::Image preview(depth.width, depth.height, 1);
  for (std::size_t i = 0; i < preview.data.size(); ++i)
    preview.data[i] = std::clamp(depth.data[i] / z_max, 0.0, 1.0);
  vs::write_image(preview, path.string(), 65535,
                  "depth preview: gray = depth / " + format_double(z_max) +
                      " scene-units, clamped to [0,1]");
}

void write_mask_images(const std::vector<vs::Image>& masks, const fs::path& dir) {
  for (std::size_t i = 0; i < masks.size(); ++i)
    vs::write_image(masks[i], (dir / ("mask_source" + std::to_string(i) + ".pgm")).string(),
                    65535, "per-pixel reliability weight in [0,1]");
}

vs::Image bool_image(const std::vector<std::uint8_t>& flags, int w, int h) {
  vs::Image img(w, h, 1);
  for (std::size_t i = 0; i < flags.size(); ++i) img.data[i] = flags[i] ? 1.0 : 0.0;
  return img;
}

// ---------------------------------------------------------------------------
// Mode: render
// ---------------------------------------------------------------------------

int run_render(const RunConfig& cfg) {
  const SceneSetup setup = build_scene(cfg);
  const fs::path dir = prepare_out_dir(cfg);
  const bool with_right = cfg.get_bool("with_right", true);
  const vs::RenderedBundle bundle =
      vs::render_bundle(setup.scene, setup.camera, setup.source_poses, with_right);

  vs::write_image(bundle.left, (dir / "left.ppm").string(), 65535);
  vs::write_depth(bundle.left_depth, (dir / "left_depth.vsd").string());
  write_depth_preview(bundle.left_depth, dir / "left_depth_preview.pgm",
                      cfg.get_double("z_max", 100.0));
  vs::write_depth(bundle.disp_left, (dir / "disp_left.vsd").string(),
                  "pixels of horizontal shift toward the right view");
  if (with_right) {
    vs::write_image(bundle.right, (dir / "right.ppm").string(), 65535);
    vs::write_depth(bundle.right_depth, (dir / "right_depth.vsd").string());
    vs::write_depth(bundle.disp_right, (dir / "disp_right.vsd").string(),
                    "pixels of horizontal shift toward the left view");
    vs::write_image(
        bool_image(bundle.left_visible_in_right, setup.camera.width, setup.camera.height),
        (dir / "visible_in_right.pgm").string(), 255,
        "1 where the left-view pixel is also seen from the right camera");
  }
  for (std::size_t i = 0; i < bundle.sources.size(); ++i) {
    vs::write_image(bundle.sources[i],
                    (dir / ("source" + std::to_string(i) + ".ppm")).string(), 65535);
    vs::write_image(
        bool_image(bundle.left_visible_in_source[i], setup.camera.width,
                   setup.camera.height),
        (dir / ("visible_in_source" + std::to_string(i) + ".pgm")).string(), 255,
        "1 where the left-view pixel is also seen from this source camera");
  }
  vs::write_poses(bundle.poses, (dir / "poses_gt.txt").string());

  // A follow-up fitting run can consume this bundle with `--config camera.cfg`.
  std::ostringstream follow;
  follow << "# camera and file manifest for a rendered bundle\n";
  follow << "width=" << setup.camera.width << "\n";
  follow << "height=" << setup.camera.height << "\n";
  follow << "fx=" << format_double(setup.camera.fx) << "\n";
  follow << "fy=" << format_double(setup.camera.fy) << "\n";
  follow << "cx=" << format_double(setup.camera.cx) << "\n";
  follow << "cy=" << format_double(setup.camera.cy) << "\n";
  follow << "baseline=" << format_double(setup.camera.baseline) << "\n";
  follow << "left=" << (dir / "left.ppm").string() << "\n";
  if (with_right) follow << "right=" << (dir / "right.ppm").string() << "\n";
  std::vector<std::string> source_paths;
  for (std::size_t i = 0; i < bundle.sources.size(); ++i)
    source_paths.push_back((dir / ("source" + std::to_string(i) + ".ppm")).string());
  if (!source_paths.empty()) follow << "sources=" << join_list(source_paths) << "\n";
  follow << "gt_depth=" << (dir / "left_depth.vsd").string() << "\n";
  {
    std::ofstream out_file(dir / "camera.cfg", std::ios::binary);
    if (!out_file) throw std::runtime_error("cannot open for writing: " +
                                            (dir / "camera.cfg").string());
    out_file << follow.str();
  }

  std::cout << "mode=render\n"
            << "scene=" << cfg.get_string("scene", "plane_z16") << "\n"
            << "sources=" << bundle.sources.size() << "\n"
            << "out=" << dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// Modes: stereo / temporal / joint
// ---------------------------------------------------------------------------

struct FitInputs {
  vs::Image left;
  std::optional<vs::Image> right;
  std::vector<vs::Image> sources;
  std::optional<vs::Image> gt_depth;
  vs::CameraModel camera;
};

FitInputs load_fit_inputs(const RunConfig& cfg, bool need_right, bool need_sources) {
  FitInputs in;
  if (cfg.has("left")) {
    // Explicit files win over any scene preset.
    in.camera = camera_from(cfg, PresetDefaults{});
    in.left = vs::read_image(cfg.require_string("left"));
    if (need_right) in.right = vs::read_image(cfg.require_string("right"));
    if (need_sources) {
      for (const std::string& path : split_list(cfg.require_string("sources")))
        in.sources.push_back(vs::read_image(path));
      if (in.sources.empty())
        throw vs::ParseError("config key sources: expected at least one path");
    }
    if (cfg.has("gt_depth")) in.gt_depth = vs::read_depth(cfg.require_string("gt_depth"));
  } else {
    const SceneSetup setup = build_scene(cfg);
    in.camera = setup.camera;
    vs::RenderedBundle bundle =
        vs::render_bundle(setup.scene, setup.camera, setup.source_poses, need_right);
    in.left = std::move(bundle.left);
    if (need_right) in.right = std::move(bundle.right);
    if (need_sources) in.sources = std::move(bundle.sources);
    in.gt_depth = std::move(bundle.left_depth);
  }
  return in;
}

vs::OptimizeConfig optimize_config_from(const RunConfig& cfg) {
  vs::OptimizeConfig oc;
  oc.iterations = cfg.get_int("iterations", oc.iterations);
  oc.learning_rate = cfg.get_double("learning_rate", oc.learning_rate);
  oc.halve_lr_every = cfg.get_int("halve_lr_every", oc.halve_lr_every);
  oc.scales = cfg.get_int("scales", oc.scales);
  oc.masks = cfg.get_bool("masks", oc.masks);
  oc.weights.lambda_a = cfg.get_double("lambda_a", oc.weights.lambda_a);
  oc.weights.lambda_c = cfg.get_double("lambda_c", oc.weights.lambda_c);
  oc.weights.lambda_s = cfg.get_double("lambda_s", oc.weights.lambda_s);
  oc.weights.lambda_e = cfg.get_double("lambda_e", oc.weights.lambda_e);
  oc.z_min = cfg.get_double("z_min", oc.z_min);
  oc.z_max = cfg.get_double("z_max", oc.z_max);
  oc.init_depth = cfg.get_double("init_depth", oc.init_depth);
  oc.init_disparity = cfg.get_double("init_disparity", oc.init_disparity);
  oc.init_mask_raw = cfg.get_double("init_mask_raw", oc.init_mask_raw);
  oc.freeze_depth = cfg.get_bool("freeze_depth", oc.freeze_depth);
  oc.freeze_disparity = cfg.get_bool("freeze_disparity", oc.freeze_disparity);
  oc.freeze_pose = cfg.get_bool("freeze_pose", oc.freeze_pose);
  oc.freeze_mask = cfg.get_bool("freeze_mask", oc.freeze_mask);
  oc.adam.beta1 = cfg.get_double("beta1", oc.adam.beta1);
  oc.adam.beta2 = cfg.get_double("beta2", oc.adam.beta2);
  oc.adam.epsilon = cfg.get_double("epsilon", oc.adam.epsilon);
  oc.divergence_factor = cfg.get_double("divergence_factor", oc.divergence_factor);
  oc.divergence_patience = cfg.get_int("divergence_patience", oc.divergence_patience);
  oc.record_every = cfg.get_int("record_every", oc.record_every);
  if (cfg.has("depth_init"))
    oc.depth_init = vs::read_depth(cfg.require_string("depth_init"));
  return oc;
}

void write_fit_metrics(const RunConfig& cfg, const vs::Image& pred_depth,
                       const vs::Image& gt_depth, const fs::path& dir) {
  const double lo = cfg.get_double("eval_min_depth", 0.0);
  const double hi = cfg.get_double("eval_max_depth", 1e18);
  const std::vector<std::uint8_t> valid = vs::depth_range_mask(gt_depth, lo, hi);
  const bool median_scale = cfg.get_bool("median_scale", false);
  const vs::DepthMetrics m = vs::evaluate_depth(pred_depth, gt_depth, valid, median_scale);
  const std::string text = vs::format_metrics(m);
  std::ofstream out_file(dir / "metrics.txt", std::ios::binary);
  if (!out_file)
    throw std::runtime_error("cannot open for writing: " + (dir / "metrics.txt").string());
  out_file << text;
  std::cout << text;
}

int run_fit(const RunConfig& cfg, const std::string& mode) {
  const bool stereo = mode == "stereo" || mode == "joint";
  const bool temporal = mode == "temporal" || mode == "joint";
  FitInputs in = load_fit_inputs(cfg, stereo, temporal);
  vs::OptimizeConfig oc = optimize_config_from(cfg);
  const fs::path dir = prepare_out_dir(cfg);

  vs::Solution sol;
  if (mode == "stereo") {
    sol = vs::optimize_stereo(in.left, *in.right, in.camera, oc);
  } else if (mode == "temporal") {
    sol = vs::optimize_temporal(in.left, in.sources, in.camera, oc);
  } else {
    sol = vs::optimize_joint(in.left, in.sources, *in.right, in.camera, oc);
  }

  if (temporal) {
    vs::write_depth(sol.depth, (dir / "depth.vsd").string());
    write_depth_preview(sol.depth, dir / "depth_preview.pgm", oc.z_max);
    vs::write_poses(sol.poses, (dir / "poses_est.txt").string());
    write_mask_images(sol.masks, dir);
  }
  if (stereo) {
    vs::write_depth(sol.disp_left, (dir / "disp_left.vsd").string(),
                    "pixels of horizontal shift toward the right view");
    vs::write_depth(sol.disp_right, (dir / "disp_right.vsd").string(),
                    "pixels of horizontal shift toward the left view");
  }
  vs::write_loss_csv(sol.history, (dir / "loss.csv").string());

  if (in.gt_depth) {
    vs::Image pred;
    if (temporal) {
      pred = sol.depth;
    } else {
      // Stereo-only runs carry depth implicitly: z = fx * b / disparity.
      pred = sol.disp_left;
      const double floor_disp = in.camera.fx * in.camera.baseline / oc.z_max;
      for (double& d : pred.data)
        d = in.camera.fx * in.camera.baseline / std::max(d, floor_disp);
    }
    write_fit_metrics(cfg, pred, *in.gt_depth, dir);
  }

  std::cout << "mode=" << mode << "\n"
            << "iterations=" << oc.iterations << "\n"
            << "best_iteration=" << sol.best_iteration << "\n"
            << "total=" << format_double(sol.report.total) << "\n"
            << "diverged=" << (sol.diverged ? "true" : "false") << "\n"
            << "out=" << dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// Mode: evaluate
// ---------------------------------------------------------------------------

int run_evaluate(const RunConfig& cfg) {
  const vs::Image pred = vs::read_depth(cfg.require_string("pred"));
  const vs::Image gt = vs::read_depth(cfg.require_string("gt"));
  const double lo = cfg.get_double("eval_min_depth", 0.0);
  const double hi = cfg.get_double("eval_max_depth", 1e18);
  const std::vector<std::uint8_t> valid = vs::depth_range_mask(gt, lo, hi);
  const bool median_scale = cfg.get_bool("median_scale", false);
  const vs::DepthMetrics m = vs::evaluate_depth(pred, gt, valid, median_scale);
  const std::string text = vs::format_metrics(m);
  if (cfg.has("out")) {
    const fs::path dir = prepare_out_dir(cfg);
    std::ofstream out_file(dir / "metrics.txt", std::ios::binary);
    if (!out_file)
      throw std::runtime_error("cannot open for writing: " + (dir / "metrics.txt").string());
    out_file << text;
  }
  std::cout << text;
  return 0;
}

// ---------------------------------------------------------------------------
// Mode: postprocess
// ---------------------------------------------------------------------------

int run_postprocess(const RunConfig& cfg) {
  const vs::Image disp = vs::read_depth(cfg.require_string("disp"));
  const vs::Image mirrored = vs::read_depth(cfg.require_string("disp_flipped_back"));
  const vs::Image blended = vs::postprocess_flip_blend(disp, mirrored);
  const fs::path dir = prepare_out_dir(cfg);
  vs::write_depth(blended, (dir / "postprocessed.vsd").string(),
                  "edge-aware blend of a disparity map and its mirrored-input twin");
  std::cout << "mode=postprocess\n"
            << "out=" << dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// Mode: gradcheck
// ---------------------------------------------------------------------------

struct GradScene {
  vs::Image left;
  vs::Image right;
  std::vector<vs::Image> sources;
  vs::CameraModel camera;
};

GradScene make_grad_scene(unsigned seed) {
  GradScene gs;
  gs.camera.width = 10;
  gs.camera.height = 8;
  gs.camera.fx = 12.0;
  gs.camera.fy = 12.0;
  gs.camera.cx = (gs.camera.width - 1) / 2.0;
  gs.camera.cy = (gs.camera.height - 1) / 2.0;
  gs.camera.baseline = 0.5;
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> zdist(6.0, 12.0);
  const double z = zdist(rng);
  const vs::SceneSpec scene =
      vs::make_fronto_scene(z, vs::sample_wave_texture(seed, 4, 0.4, 0.05, 0.4), 3);
  const std::vector<vs::Pose6> poses = {vs::Pose6{0.0, 0.0, 0.0, -0.3, 0.05, 0.1}};
  vs::RenderedBundle bundle = vs::render_bundle(scene, gs.camera, poses, true);
  gs.left = std::move(bundle.left);
  gs.right = std::move(bundle.right);
  gs.sources = std::move(bundle.sources);
  return gs;
}

void perturb(std::vector<vs::ParamBlock>& params, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> field(-0.05, 0.05);
  std::uniform_real_distribution<double> pose(-0.02, 0.02);
  for (vs::ParamBlock& block : params) {
    const bool is_pose = block.name.rfind("pose", 0) == 0;
    for (double& v : block.values) v += is_pose ? pose(rng) : field(rng);
  }
}

int run_gradcheck(const RunConfig& cfg) {
  const unsigned seed = static_cast<unsigned>(cfg.get_int("seed", 0));
  const int scenes = cfg.get_int("gradcheck_scenes", 3);
  vs::GradCheckConfig gc;
  gc.step = cfg.get_double("step", 1e-5);
  gc.tolerance = cfg.get_double("tolerance", 1e-4);
  gc.samples_per_block = cfg.get_int("samples_per_block", 40);
  gc.seed = seed;

  std::ostringstream report;
  bool all_passed = true;
  double worst = 0.0;
  for (int s = 0; s < scenes; ++s) {
    const GradScene gs = make_grad_scene(seed + static_cast<unsigned>(s));
    const struct {
      const char* name;
      bool temporal, stereo, masks;
    } modes[] = {{"joint", true, true, true},
                 {"temporal", true, false, true},
                 {"stereo", false, true, false}};
    for (const auto& m : modes) {
      vs::ObjectiveOptions opt;
      opt.temporal = m.temporal;
      opt.stereo = m.stereo;
      opt.masks = m.masks;
      opt.scales = 2;
      std::vector<vs::Image> sources = m.temporal ? gs.sources : std::vector<vs::Image>{};
      vs::SynthesisObjective obj(gs.left, sources, gs.right, gs.camera, opt);
      std::vector<vs::ParamBlock> params = obj.initial_params();
      perturb(params, seed + static_cast<unsigned>(s) * 7919u);
      const vs::GradCheckReport r = vs::check_gradients(obj, params, gc);
      report << "scene=" << s << " mode=" << m.name << " checked=" << r.checked
             << " skipped=" << r.skipped << " failed=" << r.failed
             << " max_rel_error=" << format_double(r.max_rel_error) << "\n";
      all_passed = all_passed && r.passed();
      worst = std::max(worst, r.max_rel_error);
    }
  }
  report << "max_rel_error=" << format_double(worst) << "\n";
  report << "result=" << (all_passed ? "pass" : "fail") << "\n";

  if (cfg.has("out")) {
    const fs::path dir = prepare_out_dir(cfg);
    std::ofstream out_file(dir / "gradcheck.txt", std::ios::binary);
    if (!out_file)
      throw std::runtime_error("cannot open for writing: " +
                               (dir / "gradcheck.txt").string());
    out_file << report.str();
  }
  std::cout << report.str();
  if (!all_passed) {
    std::cerr << "error: gradient check failed (max_rel_error=" << format_double(worst)
              << ")\n";
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "viewsynth: recover depth, camera motion and reliability masks by "
      "fitting a view-synthesis objective"};
  app.get_formatter()->column_width(28);

  std::string mode;
  app.add_option("--mode", mode, "render|stereo|temporal|joint|evaluate|postprocess|gradcheck")
      ->required();
  std::string config_path;
  app.add_option("--config", config_path, "key=value configuration file");
  std::vector<std::string> sets;
  app.add_option("--set", sets, "override one config key (key=value, repeatable)");

  // Convenience spellings for the most common keys; equivalent to --set.
  std::string out, scene, left, right, gt, pred;
  std::vector<std::string> sources;
  app.add_option("--out", out, "output directory (key: out)");
  app.add_option("--scene", scene, "scene preset (key: scene)");
  app.add_option("--left", left, "left/target image path (key: left)");
  app.add_option("--right", right, "right image path (key: right)");
  app.add_option("--source", sources, "source frame path, repeatable (key: sources)");
  app.add_option("--gt", gt, "reference depth path (key: gt_depth / gt)");
  app.add_option("--pred", pred, "predicted depth path (key: pred)");
  std::optional<int> seed, iterations;
  std::optional<double> learning_rate;
  app.add_option("--seed", seed, "texture / sampling seed (key: seed)");
  app.add_option("--iterations", iterations, "optimization steps (key: iterations)");
  app.add_option("--learning-rate", learning_rate, "step size (key: learning_rate)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    std::map<std::string, std::string> cli;
    for (const std::string& kv : sets) {
      const std::size_t eq = kv.find('=');
      if (eq == std::string::npos || eq == 0)
        throw vs::ParseError("--set expects key=value, got: " + kv);
      cli[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    if (!out.empty()) cli["out"] = out;
    if (!scene.empty()) cli["scene"] = scene;
    if (!left.empty()) cli["left"] = left;
    if (!right.empty()) cli["right"] = right;
    if (!sources.empty()) cli["sources"] = join_list(sources);
    if (!gt.empty()) cli[mode == "evaluate" ? "gt" : "gt_depth"] = gt;
    if (!pred.empty()) cli["pred"] = pred;
    if (seed) cli["seed"] = std::to_string(*seed);
    if (iterations) cli["iterations"] = std::to_string(*iterations);
    if (learning_rate) cli["learning_rate"] = format_double(*learning_rate);

    const RunConfig cfg(config_path, cli);
    if (mode == "render") return run_render(cfg);
    if (mode == "stereo" || mode == "temporal" || mode == "joint")
      return run_fit(cfg, mode);
    if (mode == "evaluate") return run_evaluate(cfg);
    if (mode == "postprocess") return run_postprocess(cfg);
    if (mode == "gradcheck") return run_gradcheck(cfg);
    throw vs::ParseError(
        "unknown mode: " + mode +
        " (expected render, stereo, temporal, joint, evaluate, postprocess or gradcheck)");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
