#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "viewsynth/image.hpp"
#include "viewsynth/losses.hpp"
#include "viewsynth/metrics.hpp"
#include "viewsynth/optimizer.hpp"

namespace vs {

/// Failure while decoding a file; the message pins the byte offset so a
/// truncated or corrupt file can be diagnosed from the one-line reason.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

[[noreturn]] inline void parse_fail(const std::string& path, std::size_t offset,
                                    const std::string& what) {
  throw ParseError(path + ": " + what + " at byte " + std::to_string(offset));
}

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

/// Cursor over an in-memory file for header parsing with offset tracking.
struct ByteCursor {
  const std::string& buf;
  const std::string& path;
  std::size_t pos = 0;

  bool eof() const { return pos >= buf.size(); }
  char peek() const { return buf[pos]; }

  void skip_space_and_comments() {
    while (!eof()) {
      const char c = buf[pos];
      if (c == '#') {
        while (!eof() && buf[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos;
      } else {
        break;
      }
    }
  }

  int parse_uint(const char* what) {
    skip_space_and_comments();
    if (eof() || buf[pos] < '0' || buf[pos] > '9')
      parse_fail(path, pos, std::string("expected ") + what);
    long v = 0;
    while (!eof() && buf[pos] >= '0' && buf[pos] <= '9') {
      v = v * 10 + (buf[pos] - '0');
      if (v > 1 << 30) parse_fail(path, pos, std::string(what) + " out of range");
      ++pos;
    }
    return static_cast<int>(v);
  }
};

inline void put_u32le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline std::uint32_t get_u32le(const std::string& buf, std::size_t at) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(buf[at])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(buf[at + 1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(buf[at + 2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(buf[at + 3])) << 24;
}

}  // namespace detail

/// Read a binary PGM (P5) or PPM (P6) image; intensities are normalized to
/// [0, 1]. Maxval 255 reads one byte per sample, 65535 two bytes
/// big-endian, per the format definition.
inline Image read_image(const std::string& path) {
  const std::string buf = detail::read_file_bytes(path);
  detail::ByteCursor cur{buf, path};
  if (buf.size() < 2 || buf[0] != 'P' || (buf[1] != '5' && buf[1] != '6'))
    detail::parse_fail(path, 0, "not a binary PGM/PPM file (need P5 or P6)");
  const int channels = buf[1] == '5' ? 1 : 3;
  cur.pos = 2;
  const int width = cur.parse_uint("width");
  const int height = cur.parse_uint("height");
  const int maxval = cur.parse_uint("maxval");
  if (width < 1 || height < 1) detail::parse_fail(path, cur.pos, "image dimensions must be positive");
  if (maxval != 255 && maxval != 65535)
    detail::parse_fail(path, cur.pos, "unsupported maxval (need 255 or 65535)");
  if (cur.eof()) detail::parse_fail(path, cur.pos, "missing payload");
  const char sep = buf[cur.pos];
  if (sep != '\n' && sep != ' ' && sep != '\t' && sep != '\r')
    detail::parse_fail(path, cur.pos, "expected single whitespace before payload");
  ++cur.pos;

  const int bytes_per = maxval == 255 ? 1 : 2;
  const std::size_t need =
      static_cast<std::size_t>(width) * height * channels * bytes_per;
  if (buf.size() - cur.pos < need)
    detail::parse_fail(path, buf.size(),
                       "truncated payload, need " + std::to_string(need) + " bytes after header");

  Image img(width, height, channels);
  std::size_t p = cur.pos;
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    if (bytes_per == 1) {
      img.data[i] = static_cast<unsigned char>(buf[p]) / 255.0;
      p += 1;
    } else {
      const unsigned hi = static_cast<unsigned char>(buf[p]);
      const unsigned lo = static_cast<unsigned char>(buf[p + 1]);
      img.data[i] = (hi * 256u + lo) / 65535.0;
      p += 2;
    }
  }
  return img;
}

/// Write PGM/PPM with the given maxval (255 or 65535); values are clamped
/// to [0, 1] and rounded, so a 65535 roundtrip is exact to 1/65535. An
/// optional single-line comment is embedded in the header (newlines are
/// replaced to keep the header well-formed).
inline void write_image(const Image& img, const std::string& path, int maxval = 255,
                        const std::string& comment = "") {
  if (img.empty()) throw std::domain_error("write_image: empty image");
  if (maxval != 255 && maxval != 65535)
    throw std::domain_error("write_image: maxval must be 255 or 65535");
  std::string out;
  out += img.channels == 1 ? "P5\n" : "P6\n";
  if (!comment.empty()) {
    std::string c = comment;
    for (char& ch : c)
      if (ch == '\n' || ch == '\r') ch = ' ';
    out += "# " + c + "\n";
  }
  out += std::to_string(img.width) + " " + std::to_string(img.height) + "\n";
  out += std::to_string(maxval) + "\n";
  for (double v : img.data) {
    const double c = v < 0 ? 0 : (v > 1 ? 1 : v);
    const long q = std::lround(c * maxval);
    if (maxval == 255) {
      out.push_back(static_cast<char>(q));
    } else {
      out.push_back(static_cast<char>((q >> 8) & 0xff));  // big-endian per format
      out.push_back(static_cast<char>(q & 0xff));
    }
  }
  detail::write_file_bytes(path, out);
}

inline constexpr char kDepthMagic[8] = {'V', 'S', 'D', 'E', 'P', 'T', 'H', '1'};

/// Binary depth-map container: 8-byte magic, u32le width and height, a
/// u32le-length-prefixed scale-units note, then row-major IEEE-754 32-bit
/// little-endian floats. Round-trips finite fields bit-exactly.
inline void write_depth(const Image& depth, const std::string& path,
                        const std::string& units_note = "scene-units") {
  if (depth.channels != 1 || depth.width < 1 || depth.height < 1)
    throw std::domain_error("write_depth: need a non-empty single-channel map");
  for (double v : depth.data)
    if (!std::isfinite(v)) throw std::domain_error("write_depth: non-finite value in field");
  std::string out(kDepthMagic, sizeof(kDepthMagic));
  detail::put_u32le(out, static_cast<std::uint32_t>(depth.width));
  detail::put_u32le(out, static_cast<std::uint32_t>(depth.height));
  detail::put_u32le(out, static_cast<std::uint32_t>(units_note.size()));
  out += units_note;
  for (double v : depth.data) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    detail::put_u32le(out, bits);
  }
  detail::write_file_bytes(path, out);
}

inline Image read_depth(const std::string& path, std::string* units_note = nullptr) {
  const std::string buf = detail::read_file_bytes(path);
  if (buf.size() < 20 || std::memcmp(buf.data(), kDepthMagic, sizeof(kDepthMagic)) != 0)
    detail::parse_fail(path, 0, "bad magic, not a depth file");
  const std::uint32_t w = detail::get_u32le(buf, 8);
  const std::uint32_t h = detail::get_u32le(buf, 12);
  if (w == 0 || h == 0) detail::parse_fail(path, 8, "zero dimension in header");
  if (w > (1u << 20) || h > (1u << 20)) detail::parse_fail(path, 8, "implausible dimension");
  const std::uint32_t note_len = detail::get_u32le(buf, 16);
  std::size_t pos = 20;
  if (buf.size() - pos < note_len) detail::parse_fail(path, buf.size(), "truncated units note");
  if (units_note) *units_note = buf.substr(pos, note_len);
  pos += note_len;
  const std::size_t need = static_cast<std::size_t>(w) * h * 4;
  if (buf.size() - pos != need)
    detail::parse_fail(path, buf.size(),
                       "payload length does not match header dims (need " + std::to_string(need) +
                           " bytes)");
  Image depth(static_cast<int>(w), static_cast<int>(h), 1);
  for (std::size_t i = 0; i < depth.data.size(); ++i, pos += 4) {
    const std::uint32_t bits = detail::get_u32le(buf, pos);
    float f;
    std::memcpy(&f, &bits, 4);
    if (!std::isfinite(f)) detail::parse_fail(path, pos, "non-finite value in payload");
    depth.data[i] = f;
  }
  return depth;
}

/// Poses as text, one line each: the six pose numbers "rx ry rz tx ty tz"
/// followed by the twelve entries of the derived row-major 3x4 [R|T]
/// matrix, all in full double precision. The matrix is redundant but makes
/// the file directly usable by tools that consume rigid transforms.
inline void write_poses(const std::vector<Pose6>& poses, const std::string& path) {
  std::ostringstream out;
  out.precision(17);
  for (const Pose6& p : poses) {
    out << p.rx << " " << p.ry << " " << p.rz << " " << p.tx << " " << p.ty << " " << p.tz;
    for (double m : pose_matrix(p)) out << " " << m;
    out << "\n";
  }
  detail::write_file_bytes(path, out.str());
}

/// Read a pose file. The trailing 3x4 matrix is optional on each line; when
/// present it must agree with the matrix derived from the six numbers.
inline std::vector<Pose6> read_poses(const std::string& path) {
  std::istringstream in(detail::read_file_bytes(path));
  std::vector<Pose6> poses;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    std::istringstream ls(line);
    Pose6 p;
    if (!(ls >> p.rx >> p.ry >> p.rz >> p.tx >> p.ty >> p.tz))
      throw ParseError(path + ": malformed pose on line " + std::to_string(line_no));
    double m0;
    if (ls >> m0) {
      std::array<double, 12> m{};
      m[0] = m0;
      for (int i = 1; i < 12; ++i)
        if (!(ls >> m[i]))
          throw ParseError(path + ": incomplete pose matrix on line " + std::to_string(line_no));
      const std::array<double, 12> want = pose_matrix(p);
      for (int i = 0; i < 12; ++i)
        if (std::abs(m[i] - want[i]) > 1e-9)
          throw ParseError(path + ": pose matrix disagrees with the pose on line " +
                          std::to_string(line_no));
    }
    poses.push_back(p);
  }
  return poses;
}

/// Optimization trace as CSV with a fixed column order.
inline void write_loss_csv(const std::vector<HistoryRow>& history, const std::string& path) {
  std::ostringstream out;
  out.precision(17);
  out << "iteration,learning_rate,vs,ap,lr,smooth,reg,total,best_total\n";
  for (const HistoryRow& r : history)
    out << r.iteration << "," << r.learning_rate << "," << r.vs << "," << r.ap << "," << r.lr
        << "," << r.smooth << "," << r.reg << "," << r.total << "," << r.best_total << "\n";
  detail::write_file_bytes(path, out.str());
}

/// Depth metrics as the flat key=value block emitted by the driver.
inline std::string format_metrics(const DepthMetrics& m) {
  std::ostringstream out;
  out.precision(17);
  out << "abs_rel=" << m.abs_rel << "\n"
      << "sq_rel=" << m.sq_rel << "\n"
      << "rmse=" << m.rmse << "\n"
      << "rmse_log=" << m.rmse_log << "\n"
      << "delta1=" << m.delta1 << "\n"
      << "delta2=" << m.delta2 << "\n"
      << "delta3=" << m.delta3 << "\n"
      << "count=" << m.count << "\n"
      << "scale=" << m.scale << "\n";
  return out.str();
}

/// key=value configuration with '#' comments. Values keep inner spaces;
/// keys and values are trimmed at the ends.
struct KeyValueConfig {
  std::map<std::string, std::string> entries;

  bool has(const std::string& key) const { return entries.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback = "") const {
    auto it = entries.find(key);
    return it == entries.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = entries.find(key);
    if (it == entries.end()) return fallback;
    try {
      std::size_t used = 0;
      const double v = std::stod(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::logic_error&) {
      throw ParseError("config key " + key + ": not a number: " + it->second);
    }
  }

  int get_int(const std::string& key, int fallback) const {
    auto it = entries.find(key);
    if (it == entries.end()) return fallback;
    try {
      std::size_t used = 0;
      const int v = std::stoi(it->second, nullptr, 10);
      const double d = std::stod(it->second, &used);
      if (used != it->second.size() || d != v) throw std::invalid_argument("not integral");
      return v;
    } catch (const std::logic_error&) {
      throw ParseError("config key " + key + ": not an integer: " + it->second);
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = entries.find(key);
    if (it == entries.end()) return fallback;
    const std::string& v = it->second;
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ParseError("config key " + key + ": not a boolean: " + v);
  }
};

inline KeyValueConfig parse_config_text(const std::string& text, const std::string& origin) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(origin + ": line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = detail::trim(line.substr(0, eq));
    if (key.empty())
      throw ParseError(origin + ": line " + std::to_string(line_no) + ": empty key");
    cfg.entries[key] = detail::trim(line.substr(eq + 1));
  }
  return cfg;
}

inline KeyValueConfig read_config(const std::string& path) {
  return parse_config_text(detail::read_file_bytes(path), path);
}

}  // namespace vs
