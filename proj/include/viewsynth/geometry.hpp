#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace vs {

/// Continuous pixel position. Integer values land on pixel centers and
/// (0,0) is the center of the top-left pixel.
struct PixelCoord {
  double u = 0;  // column, increases rightward
  double v = 0;  // row, increases downward
};

/// Point in camera coordinates: x right, y down, z forward.
struct Point3 {
  double x = 0, y = 0, z = 0;
};

/// Pinhole intrinsics plus the rectified-stereo baseline. The right camera
/// sits at +baseline along x in the left camera frame, so a scene point at
/// depth z appears shifted left by fx*baseline/z pixels in the right image.
struct CameraModel {
  double fx = 1, fy = 1;
  double cx = 0, cy = 0;
  double baseline = 1;  // scene units
  int width = 2, height = 2;

  void validate() const {
    if (!(fx > 0) || !(fy > 0)) throw std::domain_error("CameraModel: focal lengths must be positive");
    if (!(baseline > 0)) throw std::domain_error("CameraModel: baseline must be positive");
    if (width < 2 || height < 2) throw std::domain_error("CameraModel: image size must be at least 2x2");
  }

  /// Intrinsics for pyramid level with downscaling factor r (1, 2, 4, ...).
  CameraModel scaled(int r) const {
    CameraModel c = *this;
    c.fx = fx / r;
    c.fy = fy / r;
    c.cx = cx / r;
    c.cy = cy / r;
    c.width = width / r;
    c.height = height / r;
    return c;
  }
};

/// 6-DoF rigid motion: rotation angles (radians) about the camera x, y, z
/// axes and a translation in scene units. The rotation applied to column
/// vectors is R = Rz(rz) * Ry(ry) * Rx(rx).
struct Pose6 {
  double rx = 0, ry = 0, rz = 0;
  double tx = 0, ty = 0, tz = 0;

  Point3 translation() const { return {tx, ty, tz}; }
};

/// Minimal row-major 3x3 matrix, just enough for the rotation chains here.
struct Mat3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  double operator()(int r, int c) const { return m[3 * r + c]; }
  double& operator()(int r, int c) { return m[3 * r + c]; }

  Mat3 operator*(const Mat3& o) const {
    Mat3 out;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        out(r, c) = (*this)(r, 0) * o(0, c) + (*this)(r, 1) * o(1, c) + (*this)(r, 2) * o(2, c);
    return out;
  }

  Point3 operator*(const Point3& p) const {
    return {m[0] * p.x + m[1] * p.y + m[2] * p.z,
            m[3] * p.x + m[4] * p.y + m[5] * p.z,
            m[6] * p.x + m[7] * p.y + m[8] * p.z};
  }

  Mat3 transposed() const {
    Mat3 out;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out(r, c) = (*this)(c, r);
    return out;
  }
};

inline Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {{1, 0, 0, 0, c, -s, 0, s, c}};
}

inline Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {{c, 0, s, 0, 1, 0, -s, 0, c}};
}

inline Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {{c, -s, 0, s, c, 0, 0, 0, 1}};
}

inline Mat3 d_rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {{0, 0, 0, 0, -s, -c, 0, c, -s}};
}

inline Mat3 d_rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {{-s, 0, c, 0, 0, 0, -c, 0, -s}};
}

inline Mat3 d_rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {{-s, -c, 0, c, -s, 0, 0, 0, 0}};
}

/// Rotation matrix of a pose, R = Rz * Ry * Rx.
inline Mat3 rotation_of(const Pose6& p) { return rot_z(p.rz) * rot_y(p.ry) * rot_x(p.rx); }

/// Row-major 3x4 rigid transform [R | T] of a pose.
inline std::array<double, 12> pose_matrix(const Pose6& p) {
  const Mat3 R = rotation_of(p);
  return {R(0, 0), R(0, 1), R(0, 2), p.tx,  R(1, 0), R(1, 1),
          R(1, 2), p.ty,    R(2, 0), R(2, 1), R(2, 2), p.tz};
}

/// Partial derivatives of the rotation matrix w.r.t. the three angles.
struct RotationDerivatives {
  Mat3 d_rx, d_ry, d_rz;
};

inline RotationDerivatives rotation_derivatives(const Pose6& p) {
  const Mat3 Rx = rot_x(p.rx), Ry = rot_y(p.ry), Rz = rot_z(p.rz);
  return {Rz * Ry * d_rot_x(p.rx), Rz * d_rot_y(p.ry) * Rx, d_rot_z(p.rz) * Ry * Rx};
}

inline Point3 transform_point(const Pose6& pose, const Point3& p) {
  Point3 q = rotation_of(pose) * p;
  return {q.x + pose.tx, q.y + pose.ty, q.z + pose.tz};
}

inline Point3 transform_point(const Mat3& rot, const Point3& t, const Point3& p) {
  Point3 q = rot * p;
  return {q.x + t.x, q.y + t.y, q.z + t.z};
}

inline Point3 inverse_project(const CameraModel& cam, const PixelCoord& p, double z) {
  if (!(z > 0)) throw std::domain_error("inverse_project: depth must be positive, got " + std::to_string(z));
  return {z * (p.u - cam.cx) / cam.fx, z * (p.v - cam.cy) / cam.fy, z};
}

inline PixelCoord project(const CameraModel& cam, const Point3& p) {
  if (!(p.z > 0)) throw std::domain_error("project: point behind camera, z = " + std::to_string(p.z));
  return {cam.fx * p.x / p.z + cam.cx, cam.fy * p.y / p.z + cam.cy};
}

inline double disparity_from_depth(const CameraModel& cam, double z) {
  if (!(z > 0)) throw std::domain_error("disparity_from_depth: depth must be positive");
  return cam.fx * cam.baseline / z;
}

inline double depth_from_disparity(const CameraModel& cam, double d) {
  if (!(d > 0)) throw std::domain_error("depth_from_disparity: disparity must be positive");
  return cam.fx * cam.baseline / d;
}

}  // namespace vs
