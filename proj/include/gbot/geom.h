#pragma once

#include <stdexcept>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace gbot {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;

// Pose mapping object coordinates into camera coordinates:
// x_cam = rotation * x_obj + translation.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform Identity() { return {}; }

  Vec3 Apply(const Vec3 &point) const { return rotation * point + translation; }

  // Orthonormality and det = +1, per entry within tol.
  bool IsValid(double tol = 1e-9) const;

  // Unit quaternion (w, x, y, z) of the rotation; w >= 0.
  Eigen::Vector4d QuaternionWxyz() const;
  static RigidTransform FromQuaternion(const Eigen::Vector4d &wxyz,
                                       const Vec3 &translation);

  friend bool operator==(const RigidTransform &a, const RigidTransform &b) {
    return a.rotation == b.rotation && a.translation == b.translation;
  }
};

// Local 6-DoF parameterization used by the Gauss-Newton updates.
struct Twist {
  Vec3 angular = Vec3::Zero();  // radians
  Vec3 linear = Vec3::Zero();   // meters

  Vec6 AsVector() const {
    Vec6 v;
    v << angular, linear;
    return v;
  }
  static Twist FromVector(const Vec6 &v) {
    return {v.head<3>(), v.tail<3>()};
  }
};

// Raised by LogTransform when the rotation angle is too close to pi for a
// unique principal logarithm.
class DegenerateRotationError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// a∘b: applies b first, then a.
RigidTransform Compose(const RigidTransform &a, const RigidTransform &b);
RigidTransform Invert(const RigidTransform &t);

double TranslationError(const Vec3 &pred, const Vec3 &gt);

// Geodesic angle between two rotations in degrees, in [0, 180].
double RotationErrorDeg(const Mat3 &pred, const Mat3 &gt);

Mat3 Skew(const Vec3 &v);
Mat3 ExpSo3(const Vec3 &omega);
RigidTransform ExpTwist(const Twist &x);
Twist LogTransform(const RigidTransform &t);

Mat3 RotationAboutAxis(const Vec3 &axis, double angle_rad);
inline Mat3 RotX(double a) { return RotationAboutAxis(Vec3::UnitX(), a); }
inline Mat3 RotY(double a) { return RotationAboutAxis(Vec3::UnitY(), a); }
inline Mat3 RotZ(double a) { return RotationAboutAxis(Vec3::UnitZ(), a); }

// Projects an almost-orthonormal matrix back onto SO(3).
Mat3 Orthonormalize(const Mat3 &m);

constexpr double kPi = 3.14159265358979323846;
constexpr double DegToRad(double deg) { return deg * kPi / 180.0; }
constexpr double RadToDeg(double rad) { return rad * 180.0 / kPi; }

}  // namespace gbot
