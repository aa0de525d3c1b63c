#include "gbot/geom.h"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

namespace gbot {

bool RigidTransform::IsValid(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  const Mat3 gram = rotation.transpose() * rotation;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

Eigen::Vector4d RigidTransform::QuaternionWxyz() const {
  Eigen::Quaterniond q(rotation);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return {q.w(), q.x(), q.y(), q.z()};
}

RigidTransform RigidTransform::FromQuaternion(const Eigen::Vector4d &wxyz,
                                              const Vec3 &translation) {
  Eigen::Quaterniond q(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
  q.normalize();
  return {q.toRotationMatrix(), translation};
}

RigidTransform Compose(const RigidTransform &a, const RigidTransform &b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

RigidTransform Invert(const RigidTransform &t) {
  const Mat3 rt = t.rotation.transpose();
  return {rt, -(rt * t.translation)};
}

double TranslationError(const Vec3 &pred, const Vec3 &gt) {
  return (pred - gt).norm();
}

double RotationErrorDeg(const Mat3 &pred, const Mat3 &gt) {
  // atan2 of (sin, cos) stays accurate near 0 and 180 degrees, where acos of
  // the trace alone loses about half the digits.
  const Mat3 m = pred * gt.transpose();
  const Vec3 axis(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
  return RadToDeg(std::atan2(0.5 * axis.norm(), 0.5 * (m.trace() - 1.0)));
}

Mat3 Skew(const Vec3 &v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

namespace {

// Coefficients A = sin(θ)/θ, B = (1 - cos θ)/θ², C = (θ - sin θ)/θ³ with
// Taylor fallbacks near zero.
struct ExpCoefficients {
  double a, b, c;
};

ExpCoefficients Coefficients(double theta) {
  const double t2 = theta * theta;
  if (theta < 1e-4) {
    return {1.0 - t2 / 6.0 + t2 * t2 / 120.0,
            0.5 - t2 / 24.0 + t2 * t2 / 720.0,
            1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0};
  }
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  return {s / theta, (1.0 - c) / t2, (theta - s) / (t2 * theta)};
}

}  // namespace

Mat3 ExpSo3(const Vec3 &omega) {
  const double theta = omega.norm();
  const ExpCoefficients k = Coefficients(theta);
  const Mat3 w = Skew(omega);
  return Mat3::Identity() + k.a * w + k.b * (w * w);
}

RigidTransform ExpTwist(const Twist &x) {
  const double theta = x.angular.norm();
  const ExpCoefficients k = Coefficients(theta);
  const Mat3 w = Skew(x.angular);
  const Mat3 w2 = w * w;
  const Mat3 rotation = Mat3::Identity() + k.a * w + k.b * w2;
  const Mat3 v = Mat3::Identity() + k.b * w + k.c * w2;
  return {rotation, v * x.linear};
}

Twist LogTransform(const RigidTransform &t) {
  const Vec3 vee(t.rotation(2, 1) - t.rotation(1, 2),
                 t.rotation(0, 2) - t.rotation(2, 0),
                 t.rotation(1, 0) - t.rotation(0, 1));
  // atan2 keeps full precision near zero where acos of the trace does not.
  const double sin_theta = 0.5 * vee.norm();
  const double cos_theta = 0.5 * (t.rotation.trace() - 1.0);
  const double theta = std::atan2(sin_theta, cos_theta);
  if (theta > kPi - 1e-6) {
    throw DegenerateRotationError(
        "log of a rotation within 1e-6 rad of pi is not unique");
  }
  Vec3 omega;
  if (theta < 1e-4) {
    const double t2 = theta * theta;
    omega = 0.5 * vee * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0);
  } else {
    omega = theta / (2.0 * sin_theta) * vee;
  }

  // V⁻¹ = I - W/2 + (1/θ²)(1 - A/(2B)) W²
  const Mat3 w = Skew(omega);
  double d;
  if (theta < 1e-4) {
    d = 1.0 / 12.0 + theta * theta / 720.0;
  } else {
    const ExpCoefficients k = Coefficients(theta);
    d = (1.0 - k.a / (2.0 * k.b)) / (theta * theta);
  }
  const Mat3 v_inv = Mat3::Identity() - 0.5 * w + d * (w * w);
  return {omega, v_inv * t.translation};
}

Mat3 RotationAboutAxis(const Vec3 &axis, double angle_rad) {
  return Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
}

Mat3 Orthonormalize(const Mat3 &m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 u = svd.matrixU();
    u.col(2) = -u.col(2);
    r = u * svd.matrixV().transpose();
  }
  return r;
}

}  // namespace gbot
