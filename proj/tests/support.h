#pragma once

// Shared fixtures and independent oracles. The oracles avoid the library's
// own routines: poses go through 4x4 homogeneous matrices and quaternions,
// distances through plain loops.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "gbot/geom.h"
#include "gbot/keypoints.h"
#include "gbot/pnp.h"

namespace testing {

using gbot::RigidTransform;
using gbot::Vec2;
using gbot::Vec3;

inline Eigen::Matrix4d Homogeneous(const RigidTransform &t) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = t.rotation;
  m.topRightCorner<3, 1>() = t.translation;
  return m;
}

inline double MaxAbsDiff(const RigidTransform &a, const RigidTransform &b) {
  return (Homogeneous(a) - Homogeneous(b)).cwiseAbs().maxCoeff();
}

// Rotation angle between two matrices through the quaternion of R_a R_bᵀ.
inline double AngleRad(const gbot::Mat3 &a, const gbot::Mat3 &b) {
  Eigen::Quaterniond q(a * b.transpose());
  q.normalize();
  const double v = q.vec().norm();
  return 2.0 * std::atan2(v, std::abs(q.w()));
}

class Random {
 public:
  explicit Random(std::uint64_t seed) : engine_(seed) {}

  double Uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double Normal(double sigma) {
    return std::normal_distribution<double>(0.0, sigma)(engine_);
  }
  Vec3 InBox(double half) {
    return {Uniform(-half, half), Uniform(-half, half), Uniform(-half, half)};
  }
  gbot::Mat3 Rotation() {
    Eigen::Quaterniond q(Normal(1), Normal(1), Normal(1), Normal(1));
    q.normalize();
    return q.toRotationMatrix();
  }
  gbot::Mat3 RotationUpTo(double max_angle) {
    Vec3 axis(Normal(1), Normal(1), Normal(1));
    axis.normalize();
    return Eigen::AngleAxisd(Uniform(0.0, max_angle), axis).toRotationMatrix();
  }
  RigidTransform Pose(double half_box = 1.0) {
    RigidTransform t;
    t.rotation = Rotation();
    t.translation = InBox(half_box);
    return t;
  }
  // Object pose in front of the default camera, within the image.
  RigidTransform ViewPose(double depth_lo = 0.4, double depth_hi = 0.8) {
    RigidTransform t;
    t.rotation = Rotation();
    const double z = Uniform(depth_lo, depth_hi);
    t.translation = Vec3(Uniform(-0.1, 0.1) * z, Uniform(-0.08, 0.08) * z, z);
    return t;
  }
  std::size_t Index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  std::mt19937_64 &engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

inline std::vector<Vec3> RandomCloud(Random &rng, std::size_t n, double half) {
  std::vector<Vec3> pts(n);
  for (Vec3 &p : pts) p = rng.InBox(half);
  return pts;
}

// ADD by definition: mean distance between corresponding transformed points.
inline double BruteAdd(const RigidTransform &pred, const RigidTransform &gt,
                       const std::vector<Vec3> &v) {
  const Eigen::Matrix4d P = Homogeneous(pred), G = Homogeneous(gt);
  double sum = 0.0;
  for (const Vec3 &x : v) {
    const Eigen::Vector4d h(x.x(), x.y(), x.z(), 1.0);
    sum += (P * h - G * h).norm();
  }
  return sum / static_cast<double>(v.size());
}

// ADD-S by definition: O(n²) closest-point search.
inline double BruteAdds(const RigidTransform &pred, const RigidTransform &gt,
                        const std::vector<Vec3> &v) {
  const Eigen::Matrix4d P = Homogeneous(pred), G = Homogeneous(gt);
  double sum = 0.0;
  for (const Vec3 &xi : v) {
    const Eigen::Vector4d a = P * Eigen::Vector4d(xi.x(), xi.y(), xi.z(), 1.0);
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3 &xj : v) {
      const Eigen::Vector4d b = G * Eigen::Vector4d(xj.x(), xj.y(), xj.z(), 1.0);
      best = std::min(best, (a - b).norm());
    }
    sum += best;
  }
  return sum / static_cast<double>(v.size());
}

// Pinhole projection written out independently of gbot::Project.
inline Vec2 PinholeProject(const gbot::CameraIntrinsics &k,
                           const RigidTransform &pose, const Vec3 &x) {
  const Vec3 c = pose.rotation * x + pose.translation;
  return {k.fx * c.x() / c.z() + k.cx, k.fy * c.y() / c.z() + k.cy};
}

inline std::vector<gbot::Correspondence> Synthesize(
    const gbot::CameraIntrinsics &k, const RigidTransform &pose,
    const std::vector<Vec3> &pts) {
  std::vector<gbot::Correspondence> out;
  for (const Vec3 &p : pts) out.push_back({p, PinholeProject(k, pose, p), 1.0});
  return out;
}

}  // namespace testing
