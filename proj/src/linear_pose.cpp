// Closed-form pose bootstrap.
//
// General point sets use EPnP (Lepetit, Moreno-Noguer, Fua): points are
// written as barycentric combinations of four control points, whose camera
// coordinates lie in the null space of a 2n x 12 system. Three beta
// approximations are refined on the inter-control-point distance constraints,
// giving up to three candidates.
//
// A DLT plane homography on the two dominant principal axes adds one more.
// For coplanar sets it is the only candidate, since the fourth control point
// degenerates.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "gbot/pnp.h"

namespace gbot {
namespace {

using Mat34 = Eigen::Matrix<double, 3, 4>;

struct WeightedPoint {
  Vec3 obj;
  Vec2 img;
  double w;
};

std::vector<WeightedPoint> UsablePoints(std::span<const Correspondence> corrs) {
  std::vector<WeightedPoint> pts;
  pts.reserve(corrs.size());
  for (const Correspondence &c : corrs) {
    if (c.confidence > 0.0 && c.point_obj.allFinite() &&
        c.point_img.allFinite()) {
      pts.push_back({c.point_obj, c.point_img, c.confidence});
    }
  }
  return pts;
}

// Rigid alignment of `world` onto `cam` (Kabsch), both 3 x n.
RigidTransform AlignPointSets(const Eigen::Matrix3Xd &world,
                              const Eigen::Matrix3Xd &cam) {
  const Vec3 mw = world.rowwise().mean();
  const Vec3 mc = cam.rowwise().mean();
  const Mat3 cov = (cam.colwise() - mc) * (world.colwise() - mw).transpose();
  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) {
    d(2, 2) = -1.0;
  }
  const Mat3 r = svd.matrixU() * d * svd.matrixV().transpose();
  return {r, mc - r * mw};
}

double ReprojectionCost(const std::vector<WeightedPoint> &pts,
                        const CameraIntrinsics &intr,
                        const RigidTransform &pose) {
  double cost = 0.0;
  for (const WeightedPoint &p : pts) {
    const Vec3 c = pose.Apply(p.obj);
    if (c.z() <= kernels::kMinDepth) {
      return std::numeric_limits<double>::infinity();
    }
    const Vec2 proj(intr.fx * c.x() / c.z() + intr.cx,
                    intr.fy * c.y() / c.z() + intr.cy);
    cost += p.w * p.w * (proj - p.img).squaredNorm();
  }
  return cost;
}

class Epnp {
 public:
  Epnp(const std::vector<WeightedPoint> &pts, const CameraIntrinsics &intr,
       const Vec3 &centroid, const Mat3 &axes, const Vec3 &sigma)
      : pts_(pts), intr_(intr) {
    control_world_.col(0) = centroid;
    for (int j = 0; j < 3; ++j) {
      control_world_.col(j + 1) = centroid + sigma[j] * axes.col(j);
    }
    Mat3 basis;
    for (int j = 0; j < 3; ++j) {
      basis.col(j) = control_world_.col(j + 1) - control_world_.col(0);
    }
    const Mat3 basis_inv = basis.inverse();
    alphas_.resize(pts_.size());
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      const Vec3 a = basis_inv * (pts_[i].obj - centroid);
      alphas_[i] = {1.0 - a.sum(), a[0], a[1], a[2]};
    }
  }

  // One pose per beta approximation; entries behind the camera are dropped.
  std::vector<RigidTransform> Candidates() {
    Eigen::MatrixXd m(2 * pts_.size(), 12);
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      const double w = pts_[i].w;
      const double u = pts_[i].img.x();
      const double v = pts_[i].img.y();
      for (int j = 0; j < 4; ++j) {
        const double a = w * alphas_[i][j];
        m.row(2 * i).segment<3>(3 * j) << a * intr_.fx, 0.0, a * (intr_.cx - u);
        m.row(2 * i + 1).segment<3>(3 * j) << 0.0, a * intr_.fy,
            a * (intr_.cy - v);
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 12, 12>> eig(
        m.transpose() * m);
    // Ascending eigenvalues; the first four columns span the null space.
    for (int k = 0; k < 4; ++k) null_[k] = eig.eigenvectors().col(k);

    ComputeDistanceSystem();

    std::vector<RigidTransform> out;
    for (const auto &approx :
         {&Epnp::BetasApprox1, &Epnp::BetasApprox2, &Epnp::BetasApprox3}) {
      Eigen::Vector4d betas = (this->*approx)();
      RefineBetas(&betas);
      const RigidTransform pose = PoseFromBetas(betas);
      if (std::isfinite(ReprojectionCost(pts_, intr_, pose))) {
        out.push_back(pose);
      }
    }
    return out;
  }

 private:
  static constexpr std::array<std::array<int, 2>, 6> kPairs = {
      {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

  // l_ rows hold the quadratic monomials of the betas in the order
  // [b11 b12 b22 b13 b23 b33 b14 b24 b34 b44]; rho_ the world distances².
  void ComputeDistanceSystem() {
    for (int r = 0; r < 6; ++r) {
      const int a = kPairs[r][0];
      const int b = kPairs[r][1];
      std::array<Vec3, 4> dv;
      for (int k = 0; k < 4; ++k) {
        dv[k] = null_[k].segment<3>(3 * a) - null_[k].segment<3>(3 * b);
      }
      l_.row(r) << dv[0].dot(dv[0]), 2.0 * dv[0].dot(dv[1]), dv[1].dot(dv[1]),
          2.0 * dv[0].dot(dv[2]), 2.0 * dv[1].dot(dv[2]), dv[2].dot(dv[2]),
          2.0 * dv[0].dot(dv[3]), 2.0 * dv[1].dot(dv[3]),
          2.0 * dv[2].dot(dv[3]), dv[3].dot(dv[3]);
      rho_[r] = (control_world_.col(a) - control_world_.col(b)).squaredNorm();
    }
  }

  template <int N>
  Eigen::Matrix<double, N, 1> SolveColumns(const std::array<int, N> &cols) {
    Eigen::Matrix<double, 6, N> l;
    for (int k = 0; k < N; ++k) l.col(k) = l_.col(cols[k]);
    return l.colPivHouseholderQr().solve(rho_);
  }

  // betas_approx_1: [b11 b12 b13 b14]
  Eigen::Vector4d BetasApprox1() {
    const auto b = SolveColumns<4>({0, 1, 3, 6});
    Eigen::Vector4d betas;
    if (b[0] < 0.0) {
      betas[0] = std::sqrt(-b[0]);
      for (int k = 1; k < 4; ++k) betas[k] = -b[k] / betas[0];
    } else {
      betas[0] = std::sqrt(b[0]);
      for (int k = 1; k < 4; ++k) betas[k] = b[k] / betas[0];
    }
    return Sanitize(betas);
  }

  // betas_approx_2: [b11 b12 b22]
  Eigen::Vector4d BetasApprox2() {
    const auto b = SolveColumns<3>({0, 1, 2});
    Eigen::Vector4d betas = Eigen::Vector4d::Zero();
    if (b[0] < 0.0) {
      betas[0] = std::sqrt(-b[0]);
      betas[1] = b[2] < 0.0 ? std::sqrt(-b[2]) : 0.0;
    } else {
      betas[0] = std::sqrt(b[0]);
      betas[1] = b[2] > 0.0 ? std::sqrt(b[2]) : 0.0;
    }
    if (b[1] < 0.0) betas[0] = -betas[0];
    return Sanitize(betas);
  }

  // betas_approx_3: [b11 b12 b22 b13 b23]
  Eigen::Vector4d BetasApprox3() {
    const auto b = SolveColumns<5>({0, 1, 2, 3, 4});
    Eigen::Vector4d betas = Eigen::Vector4d::Zero();
    if (b[0] < 0.0) {
      betas[0] = std::sqrt(-b[0]);
      betas[1] = b[2] < 0.0 ? std::sqrt(-b[2]) : 0.0;
    } else {
      betas[0] = std::sqrt(b[0]);
      betas[1] = b[2] > 0.0 ? std::sqrt(b[2]) : 0.0;
    }
    if (b[1] < 0.0) betas[0] = -betas[0];
    betas[2] = betas[0] != 0.0 ? b[3] / betas[0] : 0.0;
    return Sanitize(betas);
  }

  static Eigen::Vector4d Sanitize(Eigen::Vector4d betas) {
    for (int k = 0; k < 4; ++k) {
      if (!std::isfinite(betas[k])) betas[k] = 0.0;
    }
    return betas;
  }

  void RefineBetas(Eigen::Vector4d *betas) const {
    Eigen::Vector4d &b = *betas;
    for (int it = 0; it < 5; ++it) {
      Eigen::Matrix<double, 6, 4> a;
      Eigen::Matrix<double, 6, 1> res;
      for (int r = 0; r < 6; ++r) {
        const auto l = l_.row(r);
        a(r, 0) = 2 * l[0] * b[0] + l[1] * b[1] + l[3] * b[2] + l[6] * b[3];
        a(r, 1) = l[1] * b[0] + 2 * l[2] * b[1] + l[4] * b[2] + l[7] * b[3];
        a(r, 2) = l[3] * b[0] + l[4] * b[1] + 2 * l[5] * b[2] + l[8] * b[3];
        a(r, 3) = l[6] * b[0] + l[7] * b[1] + l[8] * b[2] + 2 * l[9] * b[3];
        const double model =
            l[0] * b[0] * b[0] + l[1] * b[0] * b[1] + l[2] * b[1] * b[1] +
            l[3] * b[0] * b[2] + l[4] * b[1] * b[2] + l[5] * b[2] * b[2] +
            l[6] * b[0] * b[3] + l[7] * b[1] * b[3] + l[8] * b[2] * b[3] +
            l[9] * b[3] * b[3];
        res[r] = rho_[r] - model;
      }
      const Eigen::Vector4d dx = a.colPivHouseholderQr().solve(res);
      if (!dx.allFinite()) break;
      b += dx;
    }
  }

  RigidTransform PoseFromBetas(const Eigen::Vector4d &betas) const {
    Eigen::Matrix<double, 12, 1> x = Eigen::Matrix<double, 12, 1>::Zero();
    for (int k = 0; k < 4; ++k) x += betas[k] * null_[k];
    Mat34 control_cam;
    for (int j = 0; j < 4; ++j) control_cam.col(j) = x.segment<3>(3 * j);

    Eigen::Matrix3Xd world(3, pts_.size());
    Eigen::Matrix3Xd cam(3, pts_.size());
    double depth_sum = 0.0;
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      world.col(i) = pts_[i].obj;
      cam.col(i) = control_cam * Eigen::Vector4d(alphas_[i].data());
      depth_sum += cam(2, i);
    }
    if (depth_sum < 0.0) cam = -cam;
    return AlignPointSets(world, cam);
  }

  const std::vector<WeightedPoint> &pts_;
  const CameraIntrinsics &intr_;
  Mat34 control_world_;
  std::vector<std::array<double, 4>> alphas_;
  std::array<Eigen::Matrix<double, 12, 1>, 4> null_;
  Eigen::Matrix<double, 6, 10> l_;
  Eigen::Matrix<double, 6, 1> rho_;
};

// Pose of a planar point set from the DLT homography between plane
// coordinates and normalized image coordinates.
RigidTransform PlanarHomographyPose(const std::vector<WeightedPoint> &pts,
                                    const CameraIntrinsics &intr,
                                    const Vec3 &centroid, Mat3 axes) {
  if (axes.determinant() < 0.0) axes.col(2) = -axes.col(2);
  Eigen::MatrixXd a(2 * pts.size(), 9);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3 plane = axes.transpose() * (pts[i].obj - centroid);
    const double x = plane.x();
    const double y = plane.y();
    const double xn = (pts[i].img.x() - intr.cx) / intr.fx;
    const double yn = (pts[i].img.y() - intr.cy) / intr.fy;
    const double w = pts[i].w;
    a.row(2 * i) << w * x, w * y, w, 0, 0, 0, -w * xn * x, -w * xn * y, -w * xn;
    a.row(2 * i + 1) << 0, 0, 0, w * x, w * y, w, -w * yn * x, -w * yn * y,
        -w * yn;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::Matrix<double, 9, 1> h = svd.matrixV().col(8);
  Mat3 hm;
  hm << h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8];

  const double scale = 2.0 / (hm.col(0).norm() + hm.col(1).norm());
  hm *= scale;
  if (hm(2, 2) < 0.0) hm = -hm;  // plane origin in front of the camera
  Mat3 r;
  r.col(0) = hm.col(0);
  r.col(1) = hm.col(1);
  r.col(2) = hm.col(0).cross(hm.col(1));
  const Mat3 r_plane = Orthonormalize(r);
  const Vec3 t_plane = hm.col(2);

  RigidTransform pose;
  pose.rotation = r_plane * axes.transpose();
  pose.translation = t_plane - pose.rotation * centroid;
  return pose;
}

}  // namespace

std::vector<RigidTransform> LinearPoseCandidates(
    std::span<const Correspondence> corrs, const CameraIntrinsics &intr) {
  const std::vector<WeightedPoint> pts = UsablePoints(corrs);
  if (pts.size() < 4) {
    throw UnsolvableError("PnP needs at least 4 correspondences with "
                          "positive confidence, got " +
                          std::to_string(pts.size()));
  }
  Vec3 centroid = Vec3::Zero();
  for (const WeightedPoint &p : pts) centroid += p.obj;
  centroid /= static_cast<double>(pts.size());
  Mat3 cov = Mat3::Zero();
  for (const WeightedPoint &p : pts) {
    const Vec3 d = p.obj - centroid;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(pts.size());
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  // Descending principal axes.
  const Vec3 lambda(eig.eigenvalues()[2], eig.eigenvalues()[1],
                    eig.eigenvalues()[0]);
  Mat3 axes;
  axes << eig.eigenvectors().col(2), eig.eigenvectors().col(1),
      eig.eigenvectors().col(0);

  if (!(lambda[0] > 0.0) || lambda[1] < 1e-12 * lambda[0]) {
    throw UnsolvableError("PnP point set is colinear");
  }
  std::vector<RigidTransform> out;
  if (lambda[2] >= 1e-6 * lambda[0]) {
    const Vec3 sigma(std::sqrt(lambda[0]), std::sqrt(lambda[1]),
                     std::sqrt(lambda[2]));
    Epnp epnp(pts, intr, centroid, axes, sigma);
    out = epnp.Candidates();
  }
  // Flat but not planar sets are where EPnP is least reliable under noise,
  // so the plane fit is always offered as well.
  const RigidTransform planar = PlanarHomographyPose(pts, intr, centroid, axes);
  if (std::isfinite(ReprojectionCost(pts, intr, planar))) out.push_back(planar);
  if (out.empty()) {
    throw UnsolvableError("linear PnP produced no pose in front of the camera");
  }
  std::stable_sort(out.begin(), out.end(),
                   [&](const RigidTransform &a, const RigidTransform &b) {
                     return ReprojectionCost(pts, intr, a) <
                            ReprojectionCost(pts, intr, b);
                   });
  return out;
}

RigidTransform LinearPoseEstimate(std::span<const Correspondence> corrs,
                                  const CameraIntrinsics &intr) {
  return LinearPoseCandidates(corrs, intr).front();
}

}  // namespace gbot
