#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "gbot/geom.h"
#include "gbot/kernels.h"
#include "gbot/keypoints.h"

namespace gbot {

struct Correspondence {
  Vec3 point_obj;
  Vec2 point_img;
  double confidence = 1.0;
};

struct RansacParams {
  int max_iterations = 100;
  double inlier_threshold_px = 8.0;
  std::size_t min_inliers = 6;
  std::uint64_t seed = 0;

  void Validate() const;
};

struct GaussNewtonOptions {
  int max_iterations = 20;
  // Norm of the twist increment below which the solve counts as converged.
  double step_tolerance = 1e-10;
};

// Fewer than four usable correspondences, or a degenerate (colinear) point
// configuration.
class UnsolvableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoConsensusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RefineResult {
  RigidTransform pose;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Damped Gauss-Newton on a twist applied about the weighted points' centroid.
// A step is only taken when it lowers the weighted reprojection cost, so
// final_cost <= initial_cost.
RefineResult RefinePose(const kernels::ReprojectionProblem &problem,
                        const RigidTransform &init,
                        const GaussNewtonOptions &options = {});

kernels::ReprojectionProblem MakeReprojectionProblem(
    std::span<const Correspondence> corrs, const CameraIntrinsics &intr);

// Closed-form estimates used to bootstrap refinement: the EPnP beta
// approximations plus a plane homography, ordered by reprojection cost.
// Throws UnsolvableError for fewer than 4 usable or colinear points.
std::vector<RigidTransform> LinearPoseCandidates(
    std::span<const Correspondence> corrs, const CameraIntrinsics &intr);
// The cheapest of LinearPoseCandidates.
RigidTransform LinearPoseEstimate(std::span<const Correspondence> corrs,
                                  const CameraIntrinsics &intr);

struct PnpResult {
  RigidTransform pose;
  double cost = 0.0;  // Σ (confidence · pixel residual)²
  int iterations = 0;
  bool converged = false;
};

PnpResult SolvePnp(std::span<const Correspondence> corrs,
                   const CameraIntrinsics &intr,
                   const std::optional<RigidTransform> &init = std::nullopt,
                   const GaussNewtonOptions &options = {});

struct RansacResult {
  RigidTransform pose;
  std::vector<std::size_t> inliers;  // ascending indices into the input
  bool converged = false;
};

RansacResult RansacPnp(std::span<const Correspondence> corrs,
                       const CameraIntrinsics &intr,
                       const RansacParams &params);

// Stacked weighted residuals (u0, v0, u1, v1, ...) and their Jacobian with
// respect to a left-multiplied twist (angular, linear). Points behind the
// camera or with zero confidence yield zero rows.
Eigen::VectorXd ReprojectionResiduals(std::span<const Correspondence> corrs,
                                      const CameraIntrinsics &intr,
                                      const RigidTransform &pose);
Eigen::Matrix<double, Eigen::Dynamic, 6> ReprojectionJacobian(
    std::span<const Correspondence> corrs, const CameraIntrinsics &intr,
    const RigidTransform &pose);

}  // namespace gbot
