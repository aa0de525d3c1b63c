#include "gbot/pnp.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Cholesky>

#include "gbot/random.h"

namespace gbot {

void RansacParams::Validate() const {
  if (max_iterations < 1) {
    throw std::invalid_argument("ransac: max_iterations must be >= 1");
  }
  if (!(inlier_threshold_px > 0.0)) {
    throw std::invalid_argument("ransac: inlier_threshold_px must be > 0");
  }
  if (min_inliers < 4) {
    throw std::invalid_argument("ransac: min_inliers must be >= 4");
  }
}

kernels::ReprojectionProblem MakeReprojectionProblem(
    std::span<const Correspondence> corrs, const CameraIntrinsics &intr) {
  kernels::ReprojectionProblem p;
  p.fx = intr.fx;
  p.fy = intr.fy;
  p.cx = intr.cx;
  p.cy = intr.cy;
  p.u.reserve(corrs.size());
  p.v.reserve(corrs.size());
  p.w.reserve(corrs.size());
  for (const Correspondence &c : corrs) {
    p.points.push_back(c.point_obj);
    p.u.push_back(c.point_img.x());
    p.v.push_back(c.point_img.y());
    p.w.push_back(c.confidence);
  }
  return p;
}

RefineResult RefinePose(const kernels::ReprojectionProblem &problem,
                        const RigidTransform &init,
                        const GaussNewtonOptions &options) {
  const kernels::KernelTable &k = kernels::Active();
  RefineResult result;
  result.pose = init;
  double cost = k.reprojection_cost(kernels::Pose34::From(init), problem);
  result.initial_cost = cost;

  // The kernels linearize in the left-multiplied twist, whose rotation turns
  // about the camera centre. For a small part far from the camera that
  // couples rotation with a large sideways shift and second-order terms reject
  // most full steps. Steps are therefore taken about the part's centroid c
  // (camera frame): x' = exp(w)(x - c) + c + v, which to first order is the
  // left twist (w, v + c x w).
  Vec3 centroid_obj = Vec3::Zero();
  double w_sum = 0.0;
  for (std::size_t i = 0; i < problem.size(); ++i) {
    if (problem.w[i] <= 0.0) continue;
    centroid_obj += Vec3(problem.points.x[i], problem.points.y[i],
                         problem.points.z[i]);
    w_sum += 1.0;
  }
  if (w_sum > 0.0) centroid_obj /= w_sum;

  // Pure Gauss-Newton until a step fails to decrease the cost, then
  // Levenberg damping on the diagonal.
  double lambda = 0.0;
  kernels::NormalEquations ne;
  Eigen::Matrix<double, 6, 6> h_c;
  Vec6 g_c;
  Vec3 c = Vec3::Zero();
  bool need_linearization = true;
  for (int it = 0; it < options.max_iterations; ++it) {
    result.iterations = it + 1;
    if (need_linearization) {
      k.reprojection_normal_equations(kernels::Pose34::From(result.pose),
                                      problem, &ne);
      if (ne.used == 0) break;
      c = result.pose.Apply(centroid_obj);
      Eigen::Matrix<double, 6, 6> a = Eigen::Matrix<double, 6, 6>::Identity();
      a.bottomLeftCorner<3, 3>() = Skew(c);
      const Eigen::Matrix<double, 6, 6> h_left = Eigen::Map<
          const Eigen::Matrix<double, 6, 6, Eigen::RowMajor>>(ne.h);
      h_c = a.transpose() * h_left * a;
      g_c = a.transpose() * Eigen::Map<const Vec6>(ne.g);
    }
    Eigen::Matrix<double, 6, 6> h = h_c;
    for (int d = 0; d < 6; ++d) h(d, d) += lambda * h(d, d) + 1e-12;
    const Vec6 delta = h.ldlt().solve(-g_c);
    if (!delta.allFinite()) break;

    RigidTransform step;
    step.rotation = ExpSo3(delta.head<3>());
    step.translation = c - step.rotation * c + delta.tail<3>();
    const RigidTransform candidate = Compose(step, result.pose);
    const double new_cost =
        k.reprojection_cost(kernels::Pose34::From(candidate), problem);
    if (new_cost < cost || (std::isinf(cost) && std::isfinite(new_cost))) {
      result.pose = candidate;
      cost = new_cost;
      lambda = lambda > 0.0 ? std::max(lambda * 0.1, 1e-9) : 0.0;
      need_linearization = true;
      if (delta.norm() < options.step_tolerance) {
        result.converged = true;
        break;
      }
    } else {
      // A rejected step below tolerance means we sit at the minimum to
      // within floating-point resolution.
      if (delta.norm() < options.step_tolerance || cost == 0.0) {
        result.converged = true;
        break;
      }
      lambda = lambda > 0.0 ? lambda * 10.0 : 1e-4;
      need_linearization = false;
      if (lambda > 1e8) {
        result.converged = true;
        break;
      }
    }
  }
  result.final_cost = cost;
  return result;
}

namespace {

std::size_t CountUsable(std::span<const Correspondence> corrs) {
  return static_cast<std::size_t>(
      std::count_if(corrs.begin(), corrs.end(),
                    [](const Correspondence &c) { return c.confidence > 0.0; }));
}

bool AllInFront(std::span<const Correspondence> corrs,
                const RigidTransform &pose) {
  for (const Correspondence &c : corrs) {
    if (c.confidence > 0.0 &&
        pose.Apply(c.point_obj).z() <= kernels::kMinDepth) {
      return false;
    }
  }
  return true;
}

}  // namespace

PnpResult SolvePnp(std::span<const Correspondence> corrs,
                   const CameraIntrinsics &intr,
                   const std::optional<RigidTransform> &init,
                   const GaussNewtonOptions &options) {
  const std::size_t usable = CountUsable(corrs);
  if (usable < 4) {
    throw UnsolvableError("PnP needs at least 4 correspondences with "
                          "positive confidence, got " +
                          std::to_string(usable));
  }
  const kernels::ReprojectionProblem problem =
      MakeReprojectionProblem(corrs, intr);

  if (init && init->IsValid(1e-6)) {
    const RefineResult warm = RefinePose(problem, *init, options);
    if (AllInFront(corrs, warm.pose)) {
      return {warm.pose, warm.final_cost, warm.iterations, warm.converged};
    }
    // The warm start was unusable; fall back to the closed-form starts.
  }
  // Noisy flat sets can leave the best linear estimate in the wrong basin,
  // so every candidate is refined and the lowest final cost wins.
  std::optional<RefineResult> best;
  for (const RigidTransform &start : LinearPoseCandidates(corrs, intr)) {
    RefineResult r = RefinePose(problem, start, options);
    if (!AllInFront(corrs, r.pose)) continue;
    if (!best || r.final_cost < best->final_cost) best = std::move(r);
  }
  if (!best) throw UnsolvableError("PnP solution lies behind the camera");
  const RefineResult &refined = *best;
  return {refined.pose, refined.final_cost, refined.iterations,
          refined.converged};
}

namespace {

std::vector<std::size_t> CountInliers(std::span<const Correspondence> corrs,
                                      std::span<const std::size_t> candidates,
                                      const CameraIntrinsics &intr,
                                      const RigidTransform &pose,
                                      double threshold_px) {
  std::vector<std::size_t> inliers;
  const double t2 = threshold_px * threshold_px;
  for (std::size_t idx : candidates) {
    const Vec3 c = pose.Apply(corrs[idx].point_obj);
    if (c.z() <= kernels::kMinDepth) continue;
    const Vec2 proj(intr.fx * c.x() / c.z() + intr.cx,
                    intr.fy * c.y() / c.z() + intr.cy);
    if ((proj - corrs[idx].point_img).squaredNorm() < t2) {
      inliers.push_back(idx);
    }
  }
  return inliers;
}

std::vector<Correspondence> Gather(std::span<const Correspondence> corrs,
                                   std::span<const std::size_t> idx) {
  std::vector<Correspondence> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(corrs[i]);
  return out;
}

}  // namespace

RansacResult RansacPnp(std::span<const Correspondence> corrs,
                       const CameraIntrinsics &intr,
                       const RansacParams &params) {
  params.Validate();
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    if (corrs[i].confidence > 0.0) usable.push_back(i);
  }
  if (usable.size() < params.min_inliers) {
    throw NoConsensusError("ransac: " + std::to_string(usable.size()) +
                           " usable correspondences, need " +
                           std::to_string(params.min_inliers));
  }

  Rng rng(params.seed);
  const GaussNewtonOptions minimal_options{10, 1e-8};
  std::vector<std::size_t> best_inliers;
  RigidTransform best_pose;
  std::vector<std::size_t> pool = usable;
  std::array<Correspondence, 4> sample;
  for (int it = 0; it < params.max_iterations; ++it) {
    // Partial Fisher-Yates draw of 4 distinct usable indices.
    for (std::size_t k = 0; k < 4; ++k) {
      const std::size_t j = k + rng.Index(pool.size() - k);
      std::swap(pool[k], pool[j]);
      sample[k] = corrs[pool[k]];
    }
    RigidTransform pose;
    try {
      pose = SolvePnp(sample, intr, std::nullopt, minimal_options).pose;
    } catch (const UnsolvableError &) {
      continue;
    }
    std::vector<std::size_t> inliers =
        CountInliers(corrs, usable, intr, pose, params.inlier_threshold_px);
    if (inliers.size() > best_inliers.size()) {
      best_inliers = std::move(inliers);
      best_pose = pose;
      if (best_inliers.size() == usable.size()) break;
    }
  }
  if (best_inliers.size() < params.min_inliers) {
    throw NoConsensusError("ransac: best consensus " +
                           std::to_string(best_inliers.size()) +
                           " inliers, need " +
                           std::to_string(params.min_inliers));
  }

  // Refit on the consensus set and let it grow while it keeps improving.
  RansacResult result;
  result.pose = best_pose;
  result.inliers = best_inliers;
  for (int round = 0; round < 3; ++round) {
    const std::vector<Correspondence> subset = Gather(corrs, result.inliers);
    PnpResult fit;
    try {
      fit = SolvePnp(subset, intr, result.pose);
    } catch (const UnsolvableError &) {
      break;
    }
    result.pose = fit.pose;
    result.converged = fit.converged;
    std::vector<std::size_t> grown = CountInliers(
        corrs, usable, intr, fit.pose, params.inlier_threshold_px);
    if (grown.size() <= result.inliers.size()) break;
    result.inliers = std::move(grown);
  }
  if (result.inliers.size() < params.min_inliers) {
    throw NoConsensusError("ransac: refit lost consensus");
  }
  return result;
}

Eigen::VectorXd ReprojectionResiduals(std::span<const Correspondence> corrs,
                                      const CameraIntrinsics &intr,
                                      const RigidTransform &pose) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(2 * corrs.size());
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    const Correspondence &c = corrs[i];
    const Vec3 p = pose.Apply(c.point_obj);
    if (!(c.confidence > 0.0) || p.z() <= kernels::kMinDepth) continue;
    r[2 * i] = c.confidence * (intr.fx * p.x() / p.z() + intr.cx -
                               c.point_img.x());
    r[2 * i + 1] = c.confidence * (intr.fy * p.y() / p.z() + intr.cy -
                                   c.point_img.y());
  }
  return r;
}

Eigen::Matrix<double, Eigen::Dynamic, 6> ReprojectionJacobian(
    std::span<const Correspondence> corrs, const CameraIntrinsics &intr,
    const RigidTransform &pose) {
  Eigen::Matrix<double, Eigen::Dynamic, 6> j =
      Eigen::Matrix<double, Eigen::Dynamic, 6>::Zero(2 * corrs.size(), 6);
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    const Correspondence &c = corrs[i];
    const Vec3 p = pose.Apply(c.point_obj);
    if (!(c.confidence > 0.0) || p.z() <= kernels::kMinDepth) continue;
    // d(pixel)/d(camera point)
    Eigen::Matrix<double, 2, 3> dproj;
    dproj << intr.fx / p.z(), 0.0, -intr.fx * p.x() / (p.z() * p.z()),
        0.0, intr.fy / p.z(), -intr.fy * p.y() / (p.z() * p.z());
    // d(camera point)/d(twist) for exp(twist) * pose at twist = 0.
    Eigen::Matrix<double, 3, 6> dpoint;
    dpoint << -Skew(p), Mat3::Identity();
    j.block<2, 6>(2 * i, 0) = c.confidence * dproj * dpoint;
  }
  return j;
}

}  // namespace gbot
