#include "gbot/detector_sim.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gbot/random.h"

namespace gbot {

void NoiseProfile::Validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!(pixel_sigma >= 0.0) || !prob(dropout_prob) ||
      !prob(keypoint_outlier_prob)) {
    throw std::invalid_argument(
        "noise profile: sigma must be >= 0 and probabilities in [0, 1]");
  }
}

Condition ParseCondition(std::string_view name) {
  if (name == "normal") return Condition::kNormal;
  if (name == "dynamic") return Condition::kDynamic;
  if (name == "blur") return Condition::kBlur;
  if (name == "hand") return Condition::kHand;
  throw std::invalid_argument("unknown condition '" + std::string(name) +
                              "' (expected normal|dynamic|blur|hand)");
}

const char *ConditionName(Condition condition) {
  switch (condition) {
    case Condition::kNormal:
      return "normal";
    case Condition::kDynamic:
      return "dynamic";
    case Condition::kBlur:
      return "blur";
    case Condition::kHand:
      return "hand";
  }
  return "normal";
}

NoiseProfile ConditionProfile(Condition condition) {
  switch (condition) {
    case Condition::kNormal:
      return {1.0, 0.02, 0.02, 0};
    case Condition::kDynamic:
      return {2.0, 0.10, 0.05, 0};
    case Condition::kBlur:
      return {4.0, 0.05, 0.05, 0};
    case Condition::kHand:
      return {1.5, 0.35, 0.10, 0};
  }
  return {};
}

NoiseProfile ConditionProfile(std::string_view name) {
  return ConditionProfile(ParseCondition(name));
}

Observation SimulateObservation(const ObjectModel &model,
                                const RigidTransform &gt_pose,
                                const CameraIntrinsics &intr,
                                const NoiseProfile &profile,
                                std::size_t frame_index) {
  Rng rng(MixSeed(profile.seed ^ MixSeed(frame_index) ^
                  HashString(model.id)));
  Observation obs;
  obs.object_id = model.id;
  obs.frame_index = frame_index;
  obs.detected = !(rng.Uniform() < profile.dropout_prob);
  if (!obs.detected) return obs;

  const std::vector<Vec3> keypoints = model.Keypoints();
  const std::vector<ProjectedPoint> projected =
      Project(intr, gt_pose, keypoints);
  obs.keypoints.reserve(projected.size());
  for (const ProjectedPoint &proj : projected) {
    // Fixed number of draws per keypoint keeps streams aligned across
    // profiles that differ only in one parameter.
    const double nx = rng.Normal() * profile.pixel_sigma;
    const double ny = rng.Normal() * profile.pixel_sigma;
    const double outlier_draw = rng.Uniform();
    const double ou = rng.Uniform(0.0, intr.width);
    const double ov = rng.Uniform(0.0, intr.height);

    DetectedKeypoint kp;
    if (outlier_draw < profile.keypoint_outlier_prob) {
      kp.pixel = {ou, ov};
      kp.confidence = kOutlierConfidence;
    } else if (!proj.visible) {
      kp.pixel = proj.pixel;
      kp.confidence = 0.0;
    } else {
      kp.pixel = proj.pixel + Vec2(nx, ny);
      const double residual = std::hypot(nx, ny);
      kp.confidence = std::max(0.2, 1.0 - residual / 8.0);
    }
    obs.keypoints.push_back(kp);
  }
  return obs;
}

}  // namespace gbot
