#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gbot/geom.h"
#include "gbot/keypoints.h"

namespace gbot {

struct DetectedKeypoint {
  Vec2 pixel = Vec2::Zero();
  double confidence = 0.0;  // [0, 1]
};

// Per-frame, per-object keypoint detection. keypoints has one entry per model
// keypoint when detected and is empty otherwise.
struct Observation {
  std::string object_id;
  std::vector<DetectedKeypoint> keypoints;
  bool detected = false;
  std::size_t frame_index = 0;
};

struct NoiseProfile {
  double pixel_sigma = 0.0;
  double dropout_prob = 0.0;
  double keypoint_outlier_prob = 0.0;
  std::uint64_t seed = 0;

  void Validate() const;
};

enum class Condition { kNormal, kDynamic, kBlur, kHand };

Condition ParseCondition(std::string_view name);  // throws invalid_argument
const char *ConditionName(Condition condition);

NoiseProfile ConditionProfile(Condition condition);
NoiseProfile ConditionProfile(std::string_view name);

inline constexpr double kOutlierConfidence = 0.1;

// Deterministic in (profile.seed, frame_index, model.id).
Observation SimulateObservation(const ObjectModel &model,
                                const RigidTransform &gt_pose,
                                const CameraIntrinsics &intr,
                                const NoiseProfile &profile,
                                std::size_t frame_index);

}  // namespace gbot
