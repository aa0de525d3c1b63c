#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gbot/assembly_graph.h"
#include "gbot/geom.h"
#include "gbot/keypoints.h"
#include "gbot/scene_sim.h"

namespace gbot {

inline constexpr double kDefaultScoreThresholdM = 0.10;

class UndefinedInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Mean distance between corresponding transformed vertices.
double AddError(const RigidTransform &pred, const RigidTransform &gt,
                std::span<const Vec3> vertices);
// Mean distance from each predicted vertex to the closest ground-truth vertex.
// Exact nearest neighbour (all pairs).
double AddsError(const RigidTransform &pred, const RigidTransform &gt,
                 std::span<const Vec3> vertices);
// ADD-S for symmetric models, ADD otherwise.
double PoseError(const ObjectModel &model, const RigidTransform &pred,
                 const RigidTransform &gt);

// Mean over entries of max(1 - e / threshold, 0). Throws UndefinedInputError
// on an empty list, std::invalid_argument on threshold <= 0.
double Score(std::span<const double> errors,
             double threshold = kDefaultScoreThresholdM);

struct PoseErrorSample {
  double e_trans = 0.0;                // meters
  std::optional<double> e_rot;         // degrees; empty for symmetric objects
};

struct AverageErrors {
  double trans_m = 0.0;
  std::optional<double> rot_deg;  // empty if every sample is symmetric
};

// Throws UndefinedInputError on an empty list.
AverageErrors ComputeAverageErrors(std::span<const PoseErrorSample> samples);

struct FrameErrors {
  struct Entry {
    ObjectId object_id;
    std::optional<double> add_or_adds;  // empty when no pose was reported
    PoseErrorSample sample;
  };
  std::size_t frame_index = 0;
  std::vector<Entry> entries;
};

FrameErrors EvaluateFrame(const GroundTruthFrame &gt, const PoseMap &predicted,
                          const std::vector<ObjectModel> &models);

struct SequenceEvaluation {
  double score = 0.0;  // [0, 1]; missing poses count as 0
  double mean_trans_m = 0.0;
  std::optional<double> mean_rot_deg;
  std::size_t samples = 0;  // (object, frame) pairs scored
  std::size_t missing = 0;  // of which had no pose
};

// Pools (object, frame) errors over frames [first_frame, end). predicted[f]
// pairs with gt[f]. Missing poses score 0 and are left out of the averages.
SequenceEvaluation EvaluateSequence(const std::vector<GroundTruthFrame> &gt,
                                    const std::vector<PoseMap> &predicted,
                                    const std::vector<ObjectModel> &models,
                                    std::size_t first_frame = 0,
                                    double threshold = kDefaultScoreThresholdM);

}  // namespace gbot
