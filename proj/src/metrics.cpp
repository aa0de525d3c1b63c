#include "gbot/metrics.h"

#include <algorithm>

#include "gbot/kernels.h"

namespace gbot {

double AddError(const RigidTransform &pred, const RigidTransform &gt,
                std::span<const Vec3> vertices) {
  if (vertices.empty()) throw UndefinedInputError("add: empty vertex set");
  const kernels::PointsSoA pts(vertices);
  const double sum = kernels::Active().add_distance_sum(
      kernels::Pose34::From(pred), kernels::Pose34::From(gt), pts.x.data(),
      pts.y.data(), pts.z.data(), pts.size());
  return sum / static_cast<double>(vertices.size());
}

double AddsError(const RigidTransform &pred, const RigidTransform &gt,
                 std::span<const Vec3> vertices) {
  if (vertices.empty()) throw UndefinedInputError("add-s: empty vertex set");
  const kernels::PointsSoA pts(vertices);
  const kernels::PointsSoA p = pts.Transformed(kernels::Pose34::From(pred));
  const kernels::PointsSoA q = pts.Transformed(kernels::Pose34::From(gt));
  const double sum = kernels::Active().closest_distance_sum(
      p.x.data(), p.y.data(), p.z.data(), p.size(), q.x.data(), q.y.data(),
      q.z.data(), q.size());
  return sum / static_cast<double>(vertices.size());
}

double PoseError(const ObjectModel &model, const RigidTransform &pred,
                 const RigidTransform &gt) {
  return model.symmetric ? AddsError(pred, gt, model.vertices)
                         : AddError(pred, gt, model.vertices);
}

double Score(std::span<const double> errors, double threshold) {
  if (!(threshold > 0.0)) {
    throw std::invalid_argument("score: threshold must be > 0");
  }
  if (errors.empty()) throw UndefinedInputError("score: empty error list");
  double sum = 0.0;
  for (double e : errors) sum += std::max(1.0 - e / threshold, 0.0);
  return sum / static_cast<double>(errors.size());
}

AverageErrors ComputeAverageErrors(std::span<const PoseErrorSample> samples) {
  if (samples.empty()) throw UndefinedInputError("average errors: empty list");
  AverageErrors out;
  double rot_sum = 0.0;
  std::size_t rot_n = 0;
  for (const PoseErrorSample &s : samples) {
    out.trans_m += s.e_trans;
    if (s.e_rot) {
      rot_sum += *s.e_rot;
      ++rot_n;
    }
  }
  out.trans_m /= static_cast<double>(samples.size());
  if (rot_n > 0) out.rot_deg = rot_sum / static_cast<double>(rot_n);
  return out;
}

FrameErrors EvaluateFrame(const GroundTruthFrame &gt, const PoseMap &predicted,
                          const std::vector<ObjectModel> &models) {
  FrameErrors out;
  out.frame_index = gt.frame_index;
  for (const ObjectModel &model : models) {
    FrameErrors::Entry e;
    e.object_id = model.id;
    const RigidTransform &truth = gt.poses.at(model.id);
    auto it = predicted.find(model.id);
    if (it != predicted.end()) {
      e.add_or_adds = PoseError(model, it->second, truth);
      e.sample.e_trans = TranslationError(it->second.translation,
                                          truth.translation);
      if (!model.symmetric) {
        e.sample.e_rot = RotationErrorDeg(it->second.rotation, truth.rotation);
      }
    }
    out.entries.push_back(std::move(e));
  }
  return out;
}

SequenceEvaluation EvaluateSequence(const std::vector<GroundTruthFrame> &gt,
                                    const std::vector<PoseMap> &predicted,
                                    const std::vector<ObjectModel> &models,
                                    std::size_t first_frame, double threshold) {
  if (gt.size() != predicted.size()) {
    throw std::invalid_argument("evaluate: " + std::to_string(predicted.size()) +
                                " predicted frames for " +
                                std::to_string(gt.size()) + " ground-truth frames");
  }
  std::vector<double> errors;
  std::vector<PoseErrorSample> samples;
  SequenceEvaluation out;
  for (std::size_t f = first_frame; f < gt.size(); ++f) {
    const FrameErrors fe = EvaluateFrame(gt[f], predicted[f], models);
    for (const FrameErrors::Entry &e : fe.entries) {
      ++out.samples;
      if (!e.add_or_adds) {
        ++out.missing;
        // A missing pose scores like an error at the threshold.
        errors.push_back(threshold);
        continue;
      }
      errors.push_back(*e.add_or_adds);
      samples.push_back(e.sample);
    }
  }
  if (errors.empty()) throw UndefinedInputError("evaluate: no frames to score");
  out.score = Score(errors, threshold);
  if (!samples.empty()) {
    const AverageErrors avg = ComputeAverageErrors(samples);
    out.mean_trans_m = avg.trans_m;
    out.mean_rot_deg = avg.rot_deg;
  }
  return out;
}

}  // namespace gbot
