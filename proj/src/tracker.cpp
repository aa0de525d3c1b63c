#include "gbot/tracker.h"

#include <chrono>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "gbot/kernels.h"
#include "gbot/random.h"

namespace gbot {

void TrackerConfig::Validate() const {
  if (gn_max_iterations < 1) {
    throw std::invalid_argument("tracker: gn_max_iterations must be >= 1");
  }
  if (!(gn_tolerance > 0.0)) {
    throw std::invalid_argument("tracker: gn_tolerance must be > 0");
  }
  if (reinit_period < 1) {
    throw std::invalid_argument("tracker: reinit_period must be >= 1");
  }
  if (!(reinit_offset_m > 0.0)) {
    throw std::invalid_argument("tracker: reinit_offset_m must be > 0");
  }
  if (transition_debounce < 1) {
    throw std::invalid_argument("tracker: transition_debounce must be >= 1");
  }
  ransac.Validate();
}

const char *EventTypeName(EventType type) {
  switch (type) {
    case EventType::kTransition:
      return "transition";
    case EventType::kReinit:
      return "reinit";
    case EventType::kLost:
      return "lost";
  }
  return "lost";
}

EventType ParseEventType(std::string_view name) {
  if (name == "transition") return EventType::kTransition;
  if (name == "reinit") return EventType::kReinit;
  if (name == "lost") return EventType::kLost;
  throw std::invalid_argument("unknown event type '" + std::string(name) +
                              "'");
}

PoseEstimator MakeRansacEstimator(const RansacParams &params) {
  params.Validate();
  return [params](const ObjectModel &model, const Observation &obs,
                  const CameraIntrinsics &intr,
                  std::size_t frame_index) -> std::optional<RigidTransform> {
    if (!obs.detected || obs.keypoints.size() != model.keypoint_indices.size()) {
      return std::nullopt;
    }
    const std::vector<Vec3> kps = model.Keypoints();
    std::vector<Correspondence> corrs;
    corrs.reserve(kps.size());
    for (std::size_t i = 0; i < kps.size(); ++i) {
      if (obs.keypoints[i].confidence > 0.0) {
        corrs.push_back(
            {kps[i], obs.keypoints[i].pixel, obs.keypoints[i].confidence});
      }
    }
    RansacParams p = params;
    p.seed = MixSeed(params.seed ^ MixSeed(frame_index) ^ HashString(model.id));
    try {
      return RansacPnp(corrs, intr, p).pose;
    } catch (const UnsolvableError &) {
      return std::nullopt;
    } catch (const NoConsensusError &) {
      return std::nullopt;
    }
  };
}

Tracker::Tracker(AssemblyGraph graph, std::vector<ObjectModel> models,
                 CameraIntrinsics intr, TrackerConfig config,
                 PoseEstimator estimator)
    : graph_(std::move(graph)),
      models_(std::move(models)),
      intr_(intr),
      config_(std::move(config)),
      estimator_(std::move(estimator)) {
  graph_.Validate();
  intr_.Validate();
  config_.Validate();
  for (std::size_t k = 0; k < models_.size(); ++k) {
    models_[k].Validate();
    model_index_[models_[k].id] = k;
    keypoints_[models_[k].id] = models_[k].Keypoints();
  }
  for (const ObjectSpec &o : graph_.objects) {
    if (!model_index_.count(o.id)) {
      throw std::invalid_argument("tracker: no model for object '" + o.id +
                                  "'");
    }
  }
  if (!estimator_) estimator_ = MakeRansacEstimator(config_.ransac);
  Repartition();
}

const ObjectModel &Tracker::Model(const ObjectId &id) const {
  return models_[model_index_.at(id)];
}

const Observation *Tracker::Find(const ObservationFrame &frame,
                                 const ObjectId &id) const {
  // Observations are normally in model order; fall back to a scan.
  const std::size_t k = model_index_.at(id);
  if (k < frame.size() && frame[k].object_id == id) return &frame[k];
  for (const Observation &o : frame) {
    if (o.object_id == id) return &o;
  }
  return nullptr;
}

std::optional<RigidTransform> Tracker::Detect(const ObjectId &id,
                                              const ObservationFrame &frame) {
  const Observation *obs = Find(frame, id);
  if (obs == nullptr || !obs->detected) return std::nullopt;
  ++detector_calls_;
  return estimator_(Model(id), *obs, intr_, obs->frame_index);
}

void Tracker::Repartition() {
  modules_ = config_.use_links ? ModulePartition(graph_, state_index_)
                               : SingletonPartition(graph_);
}

std::optional<RigidTransform> Tracker::RootPose(const Module &module) const {
  for (const ModuleMember &m : module.members) {
    auto it = poses_.find(m.id);
    if (it != poses_.end()) {
      return Compose(it->second, Invert(m.from_root));
    }
  }
  return std::nullopt;
}

TrackReport Tracker::MakeReport(std::size_t frame_index) const {
  TrackReport r;
  r.frame_index = frame_index;
  r.state_index = state_index_;
  r.poses = poses_;
  for (const Module &m : modules_) {
    for (const ModuleMember &member : m.members) {
      r.module_roots[member.id] = m.root_id;
    }
  }
  r.lost = lost_;
  return r;
}

TrackReport Tracker::Initialize(const ObservationFrame &frame) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t frame_index = frame.empty() ? 0 : frame[0].frame_index;
  poses_.clear();
  lost_.clear();
  state_index_ = 0;
  debounce_count_ = 0;
  Repartition();

  std::vector<TrackEvent> events;
  for (const ObjectSpec &o : graph_.objects) {
    std::optional<RigidTransform> pose = Detect(o.id, frame);
    if (pose) {
      poses_[o.id] = *pose;
    } else {
      lost_.insert(o.id);
      events.push_back({EventType::kLost, frame_index, o.id, state_index_, 0});
    }
  }
  if (poses_.empty()) {
    throw InitializationError("no object could be initialized at frame " +
                              std::to_string(frame_index));
  }
  initialized_ = true;
  TrackReport r = MakeReport(frame_index);
  r.events = std::move(events);
  r.runtime_ms = std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - start)
                     .count();
  return r;
}

void Tracker::AcquireMissing(const ObservationFrame &frame) {
  for (const Module &module : modules_) {
    if (RootPose(module)) continue;
    for (const ModuleMember &m : module.members) {
      std::optional<RigidTransform> pose = Detect(m.id, frame);
      if (pose) {
        poses_[m.id] = *pose;
        break;
      }
    }
  }
}

void Tracker::TrackModules(const ObservationFrame &frame, TrackReport *report) {
  GaussNewtonOptions gn;
  gn.max_iterations = config_.gn_max_iterations;
  gn.step_tolerance = config_.gn_tolerance;

  kernels::ReprojectionProblem problem;
  problem.fx = intr_.fx;
  problem.fy = intr_.fy;
  problem.cx = intr_.cx;
  problem.cy = intr_.cy;

  for (const Module &module : modules_) {
    std::optional<RigidTransform> root = RootPose(module);
    if (!root) continue;  // never acquired

    problem.points.clear();
    problem.u.clear();
    problem.v.clear();
    problem.w.clear();
    std::size_t weighted = 0;
    for (const ModuleMember &m : module.members) {
      const Observation *obs = Find(frame, m.id);
      if (obs == nullptr || !obs->detected) continue;
      const std::vector<Vec3> &kps = keypoints_.at(m.id);
      if (obs->keypoints.size() != kps.size()) continue;
      for (std::size_t i = 0; i < kps.size(); ++i) {
        const DetectedKeypoint &kp = obs->keypoints[i];
        if (!(kp.confidence > 0.0)) continue;
        problem.points.push_back(m.from_root.Apply(kps[i]));
        problem.u.push_back(kp.pixel.x());
        problem.v.push_back(kp.pixel.y());
        problem.w.push_back(kp.confidence);
        ++weighted;
      }
    }

    if (weighted < kMinTrackedKeypoints) {
      for (const ModuleMember &m : module.members) lost_.insert(m.id);
      report->events.push_back({EventType::kLost, report->frame_index,
                                module.root_id, state_index_, 0.0});
      ExpandModulePoses(module, *root, &poses_);
      continue;
    }
    const RefineResult refined = RefinePose(problem, *root, gn);
    for (const ModuleMember &m : module.members) lost_.erase(m.id);
    ExpandModulePoses(module, refined.pose, &poses_);
  }
}

void Tracker::CheckTransitions(std::size_t frame_index, TrackReport *report) {
  if (graph_.IsTerminal(state_index_)) return;
  if (CheckTransition(graph_, state_index_, poses_)) {
    ++debounce_count_;
  } else {
    debounce_count_ = 0;
  }
  if (debounce_count_ < config_.transition_debounce) return;

  const ObjectId child = graph_.states[state_index_].switch_pair->b_id;
  ++state_index_;
  debounce_count_ = 0;
  Repartition();
  // Seed each module from its root's current pose; linked parts snap onto
  // their links.
  for (const Module &module : modules_) {
    if (std::optional<RigidTransform> root = RootPose(module)) {
      ExpandModulePoses(module, *root, &poses_);
    }
  }
  report->events.push_back(
      {EventType::kTransition, frame_index, child, state_index_, 0.0});
  spdlog::debug("frame {}: transition to state {}", frame_index, state_index_);
}

void Tracker::Reinitialize(const ObservationFrame &frame, TrackReport *report) {
  for (const Module &module : modules_) {
    std::optional<RigidTransform> root = RootPose(module);
    if (!root) continue;
    // Detector pose of the root; falls back to the first detected member.
    std::optional<RigidTransform> detected;
    for (const ModuleMember &m : module.members) {
      if (std::optional<RigidTransform> pose = Detect(m.id, frame)) {
        detected = Compose(*pose, Invert(m.from_root));
        break;
      }
    }
    if (!detected) continue;
    const double offset =
        TranslationError(root->translation, detected->translation);
    if (offset > config_.reinit_offset_m) {
      ExpandModulePoses(module, *detected, &poses_);
      for (const ModuleMember &m : module.members) lost_.erase(m.id);
      report->events.push_back({EventType::kReinit, report->frame_index,
                                module.root_id, state_index_, offset});
      spdlog::debug("frame {}: reinit {} (offset {:.3f} m)",
                    report->frame_index, module.root_id, offset);
    }
  }
}

TrackReport Tracker::Update(const ObservationFrame &frame) {
  if (!initialized_) throw std::logic_error("tracker: Update before Initialize");
  const auto start = std::chrono::steady_clock::now();
  const std::size_t frame_index = frame.empty() ? 0 : frame[0].frame_index;

  TrackReport scratch;
  scratch.frame_index = frame_index;
  AcquireMissing(frame);
  TrackModules(frame, &scratch);
  CheckTransitions(frame_index, &scratch);
  if (config_.reinit_enabled && frame_index % config_.reinit_period == 0) {
    Reinitialize(frame, &scratch);
  }

  TrackReport r = MakeReport(frame_index);
  r.events = std::move(scratch.events);
  r.runtime_ms = std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - start)
                     .count();
  return r;
}

std::vector<TrackReport> RunSequence(const std::vector<ObservationFrame> &frames,
                                     const AssemblyGraph &graph,
                                     const std::vector<ObjectModel> &models,
                                     const CameraIntrinsics &intr,
                                     const TrackerConfig &config,
                                     PoseEstimator estimator,
                                     const ReportSink &sink) {
  if (frames.empty()) throw SequenceError("empty sequence");
  Tracker tracker(graph, models, intr, config, std::move(estimator));
  std::vector<TrackReport> reports;
  reports.reserve(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (!tracker.initialized()) {
      try {
        reports.push_back(tracker.Initialize(frames[f]));
      } catch (const InitializationError &) {
        TrackReport empty;
        empty.frame_index = frames[f].empty() ? f : frames[f][0].frame_index;
        reports.push_back(std::move(empty));
      }
    } else {
      reports.push_back(tracker.Update(frames[f]));
    }
    if (sink) sink(reports.back());
  }
  if (!tracker.initialized()) {
    throw SequenceError("tracker never initialized over " +
                        std::to_string(frames.size()) + " frames");
  }
  return reports;
}

}  // namespace gbot
