#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "gbot/assembly_graph.h"
#include "gbot/detector_sim.h"
#include "gbot/geom.h"
#include "gbot/keypoints.h"
#include "gbot/pnp.h"
#include "gbot/scene_sim.h"

namespace gbot {

struct TrackerConfig {
  int gn_max_iterations = 10;
  double gn_tolerance = 1e-6;  // twist step norm
  std::size_t reinit_period = 10;
  double reinit_offset_m = 0.05;
  bool reinit_enabled = false;
  std::size_t transition_debounce = 1;
  // false tracks every object on its own (the `independent` baseline);
  // state transitions are still evaluated and reported.
  bool use_links = true;
  RansacParams ransac;

  void Validate() const;
};

// Modules with fewer weighted keypoints than this are carried forward.
inline constexpr std::size_t kMinTrackedKeypoints = 4;

enum class EventType { kTransition, kReinit, kLost };
const char *EventTypeName(EventType type);
EventType ParseEventType(std::string_view name);

struct TrackEvent {
  EventType type = EventType::kLost;
  std::size_t frame_index = 0;
  ObjectId object_id;           // module root, or the newly linked part
  std::size_t state_index = 0;  // state after the event
  double offset_m = 0.0;        // reinit: detector-vs-tracked translation
};

struct TrackReport {
  std::size_t frame_index = 0;
  std::size_t state_index = 0;
  PoseMap poses;  // objects that have been acquired at least once
  std::map<ObjectId, ObjectId> module_roots;
  std::set<ObjectId> lost;  // pose carried forward this frame
  double runtime_ms = 0.0;
  std::vector<TrackEvent> events;
};

class InitializationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Single-object pose from one detection; nullopt when it cannot be solved.
using PoseEstimator = std::function<std::optional<RigidTransform>(
    const ObjectModel &model, const Observation &obs,
    const CameraIntrinsics &intr, std::size_t frame_index)>;

// RANSAC PnP over the positive-confidence keypoints.
PoseEstimator MakeRansacEstimator(const RansacParams &params);

class Tracker {
 public:
  Tracker(AssemblyGraph graph, std::vector<ObjectModel> models,
          CameraIntrinsics intr, TrackerConfig config,
          PoseEstimator estimator = {});

  // frame[k] must be the observation of models[k]. Throws
  // InitializationError if no object can be solved.
  TrackReport Initialize(const ObservationFrame &frame);
  TrackReport Update(const ObservationFrame &frame);

  bool initialized() const { return initialized_; }
  std::size_t state_index() const { return state_index_; }
  const PoseMap &poses() const { return poses_; }
  const std::vector<Module> &modules() const { return modules_; }
  std::size_t detector_calls() const { return detector_calls_; }

 private:
  const ObjectModel &Model(const ObjectId &id) const;
  const Observation *Find(const ObservationFrame &frame,
                          const ObjectId &id) const;
  std::optional<RigidTransform> Detect(const ObjectId &id,
                                       const ObservationFrame &frame);
  void Repartition();
  // Root pose implied by the acquired members, if any.
  std::optional<RigidTransform> RootPose(const Module &module) const;
  void AcquireMissing(const ObservationFrame &frame);
  void TrackModules(const ObservationFrame &frame, TrackReport *report);
  void CheckTransitions(std::size_t frame_index, TrackReport *report);
  void Reinitialize(const ObservationFrame &frame, TrackReport *report);
  TrackReport MakeReport(std::size_t frame_index) const;

  AssemblyGraph graph_;
  std::vector<ObjectModel> models_;
  std::map<ObjectId, std::size_t> model_index_;
  std::map<ObjectId, std::vector<Vec3>> keypoints_;
  CameraIntrinsics intr_;
  TrackerConfig config_;
  PoseEstimator estimator_;

  bool initialized_ = false;
  std::size_t state_index_ = 0;
  std::size_t debounce_count_ = 0;
  std::vector<Module> modules_;
  PoseMap poses_;
  std::set<ObjectId> lost_;
  std::size_t detector_calls_ = 0;
};

class SequenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ReportSink = std::function<void(const TrackReport &)>;

// One report per frame. Frames before the first successful initialization
// yield reports without poses. `sink`, if set, sees each report as soon as it
// is produced. Throws SequenceError for an empty sequence or when no frame
// initializes.
std::vector<TrackReport> RunSequence(const std::vector<ObservationFrame> &frames,
                                     const AssemblyGraph &graph,
                                     const std::vector<ObjectModel> &models,
                                     const CameraIntrinsics &intr,
                                     const TrackerConfig &config,
                                     PoseEstimator estimator = {},
                                     const ReportSink &sink = {});

}  // namespace gbot
