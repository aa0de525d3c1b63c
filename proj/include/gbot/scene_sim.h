#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gbot/assembly_graph.h"
#include "gbot/detector_sim.h"
#include "gbot/geom.h"
#include "gbot/keypoints.h"

namespace gbot {

class ScriptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Waypoint {
  std::size_t frame = 0;
  RigidTransform pose;
};

struct ObjectTrajectory {
  ObjectId object_id;
  std::vector<Waypoint> waypoints;  // sorted by frame
};

// At `frame` the switch pair of state `state_index - 1` reaches its expected
// relative pose; from then on part b follows part a rigidly.
struct AssemblyEvent {
  std::size_t frame = 0;
  std::size_t state_index = 0;
};

// Inclusive frame range during which an object is fully hidden.
struct OcclusionWindow {
  ObjectId object_id;
  std::size_t start_frame = 0;
  std::size_t end_frame = 0;

  bool Contains(std::size_t frame) const {
    return frame >= start_frame && frame <= end_frame;
  }
};

struct SequenceScript {
  std::string asset;
  std::size_t n_frames = 0;
  std::vector<ObjectTrajectory> trajectories;
  std::vector<AssemblyEvent> assembly_events;
  std::vector<OcclusionWindow> occlusion_windows;
  Condition condition = Condition::kNormal;
  std::uint64_t seed = 0;

  // Throws ScriptError.
  void Validate(const AssemblyGraph &graph) const;
};

struct GroundTruthFrame {
  std::size_t frame_index = 0;
  PoseMap poses;
};

// Translation is interpolated linearly between waypoints, rotation at
// constant angular velocity; poses hold before the first and after the last
// waypoint. Assembly events slave the switched part to its partner.
std::vector<GroundTruthFrame> GenerateGroundTruth(const SequenceScript &script,
                                                  const AssemblyGraph &graph);

// frames[f][k] is the observation of models[k] at frame f.
using ObservationFrame = std::vector<Observation>;

std::vector<ObservationFrame> GenerateObservations(
    const std::vector<GroundTruthFrame> &gt_frames,
    const std::vector<ObjectModel> &models, const CameraIntrinsics &intr,
    Condition condition, std::uint64_t seed,
    const std::vector<OcclusionWindow> &occlusion_windows = {});

std::vector<ObservationFrame> GenerateObservations(
    const std::vector<GroundTruthFrame> &gt_frames,
    const std::vector<ObjectModel> &models, const CameraIntrinsics &intr,
    const SequenceScript &script);

struct ScriptOptions {
  std::size_t n_frames = 300;
  Condition condition = Condition::kNormal;
  std::uint64_t seed = 0;
  // Frames each freshly assembled part stays hidden (hand condition only).
  std::size_t child_occlusion_frames = 30;
  // Hides every part for this many frames during the closing inspection
  // motion; 0 disables.
  std::size_t roster_occlusion_frames = 0;
};

struct BuiltinAsset {
  std::string name;
  std::vector<ObjectModel> models;
  AssemblyGraph graph;
  SequenceScript script;  // default script (300 frames, normal condition)
};

std::vector<std::string> BuiltinAssetNames();

// Throws std::invalid_argument for unknown names.
BuiltinAsset MakeBuiltinAsset(std::string_view name);

// Assembly choreography for an asset: parts rest around the base, approach
// one at a time in graph order and snap into place, and the growing assembly
// is moved between steps and during a closing inspection phase.
SequenceScript MakeDefaultScript(const BuiltinAsset &asset,
                                 const ScriptOptions &options);

}  // namespace gbot
