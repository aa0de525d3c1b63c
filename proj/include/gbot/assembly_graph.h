#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gbot/geom.h"

namespace gbot {

using ObjectId = std::string;
using PoseMap = std::map<ObjectId, RigidTransform>;

// Config validation failure. field() names the offending JSON path.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string field, const std::string &message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string &field() const { return field_; }

 private:
  std::string field_;
};

// Fixed pose of `child_id` expressed in the frame of `parent_id`.
struct KinematicLink {
  ObjectId parent_id;
  ObjectId child_id;
  RigidTransform relative;
};

// The pair of frame parts whose relative pose ends a state.
struct SwitchCondition {
  ObjectId a_id;
  ObjectId b_id;
  RigidTransform expected_relative;  // pose of b in a's frame
};

struct AssemblyState {
  std::size_t index = 0;
  ObjectId base_id;
  std::vector<KinematicLink> links;
  std::optional<SwitchCondition> switch_pair;  // absent only for the terminal
};

struct ObjectSpec {
  ObjectId id;
  std::string mesh;  // path or builtin mesh name; may be empty
  bool symmetric = false;
};

inline constexpr double kDefaultTransThresholdM = 0.03;
inline constexpr double kDefaultRotThresholdDeg = 10.0;

struct AssemblyGraph {
  std::vector<ObjectSpec> objects;
  std::vector<AssemblyState> states;
  double trans_threshold = kDefaultTransThresholdM;  // meters
  double rot_threshold = kDefaultRotThresholdDeg;    // degrees

  std::vector<ObjectId> ObjectIds() const;
  bool HasObject(std::string_view id) const;
  bool IsTerminal(std::size_t state_index) const {
    return state_index + 1 >= states.size();
  }
  // Throws SchemaError; load_graph calls this after parsing.
  void Validate() const;
};

// Parses and validates the JSON graph config.
AssemblyGraph LoadGraph(std::string_view config_text);
std::string GraphToJson(const AssemblyGraph &graph);

struct SwitchErrors {
  double e_trans = 0.0;  // meters
  double e_rot = 0.0;    // degrees
};

// Relative-pose errors of the switch pair of `state_index`; nullopt if the
// state is terminal or a pose is missing.
std::optional<SwitchErrors> EvaluateSwitch(const AssemblyGraph &graph,
                                           std::size_t state_index,
                                           const PoseMap &poses);

// Next state index if both errors are strictly under the thresholds.
std::optional<std::size_t> CheckTransition(const AssemblyGraph &graph,
                                           std::size_t state_index,
                                           const PoseMap &poses);

struct ModuleMember {
  ObjectId id;
  std::optional<ObjectId> parent_id;  // empty for the root
  RigidTransform link;                // pose in the parent's frame
  RigidTransform from_root;           // pose in the root's frame
};

// A connected component of the link forest, tracked as one rigid body.
// Members are in breadth-first order, root first, so each member's parent
// precedes it.
struct Module {
  ObjectId root_id;
  std::vector<ModuleMember> members;
};

std::vector<Module> ModulePartition(const AssemblyGraph &graph,
                                    std::size_t state_index);

// Every object as its own module.
std::vector<Module> SingletonPartition(const AssemblyGraph &graph);

// Member poses from a root pose by composing along tree edges, so that
// pose(child) == Compose(pose(parent), link) holds bit for bit.
void ExpandModulePoses(const Module &module, const RigidTransform &root_pose,
                       PoseMap *poses);

}  // namespace gbot
