#include "gbot/scene_sim.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <tuple>

namespace gbot {

namespace {

std::string At(std::size_t i) { return "[" + std::to_string(i) + "]"; }

}  // namespace

void SequenceScript::Validate(const AssemblyGraph &graph) const {
  if (n_frames == 0) throw ScriptError("script: n_frames must be >= 1");
  std::set<ObjectId> seen;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const ObjectTrajectory &tr = trajectories[i];
    const std::string where = "script: trajectories" + At(i);
    if (!graph.HasObject(tr.object_id)) {
      throw ScriptError(where + ": unknown object '" + tr.object_id + "'");
    }
    if (!seen.insert(tr.object_id).second) {
      throw ScriptError(where + ": duplicate trajectory for '" + tr.object_id +
                        "'");
    }
    if (tr.waypoints.empty()) throw ScriptError(where + ": no waypoints");
    for (std::size_t w = 0; w < tr.waypoints.size(); ++w) {
      const Waypoint &wp = tr.waypoints[w];
      if (wp.frame >= n_frames) {
        throw ScriptError(where + ".waypoints" + At(w) + ": frame " +
                          std::to_string(wp.frame) + " out of range [0, " +
                          std::to_string(n_frames) + ")");
      }
      if (w > 0 && wp.frame <= tr.waypoints[w - 1].frame) {
        throw ScriptError(where + ".waypoints" + At(w) +
                          ": frames must be strictly increasing");
      }
      if (!wp.pose.IsValid(1e-6)) {
        throw ScriptError(where + ".waypoints" + At(w) + ": invalid pose");
      }
    }
  }
  for (const ObjectSpec &o : graph.objects) {
    if (!seen.count(o.id)) {
      throw ScriptError("script: no trajectory for object '" + o.id + "'");
    }
  }
  for (std::size_t i = 0; i < assembly_events.size(); ++i) {
    const AssemblyEvent &e = assembly_events[i];
    const std::string where = "script: assembly_events" + At(i);
    if (e.frame >= n_frames) throw ScriptError(where + ": frame out of range");
    if (e.state_index == 0 || e.state_index >= graph.states.size()) {
      throw ScriptError(where + ": state_index out of range");
    }
    if (i > 0 && (e.frame <= assembly_events[i - 1].frame ||
                  e.state_index <= assembly_events[i - 1].state_index)) {
      throw ScriptError(where + ": events must increase in frame and state");
    }
  }
  for (std::size_t i = 0; i < occlusion_windows.size(); ++i) {
    const OcclusionWindow &w = occlusion_windows[i];
    const std::string where = "script: occlusion_windows" + At(i);
    if (!graph.HasObject(w.object_id)) {
      throw ScriptError(where + ": unknown object '" + w.object_id + "'");
    }
    if (w.start_frame > w.end_frame || w.end_frame >= n_frames) {
      throw ScriptError(where + ": invalid frame range");
    }
  }
}

namespace {

RigidTransform Interpolate(const std::vector<Waypoint> &wps,
                           std::size_t frame) {
  if (frame <= wps.front().frame) return wps.front().pose;
  if (frame >= wps.back().frame) return wps.back().pose;
  auto hi = std::upper_bound(
      wps.begin(), wps.end(), frame,
      [](std::size_t f, const Waypoint &w) { return f < w.frame; });
  const Waypoint &b = *hi;
  const Waypoint &a = *(hi - 1);
  if (frame == a.frame) return a.pose;
  const double s = static_cast<double>(frame - a.frame) /
                   static_cast<double>(b.frame - a.frame);
  RigidTransform out;
  out.translation =
      a.pose.translation + s * (b.pose.translation - a.pose.translation);
  RigidTransform delta;
  delta.rotation = a.pose.rotation.transpose() * b.pose.rotation;
  Vec3 omega;
  try {
    omega = LogTransform(delta).angular;
  } catch (const DegenerateRotationError &) {
    throw ScriptError("script: waypoints at frames " + std::to_string(a.frame) +
                      " and " + std::to_string(b.frame) +
                      " differ by a half turn");
  }
  out.rotation = a.pose.rotation * ExpSo3(s * omega);
  return out;
}

struct Slave {
  ObjectId parent;
  RigidTransform relative;
  std::size_t from_frame;
};

// Part b of each event follows part a from the event frame on.
std::map<ObjectId, Slave> Slaves(const SequenceScript &script,
                                 const AssemblyGraph &graph) {
  std::map<ObjectId, Slave> slaves;
  for (const AssemblyEvent &e : script.assembly_events) {
    const SwitchCondition &sw = *graph.states[e.state_index - 1].switch_pair;
    slaves[sw.b_id] = {sw.a_id, sw.expected_relative, e.frame};
  }
  return slaves;
}

PoseMap FramePoses(const std::map<ObjectId, const ObjectTrajectory *> &tracks,
                   const std::map<ObjectId, Slave> &slaves,
                   std::size_t frame) {
  PoseMap poses;
  std::function<const RigidTransform &(const ObjectId &, std::size_t)> resolve =
      [&](const ObjectId &id, std::size_t depth) -> const RigidTransform & {
    auto done = poses.find(id);
    if (done != poses.end()) return done->second;
    if (depth > tracks.size()) throw ScriptError("script: cyclic assembly");
    auto s = slaves.find(id);
    if (s != slaves.end() && frame >= s->second.from_frame) {
      const RigidTransform &parent = resolve(s->second.parent, depth + 1);
      return poses[id] = Compose(parent, s->second.relative);
    }
    return poses[id] = Interpolate(tracks.at(id)->waypoints, frame);
  };
  for (const auto &[id, track] : tracks) resolve(id, 0);
  return poses;
}

std::map<ObjectId, const ObjectTrajectory *> TrackIndex(
    const SequenceScript &script) {
  std::map<ObjectId, const ObjectTrajectory *> tracks;
  for (const ObjectTrajectory &t : script.trajectories) {
    tracks[t.object_id] = &t;
  }
  return tracks;
}

}  // namespace

std::vector<GroundTruthFrame> GenerateGroundTruth(const SequenceScript &script,
                                                  const AssemblyGraph &graph) {
  script.Validate(graph);
  const auto tracks = TrackIndex(script);
  const auto slaves = Slaves(script, graph);
  std::vector<GroundTruthFrame> frames(script.n_frames);
  for (std::size_t f = 0; f < script.n_frames; ++f) {
    frames[f].frame_index = f;
    frames[f].poses = FramePoses(tracks, slaves, f);
  }
  return frames;
}

std::vector<ObservationFrame> GenerateObservations(
    const std::vector<GroundTruthFrame> &gt_frames,
    const std::vector<ObjectModel> &models, const CameraIntrinsics &intr,
    Condition condition, std::uint64_t seed,
    const std::vector<OcclusionWindow> &occlusion_windows) {
  NoiseProfile profile = ConditionProfile(condition);
  profile.seed = seed;
  std::vector<ObservationFrame> out(gt_frames.size());
  for (std::size_t f = 0; f < gt_frames.size(); ++f) {
    const GroundTruthFrame &gt = gt_frames[f];
    out[f].reserve(models.size());
    for (const ObjectModel &model : models) {
      const bool hidden = std::any_of(
          occlusion_windows.begin(), occlusion_windows.end(),
          [&](const OcclusionWindow &w) {
            return w.object_id == model.id && w.Contains(gt.frame_index);
          });
      if (hidden) {
        Observation obs;
        obs.object_id = model.id;
        obs.frame_index = gt.frame_index;
        out[f].push_back(std::move(obs));
        continue;
      }
      out[f].push_back(SimulateObservation(model, gt.poses.at(model.id), intr,
                                           profile, gt.frame_index));
    }
  }
  return out;
}

std::vector<ObservationFrame> GenerateObservations(
    const std::vector<GroundTruthFrame> &gt_frames,
    const std::vector<ObjectModel> &models, const CameraIntrinsics &intr,
    const SequenceScript &script) {
  return GenerateObservations(gt_frames, models, intr, script.condition,
                              script.seed, script.occlusion_windows);
}

// ---------------------------------------------------------------------------
// Builtin assets

namespace {

// Surface grid of an axis-aligned box centered at `center`, n cells per edge.
Mesh BoxMesh(const Vec3 &size, const Vec3 &center, int n) {
  Mesh mesh;
  std::map<std::tuple<int, int, int>, int> index;
  auto vertex = [&](int i, int j, int k) {
    auto key = std::make_tuple(i, j, k);
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    const Vec3 unit(static_cast<double>(i) / n - 0.5,
                    static_cast<double>(j) / n - 0.5,
                    static_cast<double>(k) / n - 0.5);
    mesh.vertices.push_back(center + unit.cwiseProduct(size));
    const int id = static_cast<int>(mesh.vertices.size()) - 1;
    index.emplace(key, id);
    return id;
  };
  // For each axis and side, a grid over the two remaining axes.
  for (int axis = 0; axis < 3; ++axis) {
    for (int side = 0; side <= n; side += n) {
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          auto corner = [&](int da, int db) {
            int c[3];
            c[axis] = side;
            c[(axis + 1) % 3] = a + da;
            c[(axis + 2) % 3] = b + db;
            return vertex(c[0], c[1], c[2]);
          };
          const int v00 = corner(0, 0), v10 = corner(1, 0);
          const int v01 = corner(0, 1), v11 = corner(1, 1);
          if (side == 0) {
            mesh.faces.push_back({v00, v11, v10});
            mesh.faces.push_back({v00, v01, v11});
          } else {
            mesh.faces.push_back({v00, v10, v11});
            mesh.faces.push_back({v00, v11, v01});
          }
        }
      }
    }
  }
  return mesh;
}

void Append(Mesh *dst, const Mesh &src) {
  const int offset = static_cast<int>(dst->vertices.size());
  dst->vertices.insert(dst->vertices.end(), src.vertices.begin(),
                       src.vertices.end());
  for (const auto &f : src.faces) {
    dst->faces.push_back({f[0] + offset, f[1] + offset, f[2] + offset});
  }
}

// Two plates meeting at a right angle along the x edge.
Mesh BracketMesh(double length, double width, double thickness) {
  Mesh mesh = BoxMesh({length, width, thickness}, Vec3::Zero(), 3);
  Append(&mesh, BoxMesh({thickness, width, 0.6 * length},
                        {0.5 * (length - thickness), 0.0,
                         0.5 * thickness + 0.3 * length},
                        3));
  return mesh;
}

// Closed cylinder along z.
Mesh CylinderMesh(double radius, double height, int segments, int rings) {
  Mesh mesh;
  for (int r = 0; r < rings; ++r) {
    const double z = height * (static_cast<double>(r) / (rings - 1) - 0.5);
    for (int s = 0; s < segments; ++s) {
      const double a = 2.0 * kPi * s / segments;
      mesh.vertices.push_back({radius * std::cos(a), radius * std::sin(a), z});
    }
  }
  const int bottom = static_cast<int>(mesh.vertices.size());
  mesh.vertices.push_back({0.0, 0.0, -0.5 * height});
  mesh.vertices.push_back({0.0, 0.0, 0.5 * height});
  const int top = bottom + 1;
  for (int r = 0; r + 1 < rings; ++r) {
    for (int s = 0; s < segments; ++s) {
      const int a = r * segments + s;
      const int b = r * segments + (s + 1) % segments;
      mesh.faces.push_back({a, b, b + segments});
      mesh.faces.push_back({a, b + segments, a + segments});
    }
  }
  for (int s = 0; s < segments; ++s) {
    const int n = (s + 1) % segments;
    mesh.faces.push_back({bottom, n, s});
    const int off = (rings - 1) * segments;
    mesh.faces.push_back({top, off + s, off + n});
  }
  return mesh;
}

enum class Shape { kBracket, kBlock, kCylinder };

struct PartDef {
  const char *id;
  Shape shape;
  double a, b, c;  // bracket: length, width, thickness; block: size;
                   // cylinder: radius, height
  bool symmetric;
};

struct StepDef {
  const char *parent;
  const char *child;
  Vec3 offset;
  double yaw_deg;
  double tilt_deg;
};

struct AssetDef {
  const char *name;
  const char *base;
  std::vector<PartDef> parts;
  std::vector<StepDef> steps;
};

const std::vector<AssetDef> &AssetDefs() {
  static const std::vector<AssetDef> defs = {
      {"hobby_corner_clamp",
       "clamp_base",
       {{"clamp_base", Shape::kBracket, 0.09, 0.05, 0.015, false},
        {"clamp_bolt", Shape::kCylinder, 0.007, 0.07, 0, true},
        {"clamp_jaw", Shape::kBracket, 0.06, 0.04, 0.012, false}},
       {{"clamp_base", "clamp_jaw", {0.03, 0.02, 0.015}, 90, 0},
        {"clamp_jaw", "clamp_bolt", {0.0, 0.03, 0.02}, 0, 90}}},
      {"geared_caliper",
       "fix",
       {{"fix", Shape::kBracket, 0.12, 0.03, 0.01, false},
        {"move_bottom", Shape::kBlock, 0.05, 0.03, 0.012, false},
        {"move_top_vernier", Shape::kBracket, 0.05, 0.025, 0.008, false}},
       {{"fix", "move_bottom", {0.04, 0.0, 0.012}, 0, 0},
        {"move_bottom", "move_top_vernier", {0.0, 0.01, 0.012}, 180, 0}}},
      {"nano_chuck",
       "base",
       {{"balljoint", Shape::kCylinder, 0.015, 0.02, 0, true},
        {"base", Shape::kBlock, 0.08, 0.08, 0.02, false},
        {"headplate", Shape::kCylinder, 0.025, 0.008, 0, true},
        {"nut", Shape::kCylinder, 0.008, 0.006, 0, true},
        {"screw", Shape::kCylinder, 0.004, 0.04, 0, true},
        {"vise_base", Shape::kBracket, 0.07, 0.04, 0.015, false},
        {"vise_screw", Shape::kCylinder, 0.004, 0.05, 0, true},
        {"vise_slider", Shape::kBlock, 0.03, 0.03, 0.015, false}},
       {{"base", "vise_base", {0.0, 0.0, 0.018}, 0, 0},
        {"vise_base", "vise_slider", {0.01, 0.0, 0.015}, 0, 0},
        {"vise_base", "vise_screw", {-0.02, 0.0, 0.02}, 0, 90},
        {"base", "balljoint", {0.03, 0.03, 0.02}, 0, 0},
        {"balljoint", "headplate", {0.0, 0.0, 0.014}, 0, 0},
        {"headplate", "screw", {0.0, 0.0, 0.024}, 0, 0},
        {"screw", "nut", {0.0, 0.0, 0.012}, 30, 0}}},
      {"hand_screw_clamp",
       "jaw_1",
       {{"jaw_1", Shape::kBracket, 0.10, 0.025, 0.02, false},
        {"jaw_2", Shape::kBracket, 0.10, 0.025, 0.02, false},
        {"knob_1", Shape::kCylinder, 0.012, 0.025, 0, true},
        {"knob_2", Shape::kCylinder, 0.012, 0.025, 0, true},
        {"pad", Shape::kBlock, 0.03, 0.02, 0.006, false},
        {"thread_1", Shape::kCylinder, 0.005, 0.08, 0, true},
        {"thread_2", Shape::kCylinder, 0.005, 0.08, 0, true}},
       {{"jaw_1", "pad", {0.03, 0.0, 0.013}, 0, 0},
        {"jaw_1", "thread_1", {-0.02, 0.0, 0.0}, 0, 90},
        {"jaw_1", "thread_2", {0.02, 0.0, 0.0}, 0, 90},
        {"jaw_1", "jaw_2", {0.0, 0.0, 0.05}, 180, 0},
        {"thread_1", "knob_1", {0.0, 0.0, 0.05}, 0, 0},
        {"thread_2", "knob_2", {0.0, 0.0, 0.05}, 0, 0}}},
      {"liftpod",
       "base_plate",
       {{"arm_first", Shape::kCylinder, 0.005, 0.07, 0, true},
        {"arm_last", Shape::kCylinder, 0.004, 0.06, 0, true},
        {"bar", Shape::kCylinder, 0.006, 0.10, 0, true},
        {"base_plate", Shape::kCylinder, 0.04, 0.01, 0, true},
        {"clamp_frame", Shape::kBracket, 0.05, 0.03, 0.01, false},
        {"clamp_slider", Shape::kBlock, 0.025, 0.02, 0.012, false},
        {"sleeve", Shape::kCylinder, 0.01, 0.03, 0, true}},
       {{"base_plate", "sleeve", {0.0, 0.0, 0.02}, 0, 0},
        {"sleeve", "bar", {0.0, 0.0, 0.06}, 0, 0},
        {"bar", "arm_first", {0.0, 0.0, 0.05}, 0, 90},
        {"arm_first", "arm_last", {0.0, 0.0, 0.06}, 0, 0},
        {"bar", "clamp_frame", {0.02, 0.0, 0.0}, 90, 0},
        {"clamp_frame", "clamp_slider", {0.015, 0.0, 0.01}, 0, 0}}},
  };
  return defs;
}

Mesh PartMesh(const PartDef &p) {
  switch (p.shape) {
    case Shape::kBracket:
      return BracketMesh(p.a, p.b, p.c);
    case Shape::kBlock:
      return BoxMesh({p.a, p.b, p.c}, Vec3::Zero(), 4);
    case Shape::kCylinder:
      return CylinderMesh(p.a, p.b, 16, 5);
  }
  return {};
}

RigidTransform LinkTransform(const StepDef &s) {
  RigidTransform t;
  t.rotation = RotZ(DegToRad(s.yaw_deg)) * RotX(DegToRad(s.tilt_deg));
  t.translation = s.offset;
  return t;
}

}  // namespace

std::vector<std::string> BuiltinAssetNames() {
  std::vector<std::string> names;
  for (const AssetDef &d : AssetDefs()) names.emplace_back(d.name);
  return names;
}

BuiltinAsset MakeBuiltinAsset(std::string_view name) {
  const AssetDef *def = nullptr;
  for (const AssetDef &d : AssetDefs()) {
    if (name == d.name) def = &d;
  }
  if (def == nullptr) {
    throw std::invalid_argument("unknown asset '" + std::string(name) + "'");
  }
  BuiltinAsset asset;
  asset.name = def->name;
  for (const PartDef &p : def->parts) {
    asset.models.push_back(MakeObjectModel(p.id, PartMesh(p), p.symmetric));
    asset.graph.objects.push_back({p.id, std::string("builtin:") + p.id,
                                   p.symmetric});
  }
  std::vector<KinematicLink> links;
  for (std::size_t s = 0; s <= def->steps.size(); ++s) {
    AssemblyState state;
    state.index = s;
    state.base_id = def->base;
    state.links = links;
    if (s < def->steps.size()) {
      const StepDef &step = def->steps[s];
      state.switch_pair =
          SwitchCondition{step.parent, step.child, LinkTransform(step)};
      links.push_back({step.parent, step.child, LinkTransform(step)});
    }
    asset.graph.states.push_back(std::move(state));
  }
  asset.graph.Validate();
  asset.script = MakeDefaultScript(asset, ScriptOptions{});
  return asset;
}

namespace {

RigidTransform MakePose(const Mat3 &r, const Vec3 &t) {
  RigidTransform p;
  p.rotation = r;
  p.translation = t;
  return p;
}

ObjectTrajectory &TrackOf(SequenceScript *script, const ObjectId &id) {
  for (ObjectTrajectory &t : script->trajectories) {
    if (t.object_id == id) return t;
  }
  script->trajectories.push_back({id, {}});
  return script->trajectories.back();
}

void AddWaypoint(ObjectTrajectory *track, std::size_t frame,
                 const RigidTransform &pose) {
  if (!track->waypoints.empty() && track->waypoints.back().frame >= frame) {
    track->waypoints.back().pose = pose;
    return;
  }
  track->waypoints.push_back({frame, pose});
}

}  // namespace

SequenceScript MakeDefaultScript(const BuiltinAsset &asset,
                                 const ScriptOptions &options) {
  const AssemblyGraph &graph = asset.graph;
  const std::size_t n_steps = graph.states.size() - 1;
  const std::size_t frames = options.n_frames;
  const std::size_t margin = std::max<std::size_t>(2, frames / 20);
  const std::size_t tail =
      std::max(frames / 4, options.roster_occlusion_frames + 10);
  if (frames < margin + tail + 20 * n_steps) {
    throw ScriptError("script: " + std::to_string(frames) +
                      " frames are too few for " + asset.name);
  }
  const std::size_t step_len = (frames - margin - tail) / std::max<std::size_t>(
                                                             n_steps, 1);

  SequenceScript script;
  script.asset = asset.name;
  script.n_frames = frames;
  script.condition = options.condition;
  script.seed = options.seed;

  const ObjectId base = graph.states[0].base_id;
  const RigidTransform home = MakePose(
      RotX(DegToRad(-25.0)) * RotZ(DegToRad(15.0)), Vec3(0.0, 0.0, 0.65));
  AddWaypoint(&TrackOf(&script, base), 0, home);

  // Where the growing assembly is set down after each step, relative to
  // home. Consecutive stations are at least 15 cm apart.
  const Vec3 shifts[] = {{0.15, 0.05, 0.02},
                         {-0.12, 0.08, -0.02},
                         {0.05, -0.10, 0.03},
                         {-0.14, -0.04, 0.0}};
  const Vec3 axes[] = {Vec3::UnitZ(), Vec3::UnitY(), -Vec3::UnitZ(),
                       -Vec3::UnitY()};
  RigidTransform station = home;

  const std::size_t pre_hold = std::min<std::size_t>(6, step_len / 5);
  for (std::size_t s = 0; s < n_steps; ++s) {
    const SwitchCondition &sw = *graph.states[s].switch_pair;
    const std::size_t start = margin + s * step_len;
    const std::size_t event = start + std::max<std::size_t>(4, step_len * 3 / 10);
    const std::size_t carry = event + pre_hold;
    const std::size_t carried = carry + std::max<std::size_t>(3, step_len / 4);
    const std::size_t back = start + step_len;

    // Target of the moving part at the event frame.
    AddWaypoint(&TrackOf(&script, base), event, station);
    SequenceScript partial = script;
    // Parts without a trajectory yet do not affect the partner's pose; give
    // them a placeholder so FramePoses can resolve every object.
    for (const ObjectSpec &o : graph.objects) {
      bool present = false;
      for (const ObjectTrajectory &t : partial.trajectories) {
        present |= t.object_id == o.id;
      }
      if (!present) partial.trajectories.push_back({o.id, {{0, home}}});
    }
    const PoseMap at_event = FramePoses(TrackIndex(partial),
                                        Slaves(partial, graph), event);
    const RigidTransform target =
        Compose(at_event.at(sw.a_id), sw.expected_relative);

    // Rest pose on a ring around the assembly; the approach keeps a yaw
    // offset of at least 25 degrees until the snap, so the switch cannot
    // fire early.
    const double angle = 2.0 * kPi * static_cast<double>(s) /
                             static_cast<double>(std::max<std::size_t>(n_steps, 1)) +
                         0.4;
    const RigidTransform rest = MakePose(
        target.rotation * RotZ(DegToRad(70.0)),
        Vec3(0.24 * std::cos(angle), 0.14 * std::sin(angle), 0.66));
    const RigidTransform pre =
        Compose(target, MakePose(RotZ(DegToRad(25.0)), Vec3(0.0, 0.06, 0.0)));
    ObjectTrajectory &child_track = TrackOf(&script, sw.b_id);
    AddWaypoint(&child_track, 0, rest);
    AddWaypoint(&child_track, start, rest);
    AddWaypoint(&child_track, event - 1, pre);
    AddWaypoint(&child_track, event, target);
    script.assembly_events.push_back({event, s + 1});

    // Settle, then carry the assembly quickly to its next station.
    ObjectTrajectory &bt = TrackOf(&script, base);
    AddWaypoint(&bt, carry, station);
    station = MakePose(
        home.rotation * RotationAboutAxis(axes[s % 4], DegToRad(30.0)),
        home.translation + shifts[s % 4]);
    AddWaypoint(&bt, carried, station);
    AddWaypoint(&bt, back, station);

    if (options.condition == Condition::kHand &&
        options.child_occlusion_frames > 0) {
      script.occlusion_windows.push_back(
          {sw.b_id, carry,
           std::min(frames - 1, carry + options.child_occlusion_frames - 1)});
    }
  }

  // Closing inspection of the finished assembly.
  const std::size_t t0 = margin + n_steps * step_len;
  ObjectTrajectory &bt = TrackOf(&script, base);
  if (options.roster_occlusion_frames > 0) {
    const std::size_t t1 = t0 + options.roster_occlusion_frames - 1;
    // The assembly is turned over and moved across while nothing is seen.
    const double side = station.translation.x() > home.translation.x() ? -1 : 1;
    const RigidTransform flipped = MakePose(
        station.rotation *
            RotationAboutAxis(Vec3(0.3, 1.0, 0.2).normalized(), DegToRad(120.0)),
        home.translation + Vec3(0.12 * side, 0.04, 0.04));
    AddWaypoint(&bt, t0, station);
    AddWaypoint(&bt, t1, flipped);
    AddWaypoint(&bt, frames - 1,
                MakePose(flipped.rotation * RotZ(DegToRad(-20.0)),
                         flipped.translation + Vec3(-0.05 * side, 0.0, 0.0)));
    for (const ObjectSpec &o : graph.objects) {
      script.occlusion_windows.push_back({o.id, t0, t1});
    }
  } else {
    const std::size_t third = (frames - 1 - t0) / 3;
    AddWaypoint(&bt, t0 + third,
                MakePose(station.rotation * RotY(DegToRad(50.0)),
                         home.translation + Vec3(-0.10, 0.05, 0.05)));
    AddWaypoint(&bt, t0 + 2 * third,
                MakePose(station.rotation * RotX(DegToRad(-40.0)),
                         home.translation + Vec3(0.08, -0.04, 0.0)));
    AddWaypoint(&bt, frames - 1, station);
  }
  std::sort(script.occlusion_windows.begin(), script.occlusion_windows.end(),
            [](const OcclusionWindow &a, const OcclusionWindow &b) {
              return std::tie(a.start_frame, a.object_id) <
                     std::tie(b.start_frame, b.object_id);
            });
  // Order trajectories like the graph's roster.
  std::vector<ObjectTrajectory> ordered;
  for (const ObjectSpec &o : graph.objects) {
    ordered.push_back(TrackOf(&script, o.id));
  }
  script.trajectories = std::move(ordered);
  script.Validate(graph);
  return script;
}

}  // namespace gbot
