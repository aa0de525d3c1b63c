#include "gbot/serialization.h"

#include <cmath>
#include <istream>
#include <ostream>

namespace gbot {

using nlohmann::json;

namespace {

const json &Require(const json &j, const char *key, const std::string &field) {
  if (!j.is_object() || !j.contains(key)) {
    throw SchemaError(field + "." + key, "missing");
  }
  return j.at(key);
}

template <typename T>
T Get(const json &j, const char *key, const std::string &field) {
  const json &v = Require(j, key, field);
  try {
    return v.get<T>();
  } catch (const json::exception &) {
    throw SchemaError(field + "." + key, "wrong type");
  }
}

json Parse(std::string_view text, const std::string &what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error &e) {
    throw SchemaError(what, std::string("invalid JSON: ") + e.what());
  }
}

template <typename F>
void ForEachLine(std::istream &in, F &&f) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    f(line);
  }
}

}  // namespace

json PoseToJson(const RigidTransform &pose) {
  const Eigen::Vector4d q = pose.QuaternionWxyz();
  return {{"t", {pose.translation.x(), pose.translation.y(),
                 pose.translation.z()}},
          {"q", {q[0], q[1], q[2], q[3]}}};
}

RigidTransform PoseFromJson(const json &j, const std::string &field) {
  const json &t = Require(j, "t", field);
  const json &q = Require(j, "q", field);
  if (!t.is_array() || t.size() != 3) {
    throw SchemaError(field + ".t", "expected [x, y, z]");
  }
  if (!q.is_array() || q.size() != 4) {
    throw SchemaError(field + ".q", "expected [w, x, y, z]");
  }
  Vec3 tv;
  Eigen::Vector4d qv;
  try {
    for (int i = 0; i < 3; ++i) tv[i] = t[i].get<double>();
    for (int i = 0; i < 4; ++i) qv[i] = q[i].get<double>();
  } catch (const json::exception &) {
    throw SchemaError(field, "non-numeric pose entry");
  }
  if (!tv.allFinite() || !qv.allFinite()) {
    throw SchemaError(field, "non-finite pose entry");
  }
  if (std::abs(qv.norm() - 1.0) > 1e-6) {
    throw SchemaError(field + ".q", "quaternion is not unit length");
  }
  return RigidTransform::FromQuaternion(qv, tv);
}

std::string ScriptToJson(const SequenceScript &script) {
  json j;
  j["asset"] = script.asset;
  j["n_frames"] = script.n_frames;
  j["condition"] = ConditionName(script.condition);
  j["seed"] = script.seed;
  j["trajectories"] = json::array();
  for (const ObjectTrajectory &t : script.trajectories) {
    json jt;
    jt["object"] = t.object_id;
    jt["waypoints"] = json::array();
    for (const Waypoint &w : t.waypoints) {
      json jw = PoseToJson(w.pose);
      jw["frame"] = w.frame;
      jt["waypoints"].push_back(std::move(jw));
    }
    j["trajectories"].push_back(std::move(jt));
  }
  j["assembly_events"] = json::array();
  for (const AssemblyEvent &e : script.assembly_events) {
    j["assembly_events"].push_back({{"frame", e.frame}, {"state", e.state_index}});
  }
  j["occlusion_windows"] = json::array();
  for (const OcclusionWindow &w : script.occlusion_windows) {
    j["occlusion_windows"].push_back(
        {{"object", w.object_id}, {"start", w.start_frame}, {"end", w.end_frame}});
  }
  return j.dump(2) + "\n";
}

SequenceScript ParseScript(std::string_view text) {
  const json j = Parse(text, "script");
  SequenceScript s;
  s.asset = Get<std::string>(j, "asset", "$");
  s.n_frames = Get<std::size_t>(j, "n_frames", "$");
  try {
    s.condition = ParseCondition(Get<std::string>(j, "condition", "$"));
  } catch (const std::invalid_argument &e) {
    throw SchemaError("$.condition", e.what());
  }
  s.seed = Get<std::uint64_t>(j, "seed", "$");
  const json &trajs = Require(j, "trajectories", "$");
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    const std::string f = "$.trajectories[" + std::to_string(i) + "]";
    ObjectTrajectory t;
    t.object_id = Get<std::string>(trajs[i], "object", f);
    const json &wps = Require(trajs[i], "waypoints", f);
    for (std::size_t w = 0; w < wps.size(); ++w) {
      const std::string fw = f + ".waypoints[" + std::to_string(w) + "]";
      t.waypoints.push_back(
          {Get<std::size_t>(wps[w], "frame", fw), PoseFromJson(wps[w], fw)});
    }
    s.trajectories.push_back(std::move(t));
  }
  if (j.contains("assembly_events")) {
    const json &events = j["assembly_events"];
    for (std::size_t i = 0; i < events.size(); ++i) {
      const std::string f = "$.assembly_events[" + std::to_string(i) + "]";
      s.assembly_events.push_back({Get<std::size_t>(events[i], "frame", f),
                                   Get<std::size_t>(events[i], "state", f)});
    }
  }
  if (j.contains("occlusion_windows")) {
    const json &windows = j["occlusion_windows"];
    for (std::size_t i = 0; i < windows.size(); ++i) {
      const std::string f = "$.occlusion_windows[" + std::to_string(i) + "]";
      s.occlusion_windows.push_back({Get<std::string>(windows[i], "object", f),
                                     Get<std::size_t>(windows[i], "start", f),
                                     Get<std::size_t>(windows[i], "end", f)});
    }
  }
  return s;
}

std::string GroundTruthToJsonLine(const GroundTruthFrame &frame) {
  json j;
  j["frame"] = frame.frame_index;
  j["poses"] = json::array();
  for (const auto &[id, pose] : frame.poses) {
    json jp = PoseToJson(pose);
    jp["id"] = id;
    j["poses"].push_back(std::move(jp));
  }
  return j.dump();
}

GroundTruthFrame ParseGroundTruthLine(std::string_view line) {
  const json j = Parse(line, "ground truth");
  GroundTruthFrame frame;
  frame.frame_index = Get<std::size_t>(j, "frame", "$");
  const json &poses = Require(j, "poses", "$");
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const std::string f = "$.poses[" + std::to_string(i) + "]";
    frame.poses[Get<std::string>(poses[i], "id", f)] = PoseFromJson(poses[i], f);
  }
  return frame;
}

void WriteGroundTruth(std::ostream &out,
                      const std::vector<GroundTruthFrame> &frames) {
  for (const GroundTruthFrame &f : frames) out << GroundTruthToJsonLine(f) << '\n';
}

std::vector<GroundTruthFrame> ReadGroundTruth(std::istream &in) {
  std::vector<GroundTruthFrame> frames;
  ForEachLine(in, [&](const std::string &line) {
    frames.push_back(ParseGroundTruthLine(line));
  });
  return frames;
}

std::string ObservationsToJsonLine(const ObservationFrame &frame,
                                   std::size_t frame_index) {
  json j;
  j["frame"] = frame_index;
  j["observations"] = json::array();
  for (const Observation &o : frame) {
    json jo;
    jo["id"] = o.object_id;
    jo["detected"] = o.detected;
    jo["keypoints"] = json::array();
    for (const DetectedKeypoint &k : o.keypoints) {
      jo["keypoints"].push_back({k.pixel.x(), k.pixel.y(), k.confidence});
    }
    j["observations"].push_back(std::move(jo));
  }
  return j.dump();
}

ObservationFrame ParseObservationsLine(std::string_view line) {
  const json j = Parse(line, "observations");
  const std::size_t frame_index = Get<std::size_t>(j, "frame", "$");
  const json &list = Require(j, "observations", "$");
  ObservationFrame frame;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string f = "$.observations[" + std::to_string(i) + "]";
    Observation o;
    o.object_id = Get<std::string>(list[i], "id", f);
    o.detected = Get<bool>(list[i], "detected", f);
    o.frame_index = frame_index;
    const json &kps = Require(list[i], "keypoints", f);
    for (std::size_t k = 0; k < kps.size(); ++k) {
      if (!kps[k].is_array() || kps[k].size() != 3) {
        throw SchemaError(f + ".keypoints[" + std::to_string(k) + "]",
                          "expected [u, v, confidence]");
      }
      DetectedKeypoint kp;
      kp.pixel = {kps[k][0].get<double>(), kps[k][1].get<double>()};
      kp.confidence = kps[k][2].get<double>();
      o.keypoints.push_back(kp);
    }
    frame.push_back(std::move(o));
  }
  return frame;
}

void WriteObservations(std::ostream &out,
                       const std::vector<ObservationFrame> &frames) {
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const std::size_t index = frames[f].empty() ? f : frames[f][0].frame_index;
    out << ObservationsToJsonLine(frames[f], index) << '\n';
  }
}

std::vector<ObservationFrame> ReadObservations(std::istream &in) {
  std::vector<ObservationFrame> frames;
  ForEachLine(in, [&](const std::string &line) {
    frames.push_back(ParseObservationsLine(line));
  });
  return frames;
}

json ReportToJson(const TrackReport &report, bool include_timing) {
  json j;
  j["frame"] = report.frame_index;
  j["state"] = report.state_index;
  j["runtime_ms"] = include_timing ? report.runtime_ms : 0.0;
  j["poses"] = json::array();
  for (const auto &[id, pose] : report.poses) {
    json jp = PoseToJson(pose);
    jp["id"] = id;
    auto root = report.module_roots.find(id);
    jp["root"] = root != report.module_roots.end() ? root->second : id;
    jp["tracked"] = !report.lost.count(id);
    j["poses"].push_back(std::move(jp));
  }
  j["events"] = json::array();
  for (const TrackEvent &e : report.events) {
    j["events"].push_back({{"type", EventTypeName(e.type)},
                           {"frame", e.frame_index},
                           {"object", e.object_id},
                           {"state", e.state_index},
                           {"offset_m", e.offset_m}});
  }
  return j;
}

TrackReport ReportFromJson(const json &j) {
  TrackReport r;
  r.frame_index = Get<std::size_t>(j, "frame", "$");
  r.state_index = Get<std::size_t>(j, "state", "$");
  r.runtime_ms = Get<double>(j, "runtime_ms", "$");
  const json &poses = Require(j, "poses", "$");
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const std::string f = "$.poses[" + std::to_string(i) + "]";
    const std::string id = Get<std::string>(poses[i], "id", f);
    r.poses[id] = PoseFromJson(poses[i], f);
    r.module_roots[id] = Get<std::string>(poses[i], "root", f);
    if (!Get<bool>(poses[i], "tracked", f)) r.lost.insert(id);
  }
  const json &events = Require(j, "events", "$");
  for (std::size_t i = 0; i < events.size(); ++i) {
    const std::string f = "$.events[" + std::to_string(i) + "]";
    TrackEvent e;
    try {
      e.type = ParseEventType(Get<std::string>(events[i], "type", f));
    } catch (const std::invalid_argument &ex) {
      throw SchemaError(f + ".type", ex.what());
    }
    e.frame_index = Get<std::size_t>(events[i], "frame", f);
    e.object_id = Get<std::string>(events[i], "object", f);
    e.state_index = Get<std::size_t>(events[i], "state", f);
    e.offset_m = Get<double>(events[i], "offset_m", f);
    r.events.push_back(std::move(e));
  }
  return r;
}

void WriteReports(std::ostream &out, const std::vector<TrackReport> &reports,
                  bool include_timing) {
  for (const TrackReport &r : reports) {
    out << ReportToJson(r, include_timing).dump() << '\n';
  }
}

std::vector<TrackReport> ReadReports(std::istream &in) {
  std::vector<TrackReport> reports;
  ForEachLine(in, [&](const std::string &line) {
    reports.push_back(ReportFromJson(Parse(line, "report")));
  });
  return reports;
}

}  // namespace gbot
