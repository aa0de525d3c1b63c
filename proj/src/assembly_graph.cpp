#include "gbot/assembly_graph.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

#include "json.hpp"

#include "gbot/serialization.h"

namespace gbot {

using nlohmann::json;

std::vector<ObjectId> AssemblyGraph::ObjectIds() const {
  std::vector<ObjectId> ids;
  ids.reserve(objects.size());
  for (const ObjectSpec &o : objects) ids.push_back(o.id);
  return ids;
}

bool AssemblyGraph::HasObject(std::string_view id) const {
  return std::any_of(objects.begin(), objects.end(),
                     [&](const ObjectSpec &o) { return o.id == id; });
}

void AssemblyGraph::Validate() const {
  if (objects.empty()) throw SchemaError("objects", "must not be empty");
  std::set<ObjectId> ids;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string field = "objects[" + std::to_string(i) + "].id";
    if (objects[i].id.empty()) throw SchemaError(field, "empty id");
    if (!ids.insert(objects[i].id).second) {
      throw SchemaError(field, "duplicate id '" + objects[i].id + "'");
    }
  }
  if (!(trans_threshold > 0.0)) {
    throw SchemaError("thresholds.trans_m", "must be > 0");
  }
  if (!(rot_threshold > 0.0)) {
    throw SchemaError("thresholds.rot_deg", "must be > 0");
  }
  if (states.empty()) throw SchemaError("states", "must not be empty");
  if (!states[0].links.empty()) {
    throw SchemaError("states[0].links",
                      "the first state tracks every part individually");
  }

  for (std::size_t s = 0; s < states.size(); ++s) {
    const AssemblyState &state = states[s];
    const std::string prefix = "states[" + std::to_string(s) + "]";
    if (state.index != s) {
      throw SchemaError(prefix, "state indices must be contiguous from 0");
    }
    if (!ids.count(state.base_id)) {
      throw SchemaError(prefix + ".base", "unknown id '" + state.base_id + "'");
    }
    std::set<ObjectId> children;
    std::map<ObjectId, ObjectId> parent_of;
    for (std::size_t l = 0; l < state.links.size(); ++l) {
      const KinematicLink &link = state.links[l];
      const std::string lf = prefix + ".links[" + std::to_string(l) + "]";
      if (!ids.count(link.parent_id)) {
        throw SchemaError(lf + ".parent",
                          "unknown id '" + link.parent_id + "'");
      }
      if (!ids.count(link.child_id)) {
        throw SchemaError(lf + ".child", "unknown id '" + link.child_id + "'");
      }
      if (link.parent_id == link.child_id) {
        throw SchemaError(lf + ".child", "link child equals parent");
      }
      if (!children.insert(link.child_id).second) {
        throw SchemaError(lf + ".child",
                          "'" + link.child_id + "' already has a parent");
      }
      if (link.child_id == state.base_id) {
        throw SchemaError(lf + ".child", "the base part cannot be a child");
      }
      if (!link.relative.IsValid(1e-6)) {
        throw SchemaError(lf + ".q", "not a rigid transform");
      }
      parent_of[link.child_id] = link.parent_id;
    }
    // With at most one parent per node, a cycle shows up as a walk that
    // revisits a node.
    for (const auto &[child, parent] : parent_of) {
      std::set<ObjectId> seen{child};
      ObjectId cur = parent;
      while (true) {
        if (!seen.insert(cur).second) {
          throw SchemaError(prefix + ".links",
                            "cycle through '" + cur + "'");
        }
        auto it = parent_of.find(cur);
        if (it == parent_of.end()) break;
        cur = it->second;
      }
    }

    const bool terminal = s + 1 == states.size();
    if (terminal && state.switch_pair) {
      throw SchemaError(prefix + ".switch",
                        "missing terminal state: the last state must have a "
                        "null switch");
    }
    if (!terminal && !state.switch_pair) {
      throw SchemaError(prefix + ".switch",
                        "required on every non-terminal state");
    }
    if (state.switch_pair) {
      const SwitchCondition &sw = *state.switch_pair;
      if (!ids.count(sw.a_id)) {
        throw SchemaError(prefix + ".switch.a", "unknown id '" + sw.a_id + "'");
      }
      if (!ids.count(sw.b_id)) {
        throw SchemaError(prefix + ".switch.b", "unknown id '" + sw.b_id + "'");
      }
      if (sw.a_id == sw.b_id) {
        throw SchemaError(prefix + ".switch.b", "switch pair must differ");
      }
    }
  }
}

namespace {

const json &Require(const json &j, const char *key, const std::string &field) {
  if (!j.is_object() || !j.contains(key)) {
    throw SchemaError(field + "." + key, "missing");
  }
  return j.at(key);
}

std::string RequireString(const json &j, const char *key,
                          const std::string &field) {
  const json &v = Require(j, key, field);
  if (!v.is_string()) throw SchemaError(field + "." + key, "expected string");
  return v.get<std::string>();
}

}  // namespace

AssemblyGraph LoadGraph(std::string_view config_text) {
  json root;
  try {
    root = json::parse(config_text);
  } catch (const json::parse_error &e) {
    throw SchemaError("$", std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw SchemaError("$", "expected an object");

  AssemblyGraph graph;
  const json &objects = Require(root, "objects", "$");
  if (!objects.is_array()) throw SchemaError("objects", "expected array");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string field = "objects[" + std::to_string(i) + "]";
    ObjectSpec spec;
    spec.id = RequireString(objects[i], "id", field);
    if (objects[i].contains("mesh") && objects[i]["mesh"].is_string()) {
      spec.mesh = objects[i]["mesh"].get<std::string>();
    }
    if (objects[i].contains("symmetric")) {
      if (!objects[i]["symmetric"].is_boolean()) {
        throw SchemaError(field + ".symmetric", "expected boolean");
      }
      spec.symmetric = objects[i]["symmetric"].get<bool>();
    }
    graph.objects.push_back(std::move(spec));
  }

  if (root.contains("thresholds")) {
    const json &th = root["thresholds"];
    try {
      if (th.contains("trans_m")) graph.trans_threshold = th["trans_m"].get<double>();
      if (th.contains("rot_deg")) graph.rot_threshold = th["rot_deg"].get<double>();
    } catch (const json::exception &) {
      throw SchemaError("thresholds", "expected numbers");
    }
  }

  const json &states = Require(root, "states", "$");
  if (!states.is_array()) throw SchemaError("states", "expected array");
  for (std::size_t s = 0; s < states.size(); ++s) {
    const std::string field = "states[" + std::to_string(s) + "]";
    AssemblyState state;
    state.index = s;
    state.base_id = RequireString(states[s], "base", field);
    if (states[s].contains("links")) {
      const json &links = states[s]["links"];
      if (!links.is_array()) throw SchemaError(field + ".links", "expected array");
      for (std::size_t l = 0; l < links.size(); ++l) {
        const std::string lf = field + ".links[" + std::to_string(l) + "]";
        KinematicLink link;
        link.parent_id = RequireString(links[l], "parent", lf);
        link.child_id = RequireString(links[l], "child", lf);
        link.relative = PoseFromJson(links[l], lf);
        state.links.push_back(std::move(link));
      }
    }
    if (states[s].contains("switch") && !states[s]["switch"].is_null()) {
      const json &sw = states[s]["switch"];
      const std::string sf = field + ".switch";
      SwitchCondition cond;
      cond.a_id = RequireString(sw, "a", sf);
      cond.b_id = RequireString(sw, "b", sf);
      cond.expected_relative = PoseFromJson(sw, sf);
      state.switch_pair = std::move(cond);
    }
    graph.states.push_back(std::move(state));
  }
  graph.Validate();
  return graph;
}

std::string GraphToJson(const AssemblyGraph &graph) {
  json root;
  root["objects"] = json::array();
  for (const ObjectSpec &o : graph.objects) {
    root["objects"].push_back(
        {{"id", o.id}, {"mesh", o.mesh}, {"symmetric", o.symmetric}});
  }
  root["thresholds"] = {{"trans_m", graph.trans_threshold},
                        {"rot_deg", graph.rot_threshold}};
  root["states"] = json::array();
  for (const AssemblyState &s : graph.states) {
    json js;
    js["base"] = s.base_id;
    js["links"] = json::array();
    for (const KinematicLink &l : s.links) {
      json jl = PoseToJson(l.relative);
      jl["parent"] = l.parent_id;
      jl["child"] = l.child_id;
      js["links"].push_back(std::move(jl));
    }
    if (s.switch_pair) {
      json jsw = PoseToJson(s.switch_pair->expected_relative);
      jsw["a"] = s.switch_pair->a_id;
      jsw["b"] = s.switch_pair->b_id;
      js["switch"] = std::move(jsw);
    } else {
      js["switch"] = nullptr;
    }
    root["states"].push_back(std::move(js));
  }
  return root.dump(2);
}

std::optional<SwitchErrors> EvaluateSwitch(const AssemblyGraph &graph,
                                           std::size_t state_index,
                                           const PoseMap &poses) {
  if (state_index >= graph.states.size()) return std::nullopt;
  const auto &sw = graph.states[state_index].switch_pair;
  if (!sw) return std::nullopt;
  const auto a = poses.find(sw->a_id);
  const auto b = poses.find(sw->b_id);
  if (a == poses.end() || b == poses.end()) return std::nullopt;
  const RigidTransform relative = Compose(Invert(a->second), b->second);
  return SwitchErrors{
      TranslationError(relative.translation,
                       sw->expected_relative.translation),
      RotationErrorDeg(relative.rotation, sw->expected_relative.rotation)};
}

std::optional<std::size_t> CheckTransition(const AssemblyGraph &graph,
                                           std::size_t state_index,
                                           const PoseMap &poses) {
  const auto errors = EvaluateSwitch(graph, state_index, poses);
  if (!errors) return std::nullopt;
  // Strict, with a relative guard of 1e-9 so that a perturbation of exactly
  // the threshold never fires through rounding in the relative pose.
  constexpr double kGuard = 1.0 - 1e-9;
  if (errors->e_trans < graph.trans_threshold * kGuard &&
      errors->e_rot < graph.rot_threshold * kGuard) {
    return state_index + 1;
  }
  return std::nullopt;
}

std::vector<Module> ModulePartition(const AssemblyGraph &graph,
                                    std::size_t state_index) {
  if (state_index >= graph.states.size()) {
    throw std::out_of_range("state index " + std::to_string(state_index) +
                            " outside the assembly graph");
  }
  const AssemblyState &state = graph.states[state_index];
  std::map<ObjectId, std::vector<const KinematicLink *>> children_of;
  std::set<ObjectId> has_parent;
  for (const KinematicLink &l : state.links) {
    children_of[l.parent_id].push_back(&l);
    has_parent.insert(l.child_id);
  }

  std::vector<Module> modules;
  for (const ObjectSpec &obj : graph.objects) {
    if (has_parent.count(obj.id)) continue;
    Module module;
    module.root_id = obj.id;
    module.members.push_back({obj.id, std::nullopt, RigidTransform::Identity(),
                              RigidTransform::Identity()});
    std::deque<std::size_t> queue{0};
    while (!queue.empty()) {
      const std::size_t cur = queue.front();
      queue.pop_front();
      const auto it = children_of.find(module.members[cur].id);
      if (it == children_of.end()) continue;
      for (const KinematicLink *l : it->second) {
        const RigidTransform from_root =
            Compose(module.members[cur].from_root, l->relative);
        module.members.push_back(
            {l->child_id, module.members[cur].id, l->relative, from_root});
        queue.push_back(module.members.size() - 1);
      }
    }
    modules.push_back(std::move(module));
  }
  return modules;
}

std::vector<Module> SingletonPartition(const AssemblyGraph &graph) {
  std::vector<Module> modules;
  for (const ObjectSpec &obj : graph.objects) {
    modules.push_back({obj.id,
                       {{obj.id, std::nullopt, RigidTransform::Identity(),
                         RigidTransform::Identity()}}});
  }
  return modules;
}

void ExpandModulePoses(const Module &module, const RigidTransform &root_pose,
                       PoseMap *poses) {
  (*poses)[module.root_id] = root_pose;
  for (std::size_t i = 1; i < module.members.size(); ++i) {
    const ModuleMember &m = module.members[i];
    (*poses)[m.id] = Compose(poses->at(*m.parent_id), m.link);
  }
}

}  // namespace gbot
