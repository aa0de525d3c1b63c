#include <cstring>
#include <sstream>

#include "doctest.h"

#include "gbot/scene_sim.h"
#include "gbot/serialization.h"
#include "support.h"

using namespace gbot;

namespace {

const char *kPair = R"({
  "objects": [{"id": "a"}, {"id": "b"}],
  "states": [
    {"base": "a", "links": [],
     "switch": {"a": "a", "b": "b", "t": [0, 0, 0.05], "q": [1, 0, 0, 0]}},
    {"base": "a", "links": [{"parent": "a", "child": "b", "t": [0, 0, 0.05], "q": [1, 0, 0, 0]}],
     "switch": null}
  ]
})";

RigidTransform At(double x, double y, double z) {
  RigidTransform p;
  p.translation = Vec3(x, y, z);
  return p;
}

SequenceScript PairScript(std::size_t n_frames) {
  SequenceScript s;
  s.asset = "pair";
  s.n_frames = n_frames;
  s.trajectories = {
      {"a", {{0, At(0, 0, 0.5)}}},
      {"b", {{0, At(0.1, 0, 0.5)}}},
  };
  return s;
}

bool Bitwise(const RigidTransform &a, const RigidTransform &b) {
  return std::memcmp(a.rotation.data(), b.rotation.data(), 9 * sizeof(double)) == 0 &&
         std::memcmp(a.translation.data(), b.translation.data(), 3 * sizeof(double)) == 0;
}

std::vector<ObjectModel> PairModels() {
  testing::Random rng(71);
  std::vector<ObjectModel> models;
  for (const char *id : {"a", "b"}) {
    Mesh m;
    m.vertices = testing::RandomCloud(rng, 60, 0.04);
    models.push_back(MakeObjectModel(id, m, false));
  }
  return models;
}

}  // namespace

TEST_CASE("a single waypoint holds still") {
  const AssemblyGraph g = LoadGraph(kPair);
  const auto frames = GenerateGroundTruth(PairScript(30), g);
  REQUIRE(frames.size() == 30);
  for (const GroundTruthFrame &f : frames) {
    CHECK(Bitwise(f.poses.at("a"), frames[0].poses.at("a")));
    CHECK(Bitwise(f.poses.at("b"), frames[0].poses.at("b")));
  }
}

TEST_CASE("translation interpolates linearly, rotation at constant rate") {
  const AssemblyGraph g = LoadGraph(kPair);
  SequenceScript s = PairScript(20);
  RigidTransform end = At(0.1, 0, 0.5);
  end.rotation = RotZ(DegToRad(60));
  s.trajectories[0].waypoints = {{0, At(0, 0, 0.5)}, {10, end}};
  const auto frames = GenerateGroundTruth(s, g);
  CHECK(frames[5].poses.at("a").translation.x() == doctest::Approx(0.05));
  for (std::size_t f = 0; f <= 10; ++f) {
    CHECK(RotationErrorDeg(frames[f].poses.at("a").rotation, Mat3::Identity()) ==
          doctest::Approx(6.0 * f).epsilon(1e-9));
  }
  // Holds after the last waypoint.
  CHECK(frames[19].poses.at("a") == frames[10].poses.at("a"));
}

TEST_CASE("assembled parts are slaved bitwise") {
  const AssemblyGraph g = LoadGraph(kPair);
  SequenceScript s = PairScript(40);
  RigidTransform moved = At(0.2, -0.1, 0.6);
  moved.rotation = RotX(0.4) * RotY(-0.3);
  s.trajectories[0].waypoints = {{0, At(0, 0, 0.5)}, {39, moved}};
  s.assembly_events = {{10, 1}};
  const auto frames = GenerateGroundTruth(s, g);
  const RigidTransform &expected = g.states[0].switch_pair->expected_relative;
  for (std::size_t f = 0; f < 10; ++f) {
    CHECK(Bitwise(frames[f].poses.at("b"), At(0.1, 0, 0.5)));
  }
  for (std::size_t f = 10; f < 40; ++f) {
    CHECK(Bitwise(frames[f].poses.at("b"), Compose(frames[f].poses.at("a"), expected)));
  }
}

TEST_CASE("occlusion windows hide the object") {
  const AssemblyGraph g = LoadGraph(kPair);
  SequenceScript s = PairScript(60);
  s.occlusion_windows = {{"b", 20, 40}};
  const auto gt = GenerateGroundTruth(s, g);
  const auto obs = GenerateObservations(gt, PairModels(), CameraIntrinsics{}, s);
  REQUIRE(obs.size() == 60);
  for (std::size_t f = 0; f < 60; ++f) {
    REQUIRE(obs[f].size() == 2);
    CHECK(obs[f][1].object_id == "b");
    const bool hidden = f >= 20 && f <= 40;
    CHECK(obs[f][1].detected == !hidden);
  }
}

TEST_CASE("generation is reproducible byte for byte") {
  const BuiltinAsset asset = MakeBuiltinAsset("hobby_corner_clamp");
  ScriptOptions opt;
  opt.n_frames = 120;
  opt.condition = Condition::kHand;
  opt.seed = 9;
  auto render = [&](std::uint64_t seed) {
    ScriptOptions o = opt;
    o.seed = seed;
    const SequenceScript s = MakeDefaultScript(asset, o);
    const auto gt = GenerateGroundTruth(s, asset.graph);
    std::ostringstream out;
    WriteGroundTruth(out, gt);
    WriteObservations(out, GenerateObservations(gt, asset.models, CameraIntrinsics{}, s));
    return out.str();
  };
  const std::string a = render(9);
  CHECK(a == render(9));
  CHECK(a != render(10));
}

TEST_CASE("builtin assets") {
  const auto names = BuiltinAssetNames();
  CHECK(std::find(names.begin(), names.end(), "hobby_corner_clamp") != names.end());
  CHECK(MakeBuiltinAsset("hobby_corner_clamp").graph.objects.size() == 3);
  CHECK(MakeBuiltinAsset("hobby_corner_clamp").graph.states.size() == 3);
  CHECK(MakeBuiltinAsset("liftpod").graph.objects.size() == 7);
  CHECK(MakeBuiltinAsset("nano_chuck").graph.objects.size() == 8);
  CHECK(MakeBuiltinAsset("hand_screw_clamp").graph.objects.size() == 7);
  CHECK(MakeBuiltinAsset("geared_caliper").graph.objects.size() == 3);
  CHECK_THROWS_AS(MakeBuiltinAsset("gearbox"), std::invalid_argument);
  for (const std::string &name : names) {
    const BuiltinAsset asset = MakeBuiltinAsset(name);
    CHECK(asset.graph.states.size() == asset.graph.objects.size());
    for (const ObjectModel &m : asset.models) {
      CHECK(m.vertices.size() >= 50);
      CHECK(m.vertices.size() <= 200);
      CHECK_NOTHROW(m.Validate());
    }
    CHECK_NOTHROW(asset.script.Validate(asset.graph));
    // Every assembly event brings the switch pair into its expected pose.
    const auto gt = GenerateGroundTruth(asset.script, asset.graph);
    CHECK(asset.script.assembly_events.size() == asset.graph.states.size() - 1);
    for (const AssemblyEvent &e : asset.script.assembly_events) {
      const auto err = EvaluateSwitch(asset.graph, e.state_index - 1, gt[e.frame].poses);
      REQUIRE(err.has_value());
      CHECK(err->e_trans < 1e-9);
      CHECK(err->e_rot < 1e-9);
    }
  }
}

TEST_CASE("script validation") {
  const AssemblyGraph g = LoadGraph(kPair);
  auto fails = [&](auto edit) {
    SequenceScript s = PairScript(30);
    edit(s);
    CHECK_THROWS_AS(s.Validate(g), ScriptError);
  };
  CHECK_NOTHROW(PairScript(30).Validate(g));
  fails([](SequenceScript &s) { s.n_frames = 0; });
  fails([](SequenceScript &s) { s.trajectories.pop_back(); });
  fails([](SequenceScript &s) { s.trajectories[1].object_id = "c"; });
  fails([](SequenceScript &s) { s.trajectories[1].object_id = "a"; });
  fails([](SequenceScript &s) { s.trajectories[0].waypoints.push_back({0, At(0, 0, 1)}); });
  fails([](SequenceScript &s) { s.trajectories[0].waypoints[0].frame = 30; });
  fails([](SequenceScript &s) { s.trajectories[0].waypoints[0].pose.rotation(0, 0) = 2.0; });
  fails([](SequenceScript &s) { s.assembly_events = {{5, 0}}; });
  fails([](SequenceScript &s) { s.assembly_events = {{5, 2}}; });
  fails([](SequenceScript &s) { s.assembly_events = {{30, 1}}; });
  fails([](SequenceScript &s) { s.occlusion_windows = {{"b", 10, 5}}; });
  fails([](SequenceScript &s) { s.occlusion_windows = {{"b", 10, 30}}; });
  fails([](SequenceScript &s) { s.occlusion_windows = {{"z", 1, 2}}; });
}

TEST_CASE("half-turn waypoint pairs are rejected") {
  const AssemblyGraph g = LoadGraph(kPair);
  SequenceScript s = PairScript(20);
  RigidTransform flip = At(0, 0, 0.5);
  flip.rotation = RotZ(kPi);
  s.trajectories[0].waypoints = {{0, At(0, 0, 0.5)}, {10, flip}};
  CHECK_THROWS_AS(GenerateGroundTruth(s, g), ScriptError);
}
