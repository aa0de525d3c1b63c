#include <sstream>

#include "doctest.h"

#include "gbot/serialization.h"
#include "support.h"

using namespace gbot;
using nlohmann::json;

namespace {

void CheckClose(const RigidTransform &a, const RigidTransform &b) {
  CHECK(testing::MaxAbsDiff(a, b) < 1e-12);
}

std::string FieldOf(const std::function<void()> &f) {
  try {
    f();
  } catch (const SchemaError &e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST_CASE("pose round trip") {
  testing::Random rng(101);
  for (int i = 0; i < 200; ++i) {
    const RigidTransform p = rng.Pose(2.0);
    const json j = PoseToJson(p);
    CheckClose(PoseFromJson(j, "$"), p);
    // Text round trip keeps full precision.
    CheckClose(PoseFromJson(json::parse(j.dump()), "$"), p);
  }
}

TEST_CASE("malformed poses name the field") {
  CHECK(FieldOf([] { PoseFromJson(json::parse(R"({"t":[0,0,0],"q":[2,0,0,0]})"), "$.p"); }) ==
        "$.p.q");
  CHECK(FieldOf([] { PoseFromJson(json::parse(R"({"t":[0,0],"q":[1,0,0,0]})"), "$.p"); }) ==
        "$.p.t");
  CHECK(FieldOf([] { PoseFromJson(json::parse(R"({"q":[1,0,0,0]})"), "$.p"); }) == "$.p.t");
  CHECK(FieldOf([] { PoseFromJson(json::parse(R"({"t":[0,0,"x"],"q":[1,0,0,0]})"), "$.p"); }) ==
        "$.p");
}

TEST_CASE("script round trip") {
  const BuiltinAsset asset = MakeBuiltinAsset("hobby_corner_clamp");
  SequenceScript s = asset.script;
  s.condition = Condition::kBlur;
  s.seed = 12345678901234ull;
  s.occlusion_windows = {{"clamp_jaw", 3, 9}};
  const std::string text = ScriptToJson(s);
  const SequenceScript back = ParseScript(text);
  CHECK(back.asset == s.asset);
  CHECK(back.n_frames == s.n_frames);
  CHECK(back.condition == s.condition);
  CHECK(back.seed == s.seed);
  REQUIRE(back.trajectories.size() == s.trajectories.size());
  for (std::size_t i = 0; i < s.trajectories.size(); ++i) {
    REQUIRE(back.trajectories[i].waypoints.size() == s.trajectories[i].waypoints.size());
    for (std::size_t w = 0; w < s.trajectories[i].waypoints.size(); ++w) {
      CHECK(back.trajectories[i].waypoints[w].frame == s.trajectories[i].waypoints[w].frame);
      CheckClose(back.trajectories[i].waypoints[w].pose, s.trajectories[i].waypoints[w].pose);
    }
  }
  REQUIRE(back.assembly_events.size() == s.assembly_events.size());
  CHECK(back.occlusion_windows.size() == 1);
  CHECK(back.occlusion_windows[0].end_frame == 9);

  json j = json::parse(text);
  j["condition"] = "fog";
  CHECK(FieldOf([&] { ParseScript(j.dump()); }) == "$.condition");
  CHECK_THROWS_AS(ParseScript("{not json"), SchemaError);
}

TEST_CASE("ground truth and observation lines round trip") {
  const BuiltinAsset asset = MakeBuiltinAsset("hobby_corner_clamp");
  ScriptOptions opt;
  opt.n_frames = 100;
  opt.condition = Condition::kHand;
  const SequenceScript s = MakeDefaultScript(asset, opt);
  const auto gt = GenerateGroundTruth(s, asset.graph);
  const auto obs = GenerateObservations(gt, asset.models, CameraIntrinsics{}, s);

  std::stringstream g;
  WriteGroundTruth(g, gt);
  const auto gt_back = ReadGroundTruth(g);
  REQUIRE(gt_back.size() == gt.size());
  for (std::size_t f = 0; f < gt.size(); ++f) {
    CHECK(gt_back[f].frame_index == gt[f].frame_index);
    for (const auto &[id, pose] : gt[f].poses) CheckClose(gt_back[f].poses.at(id), pose);
  }

  std::stringstream o;
  WriteObservations(o, obs);
  const auto obs_back = ReadObservations(o);
  REQUIRE(obs_back.size() == obs.size());
  for (std::size_t f = 0; f < obs.size(); ++f) {
    REQUIRE(obs_back[f].size() == obs[f].size());
    for (std::size_t k = 0; k < obs[f].size(); ++k) {
      const Observation &a = obs[f][k], &b = obs_back[f][k];
      CHECK(a.object_id == b.object_id);
      CHECK(a.detected == b.detected);
      CHECK(a.frame_index == b.frame_index);
      REQUIRE(a.keypoints.size() == b.keypoints.size());
      for (std::size_t i = 0; i < a.keypoints.size(); ++i) {
        CHECK(a.keypoints[i].pixel == b.keypoints[i].pixel);
        CHECK(a.keypoints[i].confidence == b.keypoints[i].confidence);
      }
    }
  }

  CHECK(FieldOf([] {
          ParseObservationsLine(R"({"frame":0,"observations":[{"id":"a","detected":true,"keypoints":[[1,2]]}]})");
        }) == "$.observations[0].keypoints[0]");
}

TEST_CASE("report round trip and timing switch") {
  TrackReport r;
  r.frame_index = 42;
  r.state_index = 2;
  r.runtime_ms = 3.25;
  r.poses["a"] = testing::Random(102).Pose();
  r.poses["b"] = testing::Random(103).Pose();
  r.module_roots = {{"a", "a"}, {"b", "a"}};
  r.lost = {"b"};
  r.events = {{EventType::kReinit, 42, "a", 2, 0.071}, {EventType::kLost, 42, "a", 2, 0.0}};

  const TrackReport back = ReportFromJson(ReportToJson(r, true));
  CHECK(back.frame_index == 42);
  CHECK(back.state_index == 2);
  CHECK(back.runtime_ms == 3.25);
  CHECK(back.module_roots == r.module_roots);
  CHECK(back.lost == r.lost);
  for (const auto &[id, pose] : r.poses) CheckClose(back.poses.at(id), pose);
  REQUIRE(back.events.size() == 2);
  CHECK(back.events[0].type == EventType::kReinit);
  CHECK(back.events[0].offset_m == 0.071);

  CHECK(ReportFromJson(ReportToJson(r, false)).runtime_ms == 0.0);
  std::stringstream a, b;
  WriteReports(a, {r}, false);
  r.runtime_ms = 99.0;
  WriteReports(b, {r}, false);
  CHECK(a.str() == b.str());

  json bad = ReportToJson(r, true);
  bad["events"][0]["type"] = "jump";
  CHECK(FieldOf([&] { ReportFromJson(bad); }) == "$.events[0].type");
  std::stringstream c(a.str());
  CHECK(ReadReports(c).size() == 1);
}
