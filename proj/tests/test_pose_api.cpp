#include <atomic>

#include "doctest.h"

#include "gbot/pose_api.h"
#include "gbot/serialization.h"
#include "support.h"

// After Eigen: <resolv.h> defines a `_res` macro.
#include "httplib.h"

using namespace gbot;
using nlohmann::json;

namespace {

TrackReport Report(std::size_t frame, std::size_t state, std::uint64_t seed) {
  testing::Random rng(seed);
  TrackReport r;
  r.frame_index = frame;
  r.state_index = state;
  r.poses["a"] = rng.ViewPose();
  r.poses["b"] = rng.ViewPose();
  r.lost = {"b"};
  return r;
}

}  // namespace

TEST_CASE("snapshot json round trip") {
  PoseSnapshot s;
  s.sequence_number = 7;
  s.timestamp_ms = 1700000000123;
  s.state_index = 3;
  s.poses = {{"a", testing::Random(111).Pose(), true}, {"b", testing::Random(112).Pose(), false}};
  const PoseSnapshot back = SnapshotFromJson(SnapshotToJson(s));
  CHECK(back.sequence_number == 7);
  CHECK(back.timestamp_ms == 1700000000123);
  CHECK(back.state_index == 3);
  REQUIRE(back.poses.size() == 2);
  CHECK(back.poses[1].id == "b");
  CHECK_FALSE(back.poses[1].tracked);
  CHECK(testing::MaxAbsDiff(back.poses[0].pose, s.poses[0].pose) < 1e-12);

  json bad = json::parse(SnapshotToJson(s));
  bad["poses"][0]["q"] = {1.0, 1.0, 0.0, 0.0};
  CHECK_THROWS_AS(SnapshotFromJson(bad.dump()), SchemaError);
  CHECK_THROWS_AS(SnapshotFromJson("[1,"), SchemaError);
}

TEST_CASE("store publishes increasing sequence numbers") {
  SnapshotStore store;
  CHECK(store.Latest() == nullptr);
  CHECK(store.Publish(Report(0, 0, 1)) == 1);
  CHECK(store.Publish(Report(1, 0, 2)) == 2);
  const auto p = store.Latest();
  REQUIRE(p != nullptr);
  CHECK(p->snapshot.sequence_number == 2);
  CHECK(SnapshotFromJson(p->poses_body).sequence_number == 2);
}

TEST_CASE("events tail keeps the last 16 non-lost events") {
  SnapshotStore store;
  for (std::size_t f = 0; f < 40; ++f) {
    TrackReport r = Report(f, 0, f);
    r.events = {{EventType::kReinit, f, "a", 0, 0.06}, {EventType::kLost, f, "b", 0, 0.0}};
    store.Publish(r);
  }
  const json state = json::parse(store.Latest()->state_body);
  REQUIRE(state["events_tail"].size() == kEventsTail);
  CHECK(state["events_tail"].front()["frame"] == 24);
  CHECK(state["events_tail"].back()["frame"] == 39);
  for (const json &e : state["events_tail"]) CHECK(e["type"] == "reinit");
}

TEST_CASE("http endpoints") {
  SnapshotStore store;
  PoseServer server(store);
  const int port = server.Start("127.0.0.1", 0);
  REQUIRE(port > 0);
  httplib::Client cli("127.0.0.1", port);

  auto res = cli.Get("/poses");
  REQUIRE(res);
  CHECK(res->status == 503);
  CHECK(cli.Get("/state")->status == 503);

  store.Publish(Report(0, 0, 5));
  TrackReport later = Report(1, 2, 6);
  later.events = {{EventType::kTransition, 1, "b", 2, 0.0}};
  store.Publish(later);

  res = cli.Get("/poses");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->get_header_value("Content-Type") == "application/json");
  const PoseSnapshot snap = SnapshotFromJson(res->body);
  CHECK(snap.sequence_number == 2);
  CHECK(snap.state_index == 2);
  REQUIRE(snap.poses.size() == 2);
  CHECK(testing::MaxAbsDiff(snap.poses[0].pose, later.poses.at("a")) < 1e-12);
  CHECK(snap.poses[0].tracked);
  CHECK_FALSE(snap.poses[1].tracked);

  const json state = json::parse(cli.Get("/state")->body);
  CHECK(state["state_index"] == 2);
  REQUIRE(state["events_tail"].size() == 1);
  CHECK(state["events_tail"][0]["type"] == "transition");

  auto head = cli.Head("/poses");
  REQUIRE(head);
  CHECK(head->status == 200);
  CHECK(head->body.empty());

  CHECK(cli.Get("/pose")->status == 404);
  CHECK(cli.Post("/poses", "{}", "application/json")->status != 200);
  server.Stop();
}

TEST_CASE("readers see non-decreasing sequence numbers") {
  SnapshotStore store;
  PoseServer server(store);
  const int port = server.Start("127.0.0.1", 0);
  store.Publish(Report(0, 0, 1));
  std::atomic<bool> done{false};
  std::thread writer([&] {
    for (std::size_t f = 1; f < 300; ++f) store.Publish(Report(f, 0, f));
    done = true;
  });
  httplib::Client cli("127.0.0.1", port);
  std::uint64_t last = 0;
  int reads = 0;
  while (!done || reads < 5) {
    auto res = cli.Get("/poses");
    REQUIRE(res);
    const std::uint64_t seq = SnapshotFromJson(res->body).sequence_number;
    CHECK(seq >= last);
    last = seq;
    ++reads;
  }
  writer.join();
  server.Stop();
}

TEST_CASE("serve address parsing") {
  CHECK(ParseServeAddress("127.0.0.1:8080") == std::pair<std::string, int>{"127.0.0.1", 8080});
  CHECK(ParseServeAddress("0.0.0.0:0").second == 0);
  CHECK_THROWS_AS(ParseServeAddress("localhost"), std::invalid_argument);
  CHECK_THROWS_AS(ParseServeAddress(":80"), std::invalid_argument);
  CHECK_THROWS_AS(ParseServeAddress("host:"), std::invalid_argument);
  CHECK_THROWS_AS(ParseServeAddress("host:99999"), std::invalid_argument);
  CHECK_THROWS_AS(ParseServeAddress("host:8x"), std::invalid_argument);
}
