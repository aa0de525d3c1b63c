#include "gbot/pose_api.h"

#include <chrono>
#include <stdexcept>

#include <spdlog/spdlog.h>

// The default backlog of 5 drops connects when many pollers reconnect at once.
#define CPPHTTPLIB_LISTEN_BACKLOG 128
#include "httplib.h"
#include "json.hpp"

#include "gbot/serialization.h"

namespace gbot {

using nlohmann::json;

namespace {

// Pollers keep their connections alive, and each live connection occupies a
// worker, so the pool must cover the expected number of clients.
constexpr std::size_t kServerThreads = 128;

json EventJson(const TrackEvent &e) {
  return {{"type", EventTypeName(e.type)},
          {"frame", e.frame_index},
          {"object", e.object_id},
          {"state", e.state_index},
          {"offset_m", e.offset_m}};
}

}  // namespace

std::string SnapshotToJson(const PoseSnapshot &snapshot) {
  json j;
  j["sequence_number"] = snapshot.sequence_number;
  j["timestamp"] = snapshot.timestamp_ms;
  j["state_index"] = snapshot.state_index;
  j["poses"] = json::array();
  for (const SnapshotPose &p : snapshot.poses) {
    json jp = PoseToJson(p.pose);
    jp["object_id"] = p.id;
    jp["tracked"] = p.tracked;
    j["poses"].push_back(std::move(jp));
  }
  return j.dump();
}

PoseSnapshot SnapshotFromJson(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error &e) {
    throw SchemaError("snapshot", e.what());
  }
  PoseSnapshot s;
  try {
    s.sequence_number = j.at("sequence_number").get<std::uint64_t>();
    s.timestamp_ms = j.at("timestamp").get<std::int64_t>();
    s.state_index = j.at("state_index").get<std::size_t>();
    const json &poses = j.at("poses");
    for (std::size_t i = 0; i < poses.size(); ++i) {
      SnapshotPose p;
      p.id = poses[i].at("object_id").get<std::string>();
      p.tracked = poses[i].at("tracked").get<bool>();
      p.pose = PoseFromJson(poses[i], "snapshot.poses[" + std::to_string(i) + "]");
      s.poses.push_back(std::move(p));
    }
  } catch (const json::exception &e) {
    throw SchemaError("snapshot", e.what());
  }
  return s;
}

std::uint64_t SnapshotStore::Publish(const TrackReport &report) {
  auto next = std::make_shared<Published>();
  PoseSnapshot &s = next->snapshot;
  s.timestamp_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
  s.state_index = report.state_index;
  for (const auto &[id, pose] : report.poses) {
    s.poses.push_back({id, pose, !report.lost.count(id)});
  }
  for (const TrackEvent &e : report.events) {
    if (e.type == EventType::kLost) continue;
    events_.push_back(e);
    if (events_.size() > kEventsTail) events_.pop_front();
  }
  json state;
  state["state_index"] = report.state_index;
  state["events_tail"] = json::array();
  for (const TrackEvent &e : events_) state["events_tail"].push_back(EventJson(e));

  // Only this thread assigns sequence numbers, so reading it unlocked is fine.
  s.sequence_number = next_sequence_++;
  state["sequence_number"] = s.sequence_number;
  next->poses_body = SnapshotToJson(s);
  next->state_body = state.dump();

  std::shared_ptr<const Published> old;
  {
    std::lock_guard<std::mutex> lock(mu_);
    old = std::move(current_);
    current_ = std::move(next);
  }
  return s.sequence_number;  // `old` is released outside the lock
}

std::shared_ptr<const SnapshotStore::Published> SnapshotStore::Latest() const {
  std::lock_guard<std::mutex> lock(mu_);
  return current_;
}

PoseServer::PoseServer(const SnapshotStore &store) : store_(store) {}

PoseServer::~PoseServer() { Stop(); }

int PoseServer::Start(const std::string &host, int port) {
  if (server_) throw std::logic_error("pose server already started");
  server_ = std::make_unique<httplib::Server>();
  server_->new_task_queue = [] { return new httplib::ThreadPool(kServerThreads); };
  // httplib closes a connection after 5 requests by default; a 30 Hz poller
  // would reconnect six times a second.
  server_->set_keep_alive_max_count(1000);

  auto serve = [this](bool poses) {
    return [this, poses](const httplib::Request &, httplib::Response &res) {
      std::shared_ptr<const SnapshotStore::Published> p = store_.Latest();
      if (!p) {
        res.status = 503;
        res.set_content(R"({"error":"no snapshot published yet"})",
                        "application/json");
        return;
      }
      res.set_content(poses ? p->poses_body : p->state_body, "application/json");
    };
  };
  server_->Get("/poses", serve(true));
  server_->Get("/state", serve(false));

  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else {
    port_ = server_->bind_to_port(host, port) ? port : -1;
  }
  if (port_ <= 0) {
    server_.reset();
    throw std::runtime_error("cannot bind pose server to " + host + ":" +
                             std::to_string(port));
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  spdlog::info("serving poses on http://{}:{}/poses", host, port_);
  return port_;
}

void PoseServer::Stop() {
  if (!server_) return;
  server_->stop();
  if (thread_.joinable()) thread_.join();
  server_.reset();
}

std::pair<std::string, int> ParseServeAddress(std::string_view addr) {
  const std::size_t colon = addr.rfind(':');
  if (colon == std::string_view::npos || colon == 0 ||
      colon + 1 == addr.size()) {
    throw std::invalid_argument("expected ADDR:PORT, got '" +
                                std::string(addr) + "'");
  }
  const std::string port_text(addr.substr(colon + 1));
  std::size_t used = 0;
  int port = -1;
  try {
    port = std::stoi(port_text, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used != port_text.size() || port < 0 || port > 65535) {
    throw std::invalid_argument("invalid port '" + port_text + "'");
  }
  return {std::string(addr.substr(0, colon)), port};
}

}  // namespace gbot
