#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "gbot/geom.h"
#include "gbot/tracker.h"

namespace httplib {
class Server;
}

namespace gbot {

struct SnapshotPose {
  ObjectId id;
  RigidTransform pose;
  bool tracked = true;
};

struct PoseSnapshot {
  std::uint64_t sequence_number = 0;
  std::int64_t timestamp_ms = 0;  // since the Unix epoch
  std::size_t state_index = 0;
  std::vector<SnapshotPose> poses;
};

std::string SnapshotToJson(const PoseSnapshot &snapshot);
// Throws SchemaError.
PoseSnapshot SnapshotFromJson(std::string_view text);

inline constexpr std::size_t kEventsTail = 16;

// Single-writer, many-reader holder of the latest snapshot. Response bodies
// are rendered by Publish, so readers only copy a shared pointer.
class SnapshotStore {
 public:
  struct Published {
    PoseSnapshot snapshot;
    std::string poses_body;
    std::string state_body;
  };

  // Returns the sequence number assigned to the new snapshot.
  std::uint64_t Publish(const TrackReport &report);
  // nullptr before the first publish.
  std::shared_ptr<const Published> Latest() const;

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const Published> current_;
  std::uint64_t next_sequence_ = 1;
  std::deque<TrackEvent> events_;  // writer-side only
};

class PoseServer {
 public:
  explicit PoseServer(const SnapshotStore &store);
  ~PoseServer();
  PoseServer(const PoseServer &) = delete;
  PoseServer &operator=(const PoseServer &) = delete;

  // Binds and starts serving on a background thread. Port 0 picks a free
  // port. Throws std::runtime_error if binding fails.
  int Start(const std::string &host, int port);
  void Stop();
  int port() const { return port_; }

 private:
  const SnapshotStore &store_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

// Splits "HOST:PORT"; throws std::invalid_argument.
std::pair<std::string, int> ParseServeAddress(std::string_view addr);

}  // namespace gbot
