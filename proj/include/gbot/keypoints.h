#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gbot/geom.h"

namespace gbot {

inline constexpr std::size_t kDefaultKeypointCount = 17;
inline constexpr std::size_t kMinKeypointCount = 4;
inline constexpr std::size_t kMaxKeypointCount = 24;

struct Mesh {
  std::vector<Vec3> vertices;  // meters, object frame
  std::vector<std::array<int, 3>> faces;
};

// A rigid part with its surface keypoints.
struct ObjectModel {
  std::string id;
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  std::vector<std::size_t> keypoint_indices;
  bool symmetric = false;

  std::vector<Vec3> Keypoints() const;
  // Throws std::invalid_argument on violated invariants.
  void Validate() const;
};

// Builds a model and selects n keypoints by farthest point sampling.
ObjectModel MakeObjectModel(std::string id, Mesh mesh, bool symmetric,
                            std::size_t n_keypoints = kDefaultKeypointCount);

struct CameraIntrinsics {
  double fx = 600.0;
  double fy = 600.0;
  double cx = 640.0;
  double cy = 360.0;
  int width = 1280;
  int height = 720;

  void Validate() const;
};

// Greedy max-min selection seeded at the vertex farthest from the centroid.
// Ties resolve to the lowest index. Throws std::invalid_argument if n is 0 or
// exceeds the number of vertices.
std::vector<std::size_t> FarthestPointSample(std::span<const Vec3> vertices,
                                             std::size_t n);

struct ProjectedPoint {
  Vec2 pixel = Vec2::Zero();
  bool visible = false;
};

std::vector<ProjectedPoint> Project(const CameraIntrinsics &intr,
                                    const RigidTransform &pose,
                                    std::span<const Vec3> points_obj);

// ASCII OBJ subset: `v x y z` and `f i j k` (1-based, `i/t/n` forms accepted);
// every other line is ignored.
Mesh ParseObj(std::istream &in);
Mesh LoadObj(const std::filesystem::path &path);
void WriteObj(std::ostream &out, const Mesh &mesh);

}  // namespace gbot
