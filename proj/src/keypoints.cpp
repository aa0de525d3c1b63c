#include "gbot/keypoints.h"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "gbot/kernels.h"

namespace gbot {

std::vector<Vec3> ObjectModel::Keypoints() const {
  std::vector<Vec3> out;
  out.reserve(keypoint_indices.size());
  for (std::size_t idx : keypoint_indices) out.push_back(vertices[idx]);
  return out;
}

void ObjectModel::Validate() const {
  if (vertices.size() < 4) {
    throw std::invalid_argument("object '" + id +
                                "' needs at least 4 vertices");
  }
  if (keypoint_indices.size() < kMinKeypointCount ||
      keypoint_indices.size() > kMaxKeypointCount) {
    throw std::invalid_argument("object '" + id +
                                "' keypoint count outside [4, 24]");
  }
  std::unordered_set<std::size_t> seen;
  for (std::size_t idx : keypoint_indices) {
    if (idx >= vertices.size()) {
      throw std::invalid_argument("object '" + id +
                                  "' keypoint index out of range");
    }
    if (!seen.insert(idx).second) {
      throw std::invalid_argument("object '" + id + "' duplicate keypoint");
    }
  }
}

ObjectModel MakeObjectModel(std::string id, Mesh mesh, bool symmetric,
                            std::size_t n_keypoints) {
  ObjectModel model;
  model.id = std::move(id);
  model.vertices = std::move(mesh.vertices);
  model.faces = std::move(mesh.faces);
  model.symmetric = symmetric;
  model.keypoint_indices = FarthestPointSample(model.vertices, n_keypoints);
  model.Validate();
  return model;
}

void CameraIntrinsics::Validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || width <= 0 || height <= 0) {
    throw std::invalid_argument(
        "camera intrinsics need positive focal lengths and resolution");
  }
}

std::vector<std::size_t> FarthestPointSample(std::span<const Vec3> vertices,
                                             std::size_t n) {
  if (n == 0 || n > vertices.size()) {
    throw std::invalid_argument("farthest point sample: need 1 <= n <= " +
                                std::to_string(vertices.size()) + ", got " +
                                std::to_string(n));
  }
  const kernels::PointsSoA pts(vertices);
  const std::size_t count = vertices.size();

  Vec3 centroid = Vec3::Zero();
  for (const Vec3 &v : vertices) centroid += v;
  centroid /= static_cast<double>(count);

  // The seed is itself a farthest-point step from the centroid.
  std::vector<double> min_d2(count, std::numeric_limits<double>::infinity());
  const double c0[3] = {centroid.x(), centroid.y(), centroid.z()};
  const auto &kernel = kernels::Active();
  std::size_t next = kernel.fps_update(pts.x.data(), pts.y.data(),
                                       pts.z.data(), count, c0, min_d2.data());
  std::fill(min_d2.begin(), min_d2.end(),
            std::numeric_limits<double>::infinity());

  std::vector<std::size_t> selected;
  selected.reserve(n);
  while (true) {
    selected.push_back(next);
    min_d2[next] = -1.0;
    if (selected.size() == n) break;
    const double c[3] = {pts.x[next], pts.y[next], pts.z[next]};
    next = kernel.fps_update(pts.x.data(), pts.y.data(), pts.z.data(), count, c,
                             min_d2.data());
  }
  return selected;
}

std::vector<ProjectedPoint> Project(const CameraIntrinsics &intr,
                                    const RigidTransform &pose,
                                    std::span<const Vec3> points_obj) {
  std::vector<ProjectedPoint> out;
  out.reserve(points_obj.size());
  for (const Vec3 &p : points_obj) {
    const Vec3 c = pose.Apply(p);
    ProjectedPoint proj;
    if (c.z() > kernels::kMinDepth) {
      proj.pixel = {intr.fx * c.x() / c.z() + intr.cx,
                    intr.fy * c.y() / c.z() + intr.cy};
      proj.visible = proj.pixel.x() >= 0.0 && proj.pixel.x() < intr.width &&
                     proj.pixel.y() >= 0.0 && proj.pixel.y() < intr.height;
    }
    out.push_back(proj);
  }
  return out;
}

namespace {

int ParseFaceIndex(const std::string &token, std::size_t line_no) {
  const std::string head = token.substr(0, token.find('/'));
  try {
    std::size_t used = 0;
    const int idx = std::stoi(head, &used);
    if (used != head.size() || idx < 1) throw std::invalid_argument(head);
    return idx - 1;
  } catch (const std::exception &) {
    throw std::invalid_argument("obj line " + std::to_string(line_no) +
                                ": bad face index '" + token + "'");
  }
}

}  // namespace

Mesh ParseObj(std::istream &in) {
  Mesh mesh;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) {
        throw std::invalid_argument("obj line " + std::to_string(line_no) +
                                    ": malformed vertex");
      }
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::array<std::string, 3> tok;
      if (!(ls >> tok[0] >> tok[1] >> tok[2])) {
        throw std::invalid_argument("obj line " + std::to_string(line_no) +
                                    ": face needs three indices");
      }
      mesh.faces.push_back({ParseFaceIndex(tok[0], line_no),
                            ParseFaceIndex(tok[1], line_no),
                            ParseFaceIndex(tok[2], line_no)});
    }
  }
  for (const auto &f : mesh.faces) {
    for (int idx : f) {
      if (static_cast<std::size_t>(idx) >= mesh.vertices.size()) {
        throw std::invalid_argument("obj face references missing vertex " +
                                    std::to_string(idx + 1));
      }
    }
  }
  return mesh;
}

Mesh LoadObj(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh " + path.string());
  return ParseObj(in);
}

void WriteObj(std::ostream &out, const Mesh &mesh) {
  out << std::setprecision(17);
  for (const Vec3 &v : mesh.vertices) {
    out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  }
  for (const auto &f : mesh.faces) {
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  }
}

}  // namespace gbot
